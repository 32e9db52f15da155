//! The printable-unicode byte convention used by GPT-2 style vocabulary files.
//!
//! Every byte value maps to one printable character so that vocabulary files
//! can store arbitrary byte strings as JSON text. Printable ASCII and most of
//! Latin-1 map to themselves; the remaining 68 bytes are shifted to U+0100..
//! (so a space becomes `Ġ` and a newline `Ċ`).

use std::sync::OnceLock;

struct Tables {
    encode: [char; 256],
    decode: std::collections::HashMap<char, u8>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut encode = ['\0'; 256];
        let mut shifted = 0u32;
        for b in 0..=255u8 {
            let printable = matches!(b, b'!'..=b'~' | 0xA1..=0xAC | 0xAE..=0xFF);
            let c = if printable {
                char::from(b)
            } else {
                let c = char::from_u32(256 + shifted).expect("valid code point");
                shifted += 1;
                c
            };
            encode[b as usize] = c;
        }
        let decode = encode.iter().enumerate().map(|(b, &c)| (c, b as u8)).collect();
        Tables { encode, decode }
    })
}

/// Render raw bytes in the printable convention.
pub fn bytes_to_printable(bytes: &[u8]) -> String {
    let t = tables();
    bytes.iter().map(|&b| t.encode[b as usize]).collect()
}

/// Map a printable-convention string back to raw bytes.
///
/// Returns the first character that has no byte assignment on failure.
pub fn printable_to_bytes(s: &str) -> Result<Vec<u8>, char> {
    let t = tables();
    s.chars().map(|c| t.decode.get(&c).copied().ok_or(c)).collect()
}

//! Vocabulary file loaders.
//!
//! Single-file layout (JSON):
//!
//! ```json
//! { "mode": "byte-level", "normalize_whitespace": false,
//!   "tokens": ["!", "\"", "...", "ĠFebruary"],
//!   "merges": ["Ġ F", "..."] }
//! ```
//!
//! `tokens[i]` is the token with id `i`. In byte-level mode token strings use
//! the printable byte convention; in metaspace mode `▁` marks a leading space.
//! `merges` is optional and ranked by position.
//!
//! The standard two-file layout (`vocab.json` token→id map plus
//! `merges.txt`) is always byte-level.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::gpt2_bytes::printable_to_bytes;
use super::{VocabError, VocabMode, Vocabulary, METASPACE};

/// Overrides applied on top of what the file declares.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub mode: Option<VocabMode>,
    pub normalize_whitespace: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabFile {
    tokens: Vec<String>,
    #[serde(default)]
    merges: Option<Vec<String>>,
    #[serde(default)]
    mode: Option<VocabMode>,
    #[serde(default)]
    normalize_whitespace: Option<bool>,
}

fn read(path: &Path) -> Result<String, VocabError> {
    fs::read_to_string(path).map_err(|source| VocabError::Io { path: path.display().to_string(), source })
}

pub fn load_vocabulary(path: impl AsRef<Path>, opts: LoadOptions) -> Result<Vocabulary, VocabError> {
    Vocabulary::from_json_str(&read(path.as_ref())?, opts)
}

fn token_to_bytes(s: &str, mode: VocabMode) -> Result<Vec<u8>, VocabError> {
    match mode {
        VocabMode::ByteLevel => printable_to_bytes(s)
            .map_err(|c| VocabError::Parse(format!("character {c:?} in token {s:?} has no byte assignment"))),
        VocabMode::Metaspace => Ok(s.replace(METASPACE, " ").into_bytes()),
    }
}

fn parse_merge(rank: usize, line: &str, mode: VocabMode) -> Result<(Vec<u8>, Vec<u8>), VocabError> {
    let mut parts = line.split(' ');
    match (parts.next(), parts.next(), parts.next()) {
        (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
            Ok((token_to_bytes(l, mode)?, token_to_bytes(r, mode)?))
        }
        _ => Err(VocabError::InvalidMerge {
            rank,
            rule: line.to_string(),
            reason: "expected \"left right\"".to_string(),
        }),
    }
}

impl Vocabulary {
    pub fn from_json_str(json: &str, opts: LoadOptions) -> Result<Self, VocabError> {
        let file: VocabFile = serde_json::from_str(json).map_err(|e| VocabError::Parse(e.to_string()))?;
        let mode = opts.mode.or(file.mode).unwrap_or(VocabMode::ByteLevel);
        let normalize = opts
            .normalize_whitespace
            .or(file.normalize_whitespace)
            .unwrap_or_else(|| mode.default_normalize_whitespace());
        let tokens = file.tokens.iter().map(|t| token_to_bytes(t, mode)).collect::<Result<Vec<_>, _>>()?;
        let merges = file
            .merges
            .map(|m| m.iter().enumerate().map(|(rank, line)| parse_merge(rank, line, mode)).collect::<Result<Vec<_>, _>>())
            .transpose()?;
        Vocabulary::new(tokens, merges, mode, normalize)
    }
}

/// Load the standard `vocab.json` + `merges.txt` pair (byte-level).
pub fn load_vocab_merges(
    vocab_path: impl AsRef<Path>,
    merges_path: impl AsRef<Path>,
    normalize_whitespace: Option<bool>,
) -> Result<Vocabulary, VocabError> {
    let map: HashMap<String, u32> =
        serde_json::from_str(&read(vocab_path.as_ref())?).map_err(|e| VocabError::Parse(e.to_string()))?;
    let mut slots: Vec<Option<Vec<u8>>> = vec![None; map.len()];
    for (tok, id) in &map {
        let slot = slots
            .get_mut(*id as usize)
            .ok_or_else(|| VocabError::Parse(format!("token id {id} is not dense in 0..{}", map.len())))?;
        if slot.is_some() {
            return Err(VocabError::Parse(format!("token id {id} assigned twice")));
        }
        *slot = Some(token_to_bytes(tok, VocabMode::ByteLevel)?);
    }
    let tokens: Vec<Vec<u8>> = slots.into_iter().map(|s| s.expect("dense ids fill every slot")).collect();

    let merges_text = read(merges_path.as_ref())?;
    let merges = merges_text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with("#version"))
        .enumerate()
        .map(|(rank, line)| parse_merge(rank, line, VocabMode::ByteLevel))
        .collect::<Result<Vec<_>, _>>()?;
    Vocabulary::new(
        tokens,
        Some(merges),
        VocabMode::ByteLevel,
        normalize_whitespace.unwrap_or(VocabMode::ByteLevel.default_normalize_whitespace()),
    )
}

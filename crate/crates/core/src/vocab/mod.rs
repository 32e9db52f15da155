//! Subword vocabularies: loading, canonical encoding with byte offsets, and
//! detokenization.
//!
//! Token strings are held internally as raw bytes in both supported modes.
//! Byte-level vocabulary files store them in the GPT-2 printable convention;
//! metaspace files mark a leading space with `▁`, which the loader turns into
//! a plain space byte. Everything downstream (the trie, the segmentation
//! lattice, span alignment) therefore works on one alphabet.

mod bpe;
pub mod gpt2_bytes;
mod loader;
mod trie;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use loader::{load_vocabulary, load_vocab_merges, LoadOptions};
pub use trie::TokenTrie;

/// The metaspace marker, U+2581.
pub const METASPACE: char = '\u{2581}';
const METASPACE_UTF8: &[u8] = "\u{2581}".as_bytes();

/// Index into a [`Vocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VocabMode {
    ByteLevel,
    Metaspace,
}

impl VocabMode {
    /// Default for the whitespace-normalization flag when a file does not say.
    pub fn default_normalize_whitespace(self) -> bool {
        matches!(self, VocabMode::Metaspace)
    }
}

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("vocabulary parse error: {0}")]
    Parse(String),
    #[error("duplicate token string {0:?}")]
    DuplicateToken(String),
    #[error("missing byte fallback token for byte 0x{0:02x}")]
    MissingByteFallback(u8),
    #[error("empty token string at id {0}")]
    EmptyToken(u32),
    #[error("merge rule {rank} ({rule:?}) is invalid: {reason}")]
    InvalidMerge { rank: usize, rule: String, reason: String },
    #[error("text is not encodable at byte offset {offset}")]
    Unencodable { offset: usize },
    #[error("text contains the metaspace marker at byte offset {offset}")]
    MarkerInText { offset: usize },
    #[error("token id {id} out of range for vocabulary of size {size}")]
    IdOutOfRange { id: u32, size: usize },
}

/// Canonical encoding of a byte string: token ids plus the half-open byte
/// range each token covers. Offsets tile the source in order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Encoding {
    pub ids: Vec<TokenId>,
    pub offsets: Vec<(usize, usize)>,
}

impl Encoding {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Clone)]
struct MergeTable {
    // (left, right) -> (rank, merged)
    pairs: HashMap<(TokenId, TokenId), (u32, TokenId)>,
}

/// Immutable token table. Cheap to share across threads by reference.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, TokenId>,
    merges: Option<MergeTable>,
    mode: VocabMode,
    normalize_whitespace: bool,
    trie: TokenTrie,
}

impl Vocabulary {
    /// Build a vocabulary from raw token byte strings (index = id) and an
    /// optional ordered merge list (rank = position).
    pub fn new(
        tokens: Vec<Vec<u8>>,
        merges: Option<Vec<(Vec<u8>, Vec<u8>)>>,
        mode: VocabMode,
        normalize_whitespace: bool,
    ) -> Result<Self, VocabError> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if tok.is_empty() {
                return Err(VocabError::EmptyToken(i as u32));
            }
            if index.insert(tok.clone(), TokenId(i as u32)).is_some() {
                return Err(VocabError::DuplicateToken(String::from_utf8_lossy(tok).into_owned()));
            }
        }
        if mode == VocabMode::ByteLevel {
            for b in 0..=255u8 {
                if !index.contains_key(&[b][..]) {
                    return Err(VocabError::MissingByteFallback(b));
                }
            }
        }
        let merges = match merges {
            None => None,
            Some(list) => {
                let mut pairs = HashMap::with_capacity(list.len());
                for (rank, (left, right)) in list.into_iter().enumerate() {
                    let rule = format!(
                        "{} {}",
                        String::from_utf8_lossy(&left),
                        String::from_utf8_lossy(&right)
                    );
                    let invalid = |reason: &str| VocabError::InvalidMerge {
                        rank,
                        rule: rule.clone(),
                        reason: reason.to_string(),
                    };
                    let l = *index.get(&left).ok_or_else(|| invalid("left side is not a token"))?;
                    let r = *index.get(&right).ok_or_else(|| invalid("right side is not a token"))?;
                    let mut joined = left.clone();
                    joined.extend_from_slice(&right);
                    let m = *index.get(&joined).ok_or_else(|| invalid("merged string is not a token"))?;
                    pairs.entry((l, r)).or_insert((rank as u32, m));
                }
                Some(MergeTable { pairs })
            }
        };
        let trie = TokenTrie::build(tokens.iter().enumerate().map(|(i, t)| (TokenId(i as u32), t.as_slice())));
        Ok(Vocabulary { tokens, index, merges, mode, normalize_whitespace, trie })
    }

    /// Convenience constructor from string tokens with no merges.
    pub fn from_strs<S: AsRef<str>>(
        tokens: &[S],
        mode: VocabMode,
        normalize_whitespace: bool,
    ) -> Result<Self, VocabError> {
        let tokens = tokens.iter().map(|t| t.as_ref().as_bytes().to_vec()).collect();
        Self::new(tokens, None, mode, normalize_whitespace)
    }

    /// Same tokens and merges with a different normalization flag.
    pub fn with_normalize_whitespace(mut self, on: bool) -> Self {
        self.normalize_whitespace = on;
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn mode(&self) -> VocabMode {
        self.mode
    }

    pub fn normalize_whitespace(&self) -> bool {
        self.normalize_whitespace
    }

    pub fn has_merges(&self) -> bool {
        self.merges.is_some()
    }

    pub fn trie(&self) -> &TokenTrie {
        &self.trie
    }

    pub fn id(&self, token: &[u8]) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    /// Like [`Vocabulary::id`] for string tokens.
    pub fn id_of(&self, token: &str) -> Option<TokenId> {
        self.id(token.as_bytes())
    }

    pub fn token_bytes(&self, id: TokenId) -> Result<&[u8], VocabError> {
        self.tokens
            .get(id.index())
            .map(Vec::as_slice)
            .ok_or(VocabError::IdOutOfRange { id: id.0, size: self.tokens.len() })
    }

    /// Lossy UTF-8 rendering of a token, for reports.
    pub fn display(&self, id: TokenId) -> String {
        match self.token_bytes(id) {
            Ok(b) => String::from_utf8_lossy(b).into_owned(),
            Err(_) => format!("<{id}?>"),
        }
    }

    /// True when the token consists only of ASCII whitespace.
    pub fn is_whitespace_token(&self, id: TokenId) -> bool {
        self.token_bytes(id).is_ok_and(|b| b.iter().all(u8::is_ascii_whitespace))
    }

    pub fn check_ids(&self, ids: &[TokenId]) -> Result<(), VocabError> {
        match ids.iter().find(|id| id.index() >= self.tokens.len()) {
            Some(id) => Err(VocabError::IdOutOfRange { id: id.0, size: self.tokens.len() }),
            None => Ok(()),
        }
    }

    /// Canonical encoding: merge-rank BPE when merges are present, greedy
    /// longest match from the left otherwise.
    pub fn encode(&self, text: &[u8]) -> Result<Encoding, VocabError> {
        if self.mode == VocabMode::Metaspace {
            if let Some(offset) = find(text, METASPACE_UTF8) {
                return Err(VocabError::MarkerInText { offset });
            }
        }
        match &self.merges {
            Some(table) => bpe::encode(self, &table.pairs, text),
            None => self.encode_longest_match(text),
        }
    }

    fn encode_longest_match(&self, text: &[u8]) -> Result<Encoding, VocabError> {
        let mut enc = Encoding::default();
        let mut pos = 0;
        while pos < text.len() {
            let (id, end) = self.trie.longest(text, pos).ok_or(VocabError::Unencodable { offset: pos })?;
            enc.ids.push(id);
            enc.offsets.push((pos, end));
            pos = end;
        }
        Ok(enc)
    }

    /// Plain concatenation of token bytes.
    pub fn concat(&self, ids: &[TokenId]) -> Result<Vec<u8>, VocabError> {
        let mut out = Vec::new();
        for &id in ids {
            out.extend_from_slice(self.token_bytes(id)?);
        }
        Ok(out)
    }

    /// Detokenize. Byte-level mode is exact concatenation; metaspace mode
    /// additionally applies leading-space normalization when enabled.
    pub fn decode(&self, ids: &[TokenId]) -> Result<Vec<u8>, VocabError> {
        let raw = self.concat(ids)?;
        Ok(match self.mode {
            VocabMode::ByteLevel => raw,
            VocabMode::Metaspace => self.normalize(raw),
        })
    }

    /// Surface used for equivalence: concatenation plus leading-space
    /// normalization whenever the flag is set, in either mode.
    pub fn normalized_surface(&self, ids: &[TokenId]) -> Result<Vec<u8>, VocabError> {
        self.concat(ids).map(|raw| self.normalize(raw))
    }

    fn normalize(&self, mut raw: Vec<u8>) -> Vec<u8> {
        if self.normalize_whitespace && raw.first() == Some(&b' ') {
            raw.remove(0);
        }
        raw
    }
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

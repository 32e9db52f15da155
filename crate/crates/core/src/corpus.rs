//! Weighted word lexicons and a synthetic corpus built from them.
//!
//! Synthetic documents interleave lexicon words with stopword filler so that
//! every lexicon word follows a single space and every other word is a
//! stopword. With fraction 1.0 the selector then targets exactly the lexicon
//! words, which is what the simulator experiments need.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::probe::CorpusDoc;
use crate::seeding::derive_rng;

pub const DEFAULT_LEXICON: &str = include_str!("../assets/lexicon.tsv");

/// Filler words; every entry is in the bundled stopword list.
pub const FILLER: &[&str] = &[
    "the", "of", "and", "a", "to", "in", "is", "it", "that", "was", "for", "on", "are", "with", "as", "at", "be",
    "this", "have", "from", "or", "had", "by", "but", "not", "what", "all", "were", "we", "when", "there", "can",
    "an", "which", "their", "if", "do", "will", "each", "about",
];

#[derive(Debug, Error, PartialEq)]
pub enum LexiconError {
    #[error("line {line}: expected `word<TAB>weight`")]
    Malformed { line: usize },
    #[error("line {line}: weight must be positive and finite")]
    BadWeight { line: usize },
    #[error("lexicon is empty")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub word: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    pub entries: Vec<LexiconEntry>,
}

impl Lexicon {
    /// Tab-separated `word weight` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, weight) = line.split_once('\t').ok_or(LexiconError::Malformed { line: i + 1 })?;
            let weight: f64 = weight.trim().parse().map_err(|_| LexiconError::BadWeight { line: i + 1 })?;
            if word.is_empty() || word.contains(char::is_whitespace) {
                return Err(LexiconError::Malformed { line: i + 1 });
            }
            if !(weight.is_finite() && weight > 0.0) {
                return Err(LexiconError::BadWeight { line: i + 1 });
            }
            entries.push(LexiconEntry { word: word.to_string(), weight });
        }
        if entries.is_empty() {
            return Err(LexiconError::Empty);
        }
        Ok(Lexicon { entries })
    }

    pub fn english() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("bundled lexicon parses")
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.word.as_str())
    }

    fn pick(&self, rng: &mut impl Rng) -> &str {
        let total: f64 = self.entries.iter().map(|e| e.weight).sum();
        let mut r = rng.random::<f64>() * total;
        for e in &self.entries {
            if r < e.weight {
                return &e.word;
            }
            r -= e.weight;
        }
        &self.entries[self.entries.len() - 1].word
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Word-count range of a synthetic document.
pub const SYNTH_WORDS: (usize, usize) = (120, 250);

/// One synthetic document. Deterministic in `(seed, index)`.
pub fn synthetic_doc(lexicon: &Lexicon, seed: u64, index: usize) -> CorpusDoc {
    let doc_id = format!("synth-{index:05}");
    let mut rng = derive_rng(seed, "corpus", &doc_id, 0);
    let n_words = rng.random_range(SYNTH_WORDS.0..=SYNTH_WORDS.1);
    let mut text = String::new();
    let mut words = 0;
    let mut sentence_len = 0;
    while words < n_words {
        if sentence_len == 0 {
            let filler = FILLER[rng.random_range(0..FILLER.len())];
            if !text.is_empty() {
                text.push_str(if rng.random_bool(0.15) { ".\n" } else { ". " });
            }
            text.push_str(&capitalize(filler));
        } else if rng.random_bool(0.45) {
            text.push(' ');
            text.push_str(lexicon.pick(&mut rng));
            if rng.random_bool(0.08) {
                text.push(',');
            }
        } else {
            text.push(' ');
            text.push_str(FILLER[rng.random_range(0..FILLER.len())]);
        }
        words += 1;
        sentence_len += 1;
        if sentence_len >= 6 && rng.random_bool(0.2) {
            sentence_len = 0;
        }
    }
    text.push('.');
    CorpusDoc { doc_id, text }
}

pub fn synthetic_corpus(lexicon: &Lexicon, seed: u64, n_docs: usize) -> Vec<CorpusDoc> {
    (0..n_docs).map(|i| synthetic_doc(lexicon, seed, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::{eligible_targets, word_count, SelectConfig, Stopwords};

    #[test]
    fn filler_is_all_stopwords() {
        let stop = Stopwords::english();
        for w in FILLER {
            assert!(stop.contains(w), "{w}");
        }
    }

    #[test]
    fn lexicon_parsing() {
        let lex = Lexicon::english();
        assert!(lex.entries.len() >= 40);
        assert_eq!(Lexicon::parse("a\t1\nb"), Err(LexiconError::Malformed { line: 2 }));
        assert_eq!(Lexicon::parse("a\t-1"), Err(LexiconError::BadWeight { line: 1 }));
        assert_eq!(Lexicon::parse("# only a comment\n"), Err(LexiconError::Empty));
    }

    #[test]
    fn synthetic_targets_are_lexicon_words() {
        let lex = Lexicon::english();
        let stop = Stopwords::english();
        let cfg = SelectConfig { fraction: 1.0, length_range: None };
        for doc in synthetic_corpus(&lex, 3, 20) {
            let n = word_count(&doc.text);
            assert!((SYNTH_WORDS.0..=SYNTH_WORDS.1).contains(&n), "{n}");
            let targets = eligible_targets(&doc.text, &stop, &cfg);
            assert!(!targets.is_empty());
            for t in targets {
                assert!(lex.words().any(|w| w == t.word), "{}", t.word);
                assert_eq!(&doc.text[t.start - 1..t.start], " ");
            }
        }
        assert_eq!(synthetic_doc(&lex, 3, 7), synthetic_doc(&lex, 3, 7));
    }
}

//! Bundled data: the toy vocabulary and the default corpus settings used by
//! tests, benches and the CLI when no files are given.

use crate::corpus::{synthetic_corpus, Lexicon};
use crate::probe::{prepare_doc, AnnotatedDoc, SelectConfig, Stopwords, DEFAULT_TEMPLATE};
use crate::vocab::{LoadOptions, Vocabulary};

pub const TOYVOC_JSON: &str = include_str!("../assets/toyvoc.json");

/// The bundled byte-level toy vocabulary.
pub fn toy_vocabulary() -> Vocabulary {
    Vocabulary::from_json_str(TOYVOC_JSON, LoadOptions::default()).expect("bundled vocabulary loads")
}

/// `n_docs` synthetic documents with every lexicon word selected as a target.
pub fn synthetic_annotated(seed: u64, n_docs: usize) -> Vec<AnnotatedDoc> {
    let lexicon = Lexicon::english();
    let stopwords = Stopwords::english();
    let cfg = SelectConfig { fraction: 1.0, length_range: None };
    synthetic_corpus(&lexicon, seed, n_docs)
        .iter()
        .map(|d| prepare_doc(d, &cfg, &stopwords, DEFAULT_TEMPLATE, seed).expect("synthetic documents have targets"))
        .collect()
}

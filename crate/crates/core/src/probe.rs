//! Probe construction: corpus filtering, target selection, bracketing and
//! prompt assembly.

use std::collections::HashSet;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeding::derive_rng;

/// The shipped English stopword inventory.
pub const DEFAULT_STOPWORDS: &str = include_str!("../assets/stopwords_en.txt");
/// The shipped instruction template (version 1).
pub const DEFAULT_TEMPLATE: &str = include_str!("../assets/prompt_v1.txt");
/// Placeholder substituted by the bracketed document.
pub const DOC_PLACEHOLDER: &str = "{doc}";

/// Characters stripped from the end of a word before it becomes a target.
pub const TRAILING_PUNCTUATION: &[char] = &['.', ',', ';', ':', '!', '?', '"', '\'', ')', ']', '}'];

#[derive(Debug, Error, PartialEq)]
pub enum ProbeError {
    #[error("fraction must be in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("document {doc_id:?} has no eligible target words")]
    NoEligibleWords { doc_id: String },
    #[error("template has no {DOC_PLACEHOLDER} placeholder")]
    MissingPlaceholder,
    #[error("document {doc_id:?}: {reason}")]
    InvalidDoc { doc_id: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusDoc {
    pub doc_id: String,
    pub text: String,
}

/// A selected word: byte range into the original text plus the word itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub start: usize,
    pub end: usize,
    pub word: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedDoc {
    pub doc_id: String,
    pub original_text: String,
    pub targets: Vec<Target>,
    pub bracketed_text: String,
    pub prompt: String,
}

#[derive(Debug, Clone)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    /// One word per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        Stopwords(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn english() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectConfig {
    pub fraction: f64,
    /// Inclusive character-count bounds on a target word.
    pub length_range: Option<(usize, usize)>,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig { fraction: 0.05, length_range: None }
    }
}

impl SelectConfig {
    /// Word-length window used for the fragmentation-transition experiment.
    pub const TRANSITION_LENGTHS: (usize, usize) = (3, 15);
}

/// Inclusive word-count bounds for corpus documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordBounds {
    pub min_words: usize,
    pub max_words: usize,
}

impl Default for WordBounds {
    fn default() -> Self {
        WordBounds { min_words: 100, max_words: 600 }
    }
}

impl WordBounds {
    pub fn admits(&self, text: &str) -> bool {
        let w = word_count(text);
        self.min_words <= w && w <= self.max_words
    }
}

pub fn word_count(text: &str) -> usize {
    text.split_ascii_whitespace().count()
}

/// Byte ranges of the maximal non-whitespace runs of `text`.
pub fn word_spans(text: &str) -> Vec<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let mut start = None;
    for (i, b) in bytes.iter().enumerate() {
        match (b.is_ascii_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, bytes.len()));
    }
    spans
}

/// Length of `word` once trailing punctuation is removed.
pub fn core_len(word: &str) -> usize {
    word.trim_end_matches(TRAILING_PUNCTUATION).len()
}

/// The target a whitespace run would produce, if it is eligible at all.
fn candidate(text: &str, (start, end): (usize, usize), stopwords: &Stopwords, cfg: &SelectConfig) -> Option<Target> {
    let run = &text[start..end];
    let core = &run[..core_len(run)];
    let first = core.chars().next()?;
    if first.is_ascii_punctuation() || core.contains(['[', ']']) || stopwords.contains(core) {
        return None;
    }
    if let Some((lo, hi)) = cfg.length_range {
        let n = core.chars().count();
        if n < lo || n > hi {
            return None;
        }
    }
    Some(Target { start, end: start + core.len(), word: core.to_string() })
}

/// All eligible targets in text order.
pub fn eligible_targets(text: &str, stopwords: &Stopwords, cfg: &SelectConfig) -> Vec<Target> {
    word_spans(text).into_iter().filter_map(|span| candidate(text, span, stopwords, cfg)).collect()
}

/// Number of targets drawn from `eligible` candidates: ⌈fraction × eligible⌉.
pub fn sample_size(fraction: f64, eligible: usize) -> usize {
    // Guard against products like 0.07 * 100 = 7.000000000000001.
    let raw = fraction * eligible as f64;
    let k = (raw - 1e-9 * raw.max(1.0)).ceil();
    (k.max(0.0) as usize).min(eligible)
}

/// Uniformly sample ⌈fraction × eligible⌉ eligible words without
/// replacement. Deterministic in `(seed, doc_id)`.
pub fn select_targets(
    doc_id: &str,
    text: &str,
    cfg: &SelectConfig,
    stopwords: &Stopwords,
    seed: u64,
) -> Result<Vec<Target>, ProbeError> {
    if !(cfg.fraction > 0.0 && cfg.fraction <= 1.0) {
        return Err(ProbeError::InvalidFraction(cfg.fraction));
    }
    let eligible = eligible_targets(text, stopwords, cfg);
    if eligible.is_empty() {
        return Err(ProbeError::NoEligibleWords { doc_id: doc_id.to_string() });
    }
    let k = sample_size(cfg.fraction, eligible.len());
    let mut rng = derive_rng(seed, "select", doc_id, 0);
    let mut picked = index::sample(&mut rng, eligible.len(), k).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| eligible[i].clone()).collect())
}

/// Keep documents whose word count lies within the inclusive bounds.
pub fn filter_corpus<I>(docs: I, bounds: WordBounds) -> impl Iterator<Item = CorpusDoc>
where
    I: IntoIterator<Item = CorpusDoc>,
{
    docs.into_iter().filter(move |d| bounds.admits(&d.text))
}

/// Wrap each target in square brackets.
pub fn bracket(text: &str, targets: &[Target]) -> String {
    let mut out = String::with_capacity(text.len() + 2 * targets.len());
    let mut pos = 0;
    for t in targets {
        out.push_str(&text[pos..t.start]);
        out.push('[');
        out.push_str(&text[t.start..t.end]);
        out.push(']');
        pos = t.end;
    }
    out.push_str(&text[pos..]);
    out
}

/// Substitute the bracketed document into `template`.
pub fn build_prompt(doc: &AnnotatedDoc, template: &str) -> Result<String, ProbeError> {
    render_template(template, &doc.bracketed_text)
}

fn render_template(template: &str, bracketed: &str) -> Result<String, ProbeError> {
    let (head, tail) = template.split_once(DOC_PLACEHOLDER).ok_or(ProbeError::MissingPlaceholder)?;
    Ok(format!("{head}{bracketed}{tail}"))
}

/// Build the annotated record for `doc` with already-selected targets.
pub fn annotate(doc: &CorpusDoc, targets: Vec<Target>, template: &str) -> Result<AnnotatedDoc, ProbeError> {
    let bracketed_text = bracket(&doc.text, &targets);
    let prompt = render_template(template, &bracketed_text)?;
    let annotated = AnnotatedDoc {
        doc_id: doc.doc_id.clone(),
        original_text: doc.text.clone(),
        targets,
        bracketed_text,
        prompt,
    };
    annotated.validate()?;
    Ok(annotated)
}

/// Select targets and annotate in one step.
pub fn prepare_doc(
    doc: &CorpusDoc,
    cfg: &SelectConfig,
    stopwords: &Stopwords,
    template: &str,
    seed: u64,
) -> Result<AnnotatedDoc, ProbeError> {
    let targets = select_targets(&doc.doc_id, &doc.text, cfg, stopwords, seed)?;
    annotate(doc, targets, template)
}

impl AnnotatedDoc {
    /// Check the structural invariants of a record read from disk.
    pub fn validate(&self) -> Result<(), ProbeError> {
        let bad = |reason: String| ProbeError::InvalidDoc { doc_id: self.doc_id.clone(), reason };
        let text = &self.original_text;
        let mut prev_end = 0;
        for (i, t) in self.targets.iter().enumerate() {
            if t.start < prev_end || t.start >= t.end || t.end > text.len() {
                return Err(bad(format!("target {i} range {}..{} is out of order or out of bounds", t.start, t.end)));
            }
            if text.get(t.start..t.end) != Some(t.word.as_str()) {
                return Err(bad(format!("target {i} word {:?} does not match the text", t.word)));
            }
            prev_end = t.end;
        }
        if bracket(text, &self.targets) != self.bracketed_text {
            return Err(bad("bracketed_text is inconsistent with targets".to_string()));
        }
        Ok(())
    }

    /// Keep only the first `n` targets, re-rendering the bracketed text and
    /// the prompt to match.
    pub fn truncate_targets(&self, n: usize) -> AnnotatedDoc {
        let targets: Vec<Target> = self.targets.iter().take(n).cloned().collect();
        let bracketed_text = bracket(&self.original_text, &targets);
        let prompt = self.prompt.replacen(&self.bracketed_text, &bracketed_text, 1);
        AnnotatedDoc { doc_id: self.doc_id.clone(), original_text: self.original_text.clone(), targets, bracketed_text, prompt }
    }

    /// Remove exactly the inserted brackets, whatever else the text contains.
    pub fn unbracket(&self) -> String {
        let mut out = self.bracketed_text.clone();
        for (i, t) in self.targets.iter().enumerate().rev() {
            let open = t.start + 2 * i;
            let close = t.end + 2 * i + 1;
            out.remove(close);
            out.remove(open);
        }
        out
    }
}

/// Remove well-formed `[...]` pairs from a model output.
///
/// Returns the cleaned text and whether any bracket character was present.
/// When the original document itself contains brackets the output is left
/// untouched, since its brackets cannot be told apart from leftovers.
pub fn strip_output_brackets(output: &str, original: &str) -> (String, bool) {
    let present = output.contains(['[', ']']);
    if !present || original.contains(['[', ']']) {
        return (output.to_string(), present);
    }
    let mut drop = vec![false; output.len()];
    let mut open: Option<usize> = None;
    for (i, c) in output.char_indices() {
        match c {
            '[' => open = Some(i),
            ']' => {
                if let Some(o) = open.take() {
                    drop[o] = true;
                    drop[i] = true;
                }
            }
            _ => {}
        }
    }
    let cleaned = output.char_indices().filter(|&(i, _)| !drop[i]).map(|(_, c)| c).collect();
    (cleaned, present)
}

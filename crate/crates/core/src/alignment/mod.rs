//! Output alignment and three-way outcome classification.
//!
//! Input and output texts are split into whitespace-delimited words and
//! matched by a word-level LCS. Non-target input words serve as anchors: a
//! target's output region is the text strictly between the output positions
//! of its two flanking anchors (or the text edges). When an anchor did not
//! survive, the targets it flanks are discarded rather than guessed at.

mod lcs;
mod span;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lcs::lcs_matches;
pub use span::{extract_token_span, gap_start, project, tokens_in};

use crate::probe::{strip_output_brackets, word_spans, AnnotatedDoc};
use crate::taxonomy::ErrorType;
use crate::vocab::{TokenId, VocabError, Vocabulary};

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("byte range {start}..{end} lies outside a text of {len} bytes")]
    RangeOutOfBounds { start: usize, end: usize, len: usize },
    #[error("output token ids do not spell the output text (mismatch at byte {offset})")]
    Projection { offset: usize },
    #[error(transparent)]
    Vocab(#[from] VocabError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Unchanged,
    Replaced,
    Different,
    /// The surrounding context was not preserved, so the target could not be
    /// located in the output.
    Discarded,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [Outcome::Unchanged, Outcome::Replaced, Outcome::Different, Outcome::Discarded];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Unchanged => "unchanged",
            Outcome::Replaced => "replaced",
            Outcome::Different => "different",
            Outcome::Discarded => "discarded",
        }
    }
}

/// Where a target landed in the output text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionAlignment {
    Aligned {
        /// Byte range of the output word (trailing punctuation that the
        /// input kept outside the target is excluded). Empty when the region
        /// holds no word at all.
        word: (usize, usize),
    },
    Discarded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub doc_id: String,
    pub target_index: usize,
    pub input_word: String,
    pub output_surface: String,
    pub input_ids: Vec<TokenId>,
    pub output_ids: Vec<TokenId>,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_type: Option<ErrorType>,
}

impl Trial {
    pub fn key(&self) -> (String, usize) {
        (self.doc_id.clone(), self.target_index)
    }
}

/// Locate every target of `doc` in `output`.
pub fn align(doc: &AnnotatedDoc, output: &str) -> Vec<RegionAlignment> {
    let input = doc.original_text.as_str();
    let in_spans = word_spans(input);
    let out_spans = word_spans(output);

    // Which input word each target occupies.
    let mut target_of_word = vec![None; in_spans.len()];
    for (ti, t) in doc.targets.iter().enumerate() {
        if let Ok(wi) = in_spans.binary_search_by_key(&t.start, |s| s.0) {
            target_of_word[wi] = Some(ti);
        }
    }

    let in_words: Vec<&str> = in_spans.iter().map(|&(s, e)| &input[s..e]).collect();
    let out_words: Vec<&str> = out_spans.iter().map(|&(s, e)| &output[s..e]).collect();
    let matched = lcs_matches(&in_words, &out_words);

    let mut result = vec![RegionAlignment::Discarded; doc.targets.len()];
    let mut wi = 0;
    while wi < in_spans.len() {
        if target_of_word[wi].is_none() {
            wi += 1;
            continue;
        }
        // A maximal run of target words in [wi, wj).
        let mut wj = wi;
        while wj < in_spans.len() && target_of_word[wj].is_some() {
            wj += 1;
        }
        let left = if wi == 0 { Some(0) } else { matched[wi - 1].map(|o| out_spans[o].1) };
        let right = if wj == in_spans.len() { Some(output.len()) } else { matched[wj].map(|o| out_spans[o].0) };
        let left_word = if wi == 0 { Some(0) } else { matched[wi - 1].map(|o| o + 1) };
        let right_word = if wj == in_spans.len() { Some(out_spans.len()) } else { matched[wj] };

        if let (Some(l), Some(r), Some(lw), Some(rw)) = (left, right, left_word, right_word) {
            let group: Vec<usize> = (wi..wj).map(|w| target_of_word[w].expect("run of targets")).collect();
            if rw >= lw && rw - lw == group.len() {
                for (k, &ti) in group.iter().enumerate() {
                    let (s, e) = out_spans[lw + k];
                    result[ti] = RegionAlignment::Aligned { word: trim_suffix(doc, ti, output, (s, e)) };
                }
            } else if group.len() == 1 && l <= r {
                let ti = group[0];
                let region = trim_ws(output.as_bytes(), (l, r));
                result[ti] = RegionAlignment::Aligned { word: trim_suffix(doc, ti, output, region) };
            }
        }
        wi = wj;
    }
    result
}

fn trim_ws(text: &[u8], (mut s, mut e): (usize, usize)) -> (usize, usize) {
    while s < e && text[s].is_ascii_whitespace() {
        s += 1;
    }
    while e > s && text[e - 1].is_ascii_whitespace() {
        e -= 1;
    }
    (s, e)
}

/// Drop the punctuation that followed the target inside its input word, if
/// the output region ends with the same characters.
fn trim_suffix(doc: &AnnotatedDoc, ti: usize, output: &str, (s, e): (usize, usize)) -> (usize, usize) {
    let t = &doc.targets[ti];
    let input = doc.original_text.as_bytes();
    let mut run_end = t.end;
    while run_end < input.len() && !input[run_end].is_ascii_whitespace() {
        run_end += 1;
    }
    let suffix = &input[t.end..run_end];
    let region = &output.as_bytes()[s..e];
    if !suffix.is_empty() && region.len() > suffix.len() && region.ends_with(suffix) {
        (s, e - suffix.len())
    } else {
        (s, e)
    }
}

/// Three-way comparison of one aligned target.
pub fn classify_trial(input_word: &str, output_surface: &str, input_ids: &[TokenId], output_ids: &[TokenId]) -> Outcome {
    let squeezed: String = output_surface.chars().filter(|c| !c.is_whitespace()).collect();
    if squeezed != input_word {
        Outcome::Replaced
    } else if input_ids == output_ids {
        Outcome::Unchanged
    } else {
        Outcome::Different
    }
}

/// How the output token ids for a document are obtained.
pub enum OutputTokens<'a> {
    /// Canonically encode the output text.
    Encode,
    /// Ids reported by the generator, projected onto the output text.
    Reported(&'a [TokenId]),
}

/// Align and classify every target of one document.
pub fn analyze_doc(
    vocab: &Vocabulary,
    doc: &AnnotatedDoc,
    raw_output: &str,
    tokens: OutputTokens<'_>,
) -> Result<Vec<Trial>, AlignError> {
    let (output, had_brackets) = strip_output_brackets(raw_output, &doc.original_text);
    let stripped = had_brackets && output.len() != raw_output.len();
    let out_bytes = output.as_bytes();

    let in_enc = vocab.encode(doc.original_text.as_bytes())?;
    let (out_ids, out_ranges) = match tokens {
        OutputTokens::Encode => {
            let enc = vocab.encode(out_bytes)?;
            (enc.ids, enc.offsets)
        }
        OutputTokens::Reported(ids) => {
            vocab.check_ids(ids)?;
            let skippable: &[u8] = if stripped { b"[]" } else { b"" };
            let ranges = project(vocab, ids, out_bytes, skippable)?;
            (ids.to_vec(), ranges)
        }
    };

    let regions = align(doc, &output);
    let mut trials = Vec::with_capacity(doc.targets.len());
    for (ti, (t, region)) in doc.targets.iter().zip(regions).enumerate() {
        let mut trial = Trial {
            doc_id: doc.doc_id.clone(),
            target_index: ti,
            input_word: t.word.clone(),
            output_surface: String::new(),
            input_ids: Vec::new(),
            output_ids: Vec::new(),
            outcome: Outcome::Discarded,
            error_type: None,
        };
        if let RegionAlignment::Aligned { word } = region {
            trial.input_ids = extract_token_span(&in_enc, &doc.original_text, (t.start, t.end))?;
            trial.output_surface = output[word.0..word.1].to_string();
            if word.0 < word.1 {
                trial.output_ids = tokens_in(&out_ids, &out_ranges, (gap_start(out_bytes, word.0), word.1));
            }
            trial.outcome = classify_trial(&t.word, &trial.output_surface, &trial.input_ids, &trial.output_ids);
        }
        trials.push(trial);
    }
    Ok(trials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::{annotate, CorpusDoc, Target};
    use crate::vocab::VocabMode;

    fn doc(text: &str, words: &[&str]) -> AnnotatedDoc {
        let mut targets = Vec::new();
        let mut from = 0;
        for w in words {
            let start = from + text[from..].find(w).unwrap();
            targets.push(Target { start, end: start + w.len(), word: w.to_string() });
            from = start + w.len();
        }
        annotate(&CorpusDoc { doc_id: "d".into(), text: text.into() }, targets, "{doc}").unwrap()
    }

    fn region(out: &str, r: RegionAlignment) -> Option<&str> {
        match r {
            RegionAlignment::Aligned { word } => Some(&out[word.0..word.1]),
            RegionAlignment::Discarded => None,
        }
    }

    #[test]
    fn region_between_anchors() {
        let d = doc("so the Campaign was over", &["Campaign"]);
        let out = "so the Campaign was over";
        assert_eq!(region(out, align(&d, out)[0]), Some("Campaign"));
        let d = doc("you will get a prize", &["get"]);
        let out = "you will receive a prize";
        assert_eq!(region(out, align(&d, out)[0]), Some("receive"));
    }

    #[test]
    fn missing_anchor_discards() {
        let d = doc("you will get a prize", &["get"]);
        assert_eq!(align(&d, "you will receive prize")[0], RegionAlignment::Discarded);
        assert_eq!(align(&d, "you must receive a prize")[0], RegionAlignment::Discarded);
    }

    #[test]
    fn damage_elsewhere_does_not_spread() {
        let d = doc("alpha beta gamma delta epsilon zeta", &["beta", "epsilon"]);
        let out = "alpha BETA gamma DELTA EPSILON zeta";
        let r = align(&d, out);
        assert_eq!(region(out, r[0]), Some("BETA"));
        assert_eq!(r[1], RegionAlignment::Discarded);
    }

    #[test]
    fn punctuation_and_multiword_regions() {
        let d = doc("the Campaign, was. NATO met", &["Campaign", "NATO"]);
        let out = "the Drive, was. North Atlantic alliance met";
        let r = align(&d, out);
        assert_eq!(region(out, r[0]), Some("Drive"));
        assert_eq!(region(out, r[1]), Some("North Atlantic alliance"));
    }

    #[test]
    fn adjacent_targets() {
        let d = doc("in New York now", &["New", "York"]);
        let out = "in Old Town now";
        let r = align(&d, out);
        assert_eq!((region(out, r[0]), region(out, r[1])), (Some("Old"), Some("Town")));
        let out = "in Paris now";
        assert!(align(&d, out).iter().all(|r| *r == RegionAlignment::Discarded));
        let d = doc("New York", &["New", "York"]);
        let out = "Old Town";
        let r = align(&d, out);
        assert_eq!((region(out, r[0]), region(out, r[1])), (Some("Old"), Some("Town")));
    }

    #[test]
    fn deleted_target_is_empty_region() {
        let d = doc("a big dog", &["big"]);
        assert_eq!(region("a dog", align(&d, "a dog")[0]), Some(""));
    }

    #[test]
    fn three_way_classification() {
        let a = [TokenId(1)];
        let b = [TokenId(2), TokenId(3)];
        assert_eq!(classify_trial("get", "receive", &a, &b), Outcome::Replaced);
        assert_eq!(classify_trial("Campaign", "Campaign", &a, &a), Outcome::Unchanged);
        assert_eq!(classify_trial("However", "However", &a, &b), Outcome::Different);
        assert_eq!(classify_trial("big", "", &a, &[]), Outcome::Replaced);
    }

    fn toy() -> Vocabulary {
        let mut toks: Vec<String> = ["a", "b", "c", "d", "e", "x", "y", "z"].iter().map(|s| s.to_string()).collect();
        toks.extend(["G", "H", "o", "w", "v", "r", "[", "]", ",", "."].iter().map(|s| s.to_string()));
        toks.extend([" ", "\n", " x", " However", "However", " y", " z", "How", "ever"].iter().map(|s| s.to_string()));
        Vocabulary::from_strs(&toks, VocabMode::Metaspace, false).unwrap()
    }

    #[test]
    fn analyze_detects_newline_phantom() {
        let v = toy();
        let d = doc("x. However y", &["However"]);
        let trials = analyze_doc(&v, &d, "x. However y", OutputTokens::Encode).unwrap();
        assert_eq!(trials[0].outcome, Outcome::Unchanged);
        assert_eq!(trials[0].input_ids, vec![v.id_of(" However").unwrap()]);

        let trials = analyze_doc(&v, &d, "x.\nHowever y", OutputTokens::Encode).unwrap();
        assert_eq!(trials[0].outcome, Outcome::Different);
        assert_eq!(trials[0].output_ids, vec![v.id_of("\n").unwrap(), v.id_of("However").unwrap()]);

        let trials = analyze_doc(&v, &d, "x. [zz] y", OutputTokens::Encode).unwrap();
        assert_eq!((trials[0].outcome, trials[0].output_surface.as_str()), (Outcome::Replaced, "zz"));
    }

    #[test]
    fn reported_ids_are_projected() {
        let v = toy();
        let d = doc("x. However y", &["However"]);
        let ids: Vec<TokenId> = ["x", ".", "How", "ever", " y"].iter().map(|t| v.id_of(t).unwrap()).collect();
        let trials = analyze_doc(&v, &d, "x. However y", OutputTokens::Reported(&ids)).unwrap();
        assert_eq!(trials[0].outcome, Outcome::Different);
        assert_eq!(trials[0].output_ids, vec![v.id_of("How").unwrap(), v.id_of("ever").unwrap()]);
        let bad = [v.id_of("x").unwrap()];
        assert!(matches!(
            analyze_doc(&v, &d, "x. However y", OutputTokens::Reported(&bad)),
            Err(AlignError::Projection { .. })
        ));
    }
}

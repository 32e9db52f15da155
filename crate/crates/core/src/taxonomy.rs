//! Eight-way classification of phantom edits.
//!
//! Each predicate looks at the input and output extended spans of a
//! `Different` trial. All predicates are evaluated and recorded in a bitmask;
//! the label is the first one to fire in the order
//! E3, E2, E1, E7, E8, E5, E6, E4, falling through to `Other`.
//!
//! Terms used below: the *word portion* of a span is the span without its
//! leading whitespace-only tokens, and a token's *text* is its bytes with
//! leading whitespace removed.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vocab::{TokenId, VocabError, Vocabulary};

pub const DEFAULT_AFFIXES: &str = include_str!("../assets/affixes.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorType {
    #[serde(rename = "E1_WhitespaceBoundaryShift")]
    E1,
    #[serde(rename = "E2_WhitespaceDetachReattach")]
    E2,
    #[serde(rename = "E3_NewlineSubstitution")]
    E3,
    #[serde(rename = "E4_IntraWordResegmentation")]
    E4,
    #[serde(rename = "E5_ProperNounSegmentation")]
    E5,
    #[serde(rename = "E6_MorphologicalSurfacing")]
    E6,
    #[serde(rename = "E7_AcronymSplit")]
    E7,
    #[serde(rename = "E8_PluralPossessiveTail")]
    E8,
    Other,
}

impl ErrorType {
    pub const PHANTOM: [ErrorType; 8] = [
        ErrorType::E1,
        ErrorType::E2,
        ErrorType::E3,
        ErrorType::E4,
        ErrorType::E5,
        ErrorType::E6,
        ErrorType::E7,
        ErrorType::E8,
    ];

    /// Evaluation order; the first predicate that fires names the trial.
    pub const PRECEDENCE: [ErrorType; 8] = [
        ErrorType::E3,
        ErrorType::E2,
        ErrorType::E1,
        ErrorType::E7,
        ErrorType::E8,
        ErrorType::E5,
        ErrorType::E6,
        ErrorType::E4,
    ];

    /// Position in `PHANTOM` (0 for E1); `None` for `Other`.
    pub fn index(self) -> Option<usize> {
        ErrorType::PHANTOM.iter().position(|&t| t == self)
    }

    pub fn bit(self) -> u8 {
        self.index().map_or(0, |i| 1 << i)
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorType::E1 => "E1_WhitespaceBoundaryShift",
            ErrorType::E2 => "E2_WhitespaceDetachReattach",
            ErrorType::E3 => "E3_NewlineSubstitution",
            ErrorType::E4 => "E4_IntraWordResegmentation",
            ErrorType::E5 => "E5_ProperNounSegmentation",
            ErrorType::E6 => "E6_MorphologicalSurfacing",
            ErrorType::E7 => "E7_AcronymSplit",
            ErrorType::E8 => "E8_PluralPossessiveTail",
            ErrorType::Other => "Other",
        }
    }
}

/// Whether an explicit whitespace token was followed by a space-prefixed
/// word token (reattachment) or a bare one (detachment).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum E2Variant {
    Reattach,
    Detach,
}

impl E2Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            E2Variant::Reattach => "reattach",
            E2Variant::Detach => "detach",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub error_type: ErrorType,
    /// Bit `i` is set when the predicate for `PHANTOM[i]` fired.
    pub fired: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e2_variant: Option<E2Variant>,
}

impl Classification {
    pub fn fired_types(&self) -> Vec<ErrorType> {
        ErrorType::PHANTOM.into_iter().filter(|t| self.fired & t.bit() != 0).collect()
    }
}

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("affix lexicon parse error: {0}")]
    Parse(String),
}

/// Prefixes and suffixes whose surfacing as separate tokens counts as
/// morphological.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AffixLexicon {
    pub prefixes: BTreeSet<String>,
    pub suffixes: BTreeSet<String>,
}

impl AffixLexicon {
    pub fn parse(json: &str) -> Result<Self, TaxonomyError> {
        serde_json::from_str(json).map_err(|e| TaxonomyError::Parse(e.to_string()))
    }

    pub fn english() -> Self {
        Self::parse(DEFAULT_AFFIXES).expect("shipped affix lexicon parses")
    }

    pub fn is_prefix(&self, s: &str) -> bool {
        self.prefixes.contains(s)
    }

    pub fn is_suffix(&self, s: &str) -> bool {
        self.suffixes.contains(s)
    }
}

pub struct Taxonomy<'v> {
    vocab: &'v Vocabulary,
    affixes: AffixLexicon,
}

struct Span<'a> {
    tokens: Vec<&'a [u8]>,
    /// Index of the first token of the word portion.
    word_start: usize,
}

impl<'a> Span<'a> {
    fn new(vocab: &'a Vocabulary, ids: &[TokenId]) -> Result<Self, VocabError> {
        let tokens = ids.iter().map(|&id| vocab.token_bytes(id)).collect::<Result<Vec<_>, _>>()?;
        let word_start = tokens.iter().take_while(|t| is_ws(t)).count();
        Ok(Span { tokens, word_start })
    }

    fn gap(&self) -> &[&'a [u8]] {
        &self.tokens[..self.word_start]
    }

    fn word(&self) -> &[&'a [u8]] {
        &self.tokens[self.word_start..]
    }

    fn word_texts(&self) -> Vec<&'a [u8]> {
        self.word().iter().map(|t| trim_leading_ws(t)).collect()
    }

    /// Leading whitespace bytes of the whole span.
    fn leading_ws(&self) -> Vec<u8> {
        self.tokens.iter().flat_map(|t| t.iter()).take_while(|b| b.is_ascii_whitespace()).copied().collect()
    }

    /// Internal cut points of the word portion, measured in word bytes.
    fn boundaries(&self) -> HashSet<usize> {
        let texts = self.word_texts();
        let mut cuts = HashSet::new();
        let mut at = 0;
        for t in texts.iter().take(texts.len().saturating_sub(1)) {
            at += t.len();
            cuts.insert(at);
        }
        cuts
    }
}

fn is_ws(t: &[u8]) -> bool {
    t.iter().all(u8::is_ascii_whitespace)
}

fn trim_leading_ws(t: &[u8]) -> &[u8] {
    let n = t.iter().take_while(|b| b.is_ascii_whitespace()).count();
    &t[n..]
}

fn space_prefixed_word(t: &[u8]) -> bool {
    t.first() == Some(&b' ') && !is_ws(t)
}

fn all_caps(word: &str) -> bool {
    let letters: Vec<char> = word.chars().filter(|c| c.is_alphabetic()).collect();
    letters.len() >= 2 && letters.iter().all(|c| c.is_uppercase())
}

fn initial_capital(word: &str) -> bool {
    word.chars().find(|c| c.is_alphabetic()).is_some_and(char::is_uppercase)
}

fn is_upper_group(t: &[u8]) -> bool {
    std::str::from_utf8(t).is_ok_and(|s| !s.is_empty() && s.chars().all(|c| c.is_alphabetic() && c.is_uppercase()))
}

fn is_s_tail(t: &[u8]) -> bool {
    t == b"s" || t == b"'s"
}

impl<'v> Taxonomy<'v> {
    pub fn new(vocab: &'v Vocabulary, affixes: AffixLexicon) -> Self {
        Taxonomy { vocab, affixes }
    }

    pub fn with_default_affixes(vocab: &'v Vocabulary) -> Self {
        Self::new(vocab, AffixLexicon::english())
    }

    pub fn affixes(&self) -> &AffixLexicon {
        &self.affixes
    }

    pub fn vocab(&self) -> &'v Vocabulary {
        self.vocab
    }

    /// Label one `Different` trial.
    pub fn classify_error(
        &self,
        input_ids: &[TokenId],
        output_ids: &[TokenId],
        word: &str,
    ) -> Result<Classification, VocabError> {
        let inp = Span::new(self.vocab, input_ids)?;
        let out = Span::new(self.vocab, output_ids)?;
        let mut fired = 0u8;
        let mut e2_variant = None;

        if self.e3(&inp, &out) {
            fired |= ErrorType::E3.bit();
        }
        if let Some(v) = self.e2(&inp, &out) {
            fired |= ErrorType::E2.bit();
            e2_variant = Some(v);
        }
        if self.e1(&inp, &out) {
            fired |= ErrorType::E1.bit();
        }
        if self.e7(&out, word) {
            fired |= ErrorType::E7.bit();
        }
        if self.e8(&inp, &out) {
            fired |= ErrorType::E8.bit();
        }
        if self.e5(&inp, &out, word) {
            fired |= ErrorType::E5.bit();
        }
        if self.e6(&inp, &out) {
            fired |= ErrorType::E6.bit();
        }
        if self.e4(&inp, &out) {
            fired |= ErrorType::E4.bit();
        }

        let error_type = ErrorType::PRECEDENCE.into_iter().find(|t| fired & t.bit() != 0).unwrap_or(ErrorType::Other);
        let e2_variant = if error_type == ErrorType::E2 { e2_variant } else { None };
        Ok(Classification { error_type, fired, e2_variant })
    }

    /// Output opens with a newline-bearing token where the input gap was a
    /// plain space.
    fn e3(&self, inp: &Span, out: &Span) -> bool {
        let lead = inp.leading_ws();
        let out_newline = out.tokens.first().is_some_and(|t| t.contains(&b'\n'));
        out_newline && lead.contains(&b' ') && !lead.contains(&b'\n')
    }

    /// A single space-prefixed token became explicit whitespace plus exactly
    /// one word token with the same text.
    fn e2(&self, inp: &Span, out: &Span) -> Option<E2Variant> {
        let [only] = inp.tokens.as_slice() else { return None };
        if !space_prefixed_word(only) || out.gap().is_empty() {
            return None;
        }
        let [w] = out.word() else { return None };
        if trim_leading_ws(w) != trim_leading_ws(only) {
            return None;
        }
        Some(if w.first().is_some_and(u8::is_ascii_whitespace) { E2Variant::Reattach } else { E2Variant::Detach })
    }

    /// One word token on each side, differing only in leading whitespace.
    fn e1(&self, inp: &Span, out: &Span) -> bool {
        match (inp.tokens.as_slice(), out.tokens.as_slice()) {
            ([a], [b]) => !is_ws(a) && !is_ws(b) && a != b && trim_leading_ws(a) == trim_leading_ws(b),
            _ => false,
        }
    }

    /// An all-caps word re-cut into groups of capitals.
    fn e7(&self, out: &Span, word: &str) -> bool {
        all_caps(word) && !out.word().is_empty() && out.word_texts().iter().all(|t| is_upper_group(t))
    }

    /// A plural or possessive `s` moved into or out of its own token.
    fn e8(&self, inp: &Span, out: &Span) -> bool {
        let iw = inp.word_texts();
        let ow = out.word_texts();
        let (Some(&i_last), Some(&o_last)) = (iw.last(), ow.last()) else { return false };
        let detached_tail = ow.len() >= 2 && is_s_tail(o_last) && o_last != i_last;
        let absorbed_tail = is_s_tail(i_last) && o_last != i_last && o_last.ends_with(b"s");
        let detached_head = ow.len() >= 2 && ow[0] == b"s" && iw[0] != b"s";
        detached_tail || absorbed_tail || detached_head
    }

    /// A capitalized, not all-caps, word whose cut points moved.
    fn e5(&self, inp: &Span, out: &Span, word: &str) -> bool {
        initial_capital(word) && !all_caps(word) && inp.boundaries() != out.boundaries()
    }

    /// Exactly two word tokens split at a known prefix or suffix the input
    /// did not cut at.
    fn e6(&self, inp: &Span, out: &Span) -> bool {
        let ow = out.word_texts();
        let [first, second] = ow.as_slice() else { return false };
        let (Ok(first), Ok(second)) = (std::str::from_utf8(first), std::str::from_utf8(second)) else {
            return false;
        };
        let affix = self.affixes.is_prefix(first) || self.affixes.is_suffix(second);
        affix && !inp.boundaries().contains(&first.len())
    }

    /// One atomic word token became several.
    fn e4(&self, inp: &Span, out: &Span) -> bool {
        inp.word().len() == 1 && out.word().len() >= 2
    }
}

/// Per-type counts over a set of classifications.
pub fn histogram<'a>(items: impl IntoIterator<Item = &'a Classification>) -> BTreeMap<ErrorType, usize> {
    let mut h: BTreeMap<ErrorType, usize> = ErrorType::PHANTOM.into_iter().chain([ErrorType::Other]).map(|t| (t, 0)).collect();
    for c in items {
        *h.entry(c.error_type).or_default() += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::VocabMode;

    fn voc() -> Vocabulary {
        let toks = [
            " ", "\n", " February", "February", " Saturday", "Saturday", " Guy", "Guy", " However", "However", " Jub",
            "ilee", "J", "ub", " repaid", "re", "paid", " HIV", "H", "IV", " rights", "right", "s", " smooth", "mooth",
            " Clement", "C", "lements", " unbelievable", "un", "bel", "ievable", " Dorm", "er", "D", "orm", "Feb", "ruary",
            " Feb", "'s", " play", "ing", "pa", "id",
        ];
        Vocabulary::from_strs(&toks, VocabMode::Metaspace, false).unwrap()
    }

    fn run(inp: &[&str], out: &[&str], word: &str) -> Classification {
        let v = voc();
        let ids = |t: &[&str]| t.iter().map(|s| v.id_of(s).unwrap_or_else(|| panic!("{s}"))).collect::<Vec<_>>();
        Taxonomy::with_default_affixes(&v).classify_error(&ids(inp), &ids(out), word).unwrap()
    }

    #[test]
    fn whitespace_types() {
        assert_eq!(run(&[" February"], &["February"], "February").error_type, ErrorType::E1);
        let c = run(&[" Saturday"], &[" ", " Saturday"], "Saturday");
        assert_eq!((c.error_type, c.e2_variant), (ErrorType::E2, Some(E2Variant::Reattach)));
        let c = run(&[" Guy"], &[" ", "Guy"], "Guy");
        assert_eq!((c.error_type, c.e2_variant), (ErrorType::E2, Some(E2Variant::Detach)));
        let c = run(&[" However"], &["\n", "However"], "However");
        assert_eq!((c.error_type, c.e2_variant), (ErrorType::E3, None));
        assert!(c.fired_types().contains(&ErrorType::E2));
    }

    #[test]
    fn resegmentation_types() {
        assert_eq!(run(&[" unbelievable"], &[" ", "un", "bel", "ievable"], "unbelievable").error_type, ErrorType::E4);
        assert_eq!(run(&[" Jub", "ilee"], &[" ", "J", "ub", "ilee"], "Jubilee").error_type, ErrorType::E5);
        assert_eq!(run(&[" Dorm", "er"], &[" ", "D", "orm", "er"], "Dormer").error_type, ErrorType::E5);
        assert_eq!(run(&[" repaid"], &[" ", "re", "paid"], "repaid").error_type, ErrorType::E6);
        assert_eq!(run(&[" HIV"], &[" ", "H", "IV"], "HIV").error_type, ErrorType::E7);
        assert_eq!(run(&[" rights"], &[" ", "right", "s"], "rights").error_type, ErrorType::E8);
        assert_eq!(run(&[" smooth"], &[" ", "s", "mooth"], "smooth").error_type, ErrorType::E8);
        assert_eq!(run(&[" Clement", "s"], &["C", "lements"], "Clements").error_type, ErrorType::E8);
    }

    #[test]
    fn precedence_resolves_mixed_evidence() {
        // Capitalized and split: E5 outranks E4.
        let c = run(&[" February"], &[" ", "Feb", "ruary"], "February");
        assert_eq!(c.error_type, ErrorType::E5);
        assert_eq!(c.fired_types(), vec![ErrorType::E4, ErrorType::E5]);
        // A split at "re" with three pieces is not morphological surfacing.
        let c = run(&[" repaid"], &[" ", "re", "pa", "id"], "repaid");
        assert_eq!(c.error_type, ErrorType::E4);
    }

    #[test]
    fn no_predicate_is_other() {
        let c = run(&[" play", "ing"], &[" play", "ing"], "playing");
        assert_eq!((c.error_type, c.fired), (ErrorType::Other, 0));
    }

    #[test]
    fn serde_names_and_bits() {
        assert_eq!(serde_json::to_string(&ErrorType::E4).unwrap(), "\"E4_IntraWordResegmentation\"");
        assert_eq!(ErrorType::E1.bit(), 1);
        assert_eq!(ErrorType::E8.bit(), 128);
        assert_eq!(ErrorType::Other.bit(), 0);
        let aff = AffixLexicon::english();
        assert!(aff.is_prefix("re") && aff.is_suffix("ing") && !aff.is_suffix("s"));
    }

    #[test]
    fn histogram_covers_every_type() {
        let c = run(&[" February"], &["February"], "February");
        let h = histogram([&c, &c]);
        assert_eq!(h[&ErrorType::E1], 2);
        assert_eq!(h.len(), 9);
    }
}

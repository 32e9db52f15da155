//! Segmentation lattices: every token sequence that spells a given surface.
//!
//! Counting runs a suffix DP over the vocabulary trie with arbitrary-precision
//! counts, so it never materializes the class. Enumeration consults the same
//! table first: an oversized class is rejected before any member is built,
//! and the depth-first walk only steps to positions that can still reach the
//! end of the surface.

use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use crate::vocab::{TokenId, VocabError, Vocabulary};

/// Default cap on the number of members materialized per surface.
pub const DEFAULT_LIMIT: usize = 10_000;

#[derive(Debug, Error)]
pub enum SegmentationError {
    #[error("cannot enumerate segmentations of an empty surface")]
    EmptySurface,
    #[error("surface is not segmentable: no admissible token path reaches byte {offset}")]
    Unencodable { offset: usize },
    #[error("equivalence class has {count} members, more than the limit of {limit}")]
    LimitExceeded { limit: usize, count: BigUint },
    #[error(transparent)]
    Vocab(#[from] VocabError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Segmentation {
    pub ids: Vec<TokenId>,
    /// Raw concatenation of the token bytes.
    pub surface: Vec<u8>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceClass {
    pub surface: Vec<u8>,
    /// The encoder's output for `surface`. A member of `members` whenever the
    /// class was enumerated without a token filter.
    pub canonical: Segmentation,
    /// Pairwise distinct, in depth-first order (shorter first tokens first).
    pub members: Vec<Segmentation>,
}

impl EquivalenceClass {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, ids: &[TokenId]) -> bool {
        self.members.iter().any(|m| m.ids == ids)
    }
}

/// Restricts which single-byte tokens may appear in a segmentation.
/// Multi-byte tokens are always admitted.
#[derive(Debug, Clone)]
pub struct TokenFilter {
    single_byte: [bool; 256],
}

impl TokenFilter {
    /// Admit everything.
    pub fn all() -> Self {
        TokenFilter { single_byte: [true; 256] }
    }

    /// Reject every single-byte token.
    pub fn no_single_bytes() -> Self {
        TokenFilter { single_byte: [false; 256] }
    }

    /// The linguistically plausible subclass: single-byte tokens are limited
    /// to ASCII whitespace, isolated capitals and the plural `s`.
    pub fn plausible() -> Self {
        let mut single_byte = [false; 256];
        for (b, slot) in single_byte.iter_mut().enumerate() {
            let b = b as u8;
            *slot = b.is_ascii_whitespace() || b.is_ascii_uppercase() || b == b's';
        }
        TokenFilter { single_byte }
    }

    pub fn allow_byte(mut self, b: u8) -> Self {
        self.single_byte[b as usize] = true;
        self
    }

    pub fn admits_bytes(&self, token: &[u8]) -> bool {
        match token {
            [b] => self.single_byte[*b as usize],
            _ => true,
        }
    }

    pub fn admits(&self, vocab: &Vocabulary, id: TokenId) -> bool {
        vocab.token_bytes(id).is_ok_and(|t| self.admits_bytes(t))
    }
}

/// `suffix[i]` = number of admissible segmentations of `surface[i..]`.
fn suffix_counts(vocab: &Vocabulary, surface: &[u8], filter: Option<&TokenFilter>) -> Vec<BigUint> {
    let n = surface.len();
    let mut suffix = vec![BigUint::ZERO; n + 1];
    suffix[n] = BigUint::from(1u32);
    for i in (0..n).rev() {
        let mut total = BigUint::ZERO;
        for (id, end) in vocab.trie().prefixes(surface, i) {
            if filter.is_some_and(|f| !f.admits(vocab, id)) {
                continue;
            }
            total += &suffix[end];
        }
        suffix[i] = total;
    }
    suffix
}

/// Number of ways to write `surface` as a sequence of vocabulary tokens.
/// The empty surface has exactly one (empty) segmentation; an unencodable
/// surface has zero.
pub fn count_segmentations(vocab: &Vocabulary, surface: &[u8]) -> BigUint {
    suffix_counts(vocab, surface, None).swap_remove(0)
}

/// Like [`count_segmentations`] restricted to tokens the filter admits.
pub fn count_admissible(vocab: &Vocabulary, surface: &[u8], filter: &TokenFilter) -> BigUint {
    suffix_counts(vocab, surface, Some(filter)).swap_remove(0)
}

/// Every segmentation of `surface`, failing if there are more than `limit`.
pub fn enumerate_segmentations(
    vocab: &Vocabulary,
    surface: &[u8],
    limit: usize,
) -> Result<EquivalenceClass, SegmentationError> {
    enumerate(vocab, surface, limit, None)
}

/// Every segmentation of `surface` whose tokens the filter admits.
pub fn enumerate_admissible(
    vocab: &Vocabulary,
    surface: &[u8],
    limit: usize,
    filter: &TokenFilter,
) -> Result<EquivalenceClass, SegmentationError> {
    enumerate(vocab, surface, limit, Some(filter))
}

fn enumerate(
    vocab: &Vocabulary,
    surface: &[u8],
    limit: usize,
    filter: Option<&TokenFilter>,
) -> Result<EquivalenceClass, SegmentationError> {
    if surface.is_empty() {
        return Err(SegmentationError::EmptySurface);
    }
    let suffix = suffix_counts(vocab, surface, filter);
    if suffix[0] == BigUint::ZERO {
        return Err(SegmentationError::Unencodable { offset: furthest_reachable(vocab, surface, filter) });
    }
    if suffix[0] > BigUint::from(limit) {
        return Err(SegmentationError::LimitExceeded { limit, count: suffix[0].clone() });
    }

    let canonical_ids = vocab.encode(surface)?.ids;
    let canonical = Segmentation { ids: canonical_ids, surface: surface.to_vec() };

    let mut members = Vec::new();
    let mut path = Vec::new();
    walk(vocab, surface, 0, filter, &suffix, &mut path, &mut members);
    Ok(EquivalenceClass { surface: surface.to_vec(), canonical, members })
}

fn walk(
    vocab: &Vocabulary,
    surface: &[u8],
    pos: usize,
    filter: Option<&TokenFilter>,
    suffix: &[BigUint],
    path: &mut Vec<TokenId>,
    out: &mut Vec<Segmentation>,
) {
    if pos == surface.len() {
        out.push(Segmentation { ids: path.clone(), surface: surface.to_vec() });
        return;
    }
    for (id, end) in vocab.trie().prefixes(surface, pos) {
        if suffix[end] == BigUint::ZERO || filter.is_some_and(|f| !f.admits(vocab, id)) {
            continue;
        }
        path.push(id);
        walk(vocab, surface, end, filter, suffix, path, out);
        path.pop();
    }
}

/// Largest offset reachable from the start by admissible tokens.
fn furthest_reachable(vocab: &Vocabulary, surface: &[u8], filter: Option<&TokenFilter>) -> usize {
    let mut reach = vec![false; surface.len() + 1];
    reach[0] = true;
    let mut furthest = 0;
    for i in 0..surface.len() {
        if !reach[i] {
            continue;
        }
        furthest = i;
        for (id, end) in vocab.trie().prefixes(surface, i) {
            if filter.is_none_or(|f| f.admits(vocab, id)) {
                reach[end] = true;
            }
        }
    }
    furthest
}

/// True iff both sequences detokenize to the same surface, with leading-space
/// normalization applied when the vocabulary enables it.
pub fn equivalent(vocab: &Vocabulary, a: &[TokenId], b: &[TokenId]) -> Result<bool, VocabError> {
    Ok(vocab.normalized_surface(a)? == vocab.normalized_surface(b)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::VocabMode;
    use proptest::prelude::*;

    fn abc() -> Vocabulary {
        Vocabulary::from_strs(&["a", "b", "ab"], VocabMode::Metaspace, false).unwrap()
    }

    fn strs(v: &Vocabulary, s: &Segmentation) -> Vec<String> {
        s.ids.iter().map(|&i| v.display(i)).collect()
    }

    #[test]
    fn two_member_class() {
        let v = abc();
        let class = enumerate_segmentations(&v, b"ab", DEFAULT_LIMIT).unwrap();
        let got: Vec<Vec<String>> = class.members.iter().map(|m| strs(&v, m)).collect();
        assert_eq!(got, vec![vec!["a", "b"], vec!["ab"]]);
        assert_eq!(strs(&v, &class.canonical), ["ab"]);
        assert!(class.contains(&class.canonical.ids));
        assert_eq!(count_segmentations(&v, b"ab"), BigUint::from(2u32));
    }

    #[test]
    fn empty_surface_counts_one() {
        assert_eq!(count_segmentations(&abc(), b""), BigUint::from(1u32));
        assert!(matches!(enumerate_segmentations(&abc(), b"", 10), Err(SegmentationError::EmptySurface)));
    }

    #[test]
    fn uncovered_surface() {
        let v = abc();
        assert_eq!(count_segmentations(&v, b"x"), BigUint::ZERO);
        assert!(matches!(enumerate_segmentations(&v, b"abx", 10), Err(SegmentationError::Unencodable { offset: 2 })));
    }

    #[test]
    fn limit_is_checked_before_materializing() {
        let v = abc();
        // "abab…" with n pairs has 2^n segmentations.
        let s = b"ab".repeat(20);
        let err = enumerate_segmentations(&v, &s, 1000).unwrap_err();
        match err {
            SegmentationError::LimitExceeded { limit, count } => {
                assert_eq!(limit, 1000);
                assert_eq!(count, BigUint::from(1u64 << 20));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn filter_removes_single_bytes() {
        let v = abc();
        let f = TokenFilter::no_single_bytes();
        assert_eq!(count_admissible(&v, b"abab", &f), BigUint::from(1u32));
        let class = enumerate_admissible(&v, b"ab", 10, &f).unwrap();
        assert_eq!(class.len(), 1);
        assert!(matches!(enumerate_admissible(&v, b"a", 10, &f), Err(SegmentationError::Unencodable { offset: 0 })));
        assert!(f.clone().allow_byte(b'a').admits_bytes(b"a"));
    }

    #[test]
    fn plausible_single_bytes() {
        let f = TokenFilter::plausible();
        for ok in [b" ", b"\n", b"H", b"s"] {
            assert!(f.admits_bytes(ok));
        }
        for bad in [b"a", b"x", b".", b"0"] {
            assert!(!f.admits_bytes(bad));
        }
        assert!(f.admits_bytes(b"ub"));
    }

    #[test]
    fn equivalence_respects_normalization() {
        let v = Vocabulary::from_strs(&[" February", "February"], VocabMode::Metaspace, true).unwrap();
        let a = [v.id_of(" February").unwrap()];
        let b = [v.id_of("February").unwrap()];
        assert!(equivalent(&v, &a, &b).unwrap());
        let raw = v.with_normalize_whitespace(false);
        assert!(!equivalent(&raw, &a, &b).unwrap());
        assert!(equivalent(&raw, &a, &a).unwrap());
        assert!(matches!(equivalent(&raw, &[TokenId(9)], &a), Err(VocabError::IdOutOfRange { .. })));
    }

    fn small_vocab(normalize: bool) -> Vocabulary {
        Vocabulary::from_strs(&[" ", "a", "b", " a", "ab", " ab", "ba"], VocabMode::Metaspace, normalize).unwrap()
    }

    proptest! {
        #[test]
        fn equivalence_is_an_equivalence_relation(
            normalize in any::<bool>(),
            a in prop::collection::vec(0u32..7, 0..5),
            b in prop::collection::vec(0u32..7, 0..5),
            c in prop::collection::vec(0u32..7, 0..5),
        ) {
            let v = small_vocab(normalize);
            let ids = |x: &[u32]| x.iter().map(|&i| TokenId(i)).collect::<Vec<_>>();
            let (a, b, c) = (ids(&a), ids(&b), ids(&c));
            prop_assert!(equivalent(&v, &a, &a).unwrap());
            prop_assert_eq!(equivalent(&v, &a, &b).unwrap(), equivalent(&v, &b, &a).unwrap());
            if equivalent(&v, &a, &b).unwrap() && equivalent(&v, &b, &c).unwrap() {
                prop_assert!(equivalent(&v, &a, &c).unwrap());
            }
        }

        #[test]
        fn members_are_sound_distinct_and_counted(s in "[ ab]{1,10}") {
            let v = small_vocab(false);
            let class = enumerate_segmentations(&v, s.as_bytes(), DEFAULT_LIMIT).unwrap();
            let distinct: std::collections::HashSet<_> = class.members.iter().map(|m| m.ids.clone()).collect();
            prop_assert_eq!(distinct.len(), class.len());
            for m in &class.members {
                prop_assert_eq!(v.concat(&m.ids).unwrap(), s.as_bytes().to_vec());
            }
            prop_assert_eq!(count_segmentations(&v, s.as_bytes()), BigUint::from(class.len()));
            prop_assert!(class.contains(&class.canonical.ids));
        }
    }
}

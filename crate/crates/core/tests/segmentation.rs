//! Lattice counting and enumeration checked against a naive recursive search
//! that scans the whole vocabulary at every position.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use phantom_core::corpus::Lexicon;
use phantom_core::fixtures::toy_vocabulary;
use phantom_core::segmentation::{
    count_admissible, count_segmentations, enumerate_admissible, enumerate_segmentations, TokenFilter,
};
use phantom_core::{TokenId, Vocabulary};

fn all_tokens(vocab: &Vocabulary) -> Vec<(TokenId, Vec<u8>)> {
    (0..vocab.len() as u32).map(|i| (TokenId(i), vocab.token_bytes(TokenId(i)).unwrap().to_vec())).collect()
}

fn brute(tokens: &[(TokenId, Vec<u8>)], rest: &[u8], keep: &dyn Fn(&[u8]) -> bool, path: &mut Vec<TokenId>, out: &mut BTreeSet<Vec<TokenId>>) {
    if rest.is_empty() {
        out.insert(path.clone());
        return;
    }
    for (id, bytes) in tokens {
        if !bytes.is_empty() && rest.starts_with(bytes) && keep(bytes) {
            path.push(*id);
            brute(tokens, &rest[bytes.len()..], keep, path, out);
            path.pop();
        }
    }
}

fn oracle(tokens: &[(TokenId, Vec<u8>)], surface: &[u8], keep: &dyn Fn(&[u8]) -> bool) -> BTreeSet<Vec<TokenId>> {
    let mut out = BTreeSet::new();
    brute(tokens, surface, keep, &mut Vec::new(), &mut out);
    out
}

/// Single bytes limited to whitespace, capitals and `s`, written out by hand.
fn plausible_bytes(t: &[u8]) -> bool {
    t.len() != 1 || matches!(t[0], b' ' | b'\t' | b'\n' | b'\r' | 0x0c | b'A'..=b'Z' | b's')
}

#[test]
fn lexicon_words_match_brute_force() {
    let vocab = toy_vocabulary();
    let tokens = all_tokens(&vocab);
    let lexicon = Lexicon::english();
    let words: Vec<&str> = lexicon.words().collect();
    assert!(words.len() >= 40);
    for w in words {
        for surface in [w.to_string(), format!(" {w}")] {
            let s = surface.as_bytes();
            let want = oracle(&tokens, s, &|_| true);
            let class = enumerate_segmentations(&vocab, s, 1 << 20).unwrap();
            let got: BTreeSet<Vec<TokenId>> = class.members.iter().map(|m| m.ids.clone()).collect();
            assert_eq!(got.len(), class.members.len(), "{surface:?} enumerated a duplicate");
            assert_eq!(got, want, "{surface:?}");
            assert_eq!(count_segmentations(&vocab, s), BigUint::from(want.len()), "{surface:?}");
            assert!(class.contains(&vocab.encode(s).unwrap().ids));

            let want = oracle(&tokens, s, &plausible_bytes);
            let filter = TokenFilter::plausible();
            let class = enumerate_admissible(&vocab, s, 1 << 20, &filter).unwrap();
            let got: BTreeSet<Vec<TokenId>> = class.members.iter().map(|m| m.ids.clone()).collect();
            assert_eq!(got, want, "{surface:?} (plausible)");
            assert_eq!(count_admissible(&vocab, s, &filter), BigUint::from(want.len()));
        }
    }
}

#[test]
fn spaced_guy_contains_the_detached_forms() {
    let vocab = toy_vocabulary();
    let class = enumerate_segmentations(&vocab, b" Guy", 1000).unwrap();
    let ids = |ts: &[&str]| ts.iter().map(|t| vocab.id_of(t).unwrap()).collect::<Vec<_>>();
    for form in [&[" Guy"][..], &[" ", "Guy"], &[" ", "G", "u", "y"]] {
        assert!(class.contains(&ids(form)), "{form:?}");
    }
}

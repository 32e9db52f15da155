//! Constructive phantom candidates for one target.
//!
//! A candidate is an output token sequence spelling the same extended span
//! (gap + word) as the input with different ids. Whitespace variants are
//! built directly; resegmentations are built from the plausible segmentations
//! of the bare word, either behind an explicit space token or with the space
//! attached to the first piece. Each candidate is assigned the one type whose
//! defining shape it has, and shapes that would read as a different,
//! higher-ranked type are left out so every planted label is unambiguous.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::segmentation::{enumerate_admissible, TokenFilter};
use crate::taxonomy::{AffixLexicon, E2Variant, ErrorType};
use crate::vocab::{TokenId, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionClass {
    Same,
    Split,
    Merge,
}

impl TransitionClass {
    pub const ALL: [TransitionClass; 3] = [TransitionClass::Same, TransitionClass::Split, TransitionClass::Merge];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn of(input_fragments: usize, output_fragments: usize) -> Self {
        match output_fragments.cmp(&input_fragments) {
            std::cmp::Ordering::Equal => TransitionClass::Same,
            std::cmp::Ordering::Greater => TransitionClass::Split,
            std::cmp::Ordering::Less => TransitionClass::Merge,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub ids: Vec<TokenId>,
    pub error_type: ErrorType,
    pub e2_variant: Option<E2Variant>,
    pub class: TransitionClass,
}

fn upper_group(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphabetic() && c.is_uppercase())
}

fn all_caps(word: &str) -> bool {
    let letters: Vec<char> = word.chars().filter(|c| c.is_alphabetic()).collect();
    letters.len() >= 2 && letters.iter().all(|c| c.is_uppercase())
}

fn capitalized(word: &str) -> bool {
    word.chars().find(|c| c.is_alphabetic()).is_some_and(char::is_uppercase)
}

fn cuts(pieces: &[&str]) -> BTreeSet<usize> {
    let mut at = 0;
    let mut out = BTreeSet::new();
    for p in &pieces[..pieces.len().saturating_sub(1)] {
        at += p.len();
        out.insert(at);
    }
    out
}

/// The input span of a target, viewed as gap + word pieces.
struct InputShape<'a> {
    ids: &'a [TokenId],
    /// Word pieces with any leading space removed.
    pieces: Vec<String>,
    /// The input is exactly one token `" " + word`.
    single_spaced: bool,
}

/// Build every phantom candidate for `word` whose input span is `input_ids`.
///
/// The caller guarantees that `input_ids` spell `" " + word` exactly.
pub fn phantom_candidates(
    vocab: &Vocabulary,
    affixes: &AffixLexicon,
    input_ids: &[TokenId],
    word: &str,
    limit: usize,
) -> Vec<Candidate> {
    let Some(shape) = input_shape(vocab, input_ids, word) else { return Vec::new() };
    let x = shape.pieces.len();
    let mut out: Vec<Candidate> = Vec::new();
    let mut seen: HashSet<Vec<TokenId>> = HashSet::new();
    seen.insert(input_ids.to_vec());
    let input_set: HashSet<TokenId> = input_ids.iter().copied().collect();

    let mut push = |out: &mut Vec<Candidate>, ids: Vec<TokenId>, t: ErrorType, v: Option<E2Variant>, y: usize| {
        // Candidates made only of input ids could never be blocked by the
        // output-minus-input rule; they are left out.
        if ids.iter().all(|id| input_set.contains(id)) || !seen.insert(ids.clone()) {
            return;
        }
        out.push(Candidate { ids, error_type: t, e2_variant: v, class: TransitionClass::of(x, y) });
    };

    let bare = vocab.id_of(word);
    let space = vocab.id_of(" ");
    let newline = vocab.id_of("\n");
    let spaced = vocab.id_of(&format!(" {word}"));

    if shape.single_spaced {
        if let Some(b) = bare {
            push(&mut out, vec![b], ErrorType::E1, None, 1);
        }
        if let (Some(s), Some(w)) = (space, spaced) {
            push(&mut out, vec![s, w], ErrorType::E2, Some(E2Variant::Reattach), 1);
        }
        if let (Some(s), Some(b)) = (space, bare) {
            push(&mut out, vec![s, b], ErrorType::E2, Some(E2Variant::Detach), 1);
        }
        if let (Some(n), Some(b)) = (newline, bare) {
            push(&mut out, vec![n, b], ErrorType::E3, None, 1);
        }
    }

    let Ok(class) = enumerate_admissible(vocab, word.as_bytes(), limit, &TokenFilter::plausible()) else {
        return out;
    };
    for seg in &class.members {
        let pieces: Vec<&str> =
            seg.ids.iter().map(|&id| std::str::from_utf8(vocab.token_bytes(id).unwrap_or_default()).unwrap_or("")).collect();
        if pieces.iter().any(|p| p.is_empty()) {
            continue;
        }
        let Some(t) = resegmentation_type(affixes, &shape, word, &pieces) else { continue };
        let y = pieces.len();
        if let Some(s) = space {
            let mut ids = vec![s];
            ids.extend(&seg.ids);
            push(&mut out, ids, t, None, y);
        }
        if let Some(first) = vocab.id_of(&format!(" {}", pieces[0])) {
            let mut ids = vec![first];
            ids.extend(&seg.ids[1..]);
            push(&mut out, ids, t, None, y);
        }
    }
    out
}

fn input_shape<'a>(vocab: &Vocabulary, ids: &'a [TokenId], word: &str) -> Option<InputShape<'a>> {
    let mut pieces = Vec::new();
    for (k, &id) in ids.iter().enumerate() {
        let bytes = vocab.token_bytes(id).ok()?;
        let text = std::str::from_utf8(bytes).ok()?;
        let text = if k == 0 { text.strip_prefix(' ')? } else { text };
        if text.is_empty() {
            if k == 0 {
                continue;
            }
            return None;
        }
        if text.starts_with(|c: char| c.is_ascii_whitespace()) {
            return None;
        }
        pieces.push(text.to_string());
    }
    if pieces.concat() != word {
        return None;
    }
    let single_spaced = ids.len() == 1;
    Some(InputShape { ids, pieces, single_spaced })
}

/// The type a gap + `pieces` resegmentation of `word` plants, or `None` when
/// the shape is not a clean instance of any type.
fn resegmentation_type(affixes: &AffixLexicon, input: &InputShape, word: &str, pieces: &[&str]) -> Option<ErrorType> {
    let inp: Vec<&str> = input.pieces.iter().map(String::as_str).collect();
    if pieces.len() == 1 && input.single_spaced {
        // Space token + whole word is a whitespace variant, not a resegmentation.
        return None;
    }
    let (i_first, i_last) = (inp[0], inp[inp.len() - 1]);
    let (o_first, o_last) = (pieces[0], pieces[pieces.len() - 1]);
    let s_tail = |p: &str| p == "s" || p == "'s";

    if all_caps(word) {
        return pieces.iter().all(|p| upper_group(p)).then_some(ErrorType::E7);
    }
    let tail_split = pieces.len() >= 2 && s_tail(o_last) && o_last != i_last;
    let tail_absorbed = s_tail(i_last) && o_last != i_last && o_last.ends_with('s');
    let head_split = pieces.len() >= 2 && o_first == "s" && i_first != "s";
    if tail_split || tail_absorbed || head_split {
        return Some(ErrorType::E8);
    }
    let new_cuts = cuts(pieces) != cuts(&inp);
    if capitalized(word) {
        return new_cuts.then_some(ErrorType::E5);
    }
    if let [p, q] = pieces {
        if (affixes.is_prefix(p) || affixes.is_suffix(q)) && !cuts(&inp).contains(&p.len()) {
            return Some(ErrorType::E6);
        }
    }
    if input.ids.len() == 1 && pieces.len() >= 2 {
        return Some(ErrorType::E4);
    }
    None
}

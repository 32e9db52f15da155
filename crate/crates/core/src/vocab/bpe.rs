//! Merge-rank BPE over the whole input.
//!
//! Symbols live in a flat doubly-linked list; candidate merges sit in a
//! min-heap keyed by `(rank, left position)`. Stale heap entries are skipped
//! on pop, so every merge is O(log n).

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use super::{Encoding, TokenId, VocabError, VocabMode, Vocabulary};

#[derive(Debug, Clone, Copy)]
struct Symbol {
    id: TokenId,
    start: usize,
    end: usize,
    prev: Option<usize>,
    next: Option<usize>,
    alive: bool,
}

pub(super) fn encode(
    vocab: &Vocabulary,
    merges: &HashMap<(TokenId, TokenId), (u32, TokenId)>,
    text: &[u8],
) -> Result<Encoding, VocabError> {
    let mut syms = initial_symbols(vocab, text)?;
    let n = syms.len();
    for (i, s) in syms.iter_mut().enumerate() {
        s.prev = i.checked_sub(1);
        s.next = (i + 1 < n).then_some(i + 1);
    }

    let mut heap = BinaryHeap::new();
    let push = |heap: &mut BinaryHeap<_>, syms: &[Symbol], left: usize| {
        if let Some(right) = syms[left].next {
            if let Some(&(rank, _)) = merges.get(&(syms[left].id, syms[right].id)) {
                heap.push(Reverse((rank, syms[left].start, left, right)));
            }
        }
    };
    for i in 0..n {
        push(&mut heap, &syms, i);
    }

    while let Some(Reverse((rank, _, left, right))) = heap.pop() {
        if !syms[left].alive || !syms[right].alive || syms[left].next != Some(right) {
            continue;
        }
        let Some(&(cur_rank, merged)) = merges.get(&(syms[left].id, syms[right].id)) else {
            continue;
        };
        if cur_rank != rank {
            continue;
        }
        syms[left].id = merged;
        syms[left].end = syms[right].end;
        syms[left].next = syms[right].next;
        syms[right].alive = false;
        if let Some(nn) = syms[right].next {
            syms[nn].prev = Some(left);
        }
        if let Some(p) = syms[left].prev {
            push(&mut heap, &syms, p);
        }
        push(&mut heap, &syms, left);
    }

    let mut enc = Encoding::default();
    let mut cur = if n > 0 { Some(0) } else { None };
    while let Some(i) = cur {
        enc.ids.push(syms[i].id);
        enc.offsets.push((syms[i].start, syms[i].end));
        cur = syms[i].next;
    }
    Ok(enc)
}

fn initial_symbols(vocab: &Vocabulary, text: &[u8]) -> Result<Vec<Symbol>, VocabError> {
    let sym = |id, start, end| Symbol { id, start, end, prev: None, next: None, alive: true };
    match vocab.mode() {
        VocabMode::ByteLevel => Ok(text
            .iter()
            .enumerate()
            .map(|(i, &b)| sym(vocab.id(&[b]).expect("byte fallback checked at load"), i, i + 1))
            .collect()),
        VocabMode::Metaspace => {
            let s = std::str::from_utf8(text).map_err(|e| VocabError::Unencodable { offset: e.valid_up_to() })?;
            s.char_indices()
                .map(|(i, c)| {
                    let end = i + c.len_utf8();
                    vocab
                        .id(&text[i..end])
                        .map(|id| sym(id, i, end))
                        .ok_or(VocabError::Unencodable { offset: i })
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;

    fn merge_vocab() -> Vocabulary {
        let tokens: Vec<Vec<u8>> = ["a", "b", "c", "ab", "bc", "abc"].iter().map(|t| t.as_bytes().to_vec()).collect();
        let merges = vec![(b"b".to_vec(), b"c".to_vec()), (b"a".to_vec(), b"b".to_vec()), (b"a".to_vec(), b"bc".to_vec())];
        Vocabulary::new(tokens, Some(merges), VocabMode::Metaspace, false).unwrap()
    }

    fn strs(v: &Vocabulary, e: &Encoding) -> Vec<String> {
        e.ids.iter().map(|&i| v.display(i)).collect()
    }

    #[test]
    fn lower_rank_merges_first() {
        let v = merge_vocab();
        // "bc" (rank 0) beats "ab" (rank 1); then "a"+"bc" (rank 2).
        let e = v.encode(b"abc").unwrap();
        assert_eq!(strs(&v, &e), ["abc"]);
        let e = v.encode(b"abab").unwrap();
        assert_eq!(strs(&v, &e), ["ab", "ab"]);
        assert_eq!(e.offsets, vec![(0, 2), (2, 4)]);
    }

    #[test]
    fn merge_rank_differs_from_longest_match() {
        // Longest match would take "ab" then "c"; ranks produce "a" + "bc" first.
        let tokens: Vec<Vec<u8>> = ["a", "b", "c", "ab", "bc"].iter().map(|t| t.as_bytes().to_vec()).collect();
        let merges = vec![(b"b".to_vec(), b"c".to_vec()), (b"a".to_vec(), b"b".to_vec())];
        let v = Vocabulary::new(tokens.clone(), Some(merges), VocabMode::Metaspace, false).unwrap();
        assert_eq!(strs(&v, &v.encode(b"abc").unwrap()), ["a", "bc"]);
        let greedy = Vocabulary::new(tokens, None, VocabMode::Metaspace, false).unwrap();
        assert_eq!(strs(&greedy, &greedy.encode(b"abc").unwrap()), ["ab", "c"]);
    }

    #[test]
    fn invalid_merge_rejected() {
        let tokens: Vec<Vec<u8>> = ["a", "b"].iter().map(|t| t.as_bytes().to_vec()).collect();
        let merges = vec![(b"a".to_vec(), b"b".to_vec())];
        let err = Vocabulary::new(tokens, Some(merges), VocabMode::Metaspace, false).unwrap_err();
        assert!(matches!(err, VocabError::InvalidMerge { rank: 0, .. }));
    }

    #[test]
    fn metaspace_unknown_char() {
        let v = merge_vocab();
        assert!(matches!(v.encode(b"abd"), Err(VocabError::Unencodable { offset: 2 })));
    }
}

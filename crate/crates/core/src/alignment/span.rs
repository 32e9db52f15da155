//! Token spans over text: extended-span extraction and projection of a token
//! sequence onto text it was not produced from.

use crate::vocab::{Encoding, TokenId, Vocabulary};

use super::AlignError;

/// Start of the extended span for a word starting at `word_start`: the word
/// owns the whitespace run in front of it.
pub fn gap_start(text: &[u8], word_start: usize) -> usize {
    let mut s = word_start;
    while s > 0 && text[s - 1].is_ascii_whitespace() {
        s -= 1;
    }
    s
}

/// Tokens whose byte ranges intersect `span`. A token with an empty range
/// belongs to the span when it sits inside it.
pub fn tokens_in(ids: &[TokenId], ranges: &[(usize, usize)], span: (usize, usize)) -> Vec<TokenId> {
    let (s, e) = span;
    ids.iter()
        .zip(ranges)
        .filter(|(_, &(a, b))| if a == b { s <= a && a < e } else { a < e && b > s })
        .map(|(&id, _)| id)
        .collect()
}

/// The minimal run of tokens of `encoding` covering the extended span of the
/// word at `word` (a byte range of `text`, the text that was encoded).
pub fn extract_token_span(encoding: &Encoding, text: &str, word: (usize, usize)) -> Result<Vec<TokenId>, AlignError> {
    let bytes = text.as_bytes();
    if word.0 > word.1 || word.1 > bytes.len() {
        return Err(AlignError::RangeOutOfBounds { start: word.0, end: word.1, len: bytes.len() });
    }
    let span = (gap_start(bytes, word.0), word.1);
    Ok(tokens_in(&encoding.ids, &encoding.offsets, span))
}

/// Assign every token a byte range of `text`, tolerating whitespace that the
/// token sequence and the text disagree on.
///
/// Token bytes and text bytes are consumed in parallel. A whitespace byte (or
/// a byte from `also_skippable`) present in the token but not in the text is
/// skipped, as is extra whitespace in the text. Any other disagreement is an
/// error reporting the text offset.
pub fn project(
    vocab: &Vocabulary,
    ids: &[TokenId],
    text: &[u8],
    also_skippable: &[u8],
) -> Result<Vec<(usize, usize)>, AlignError> {
    let mut ranges = Vec::with_capacity(ids.len());
    let mut p = 0;
    for &id in ids {
        let tok = vocab.token_bytes(id)?;
        let start = p;
        let mut k = 0;
        while k < tok.len() {
            let c = tok[k];
            if p < text.len() && text[p] == c {
                p += 1;
                k += 1;
            } else if c.is_ascii_whitespace() || also_skippable.contains(&c) {
                k += 1;
            } else if p < text.len() && text[p].is_ascii_whitespace() {
                p += 1;
            } else {
                return Err(AlignError::Projection { offset: p });
            }
        }
        ranges.push((start, p));
    }
    if text[p..].iter().any(|b| !b.is_ascii_whitespace()) {
        return Err(AlignError::Projection { offset: p });
    }
    Ok(ranges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::VocabMode;

    fn voc() -> Vocabulary {
        let toks = [" of", " February", "February", " ", "\n", "Feb", "ruary", "[", "]", "x"];
        Vocabulary::from_strs(&toks, VocabMode::Metaspace, false).unwrap()
    }

    fn ids(v: &Vocabulary, toks: &[&str]) -> Vec<TokenId> {
        toks.iter().map(|t| v.id_of(t).unwrap()).collect()
    }

    #[test]
    fn extended_span_owns_the_gap() {
        let v = voc();
        let text = "x of February";
        let enc = v.encode(text.as_bytes()).unwrap();
        assert_eq!(extract_token_span(&enc, text, (5, 13)).unwrap(), ids(&v, &[" February"]));
        assert_eq!(extract_token_span(&enc, text, (0, 1)).unwrap(), ids(&v, &["x"]));
        let text = "x\n\nFebruary";
        let enc = v.encode(text.as_bytes()).unwrap();
        assert_eq!(extract_token_span(&enc, text, (3, 11)).unwrap(), ids(&v, &["\n", "\n", "February"]));
        assert!(matches!(extract_token_span(&enc, text, (3, 99)), Err(AlignError::RangeOutOfBounds { .. })));
    }

    #[test]
    fn projection_skips_disagreeing_whitespace() {
        let v = voc();
        let seq = ids(&v, &[" of", "February"]);
        assert_eq!(project(&v, &seq, b" of February", &[]).unwrap(), vec![(0, 3), (3, 12)]);
        let seq = ids(&v, &[" of", " ", " February"]);
        assert_eq!(project(&v, &seq, b" of February", &[]).unwrap(), vec![(0, 3), (3, 4), (4, 12)]);
        let seq = ids(&v, &[" of", "[", "February", "]"]);
        assert_eq!(project(&v, &seq, b" of February", b"[]").unwrap(), vec![(0, 3), (3, 3), (3, 12), (12, 12)]);
        assert!(matches!(project(&v, &seq, b" of February", &[]), Err(AlignError::Projection { offset: 4 })));
        let seq = ids(&v, &[" of"]);
        assert!(matches!(project(&v, &seq, b" of x", &[]), Err(AlignError::Projection { offset: 3 })));
    }

    #[test]
    fn empty_tokens_inside_span() {
        let seq = [TokenId(0), TokenId(1), TokenId(2)];
        let ranges = [(0, 3), (3, 3), (3, 12)];
        assert_eq!(tokens_in(&seq, &ranges, (3, 12)), vec![TokenId(1), TokenId(2)]);
        assert_eq!(tokens_in(&seq, &ranges, (0, 3)), vec![TokenId(0)]);
    }
}

//! Word-level longest common subsequence.

/// For each item of `a`, the index of the item of `b` it is matched to by a
/// longest common subsequence, if any. Common prefixes and suffixes are
/// matched directly; only the differing middle goes through the quadratic
/// table. Ties prefer matching earlier items of `a` to earlier items of `b`.
pub fn lcs_matches<T: PartialEq>(a: &[T], b: &[T]) -> Vec<Option<usize>> {
    let mut out = vec![None; a.len()];
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    for (i, slot) in out.iter_mut().enumerate().take(prefix) {
        *slot = Some(i);
    }
    let (ar, br) = (&a[prefix..], &b[prefix..]);
    let suffix = ar.iter().rev().zip(br.iter().rev()).take_while(|(x, y)| x == y).count();
    for k in 0..suffix {
        out[a.len() - 1 - k] = Some(b.len() - 1 - k);
    }
    let am = &ar[..ar.len() - suffix];
    let bm = &br[..br.len() - suffix];
    let (n, m) = (am.len(), bm.len());
    if n == 0 || m == 0 {
        return out;
    }
    // table[i][j] = LCS length of am[i..] and bm[j..].
    let w = m + 1;
    let mut table = vec![0u32; (n + 1) * w];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            table[i * w + j] = if am[i] == bm[j] {
                table[(i + 1) * w + j + 1] + 1
            } else {
                table[(i + 1) * w + j].max(table[i * w + j + 1])
            };
        }
    }
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if am[i] == bm[j] && table[i * w + j] == table[(i + 1) * w + j + 1] + 1 {
            out[prefix + i] = Some(prefix + j);
            i += 1;
            j += 1;
        } else if table[(i + 1) * w + j] >= table[i * w + j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_lcs_len(a: &[u8], b: &[u8]) -> usize {
        match (a.split_first(), b.split_first()) {
            (Some((x, ar)), Some((y, br))) => {
                if x == y {
                    1 + naive_lcs_len(ar, br)
                } else {
                    naive_lcs_len(ar, b).max(naive_lcs_len(a, br))
                }
            }
            _ => 0,
        }
    }

    #[test]
    fn localized_damage() {
        let a = ["the", "Campaign", "was", "over"];
        let b = ["the", "Drive", "was", "over"];
        assert_eq!(lcs_matches(&a, &b), vec![Some(0), None, Some(2), Some(3)]);
        let b = ["the", "Campaign", "over"];
        assert_eq!(lcs_matches(&a, &b), vec![Some(0), Some(1), None, Some(2)]);
        assert_eq!(lcs_matches::<&str>(&[], &["x"]), vec![]);
    }

    proptest! {
        #[test]
        fn matches_are_a_maximal_common_subsequence(
            a in prop::collection::vec(0u8..4, 0..9),
            b in prop::collection::vec(0u8..4, 0..9),
        ) {
            let m = lcs_matches(&a, &b);
            let pairs: Vec<(usize, usize)> = m.iter().enumerate().filter_map(|(i, j)| j.map(|j| (i, j))).collect();
            for &(i, j) in &pairs {
                prop_assert_eq!(a[i], b[j]);
            }
            prop_assert!(pairs.windows(2).all(|w| w[0].1 < w[1].1));
            prop_assert_eq!(pairs.len(), naive_lcs_len(&a, &b));
        }
    }
}

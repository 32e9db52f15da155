//! Byte trie over token strings.

use super::TokenId;

#[derive(Debug, Clone, Default)]
struct Node {
    // Sorted by byte.
    children: Vec<(u8, u32)>,
    token: Option<TokenId>,
}

/// Read-only after construction. Shared by the encoder and the segmentation
/// lattice.
#[derive(Debug, Clone)]
pub struct TokenTrie {
    nodes: Vec<Node>,
}

impl TokenTrie {
    pub fn build<'a>(tokens: impl IntoIterator<Item = (TokenId, &'a [u8])>) -> Self {
        let mut nodes = vec![Node::default()];
        for (id, bytes) in tokens {
            let mut cur = 0usize;
            for &b in bytes {
                cur = match nodes[cur].children.binary_search_by_key(&b, |&(k, _)| k) {
                    Ok(pos) => nodes[cur].children[pos].1 as usize,
                    Err(pos) => {
                        let next = nodes.len() as u32;
                        nodes.push(Node::default());
                        nodes[cur].children.insert(pos, (b, next));
                        next as usize
                    }
                };
            }
            nodes[cur].token = Some(id);
        }
        TokenTrie { nodes }
    }

    fn child(&self, node: usize, b: u8) -> Option<usize> {
        let children = &self.nodes[node].children;
        children
            .binary_search_by_key(&b, |&(k, _)| k)
            .ok()
            .map(|pos| children[pos].1 as usize)
    }

    /// Every token that is a prefix of `text[start..]`, as `(id, end)` pairs in
    /// increasing `end` order.
    pub fn prefixes<'t>(&'t self, text: &'t [u8], start: usize) -> Prefixes<'t> {
        Prefixes { trie: self, text, pos: start, node: Some(0) }
    }

    /// Longest token that is a prefix of `text[start..]`.
    pub fn longest(&self, text: &[u8], start: usize) -> Option<(TokenId, usize)> {
        self.prefixes(text, start).last()
    }
}

pub struct Prefixes<'t> {
    trie: &'t TokenTrie,
    text: &'t [u8],
    pos: usize,
    node: Option<usize>,
}

impl Iterator for Prefixes<'_> {
    type Item = (TokenId, usize);

    fn next(&mut self) -> Option<Self::Item> {
        while let Some(node) = self.node {
            if self.pos >= self.text.len() {
                self.node = None;
                return None;
            }
            let next = self.trie.child(node, self.text[self.pos]);
            self.pos += 1;
            self.node = next;
            if let Some(n) = next {
                if let Some(id) = self.trie.nodes[n].token {
                    return Some((id, self.pos));
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefixes_in_length_order() {
        let toks: Vec<&[u8]> = vec![b"a", b"ab", b"abc", b"b"];
        let trie = TokenTrie::build(toks.iter().enumerate().map(|(i, t)| (TokenId(i as u32), *t)));
        let found: Vec<_> = trie.prefixes(b"abcd", 0).collect();
        assert_eq!(found, vec![(TokenId(0), 1), (TokenId(1), 2), (TokenId(2), 3)]);
        assert_eq!(trie.longest(b"abcd", 1), Some((TokenId(3), 2)));
        assert_eq!(trie.longest(b"abcd", 3), None);
        assert_eq!(trie.longest(b"abcd", 4), None);
    }
}

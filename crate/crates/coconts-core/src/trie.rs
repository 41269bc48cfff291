//! Counted prefix trie answering exact corpus conditionals.
//!
//! The trie stores every stride-1 window of `k + 1` tokens. Each node's count
//! is the number of inserted windows that start with the path from the root
//! to that node, so the children of a depth-`m` node (`1 <= m <= k`) carry
//! exactly the occurrence counts of tokens following that `m`-gram. The
//! conditional distribution after a prefix is therefore a ratio of two node
//! counts, and its Top-r truncation is read off the child map directly.
//!
//! Depth is `k + 1`, one level deeper than the longest queried prefix:
//! level-`k` nodes still need children to describe their next-token counts.
//!
//! The child map is ordered by token ID, which makes every traversal, query,
//! and serialization deterministic. The trie is mutated by a single writer
//! during construction and is read-only afterwards.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::approx::TopR;
use crate::corpus::{windows, TokenId, TokenWidth};
use crate::error::{domain, Error, Result};
use crate::oracle::ContinuationCounts;

/// One trie node: occurrence count plus ordered children.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrieNode {
    count: u64,
    children: BTreeMap<TokenId, TrieNode>,
}

impl TrieNode {
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn children(&self) -> impl Iterator<Item = (TokenId, &TrieNode)> {
        self.children.iter().map(|(&t, n)| (t, n))
    }

    pub fn child(&self, token: TokenId) -> Option<&TrieNode> {
        self.children.get(&token)
    }

    fn node_count(&self) -> u64 {
        1 + self.children.values().map(TrieNode::node_count).sum::<u64>()
    }

    fn max_depth(&self) -> usize {
        self.children
            .values()
            .map(|c| 1 + c.max_depth())
            .max()
            .unwrap_or(0)
    }

    fn prune(&mut self, min_count: u64) {
        self.children.retain(|_, child| child.count >= min_count);
        for child in self.children.values_mut() {
            child.prune(min_count);
        }
    }
}

/// Size and shape summary of a trie.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrieStats {
    /// Number of nodes including the root.
    pub node_count: u64,
    pub max_depth: usize,
    /// Windows inserted so far (the root count).
    pub total_windows: u64,
    /// Rough in-memory footprint; node size plus ordered-map entry overhead.
    pub estimated_bytes: u64,
}

/// Counted prefix trie of depth `k + 1` over a fixed vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixTrie {
    root: TrieNode,
    /// `k + 1`: length of inserted windows.
    depth_limit: usize,
    vocab_size: u32,
}

impl PrefixTrie {
    pub fn new(k: usize, vocab_size: u32) -> Result<Self> {
        if k == 0 {
            return Err(domain!("k must be at least 1"));
        }
        if vocab_size == 0 {
            return Err(domain!("vocab_size must be positive"));
        }
        Ok(PrefixTrie {
            root: TrieNode::default(),
            depth_limit: k + 1,
            vocab_size,
        })
    }

    /// Builds the trie by inserting every stride-1 window of `k + 1` tokens.
    pub fn build(
        tokens: &[TokenId],
        separator: Option<TokenId>,
        k: usize,
        vocab_size: u32,
    ) -> Result<Self> {
        let mut trie = PrefixTrie::new(k, vocab_size)?;
        for (_, window) in windows(tokens, separator, k + 1)? {
            trie.insert_window(window)?;
        }
        Ok(trie)
    }

    /// Longest queried prefix length.
    pub fn k(&self) -> usize {
        self.depth_limit - 1
    }

    pub fn vocab_size(&self) -> u32 {
        self.vocab_size
    }

    pub fn root(&self) -> &TrieNode {
        &self.root
    }

    /// Increments the counts along the window's root-to-leaf path, creating
    /// nodes as needed.
    pub fn insert_window(&mut self, window: &[TokenId]) -> Result<()> {
        if window.len() != self.depth_limit {
            return Err(domain!(
                "window length {} does not match k + 1 = {}",
                window.len(),
                self.depth_limit
            ));
        }
        if let Some(&bad) = window.iter().find(|&&t| t >= self.vocab_size) {
            return Err(domain!(
                "token {bad} outside vocabulary of size {}",
                self.vocab_size
            ));
        }
        self.root.count += 1;
        let mut node = &mut self.root;
        for &token in window {
            node = node.children.entry(token).or_default();
            node.count += 1;
        }
        Ok(())
    }

    /// Node reached by `prefix`, if every step exists.
    pub fn node(&self, prefix: &[TokenId]) -> Option<&TrieNode> {
        let mut node = &self.root;
        for &token in prefix {
            node = node.child(token)?;
        }
        Some(node)
    }

    fn prefix_node(&self, prefix: &[TokenId]) -> Result<&TrieNode> {
        if prefix.is_empty() || prefix.len() > self.k() {
            return Err(domain!(
                "prefix length {} outside [1, {}]",
                prefix.len(),
                self.k()
            ));
        }
        self.node(prefix).ok_or(Error::UnseenPrefix)
    }

    /// Raw integer counts behind the conditional after `prefix`.
    pub fn continuation_counts(&self, prefix: &[TokenId]) -> Result<ContinuationCounts> {
        let node = self.prefix_node(prefix)?;
        Ok(ContinuationCounts {
            counts: node.children.iter().map(|(&t, n)| (t, n.count)).collect(),
            prefix_count: node.count,
        })
    }

    /// Full conditional next-token distribution after `prefix`, as a dense
    /// vector over the vocabulary. Entries sum to 1 for any seen prefix.
    pub fn conditional(&self, prefix: &[TokenId]) -> Result<Vec<f64>> {
        let node = self.prefix_node(prefix)?;
        let total = node.count as f64;
        let mut dist = alloc::vec![0.0; self.vocab_size as usize];
        for (&token, child) in node.children.iter() {
            dist[token as usize] = child.count as f64 / total;
        }
        Ok(dist)
    }

    /// Top-`r` truncation of the conditional after `prefix`: the `r` highest
    /// fractions, ties broken by ascending token ID.
    pub fn top_r(&self, prefix: &[TokenId], r: usize) -> Result<TopR> {
        if r == 0 {
            return Err(domain!("r must be at least 1"));
        }
        let node = self.prefix_node(prefix)?;
        let counts: Vec<(TokenId, u64)> =
            node.children.iter().map(|(&t, n)| (t, n.count)).collect();
        TopR::from_counts(&counts, node.count, r)
    }

    /// Removes every subtree whose root count is below `min_count`. Counts of
    /// surviving nodes are unchanged, so a pruned interior node may count more
    /// than its remaining children sum to. The root always survives.
    pub fn prune(&mut self, min_count: u64) -> Result<()> {
        if min_count == 0 {
            return Err(domain!("min_count must be at least 1"));
        }
        self.root.prune(min_count);
        Ok(())
    }

    pub fn stats(&self) -> TrieStats {
        let node_count = self.root.node_count();
        // Node payload plus ordered-map entry overhead per child link.
        let per_node = core::mem::size_of::<TrieNode>() as u64;
        let per_edge = (core::mem::size_of::<TokenId>() + 16) as u64;
        TrieStats {
            node_count,
            max_depth: self.root.max_depth(),
            total_windows: self.root.count,
            estimated_bytes: node_count * per_node + (node_count - 1) * per_edge,
        }
    }

    /// Every stored prefix of length 1..=k, in lexicographic order.
    pub fn seen_prefixes(&self) -> Vec<Vec<TokenId>> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        collect_prefixes(&self.root, self.k(), &mut path, &mut out);
        out
    }

    /// Serializes the trie in preorder: per node its count (8 bytes LE) and
    /// child count (4 bytes LE), then each child's token ID at the given
    /// width followed by the child subtree.
    pub fn encode_snapshot(&self, width: TokenWidth) -> Result<Vec<u8>> {
        if self.vocab_size - 1 > width.max_token() {
            return Err(domain!(
                "vocab_size {} does not fit {}-bit snapshot tokens",
                self.vocab_size,
                width.bits()
            ));
        }
        let mut bytes = Vec::new();
        encode_node(&self.root, width, &mut bytes);
        Ok(bytes)
    }

    /// Inverse of [`PrefixTrie::encode_snapshot`].
    pub fn decode_snapshot(
        bytes: &[u8],
        width: TokenWidth,
        k: usize,
        vocab_size: u32,
    ) -> Result<Self> {
        let mut trie = PrefixTrie::new(k, vocab_size)?;
        let mut cursor = 0usize;
        trie.root = decode_node(bytes, width, &mut cursor, k + 1)?;
        if cursor != bytes.len() {
            return Err(Error::Format(alloc::format!(
                "{} trailing bytes after trie snapshot",
                bytes.len() - cursor
            )));
        }
        Ok(trie)
    }
}

fn collect_prefixes(
    node: &TrieNode,
    max_len: usize,
    path: &mut Vec<TokenId>,
    out: &mut Vec<Vec<TokenId>>,
) {
    if path.len() == max_len {
        return;
    }
    for (token, child) in node.children.iter() {
        path.push(*token);
        out.push(path.clone());
        collect_prefixes(child, max_len, path, out);
        path.pop();
    }
}

fn encode_node(node: &TrieNode, width: TokenWidth, out: &mut Vec<u8>) {
    out.extend_from_slice(&node.count.to_le_bytes());
    out.extend_from_slice(&(node.children.len() as u32).to_le_bytes());
    for (&token, child) in node.children.iter() {
        match width {
            TokenWidth::W16 => out.extend_from_slice(&(token as u16).to_le_bytes()),
            TokenWidth::W32 => out.extend_from_slice(&token.to_le_bytes()),
        }
        encode_node(child, width, out);
    }
}

fn take<'a>(bytes: &'a [u8], cursor: &mut usize, n: usize) -> Result<&'a [u8]> {
    let end = cursor
        .checked_add(n)
        .filter(|&end| end <= bytes.len())
        .ok_or_else(|| Error::Format(alloc::format!("trie snapshot truncated at byte {cursor}")))?;
    let slice = &bytes[*cursor..end];
    *cursor = end;
    Ok(slice)
}

fn decode_node(
    bytes: &[u8],
    width: TokenWidth,
    cursor: &mut usize,
    depth_budget: usize,
) -> Result<TrieNode> {
    let count = u64::from_le_bytes(take(bytes, cursor, 8)?.try_into().unwrap());
    let child_count = u32::from_le_bytes(take(bytes, cursor, 4)?.try_into().unwrap());
    if child_count > 0 && depth_budget == 0 {
        return Err(Error::Format(alloc::format!(
            "trie snapshot deeper than declared depth at byte {cursor}"
        )));
    }
    let mut children = BTreeMap::new();
    for _ in 0..child_count {
        let token = match width {
            TokenWidth::W16 => {
                u16::from_le_bytes(take(bytes, cursor, 2)?.try_into().unwrap()) as TokenId
            }
            TokenWidth::W32 => u32::from_le_bytes(take(bytes, cursor, 4)?.try_into().unwrap()),
        };
        let child = decode_node(bytes, width, cursor, depth_budget - 1)?;
        children.insert(token, child);
    }
    Ok(TrieNode { count, children })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_continuations;

    fn count_of(trie: &PrefixTrie, path: &[TokenId]) -> u64 {
        trie.node(path).expect("path exists").count()
    }

    #[test]
    fn single_insertion_counts_whole_path() {
        let mut trie = PrefixTrie::new(1, 3).unwrap();
        trie.insert_window(&[0, 1]).unwrap();
        assert_eq!(trie.root().count(), 1);
        assert_eq!(count_of(&trie, &[0]), 1);
        assert_eq!(count_of(&trie, &[0, 1]), 1);

        trie.insert_window(&[0, 1]).unwrap();
        assert_eq!(count_of(&trie, &[0, 1]), 2);
    }

    #[test]
    fn insert_validates_window() {
        let mut trie = PrefixTrie::new(1, 3).unwrap();
        assert!(matches!(
            trie.insert_window(&[0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            trie.insert_window(&[0, 1, 2]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            trie.insert_window(&[0, 3]),
            Err(Error::Domain(_))
        ));
        assert_eq!(trie.root().count(), 0);
    }

    #[test]
    fn build_counts_all_windows() {
        let tokens = [0, 1, 0, 1, 0, 2];
        let trie = PrefixTrie::build(&tokens, None, 1, 3).unwrap();
        assert_eq!(trie.root().count(), 5);
        assert_eq!(count_of(&trie, &[0]), 3);
        assert_eq!(count_of(&trie, &[0, 1]), 2);
        assert_eq!(count_of(&trie, &[0, 2]), 1);
        assert_eq!(count_of(&trie, &[1]), 2);
        assert_eq!(count_of(&trie, &[1, 0]), 2);
    }

    #[test]
    fn build_on_empty_corpus() {
        let trie = PrefixTrie::build(&[], None, 2, 10).unwrap();
        assert_eq!(trie.root().count(), 0);
        let stats = trie.stats();
        assert_eq!(stats.node_count, 1);
        assert_eq!(stats.max_depth, 0);
    }

    #[test]
    fn repeated_token_builds_a_chain() {
        let tokens = [5u32; 10];
        let trie = PrefixTrie::build(&tokens, None, 2, 6).unwrap();
        assert_eq!(count_of(&trie, &[5]), 8);
        assert_eq!(count_of(&trie, &[5, 5]), 8);
        assert_eq!(count_of(&trie, &[5, 5, 5]), 8);
        let stats = trie.stats();
        assert_eq!(stats.node_count, 4);
        assert_eq!(stats.max_depth, 3);
        assert_eq!(stats.total_windows, 8);
    }

    #[test]
    fn conditional_is_a_count_ratio() {
        let tokens = [0, 1, 0, 1, 0, 2];
        let trie = PrefixTrie::build(&tokens, None, 1, 3).unwrap();
        let dist = trie.conditional(&[0]).unwrap();
        assert_eq!(dist, [0.0, 2.0 / 3.0, 1.0 / 3.0]);
        assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(trie.conditional(&[2]), Err(Error::UnseenPrefix));
    }

    #[test]
    fn conditional_matches_the_walkthrough_example() {
        // 1000 windows start with token 7; 526 of those continue with 3.
        let mut trie = PrefixTrie::new(2, 10).unwrap();
        for i in 0..1000u64 {
            let next = if i < 526 { 3 } else { 4 + (i % 3) as TokenId };
            trie.insert_window(&[7, next, 0]).unwrap();
        }
        assert_eq!(count_of(&trie, &[7]), 1000);
        assert_eq!(trie.conditional(&[7]).unwrap()[3], 0.526);
    }

    #[test]
    fn prefix_length_bounds_are_enforced() {
        let tokens = [0, 1, 0, 1, 0, 2];
        let trie = PrefixTrie::build(&tokens, None, 1, 3).unwrap();
        assert!(matches!(trie.conditional(&[]), Err(Error::Domain(_))));
        assert!(matches!(
            trie.conditional(&[0, 1]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn top_r_truncates_and_breaks_ties_by_id() {
        let tokens = [0, 1, 0, 1, 0, 2];
        let trie = PrefixTrie::build(&tokens, None, 1, 3).unwrap();

        let top1 = trie.top_r(&[0], 1).unwrap();
        assert_eq!(top1.ids(), &[1]);
        assert_eq!(top1.probs(), &[2.0 / 3.0]);
        assert_eq!(top1.p(), 2.0 / 3.0);

        let top4 = trie.top_r(&[0], 4).unwrap();
        assert_eq!(top4.ids(), &[1, 2]);
        assert_eq!(top4.p(), 1.0);

        // Equal counts: the lower token ID wins.
        let mut tie = PrefixTrie::new(1, 8).unwrap();
        tie.insert_window(&[0, 7]).unwrap();
        tie.insert_window(&[0, 3]).unwrap();
        let top = tie.top_r(&[0], 1).unwrap();
        assert_eq!(top.ids(), &[3]);
        assert_eq!(top.probs(), &[0.5]);
    }

    #[test]
    fn prune_removes_low_count_subtrees() {
        let tokens = [0, 1, 0, 1, 0, 2];
        let mut trie = PrefixTrie::build(&tokens, None, 1, 3).unwrap();

        let mut identity = trie.clone();
        identity.prune(1).unwrap();
        assert_eq!(identity, trie);

        trie.prune(2).unwrap();
        assert!(trie.node(&[0, 2]).is_none());
        assert_eq!(count_of(&trie, &[0]), 3);

        let mut all = PrefixTrie::build(&tokens, None, 1, 3).unwrap();
        all.prune(100).unwrap();
        assert_eq!(all.root().count(), 5);
        assert_eq!(all.stats().node_count, 1);
    }

    #[test]
    fn node_count_is_monotone_under_insertion() {
        let mut trie = PrefixTrie::new(1, 4).unwrap();
        let mut last = trie.stats().node_count;
        for w in [[0, 1], [0, 2], [1, 1], [0, 1]] {
            trie.insert_window(&w).unwrap();
            let now = trie.stats().node_count;
            assert!(now >= last);
            last = now;
        }
    }

    #[test]
    fn counts_agree_with_oracle_on_a_separated_corpus() {
        let tokens = [0, 1, 2, 9, 0, 1, 0, 9, 1, 2, 0, 1];
        let trie = PrefixTrie::build(&tokens, Some(9), 2, 10).unwrap();
        for prefix in trie.seen_prefixes() {
            let got = trie.continuation_counts(&prefix).unwrap();
            let want = brute_continuations(&[&tokens], Some(9), &prefix, 2).unwrap();
            assert_eq!(got, want, "prefix {prefix:?}");
        }
    }

    #[test]
    fn snapshot_roundtrips() {
        let tokens = [0, 1, 0, 1, 0, 2, 5, 5, 5];
        let trie = PrefixTrie::build(&tokens, None, 2, 6).unwrap();
        for width in [TokenWidth::W16, TokenWidth::W32] {
            let bytes = trie.encode_snapshot(width).unwrap();
            let back = PrefixTrie::decode_snapshot(&bytes, width, 2, 6).unwrap();
            assert_eq!(back, trie);
        }

        let bytes = trie.encode_snapshot(TokenWidth::W16).unwrap();
        assert!(matches!(
            PrefixTrie::decode_snapshot(&bytes[..bytes.len() - 1], TokenWidth::W16, 2, 6),
            Err(Error::Format(_))
        ));
    }
}

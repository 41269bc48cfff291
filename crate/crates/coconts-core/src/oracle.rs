//! Brute-force reference for corpus conditional distributions.
//!
//! The oracle rescans every stride-1 window for each queried prefix, so it is
//! quadratic and only suitable for desk-scale corpora (~1e5 tokens). It shares
//! [`crate::corpus::windows`] with the trie builder, so both sides apply the
//! identical boundary convention: counts come from full `(k+1)`-token windows
//! that never span a document separator or a segment edge.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::corpus::{windows, TokenId};
use crate::error::{domain, Error, Result};
use crate::trie::PrefixTrie;

/// Occurrence counts of the tokens following `prefix`, plus the number of
/// windows starting with `prefix` (the denominator of the conditional).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuationCounts {
    pub counts: BTreeMap<TokenId, u64>,
    pub prefix_count: u64,
}

/// Counts continuations of `prefix` across a list of disjoint token segments
/// (whole corpus, or shard interiors). Windows are length `k + 1` and never
/// cross a segment edge or a separator.
pub fn brute_continuations(
    segments: &[&[TokenId]],
    separator: Option<TokenId>,
    prefix: &[TokenId],
    k: usize,
) -> Result<ContinuationCounts> {
    if prefix.is_empty() || prefix.len() > k {
        return Err(domain!(
            "prefix length {} outside [1, {k}]",
            prefix.len()
        ));
    }
    let mut counts: BTreeMap<TokenId, u64> = BTreeMap::new();
    let mut prefix_count = 0u64;
    for segment in segments {
        for (_, window) in windows(segment, separator, k + 1)? {
            if window[..prefix.len()] == *prefix {
                prefix_count += 1;
                *counts.entry(window[prefix.len()]).or_insert(0) += 1;
            }
        }
    }
    if prefix_count == 0 {
        return Err(Error::UnseenPrefix);
    }
    Ok(ContinuationCounts {
        counts,
        prefix_count,
    })
}

/// Fractional frequency of each token following `prefix`, by direct scan.
pub fn brute_conditional(
    tokens: &[TokenId],
    separator: Option<TokenId>,
    prefix: &[TokenId],
    k: usize,
) -> Result<BTreeMap<TokenId, f64>> {
    let counts = brute_continuations(&[tokens], separator, prefix, k)?;
    let total = counts.prefix_count as f64;
    Ok(counts
        .counts
        .into_iter()
        .map(|(t, c)| (t, c as f64 / total))
        .collect())
}

/// A prefix where trie and oracle disagree, with both sides' raw counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub prefix: Vec<TokenId>,
    /// `(prefix_count, continuation counts)`; `None` if the side reports the
    /// prefix as unseen.
    pub trie: Option<ContinuationCounts>,
    pub oracle: Option<ContinuationCounts>,
}

#[derive(Debug, Clone, Default)]
pub struct OracleReport {
    pub prefixes_checked: usize,
    pub mismatches: Vec<Mismatch>,
}

impl OracleReport {
    pub fn is_equivalent(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compares the trie against the brute-force scan for every distinct prefix
/// of length 1..=k, from both the corpus side (catches missing trie nodes)
/// and the trie side (catches phantom nodes). Counts are compared as exact
/// integers; no division is involved.
///
/// With `max_prefixes` set, a deterministic stride subsample of the sorted
/// prefix set is checked instead.
pub fn compare_all(
    trie: &PrefixTrie,
    tokens: &[TokenId],
    separator: Option<TokenId>,
    max_prefixes: Option<usize>,
) -> Result<OracleReport> {
    let k = trie.k();
    let mut prefixes: BTreeSet<Vec<TokenId>> = BTreeSet::new();
    for (_, window) in windows(tokens, separator, k + 1)? {
        for len in 1..=k {
            prefixes.insert(window[..len].to_vec());
        }
    }
    for prefix in trie.seen_prefixes() {
        prefixes.insert(prefix);
    }

    let prefixes: Vec<Vec<TokenId>> = prefixes.into_iter().collect();
    let step = match max_prefixes {
        Some(max) if max > 0 && prefixes.len() > max => prefixes.len().div_ceil(max),
        Some(0) => return Ok(OracleReport::default()),
        _ => 1,
    };

    let mut report = OracleReport::default();
    for prefix in prefixes.iter().step_by(step) {
        report.prefixes_checked += 1;
        let from_trie = match trie.continuation_counts(prefix) {
            Ok(c) => Some(c),
            Err(Error::UnseenPrefix) => None,
            Err(e) => return Err(e),
        };
        let from_scan = match brute_continuations(&[tokens], separator, prefix, k) {
            Ok(c) => Some(c),
            Err(Error::UnseenPrefix) => None,
            Err(e) => return Err(e),
        };
        if from_trie != from_scan {
            report.mismatches.push(Mismatch {
                prefix: prefix.clone(),
                trie: from_trie,
                oracle: from_scan,
            });
        }
    }
    Ok(report)
}

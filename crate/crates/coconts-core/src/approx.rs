//! Compact consistent next-token targets.
//!
//! The full corpus conditional after a prefix can have support as large as
//! the vocabulary. Training instead supervises with a sparse target of
//! support at most `r + 1`, built from the Top-r truncation of the
//! conditional and the next token actually realized at the sampled position:
//!
//! * realized token inside the truncation: the truncation scaled by `v`;
//! * realized token outside: the truncation scaled by `u`, plus a one-hot
//!   on the realized token.
//!
//! With `u = 1 / (gamma - p)` and `v = (1 - (1 - p) * u) / p`, where `p` is
//! the truncated mass, the expectation of the target over realized tokens
//! equals the full conditional exactly — scaling the frequent tokens up or
//! down per sample trades a little per-sample distance for consistency of
//! the average. Individual targets are deliberately *not* renormalized;
//! only their expectation is a probability distribution.
//!
//! `gamma` must exceed 1, which keeps `u` inside `(0, 1/(1-p))` and both
//! coefficients positive. As `gamma` grows the target degrades to the
//! renormalized truncation; at `p = 1` it reduces to the full conditional.

use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{TokenId, TokenWidth};
use crate::error::{domain, Error, Result};
use crate::quant;

/// Lower clamp for the truncated mass before computing coefficients.
const P_EPS: f64 = 1e-12;
/// Accepted overshoot of the truncated mass above 1. Probabilities read back
/// from half-precision storage can sum to slightly more than 1 (relative
/// rounding error is 2^-11 per value); anything beyond this is a caller bug.
const P_SLACK: f64 = 1.0 / 1024.0;

/// Pipeline hyperparameters: block length `L`, maximum prefix length `k`,
/// truncation size `r`, and the consistency knob `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper {
    /// Tokens per training block (`L`).
    pub block_len: usize,
    /// Longest prefix with its own supervision level.
    pub k: usize,
    /// Entries kept per truncated distribution.
    pub r: usize,
    pub gamma: f64,
}

impl Hyper {
    pub const DEFAULT_GAMMA: f64 = 1.5;

    pub fn new(block_len: usize, k: usize, r: usize, gamma: f64) -> Result<Self> {
        if k == 0 {
            return Err(domain!("k must be at least 1"));
        }
        if r == 0 {
            return Err(domain!("r must be at least 1"));
        }
        if block_len <= k {
            return Err(domain!("block length {block_len} must exceed k = {k}"));
        }
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(domain!("gamma must be a finite value greater than 1"));
        }
        Ok(Hyper {
            block_len,
            k,
            r,
            gamma,
        })
    }
}

/// Truncated conditional distribution: up to `r` `(token, probability)`
/// entries in descending probability order (source ties broken by ascending
/// token ID), plus the covered mass `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct TopR {
    ids: Vec<TokenId>,
    probs: Vec<f64>,
    p: f64,
}

impl TopR {
    /// Truncates raw occurrence counts. `p` is exactly 1 when nothing was
    /// dropped and the counts account for the whole denominator.
    pub fn from_counts(counts: &[(TokenId, u64)], total: u64, r: usize) -> Result<TopR> {
        if r == 0 {
            return Err(domain!("r must be at least 1"));
        }
        if total == 0 {
            return Err(Error::EmptySupport);
        }
        let mut entries: Vec<(TokenId, u64)> =
            counts.iter().copied().filter(|&(_, c)| c > 0).collect();
        if entries.is_empty() {
            return Err(Error::EmptySupport);
        }
        entries.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let complete =
            entries.len() <= r && entries.iter().map(|&(_, c)| c).sum::<u64>() == total;
        entries.truncate(r);

        let ids = entries.iter().map(|&(t, _)| t).collect();
        let probs: Vec<f64> = entries
            .iter()
            .map(|&(_, c)| c as f64 / total as f64)
            .collect();
        let p = if complete { 1.0 } else { probs.iter().sum() };
        Ok(TopR { ids, probs, p })
    }

    /// Truncates a dense distribution (entries must be non-negative and sum
    /// to 1). `p` is exactly 1 when the whole support is kept.
    pub fn from_distribution(dist: &[f64], r: usize) -> Result<TopR> {
        if r == 0 {
            return Err(domain!("r must be at least 1"));
        }
        let mut sum = 0.0;
        for (t, &prob) in dist.iter().enumerate() {
            if !(prob >= 0.0) || !prob.is_finite() {
                return Err(domain!("probability {prob} at token {t} is invalid"));
            }
            sum += prob;
        }
        if (sum - 1.0).abs() > 1e-6 {
            return Err(domain!("distribution sums to {sum}, expected 1"));
        }
        let mut entries: Vec<(TokenId, f64)> = dist
            .iter()
            .enumerate()
            .filter(|&(_, &prob)| prob > 0.0)
            .map(|(t, &prob)| (t as TokenId, prob))
            .collect();
        if entries.is_empty() {
            return Err(Error::EmptySupport);
        }
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let complete = entries.len() <= r;
        entries.truncate(r);

        let ids = entries.iter().map(|&(t, _)| t).collect();
        let probs: Vec<f64> = entries.iter().map(|&(_, p)| p).collect();
        let p = if complete { 1.0 } else { probs.iter().sum() };
        Ok(TopR { ids, probs, p })
    }

    /// Rebuilds a truncation from stored `(token, probability)` pairs, e.g.
    /// read back from an enriched record. Order is preserved and `p` is the
    /// plain left-to-right sum; whether the support was complete is no longer
    /// known at this point.
    pub fn from_pairs(pairs: &[(TokenId, f64)]) -> Result<TopR> {
        if pairs.is_empty() {
            return Err(Error::EmptySupport);
        }
        let ids = pairs.iter().map(|&(t, _)| t).collect();
        let probs: Vec<f64> = pairs.iter().map(|&(_, p)| p).collect();
        let p = probs.iter().sum();
        Ok(TopR { ids, probs, p })
    }

    /// The truncation as it reads back after probability storage at `width`:
    /// each probability passes through the storage float type, entries that
    /// quantize to zero are dropped (they are indistinguishable from padding
    /// on disk), and `p` is recomputed from the stored values.
    pub fn quantized(&self, width: TokenWidth) -> Result<TopR> {
        let pairs: Vec<(TokenId, f64)> = self
            .pairs()
            .map(|(t, prob)| (t, quant::quantize_prob(prob, width)))
            .filter(|&(_, prob)| prob != 0.0)
            .collect();
        TopR::from_pairs(&pairs)
    }

    pub fn ids(&self) -> &[TokenId] {
        &self.ids
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Total probability mass covered by the kept entries.
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (TokenId, f64)> + '_ {
        self.ids.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn position(&self, token: TokenId) -> Option<usize> {
        self.ids.iter().position(|&t| t == token)
    }

    /// Entries scaled to sum to 1 over the kept support.
    pub fn renormalized(&self) -> Vec<(TokenId, f64)> {
        self.pairs().map(|(t, prob)| (t, prob / self.p)).collect()
    }
}

/// Mixing coefficients for the two target cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    /// Scale of the truncation when the realized token fell outside it.
    pub u: f64,
    /// Scale of the truncation when the realized token fell inside it.
    pub v: f64,
}

/// Computes `u = 1 / (gamma - p)` and `v = (1 - (1 - p) * u) / p`, which
/// satisfy `v * p + u * (1 - p) = 1`. `p` is clamped to `[1e-12, 1]` first.
pub fn coefficients(p: f64, gamma: f64) -> Result<Coefficients> {
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(domain!("gamma must be a finite value greater than 1"));
    }
    if !p.is_finite() || p <= 0.0 {
        return Err(Error::EmptySupport);
    }
    if p > 1.0 + P_SLACK {
        return Err(domain!("covered mass {p} exceeds 1"));
    }
    let p = p.clamp(P_EPS, 1.0);
    let u = 1.0 / (gamma - p);
    let v = (1.0 - (1.0 - p) * u) / p;
    Ok(Coefficients { u, v })
}

/// Which branch produced an adjusted target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetCase {
    InTopR,
    Rare,
}

/// Sparse non-negative supervision weights for one position. Support is at
/// most `r + 1`; the total weight is `v * p` in the `InTopR` case and
/// `u * p + 1` in the `Rare` case.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedTarget {
    /// `(token, weight)` pairs in ascending token order.
    entries: Vec<(TokenId, f64)>,
    case: TargetCase,
    realized: TokenId,
}

impl AdjustedTarget {
    pub fn entries(&self) -> &[(TokenId, f64)] {
        &self.entries
    }

    pub fn case(&self) -> TargetCase {
        self.case
    }

    pub fn realized(&self) -> TokenId {
        self.realized
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w).sum()
    }

    pub fn weight(&self, token: TokenId) -> f64 {
        self.entries
            .iter()
            .find(|&&(t, _)| t == token)
            .map_or(0.0, |&(_, w)| w)
    }
}

/// Builds the adjusted target for one realized next token.
pub fn adjusted_target(topr: &TopR, realized: TokenId, gamma: f64) -> Result<AdjustedTarget> {
    let coeff = coefficients(topr.p(), gamma)?;
    let (case, mut entries) = if topr.position(realized).is_some() {
        let entries = topr.pairs().map(|(t, prob)| (t, coeff.v * prob)).collect();
        (TargetCase::InTopR, entries)
    } else {
        let mut entries: Vec<(TokenId, f64)> =
            topr.pairs().map(|(t, prob)| (t, coeff.u * prob)).collect();
        entries.push((realized, 1.0));
        (TargetCase::Rare, entries)
    };
    entries.sort_by_key(|&(t, _)| t);
    Ok(AdjustedTarget {
        entries,
        case,
        realized,
    })
}

/// Expectation of the adjusted target over realized tokens drawn from
/// `full_conditional`, computed as the literal sum over every outcome. This
/// is the quantity that is supposed to reproduce `full_conditional` itself.
pub fn expectation(topr: &TopR, full_conditional: &[f64], gamma: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; full_conditional.len()];
    for (w, &prob) in full_conditional.iter().enumerate() {
        if prob == 0.0 {
            continue;
        }
        let target = adjusted_target(topr, w as TokenId, gamma)?;
        for &(t, weight) in target.entries() {
            if t as usize >= out.len() {
                return Err(domain!(
                    "token {t} outside distribution of size {}",
                    out.len()
                ));
            }
            out[t as usize] += prob * weight;
        }
    }
    Ok(out)
}

/// L1 distances between the adjusted target and the full conditional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Diagnostics {
    /// Exact distance when the realized token is in the truncation: `(1-p)u`.
    pub in_topr_distance: f64,
    /// Stated bound for the rare case: `2 - u*p`. The bound is tight only for
    /// `u <= 1`; the directly computed distance is available via
    /// [`adjusted_target`] for callers that need it sharp.
    pub rare_bound: f64,
}

pub fn l1_diagnostics(topr: &TopR, gamma: f64) -> Result<L1Diagnostics> {
    let coeff = coefficients(topr.p(), gamma)?;
    Ok(L1Diagnostics {
        in_topr_distance: (1.0 - topr.p()) * coeff.u,
        rare_bound: 2.0 - coeff.u * topr.p(),
    })
}

/// Scatters sparse rows into a dense `rows x vocab_size` matrix.
pub fn dense_rows(rows: &[&[(TokenId, f64)]], vocab_size: u32) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let mut dense = vec![0.0; vocab_size as usize];
        for &(t, w) in *row {
            if t >= vocab_size {
                return Err(domain!(
                    "token {t} outside vocabulary of size {vocab_size}"
                ));
            }
            dense[t as usize] = w;
        }
        out.push(dense);
    }
    Ok(out)
}

/// Dense `k x vocab_size` expansion of the per-level adjusted targets.
pub fn dense_targets(targets: &[AdjustedTarget], vocab_size: u32) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<&[(TokenId, f64)]> = targets.iter().map(AdjustedTarget::entries).collect();
    dense_rows(&rows, vocab_size)
}

/// Bytes occupied by a batch of dense target matrices
/// (`batch_size x k x vocab_size` values at `bytes_per_value` each).
pub fn dense_target_bytes(
    batch_size: usize,
    k: usize,
    vocab_size: u32,
    bytes_per_value: usize,
) -> u64 {
    batch_size as u64 * k as u64 * vocab_size as u64 * bytes_per_value as u64
}

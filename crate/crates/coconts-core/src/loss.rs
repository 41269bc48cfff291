//! Model-agnostic objective functions over caller-provided log-probabilities.
//!
//! Positions `1..=k` of a block are supervised with a distribution-matching
//! term against their per-prefix targets; every later position contributes a
//! plain next-token log-likelihood term. Targets may be the full corpus
//! conditionals (normalized) or sparse adjusted targets (unnormalized):
//! for unnormalized weights the matching term is the weighted cross-entropy
//! `-sum(y * logprob)`, whose gradient in the logits equals that of
//! generalized KL — the dropped `sum(y * log y)` term does not depend on the
//! model.
//!
//! A small stochastic-approximation demo ([`multinomial_demo`]) learns a
//! single multinomial from sampled tokens under either objective and records
//! the KL divergence to the true distribution per step.

use alloc::vec;
use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};

use crate::approx::{adjusted_target, TopR};
use crate::corpus::TokenId;
use crate::error::{domain, Result};

/// Targets whose total weight is within this tolerance of 1 take the full
/// KL path (including the entropy term); all others are treated as
/// unnormalized and use plain weighted cross-entropy.
const NORMALIZED_TOL: f64 = 1e-9;

fn ln(x: f64) -> f64 {
    libm::log(x)
}

fn exp(x: f64) -> f64 {
    libm::exp(x)
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| exp(z - max)).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Numerically stable log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logits.iter().map(|&z| exp(z - max)).sum();
    let log_total = ln(total);
    logits.iter().map(|&z| z - max - log_total).collect()
}

/// `KL(p || q)` for two distributions over the same support.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|&(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (ln(pi) - ln(qi)))
        .sum()
}

/// Per-position log-probabilities over the vocabulary. Row `t` is the model
/// distribution used to score target `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogProbs {
    rows: Vec<Vec<f64>>,
            vocab: usize,
}

impl LogProbs {
    /// Validates that every row has the same width, has no positive entries,
    /// and exponentiates to a distribution (sum within 1e-6 of 1).
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let vocab = rows.first().map_or(0, Vec::len);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != vocab {
                return Err(domain!("row {t} has width {}, expected {vocab}", row.len()));
            }
            if row.iter().any(|&lp| lp > 0.0 || lp.is_nan()) {
                return Err(domain!("row {t} has entries above 0"));
            }
            let total: f64 = row.iter().map(|&lp| exp(lp)).sum();
            if (total - 1.0).abs() > 1e-6 {
                return Err(domain!("row {t} exponentiates to {total}, expected 1"));
            }
        }
        Ok(LogProbs { rows, vocab })
    }

    /// Applies log-softmax to each row of raw logits.
    pub fn from_logits(logits: &[Vec<f64>]) -> Result<Self> {
        LogProbs::from_rows(logits.iter().map(|row| log_softmax(row)).collect())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.rows[t]
    }
}

fn check_targets(lp: &LogProbs, targets: &[TokenId]) -> Result<()> {
    if lp.len() != targets.len() {
        return Err(domain!(
            "{} rows of log-probabilities for {} targets",
            lp.len(),
            targets.len()
        ));
    }
    if let Some(&bad) = targets.iter().find(|&&t| t as usize >= lp.vocab()) {
        return Err(domain!("target {bad} outside vocabulary of size {}", lp.vocab()));
    }
    Ok(())
}

/// Mean negative log-likelihood of the observed next tokens.
pub fn nt_loss(lp: &LogProbs, targets: &[TokenId]) -> Result<f64> {
    if targets.is_empty() {
        return Err(domain!("no positions to score"));
    }
    check_targets(lp, targets)?;
    let total: f64 = targets
        .iter()
        .enumerate()
        .map(|(t, &target)| -lp.row(t)[target as usize])
        .sum();
    Ok(total / targets.len() as f64)
}

fn kl_sum(total: f64, terms: impl Iterator<Item = (f64, f64)>) -> f64 {
    // (weight, logprob) pairs with weight > 0.
    if (total - 1.0).abs() <= NORMALIZED_TOL {
        terms.map(|(y, lp)| y * (ln(y) - lp)).sum()
    } else {
        terms.map(|(y, lp)| -y * lp).sum()
    }
}

/// Distribution-matching term against a dense non-negative target.
///
/// Normalized targets get full KL `sum(y * (log y - logprob))` with the
/// `0 * log 0 = 0` convention; unnormalized targets get the weighted
/// cross-entropy `-sum(y * logprob)`.
pub fn kl_term(weights: &[f64], logprob_row: &[f64]) -> Result<f64> {
    if weights.len() != logprob_row.len() {
        return Err(domain!(
            "target width {} does not match row width {}",
            weights.len(),
            logprob_row.len()
        ));
    }
    if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(domain!("target weights must be non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return Err(domain!("target weights are all zero"));
    }
    Ok(kl_sum(
        total,
        weights
            .iter()
            .zip(logprob_row)
            .filter(|&(&y, _)| y > 0.0)
            .map(|(&y, &lp)| (y, lp)),
    ))
}

/// Sparse counterpart of [`kl_term`].
pub fn kl_term_sparse(entries: &[(TokenId, f64)], logprob_row: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for &(t, y) in entries {
        if t as usize >= logprob_row.len() {
            return Err(domain!(
                "token {t} outside row of width {}",
                logprob_row.len()
            ));
        }
        if y < 0.0 || !y.is_finite() {
            return Err(domain!("target weights must be non-negative"));
        }
        total += y;
    }
    if total == 0.0 {
        return Err(domain!("target weights are all zero"));
    }
    Ok(kl_sum(
        total,
        entries
            .iter()
            .filter(|&&(_, y)| y > 0.0)
            .map(|&(t, y)| (y, logprob_row[t as usize])),
    ))
}

/// Mixed objective with full conditionals on the first `k` positions and
/// next-token likelihood on the rest, averaged over all positions.
pub fn allnts_loss(
    lp: &LogProbs,
    conditionals: &[Vec<f64>],
    targets: &[TokenId],
    k: usize,
) -> Result<f64> {
    if targets.is_empty() {
        return Err(domain!("no positions to score"));
    }
    check_targets(lp, targets)?;
    if k > targets.len() {
        return Err(domain!("k = {k} exceeds the {} positions", targets.len()));
    }
    if conditionals.len() != k {
        return Err(domain!(
            "{} conditionals for k = {k}",
            conditionals.len()
        ));
    }
    let mut total = 0.0;
    for (t, &target) in targets.iter().enumerate() {
        total += if t < k {
            kl_term(&conditionals[t], lp.row(t))?
        } else {
            -lp.row(t)[target as usize]
        };
    }
    Ok(total / targets.len() as f64)
}

/// [`allnts_loss`] with sparse adjusted targets on the first `k` positions.
pub fn coconts_loss(
    lp: &LogProbs,
    adjusted: &[crate::approx::AdjustedTarget],
    targets: &[TokenId],
    k: usize,
) -> Result<f64> {
    if targets.is_empty() {
        return Err(domain!("no positions to score"));
    }
    check_targets(lp, targets)?;
    if k > targets.len() {
        return Err(domain!("k = {k} exceeds the {} positions", targets.len()));
    }
    if adjusted.len() != k {
        return Err(domain!("{} adjusted targets for k = {k}", adjusted.len()));
    }
    let mut total = 0.0;
    for (t, &target) in targets.iter().enumerate() {
        total += if t < k {
            kl_term_sparse(adjusted[t].entries(), lp.row(t))?
        } else {
            -lp.row(t)[target as usize]
        };
    }
    Ok(total / targets.len() as f64)
}

/// Cross-entropy of a (possibly unnormalized) dense target against
/// `log_softmax(theta)` — the per-step loss of the demo.
pub fn demo_loss(theta: &[f64], target: &[f64]) -> f64 {
    let lsm = log_softmax(theta);
    -target.iter().zip(&lsm).map(|(&y, &lp)| y * lp).sum::<f64>()
}

/// Analytic gradient of [`demo_loss`] in the logits:
/// `(sum of target) * softmax(theta) - target`.
pub fn demo_gradient(theta: &[f64], target: &[f64]) -> Vec<f64> {
    let total: f64 = target.iter().sum();
    softmax(theta)
        .into_iter()
        .zip(target)
        .map(|(q, &y)| total * q - y)
        .collect()
}

/// Which supervision the demo trains with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoMode {
    /// One-hot on the sampled token.
    NextToken,
    /// Adjusted target built from the Top-r truncation of the true
    /// distribution and the sampled token.
    Coconts,
}

/// Stochastic-approximation settings for [`multinomial_demo`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoParams {
    pub r: usize,
    pub gamma: f64,
    pub steps: usize,
    pub lr: f64,
    pub seed: u64,
    pub runs: usize,
}

/// KL-to-truth trajectories of a demo, one per run plus their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoTrajectory {
    pub per_run: Vec<Vec<f64>>,
    pub averaged: Vec<f64>,
}

impl DemoTrajectory {
    pub fn final_kl(&self) -> f64 {
        *self.averaged.last().expect("at least one step")
    }
}

/// Reference 10-class distribution for the demo, chosen so the Top-r masses
/// at r = 1, 2, 4, 8 are well separated.
pub const DEFAULT_DEMO_DIST: [f64; 10] =
    [0.35, 0.25, 0.15, 0.08, 0.05, 0.04, 0.03, 0.025, 0.015, 0.01];

fn uniform_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn sample_index(dist: &[f64], rng: &mut impl RngCore) -> usize {
    let u = uniform_f64(rng);
    let mut cum = 0.0;
    for (i, &p) in dist.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    dist.len() - 1
}

/// Learns a single multinomial with plain gradient descent on zero-initialized
/// logits. Each step samples one token from `true_dist`, builds the target for
/// `mode`, applies the analytic gradient, and records the KL divergence from
/// the true distribution to the current model. Runs differ only in the RNG
/// stream; the returned mean trajectory is averaged pointwise.
pub fn multinomial_demo(
    true_dist: &[f64],
    mode: DemoMode,
    params: &DemoParams,
) -> Result<DemoTrajectory> {
    if true_dist.len() < 2 {
        return Err(domain!("the demo needs at least a 2-class distribution"));
    }
    let mut sum = 0.0;
    for &p in true_dist {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(domain!("invalid probability {p} in the true distribution"));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(domain!("true distribution sums to {sum}, expected 1"));
    }
    if params.r == 0 || params.r > true_dist.len() {
        return Err(domain!(
            "r = {} outside [1, {}]",
            params.r,
            true_dist.len()
        ));
    }
    if params.steps == 0 || params.runs == 0 {
        return Err(domain!("steps and runs must be at least 1"));
    }
    if !(params.lr > 0.0) || !params.lr.is_finite() {
        return Err(domain!("learning rate must be positive"));
    }

    let dist: Vec<f64> = true_dist.iter().map(|&p| p / sum).collect();
    let topr = match mode {
        DemoMode::Coconts => Some(TopR::from_distribution(&dist, params.r)?),
        DemoMode::NextToken => None,
    };

    let vocab = dist.len();
    let mut per_run = Vec::with_capacity(params.runs);
    for run in 0..params.runs {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(run as u64);
        let mut theta = vec![0.0; vocab];
        let mut kls = Vec::with_capacity(params.steps);
        let mut target = vec![0.0; vocab];
        for _ in 0..params.steps {
            let realized = sample_index(&dist, &mut rng);
            target.iter_mut().for_each(|w| *w = 0.0);
            match &topr {
                None => target[realized] = 1.0,
                Some(topr) => {
                    let adjusted = adjusted_target(topr, realized as TokenId, params.gamma)?;
                    for &(t, w) in adjusted.entries() {
                        target[t as usize] = w;
                    }
                }
            }
            let grad = demo_gradient(&theta, &target);
            for (z, g) in theta.iter_mut().zip(&grad) {
                *z -= params.lr * g;
            }
            kls.push(kl_divergence(&dist, &softmax(&theta)));
        }
        per_run.push(kls);
    }

    let averaged = (0..params.steps)
        .map(|t| per_run.iter().map(|run| run[t]).sum::<f64>() / params.runs as f64)
        .collect();
    Ok(DemoTrajectory { per_run, averaged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::coefficients;

    const LN2: f64 = core::f64::consts::LN_2;

    fn uniform_logprobs(rows: usize, vocab: usize) -> LogProbs {
        let row = vec![ln(1.0 / vocab as f64); vocab];
        LogProbs::from_rows(vec![row; rows]).unwrap()
    }

    #[test]
    fn nt_loss_on_uniform_rows_is_log_vocab() {
        let lp = uniform_logprobs(3, 4);
        let loss = nt_loss(&lp, &[0, 3, 2]).unwrap();
        assert!((loss - ln(4.0)).abs() < 1e-12);
    }

    #[test]
    fn nt_loss_of_a_perfect_prediction_is_zero() {
        let row = vec![0.0, f64::NEG_INFINITY, f64::NEG_INFINITY];
        let lp = LogProbs::from_rows(vec![row]).unwrap();
        assert_eq!(nt_loss(&lp, &[0]).unwrap(), 0.0);
    }

    #[test]
    fn nt_loss_hand_case() {
        let row = vec![ln(0.5), ln(0.25), ln(0.25), f64::NEG_INFINITY];
        let lp = LogProbs::from_rows(vec![row]).unwrap();
        let loss = nt_loss(&lp, &[1]).unwrap();
        assert!((loss - ln(4.0)).abs() < 1e-12);
    }

    #[test]
    fn nt_loss_validates_lengths() {
        let lp = uniform_logprobs(2, 4);
        assert!(nt_loss(&lp, &[0]).is_err());
        assert!(nt_loss(&lp, &[0, 9]).is_err());
    }

    #[test]
    fn logprobs_validation() {
        assert!(LogProbs::from_rows(vec![vec![0.1, -3.0]]).is_err());
        assert!(LogProbs::from_rows(vec![vec![-0.1, -0.2]]).is_err());
        assert!(LogProbs::from_rows(vec![vec![-1.0], vec![-1.0, -2.0]]).is_err());
    }

    #[test]
    fn kl_term_is_zero_against_its_own_log() {
        let y = [0.5, 0.25, 0.25, 0.0];
        let row: Vec<f64> = y.iter().map(|&p| ln(p)).collect();
        assert_eq!(kl_term(&y, &row).unwrap(), 0.0);
    }

    #[test]
    fn kl_term_one_hot_case() {
        let loss = kl_term(&[1.0, 0.0], &[ln(0.5), ln(0.5)]).unwrap();
        assert!((loss - LN2).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_target_uses_weighted_cross_entropy() {
        // Rare-case target with total weight u*p + 1 = 2.5 under uniform rows.
        let row = vec![ln(0.2); 5];
        let sparse = [(0u32, 1.0), (1, 0.5), (3, 1.0)];
        let loss = kl_term_sparse(&sparse, &row).unwrap();
        assert!((loss - 2.5 * ln(5.0)).abs() < 1e-12);

        let dense = [1.0, 0.5, 0.0, 1.0, 0.0];
        assert_eq!(kl_term(&dense, &row).unwrap(), loss);
    }

    #[test]
    fn kl_term_rejects_bad_targets() {
        assert!(kl_term(&[0.0, 0.0], &[ln(0.5), ln(0.5)]).is_err());
        assert!(kl_term(&[-1.0, 2.0], &[ln(0.5), ln(0.5)]).is_err());
        assert!(kl_term_sparse(&[(9, 1.0)], &[ln(0.5), ln(0.5)]).is_err());
    }

    #[test]
    fn allnts_with_k_zero_is_nt_loss() {
        let lp = uniform_logprobs(4, 3);
        let targets = [0, 1, 2, 1];
        assert_eq!(
            allnts_loss(&lp, &[], &targets, 0).unwrap(),
            nt_loss(&lp, &targets).unwrap()
        );
    }

    #[test]
    fn one_hot_conditionals_collapse_to_nt_loss() {
        let lp = uniform_logprobs(3, 3);
        let targets = [2, 0, 1];
        let conditionals: Vec<Vec<f64>> = targets
            .iter()
            .take(2)
            .map(|&t| {
                let mut row = vec![0.0; 3];
                row[t as usize] = 1.0;
                row
            })
            .collect();
        assert_eq!(
            allnts_loss(&lp, &conditionals, &targets, 2).unwrap(),
            nt_loss(&lp, &targets).unwrap()
        );
    }

    #[test]
    fn k_equal_to_positions_leaves_no_nt_terms() {
        let lp = uniform_logprobs(2, 4);
        let conditionals = vec![vec![0.25; 4], vec![0.5, 0.5, 0.0, 0.0]];
        let loss = allnts_loss(&lp, &conditionals, &[0, 1], 2).unwrap();
        let expect = (kl_term(&conditionals[0], lp.row(0)).unwrap()
            + kl_term(&conditionals[1], lp.row(1)).unwrap())
            / 2.0;
        assert_eq!(loss, expect);
        assert!(allnts_loss(&lp, &conditionals, &[0, 1], 3).is_err());
    }

    #[test]
    fn complete_support_makes_coconts_equal_allnts() {
        let dist = vec![0.5, 0.25, 0.25, 0.0];
        let topr = TopR::from_distribution(&dist, 4).unwrap();
        assert_eq!(topr.p(), 1.0);
        let lp = LogProbs::from_logits(&vec![vec![0.3, -0.2, 1.0, 0.0]; 3]).unwrap();
        let targets = [1, 0, 2];
        let adjusted = [adjusted_target(&topr, targets[0], 1.5).unwrap()];
        let a = allnts_loss(&lp, &[dist], &targets, 1).unwrap();
        let c = coconts_loss(&lp, &adjusted, &targets, 1).unwrap();
        assert!((a - c).abs() < 1e-12);
    }

    #[test]
    fn coconts_with_k_zero_is_nt_loss() {
        let lp = uniform_logprobs(3, 4);
        let targets = [3, 2, 0];
        assert_eq!(
            coconts_loss(&lp, &[], &targets, 0).unwrap(),
            nt_loss(&lp, &targets).unwrap()
        );
    }

    #[test]
    fn loss_is_invariant_to_sparse_entry_order() {
        // Two truncations with the same content in different stored order
        // produce identical adjusted targets, hence identical losses.
        let a = TopR::from_pairs(&[(2, 0.5), (0, 0.3)]).unwrap();
        let b = TopR::from_pairs(&[(0, 0.3), (2, 0.5)]).unwrap();
        let ta = adjusted_target(&a, 4, 1.5).unwrap();
        let tb = adjusted_target(&b, 4, 1.5).unwrap();
        assert_eq!(ta.entries(), tb.entries());
        let lp = uniform_logprobs(1, 5);
        assert_eq!(
            kl_term_sparse(ta.entries(), lp.row(0)).unwrap(),
            kl_term_sparse(tb.entries(), lp.row(0)).unwrap()
        );
    }

    #[test]
    fn per_level_gradient_is_unbiased() {
        // Analytic expectation over realized tokens of the adjusted-target
        // gradient equals the full-conditional gradient.
        let dist = [0.4, 0.3, 0.12, 0.08, 0.06, 0.04];
        let theta = [0.2, -0.5, 0.9, 0.0, -1.2, 0.4];
        for r in 1..=6 {
            let topr = TopR::from_distribution(&dist, r).unwrap();
            let mut expected = vec![0.0; 6];
            for (w, &pw) in dist.iter().enumerate() {
                let adjusted = adjusted_target(&topr, w as TokenId, 1.5).unwrap();
                let mut dense = vec![0.0; 6];
                for &(t, weight) in adjusted.entries() {
                    dense[t as usize] = weight;
                }
                for (acc, g) in expected.iter_mut().zip(demo_gradient(&theta, &dense)) {
                    *acc += pw * g;
                }
            }
            let full = demo_gradient(&theta, &dist);
            for (e, f) in expected.iter().zip(&full) {
                assert!((e - f).abs() < 1e-9, "r = {r}");
            }
        }
    }

    #[test]
    fn demo_gradient_matches_finite_differences() {
        let theta = [0.3, -0.7, 1.1, 0.0, 0.25];
        let target = [1.0, 0.5, 0.0, 1.0, 0.0];
        let grad = demo_gradient(&theta, &target);
        let h = 1e-5;
        for i in 0..theta.len() {
            let mut plus = theta;
            let mut minus = theta;
            plus[i] += h;
            minus[i] -= h;
            let fd = (demo_loss(&plus, &target) - demo_loss(&minus, &target)) / (2.0 * h);
            let scale = grad[i].abs().max(1.0);
            assert!((grad[i] - fd).abs() / scale < 1e-5, "component {i}");
        }
    }

    #[test]
    fn nt_mode_expected_gradient_is_softmax_minus_truth() {
        let dist = [0.5, 0.2, 0.2, 0.1];
        let theta = [0.4, 0.1, -0.3, 0.0];
        let q = softmax(&theta);
        let mut expected = vec![0.0; 4];
        for (w, &pw) in dist.iter().enumerate() {
            let mut onehot = vec![0.0; 4];
            onehot[w] = 1.0;
            for (acc, g) in expected.iter_mut().zip(demo_gradient(&theta, &onehot)) {
                *acc += pw * g;
            }
        }
        for i in 0..4 {
            assert!((expected[i] - (q[i] - dist[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn full_information_demo_descends_deterministically() {
        // r = vocab means p = 1 and the target equals the true distribution
        // every step, so the KL trajectory decreases until convergence.
        let params = DemoParams {
            r: 10,
            gamma: 1.5,
            steps: 2000,
            lr: 0.5,
            seed: 7,
            runs: 2,
        };
        let out = multinomial_demo(&DEFAULT_DEMO_DIST, DemoMode::Coconts, &params).unwrap();
        assert_eq!(out.per_run[0], out.per_run[1]);
        let kls = &out.averaged;
        for t in 1..kls.len() {
            assert!(kls[t] < kls[t - 1] || kls[t - 1] < 1e-10, "step {t}");
        }
        assert!(out.final_kl() < 1e-3);
    }

    #[test]
    fn demo_is_deterministic_per_seed() {
        let params = DemoParams {
            r: 2,
            gamma: 1.5,
            steps: 50,
            lr: 0.1,
            seed: 42,
            runs: 3,
        };
        let a = multinomial_demo(&DEFAULT_DEMO_DIST, DemoMode::Coconts, &params).unwrap();
        let b = multinomial_demo(&DEFAULT_DEMO_DIST, DemoMode::Coconts, &params).unwrap();
        assert_eq!(a, b);
        // Distinct runs see distinct samples.
        assert_ne!(a.per_run[0], a.per_run[1]);
    }

    #[test]
    fn demo_validates_inputs() {
        let params = DemoParams {
            r: 11,
            gamma: 1.5,
            steps: 10,
            lr: 0.1,
            seed: 0,
            runs: 1,
        };
        assert!(multinomial_demo(&DEFAULT_DEMO_DIST, DemoMode::Coconts, &params).is_err());
        let bad = [0.5, 0.4];
        let params = DemoParams { r: 1, ..params };
        assert!(multinomial_demo(&bad, DemoMode::NextToken, &params).is_err());
    }

    #[test]
    fn rare_case_total_weight_reaches_the_loss() {
        // The Rare-case identity u*p + 1 shows up as the cross-entropy scale.
        let topr = TopR::from_pairs(&[(0, 0.6), (1, 0.3)]).unwrap();
        let target = adjusted_target(&topr, 3, 1.5).unwrap();
        let c = coefficients(topr.p(), 1.5).unwrap();
        let row = vec![ln(0.2); 5];
        let loss = kl_term_sparse(target.entries(), &row).unwrap();
        assert!((loss - (c.u * topr.p() + 1.0) * ln(5.0)).abs() < 1e-9);
    }
}

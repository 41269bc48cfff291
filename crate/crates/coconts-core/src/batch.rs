//! Mini-batch assembly from enriched records.
//!
//! A batch carries the standard shift-by-one next-token targets for every
//! position plus, for the first `k` positions of each record, a sparse
//! supervision target derived from the stored truncations. No trie is
//! consulted here; everything comes out of the records.

use alloc::vec::Vec;

use crate::approx::{adjusted_target, dense_rows, Hyper, TargetCase};
use crate::corpus::{TokenId, TokenWidth};
use crate::error::{domain, Result};
use crate::record::EnrichedRecord;

/// How stored truncations become training targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupervisionMode {
    /// Adjusted targets mixing the truncation with the realized next token.
    Coconts,
    /// The stored truncations themselves, renormalized to sum to 1. This is
    /// a truncated stand-in for full-distribution supervision, not the exact
    /// thing: the dropped tail is unavailable from records.
    AllNtsTopR,
}

/// Supervision for one (record, level) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTarget {
    /// Token that actually follows the prefix in this record.
    pub realized: TokenId,
    /// `(token, weight)` pairs in ascending token order.
    pub weights: Vec<(TokenId, f64)>,
    /// Which branch built the target; `None` in `AllNtsTopR` mode.
    pub case: Option<TargetCase>,
}

/// A training batch over `B` records of `L` tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    /// `B x L` input tokens.
    pub inputs: Vec<Vec<TokenId>>,
    /// `B x (L - 1)` shift-by-one targets: `nt_targets[b][t] == inputs[b][t + 1]`.
    pub nt_targets: Vec<Vec<TokenId>>,
    /// `B x k` sparse supervision targets.
    pub supervision: Vec<Vec<LevelTarget>>,
    /// Optional `B x k x vocab` dense expansion of `supervision`.
    pub dense: Option<Vec<Vec<Vec<f64>>>>,
}

/// Assembles a batch. All records must match `hyper`; in `Coconts` mode the
/// adjusted target for level `i` uses the record's own token at position `i`
/// as the realized next token.
pub fn build_batch(
    records: &[EnrichedRecord],
    hyper: &Hyper,
    mode: SupervisionMode,
    dense: bool,
    vocab_size: u32,
) -> Result<Batch> {
    let mut inputs = Vec::with_capacity(records.len());
    let mut nt_targets = Vec::with_capacity(records.len());
    let mut supervision = Vec::with_capacity(records.len());
    let mut dense_out = if dense { Some(Vec::new()) } else { None };

    for record in records {
        if record.tokens.len() != hyper.block_len || record.levels.len() != hyper.k {
            return Err(domain!(
                "record shape ({} tokens, {} levels) does not match hyperparameters (L = {}, k = {})",
                record.tokens.len(),
                record.levels.len(),
                hyper.block_len,
                hyper.k
            ));
        }
        let mut levels = Vec::with_capacity(hyper.k);
        for (i, topr) in record.levels.iter().enumerate() {
            let realized = record.tokens[i + 1];
            let target = match mode {
                SupervisionMode::Coconts => {
                    let adjusted = adjusted_target(topr, realized, hyper.gamma)?;
                    LevelTarget {
                        realized,
                        case: Some(adjusted.case()),
                        weights: adjusted.entries().to_vec(),
                    }
                }
                SupervisionMode::AllNtsTopR => {
                    let mut weights = topr.renormalized();
                    weights.sort_by_key(|&(t, _)| t);
                    LevelTarget {
                        realized,
                        weights,
                        case: None,
                    }
                }
            };
            levels.push(target);
        }
        if let Some(out) = dense_out.as_mut() {
            let rows: Vec<&[(TokenId, f64)]> =
                levels.iter().map(|t| t.weights.as_slice()).collect();
            out.push(dense_rows(&rows, vocab_size)?);
        }
        inputs.push(record.tokens.clone());
        nt_targets.push(record.tokens[1..].to_vec());
        supervision.push(levels);
    }

    Ok(Batch {
        inputs,
        nt_targets,
        supervision,
        dense: dense_out,
    })
}

/// Bytes used by the plain next-token labels of a batch (`B x L` token IDs),
/// the baseline against which dense supervision memory is compared.
pub fn nt_label_bytes(batch_size: usize, block_len: usize, width: TokenWidth) -> u64 {
    batch_size as u64 * block_len as u64 * width.bytes() as u64
}

//! Enriched record layout.
//!
//! One record is the on-disk unit of training data: `L` input tokens
//! followed by `k` supervision groups, one per prefix length `1..=k`. Each
//! group holds exactly `r` `(token, probability)` pairs in descending
//! probability order; when the truncation has fewer than `r` entries the
//! group is padded with `(0, 0.0)` pairs. Every slot — token or probability —
//! is one token width wide and little-endian, so a record occupies exactly
//! `(L + 2*k*r)` token widths with no header or alignment bytes.

use alloc::vec::Vec;

use crate::approx::{Hyper, TopR};
use crate::corpus::{TokenId, TokenWidth};
use crate::error::{domain, Error, Result};
use crate::quant;

/// A decoded record: the raw block plus one truncation per prefix length.
/// Padding pairs are dropped during decoding, so level truncations have
/// between 1 and `r` entries and carry the probabilities exactly as stored.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrichedRecord {
    pub tokens: Vec<TokenId>,
    /// `levels[i]` supervises the token at position `i + 1` given the first
    /// `i + 1` tokens.
    pub levels: Vec<TopR>,
}

/// Token slots per record: `L + 2*k*r`.
pub fn record_token_slots(hyper: &Hyper) -> usize {
    hyper.block_len + 2 * hyper.k * hyper.r
}

/// Bytes per record at the given token width.
pub fn record_bytes(hyper: &Hyper, width: TokenWidth) -> usize {
    record_token_slots(hyper) * width.bytes()
}

fn push_slot(value: u32, width: TokenWidth, out: &mut Vec<u8>) {
    match width {
        TokenWidth::W16 => out.extend_from_slice(&(value as u16).to_le_bytes()),
        TokenWidth::W32 => out.extend_from_slice(&value.to_le_bytes()),
    }
}

fn read_slot(bytes: &[u8], slot: usize, width: TokenWidth) -> u32 {
    match width {
        TokenWidth::W16 => {
            u16::from_le_bytes([bytes[slot * 2], bytes[slot * 2 + 1]]) as u32
        }
        TokenWidth::W32 => u32::from_le_bytes([
            bytes[slot * 4],
            bytes[slot * 4 + 1],
            bytes[slot * 4 + 2],
            bytes[slot * 4 + 3],
        ]),
    }
}

/// Serializes one record. Probabilities are quantized to the token width
/// here, at write time; `levels` carries the exact values from the trie.
pub fn encode_record(
    tokens: &[TokenId],
    levels: &[TopR],
    hyper: &Hyper,
    width: TokenWidth,
    out: &mut Vec<u8>,
) -> Result<()> {
    if tokens.len() != hyper.block_len {
        return Err(domain!(
            "record has {} tokens, expected block length {}",
            tokens.len(),
            hyper.block_len
        ));
    }
    if levels.len() != hyper.k {
        return Err(domain!(
            "record has {} supervision groups, expected k = {}",
            levels.len(),
            hyper.k
        ));
    }
    if let Some(&bad) = tokens.iter().find(|&&t| t > width.max_token()) {
        return Err(domain!("token {bad} does not fit {}-bit slots", width.bits()));
    }
    out.reserve(record_bytes(hyper, width));
    for &token in tokens {
        push_slot(token, width, out);
    }
    for level in levels {
        if level.len() > hyper.r {
            return Err(domain!(
                "supervision group of size {} exceeds r = {}",
                level.len(),
                hyper.r
            ));
        }
        for (token, prob) in level.pairs() {
            if token > width.max_token() {
                return Err(domain!(
                    "token {token} does not fit {}-bit slots",
                    width.bits()
                ));
            }
            push_slot(token, width, out);
            push_slot(quant::prob_to_slot(prob, width), width, out);
        }
        for _ in level.len()..hyper.r {
            push_slot(0, width, out);
            push_slot(0, width, out);
        }
    }
    Ok(())
}

/// Decodes one record. The input must be exactly one record long.
pub fn decode_record(bytes: &[u8], hyper: &Hyper, width: TokenWidth) -> Result<EnrichedRecord> {
    let expect = record_bytes(hyper, width);
    if bytes.len() != expect {
        return Err(Error::Format(alloc::format!(
            "record is {} bytes, expected {expect}",
            bytes.len()
        )));
    }
    let tokens: Vec<TokenId> = (0..hyper.block_len)
        .map(|slot| read_slot(bytes, slot, width))
        .collect();

    let mut levels = Vec::with_capacity(hyper.k);
    for level in 0..hyper.k {
        let base = hyper.block_len + level * 2 * hyper.r;
        let mut pairs = Vec::with_capacity(hyper.r);
        for i in 0..hyper.r {
            let token = read_slot(bytes, base + 2 * i, width);
            let prob = quant::prob_from_slot(read_slot(bytes, base + 2 * i + 1, width), width);
            if prob != 0.0 {
                pairs.push((token, prob));
            }
        }
        levels.push(TopR::from_pairs(&pairs).map_err(|_| {
            Error::Format(alloc::format!("supervision group {} is all padding", level + 1))
        })?);
    }
    Ok(EnrichedRecord { tokens, levels })
}

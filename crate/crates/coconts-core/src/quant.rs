//! Probability storage at token width.
//!
//! Enriched records store each probability in one token slot: IEEE-754
//! binary16 for 16-bit tokens, binary32 for 32-bit tokens, little-endian,
//! rounded to nearest even. For normal half-precision values the relative
//! round-trip error is at most 2^-11.

use half::f16;

use crate::corpus::TokenWidth;

/// Value a probability becomes after a store/load round trip at `width`.
pub fn quantize_prob(p: f64, width: TokenWidth) -> f64 {
    match width {
        TokenWidth::W16 => f16::from_f64(p).to_f64(),
        TokenWidth::W32 => p as f32 as f64,
    }
}

/// Bit pattern written into the record slot (low bits used for W16).
pub fn prob_to_slot(p: f64, width: TokenWidth) -> u32 {
    match width {
        TokenWidth::W16 => f16::from_f64(p).to_bits() as u32,
        TokenWidth::W32 => (p as f32).to_bits(),
    }
}

/// Probability read back from a record slot.
pub fn prob_from_slot(slot: u32, width: TokenWidth) -> f64 {
    match width {
        TokenWidth::W16 => f16::from_bits(slot as u16).to_f64(),
        TokenWidth::W32 => f32::from_bits(slot) as f64,
    }
}

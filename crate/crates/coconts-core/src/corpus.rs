//! Tokenized corpus metadata and iteration primitives.
//!
//! A corpus is a flat sequence of fixed-width token IDs. Two access patterns
//! matter downstream: disjoint blocks of `L` tokens (the unit of enrichment
//! and training) and stride-1 sliding windows of `k + 1` tokens (the unit of
//! n-gram counting). Windows never cross or include the document separator;
//! blocks are raw slices of the stream and may contain it.

use crate::error::{domain, Result};

/// Index into the vocabulary. On disk tokens are 16 or 32 bits wide
/// (see [`TokenWidth`]); in memory they are normalized to `u32`.
pub type TokenId = u32;

/// On-disk width of a token slot. Probability values stored in enriched
/// records occupy one slot of the same width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenWidth {
    W16,
    W32,
}

impl TokenWidth {
    pub fn bits(self) -> u32 {
        match self {
            TokenWidth::W16 => 16,
            TokenWidth::W32 => 32,
        }
    }

    pub fn bytes(self) -> usize {
        match self {
            TokenWidth::W16 => 2,
            TokenWidth::W32 => 4,
        }
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            16 => Ok(TokenWidth::W16),
            32 => Ok(TokenWidth::W32),
            other => Err(domain!("token width must be 16 or 32 bits, got {other}")),
        }
    }

    /// Largest token ID representable at this width.
    pub fn max_token(self) -> TokenId {
        match self {
            TokenWidth::W16 => u16::MAX as TokenId,
            TokenWidth::W32 => TokenId::MAX,
        }
    }
}

/// Header describing a raw token file. Stored as a JSON sidecar next to the
/// token file itself; the token file carries no header bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusMeta {
    pub vocab_size: u32,
    pub token_width: TokenWidth,
    /// Number of tokens in the file (file bytes / token width).
    pub total_tokens: u64,
    /// Token that terminates a document; windows never span it.
    pub doc_separator: Option<TokenId>,
}

impl CorpusMeta {
    pub fn new(
        vocab_size: u32,
        token_width: TokenWidth,
        doc_separator: Option<TokenId>,
    ) -> Result<Self> {
        let meta = CorpusMeta {
            vocab_size,
            token_width,
            total_tokens: 0,
            doc_separator,
        };
        meta.validate()?;
        Ok(meta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size == 0 {
            return Err(domain!("vocab_size must be positive"));
        }
        if self.vocab_size - 1 > self.token_width.max_token() {
            return Err(domain!(
                "vocab_size {} does not fit {}-bit tokens",
                self.vocab_size,
                self.token_width.bits()
            ));
        }
        if let Some(sep) = self.doc_separator {
            if sep >= self.vocab_size {
                return Err(domain!(
                    "doc_separator {sep} outside vocabulary of size {}",
                    self.vocab_size
                ));
            }
        }
        Ok(())
    }
}

/// A disjoint block of exactly `L` tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenBlock<'a> {
    pub tokens: &'a [TokenId],
    /// Corpus index of the first token.
    pub origin_offset: usize,
}

/// Iterates disjoint blocks of `block_len` tokens in corpus order. The
/// trailing remainder shorter than `block_len` is dropped.
pub fn blocks(tokens: &[TokenId], block_len: usize) -> Result<Blocks<'_>> {
    if block_len == 0 {
        return Err(domain!("block length must be at least 1"));
    }
    Ok(Blocks {
        tokens,
        block_len,
        next: 0,
    })
}

#[derive(Debug, Clone)]
pub struct Blocks<'a> {
    tokens: &'a [TokenId],
    block_len: usize,
    next: usize,
}

impl<'a> Iterator for Blocks<'a> {
    type Item = TokenBlock<'a>;

    fn next(&mut self) -> Option<TokenBlock<'a>> {
        let start = self.next;
        let end = start.checked_add(self.block_len)?;
        if end > self.tokens.len() {
            return None;
        }
        self.next = end;
        Some(TokenBlock {
            tokens: &self.tokens[start..end],
            origin_offset: start,
        })
    }
}

/// Iterates stride-1 windows of `len` tokens. A window never contains the
/// separator token, so counting folds over documents independently. Yields
/// `(corpus_offset, window)` pairs.
pub fn windows(
    tokens: &[TokenId],
    separator: Option<TokenId>,
    len: usize,
) -> Result<Windows<'_>> {
    if len == 0 {
        return Err(domain!("window length must be at least 1"));
    }
    Ok(Windows {
        tokens,
        separator,
        len,
        pos: 0,
    })
}

#[derive(Debug, Clone)]
pub struct Windows<'a> {
    tokens: &'a [TokenId],
    separator: Option<TokenId>,
    len: usize,
    pos: usize,
}

impl<'a> Iterator for Windows<'a> {
    type Item = (usize, &'a [TokenId]);

    fn next(&mut self) -> Option<(usize, &'a [TokenId])> {
        loop {
            let start = self.pos;
            let end = start.checked_add(self.len)?;
            if end > self.tokens.len() {
                return None;
            }
            let window = &self.tokens[start..end];
            if let Some(sep) = self.separator {
                // Hop past the last separator inside the candidate window.
                if let Some(i) = window.iter().rposition(|&t| t == sep) {
                    self.pos = start + i + 1;
                    continue;
                }
            }
            self.pos = start + 1;
            return Some((start, window));
        }
    }
}

//! Core algorithms for pre-enriching a tokenized corpus with compact
//! next-token supervision.
//!
//! The pipeline this crate supports has two phases. A preprocessing pass
//! counts every n-gram of the corpus up to a maximum prefix length `k` in a
//! [`trie::PrefixTrie`], truncates each conditional next-token distribution
//! to its `r` most likely tokens, and stores the truncations inline with the
//! token stream (see [`record`]). At training time the stored truncations are
//! mixed with the realized next token into an adjusted target
//! ([`approx::adjusted_target`]) whose expectation over mini-batches equals
//! the full corpus conditional, so the trie is never consulted again.
//!
//! Everything here is deterministic and allocation-only; file formats and the
//! command-line pipeline live in the companion `coconts` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod approx;
pub mod batch;
pub mod corpus;
pub mod error;
pub mod loss;
pub mod oracle;
pub mod quant;
pub mod record;
pub mod trie;

pub use corpus::{CorpusMeta, TokenId, TokenWidth};
pub use error::{Error, Result};

//! Error type shared by the algorithmic layers.

use alloc::string::String;
use core::fmt;

/// Errors produced by corpus iteration, trie queries, and target construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A precondition on arguments or data was violated.
    Domain(String),
    /// The queried prefix never occurs as a window start in the counted corpus.
    UnseenPrefix,
    /// A distribution or supervision target has no support.
    EmptySupport,
    /// A serialized structure does not match the expected layout.
    Format(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::UnseenPrefix => write!(f, "prefix does not occur in the corpus"),
            Error::EmptySupport => write!(f, "distribution has empty support"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

/// Shorthand for `Error::Domain` with a formatted message.
macro_rules! domain {
    ($($arg:tt)*) => {
        $crate::error::Error::Domain(alloc::format!($($arg)*))
    };
}

pub(crate) use domain;

use thiserror::Error;

/// Errors raised by parameter generation, transforms, RNS conversion and the
/// on-disk formats.
#[derive(Debug, Error)]
pub enum NttError {
    #[error("only {found} of {requested} NTT primes exist in [2^{bit_lo}, 2^{bit_hi}) for n = {n}")]
    RangeExhausted {
        n: usize,
        requested: usize,
        found: usize,
        bit_lo: u32,
        bit_hi: u32,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("size mismatch: expected {expected} words, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("length error: {0}")]
    Length(String),

    #[error("invalid transform configuration: {0}")]
    Config(String),

    #[error("polynomial does not match the modulus chain: {0}")]
    ChainMismatch(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NttError>;

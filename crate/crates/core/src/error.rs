use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid radix {radix} at coordinate {position}: every radix must be at least 2")]
    InvalidRadix { position: usize, radix: usize },

    #[error("invalid depth {0}: depth must be at least 1")]
    InvalidDepth(usize),

    #[error("grid too large: {points} 2-D grid points exceed the cap of {cap}")]
    TooLarge { points: u128, cap: u128 },

    #[error("index {index} overflows the group of order {size}")]
    IndexOverflow { index: usize, size: usize },

    #[error("structure mismatch: {0}")]
    StructureMismatch(String),

    #[error("{what} = {value} out of range {range}")]
    OutOfRange {
        what: &'static str,
        value: i64,
        range: String,
    },

    #[error("invalid exponent p = {0}")]
    InvalidExponent(f64),

    #[error("size mismatch: expected {expected} values, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("arity mismatch: expected {expected}-D, got {got}-D")]
    ArityMismatch { expected: usize, got: usize },

    #[error("invalid atom: {0}")]
    InvalidAtom(String),

    #[error("function has zero L1 norm")]
    ZeroNorm,

    #[error("non-finite sample at position {0}")]
    NonFinite(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn out_of_range(what: &'static str, value: impl TryInto<i64>, range: String) -> Error {
    Error::OutOfRange {
        what,
        value: value.try_into().unwrap_or(i64::MAX),
        range,
    }
}

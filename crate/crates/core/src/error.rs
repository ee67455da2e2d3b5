use thiserror::Error;

use crate::movements::Violation;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tiling: {0}")]
    InvalidTiling(String),

    #[error("cube {coords:?} is outside the tiling (nu={nu}, N={n})")]
    InvalidCube { coords: Vec<usize>, nu: usize, n: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("region out of bounds or malformed: {0}")]
    InvalidRegion(String),

    #[error("table is not a bijection: cube index {0} is hit twice")]
    NotBijection(usize),

    #[error("invalid movement: {0}")]
    InvalidMovement(Violation),

    #[error("step {index} of the flow is invalid: {violation}")]
    InvalidStep { index: usize, violation: Violation },

    #[error("colorings disagree on black count ({from} vs {to})")]
    ColorCount { from: usize, to: usize },

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("permutation is not block-constant on the coarse tiling: {0}")]
    NotBlockConstant(String),

    #[error("state space of {states} states exceeds the limit of {limit}")]
    Capacity { states: u128, limit: u128 },

    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

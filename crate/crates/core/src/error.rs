//! Crate-wide error type.
//!
//! Variant names are stable identifiers: the CLI prints them verbatim on
//! stderr, so renaming one is a breaking change for scripted callers.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Some ordered node pair has no directed route.
    #[error("NotStronglyConnected: {0}")]
    NotStronglyConnected(String),

    #[error("UnknownLink: no link with id {id}")]
    UnknownLink { id: usize },

    #[error("DimensionMismatch: {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// An iterative decomposition failed to converge or produced values
    /// outside its contract. Not caused by caller input.
    #[error("NumericalFailure: {0}")]
    NumericalFailure(String),

    #[error("DegenerateSpectrum: all eigenvalues are zero")]
    DegenerateSpectrum,

    #[error("KTooLarge: k={k} exceeds the numerical rank {rank}")]
    KTooLarge { k: usize, rank: usize },

    #[error("RankDeficientSample: selected rows are numerically dependent")]
    RankDeficientSample,

    #[error("SingularVss: sampled-path covariance condition number {cond:.3e} exceeds 1e12")]
    SingularVss { cond: f64 },

    #[error("ParseError: line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("ColumnMismatch: expected {expected} link columns, got {got}")]
    ColumnMismatch { expected: usize, got: usize },

    #[error("MissingValue: line {line}, column {column}")]
    MissingValue { line: usize, column: usize },

    #[error("RangeOutOfBounds: epoch range {start}..{end} invalid for series of {len} epochs")]
    RangeOutOfBounds {
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("WindowTooLarge: window {window} leaves no scorable epochs in a series of {len}")]
    WindowTooLarge { window: usize, len: usize },

    #[error("EmptyTruth: reference series has no events at {sigmas} sigmas")]
    EmptyTruth { sigmas: f64 },

    #[error("InvalidInput: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True when the failure is attributable to caller-supplied data or
    /// arguments rather than internal numerics. The CLI maps this to exit
    /// code 2; everything else exits 1.
    pub fn is_invalid_input(&self) -> bool {
        !matches!(
            self,
            Error::NumericalFailure(_)
                | Error::SingularVss { .. }
                | Error::RankDeficientSample
                | Error::DegenerateSpectrum
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

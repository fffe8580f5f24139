//! Error type shared by all modules of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KhoError {
    /// An argument violated a documented domain restriction.
    #[error("domain error: {0}")]
    Domain(String),

    /// The kick period does not divide the oscillator period by an integer.
    #[error("non-resonant drive: 2π/(ν·τ) = {ratio} is {deviation:.3e} away from the nearest integer (tolerance {tolerance:.1e})")]
    NonResonant {
        ratio: f64,
        deviation: f64,
        tolerance: f64,
    },

    /// Operands were built over different Fock-space truncations.
    #[error("basis size mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// A dense linear-algebra routine failed or missed its accuracy contract.
    #[error("numeric failure in {context}: {message}")]
    Numeric { context: String, message: String },

    /// The truncated Fock basis cannot represent the requested state.
    #[error("insufficient basis: norm deficit {deficit:.3e} for N = {basis_size} (limit {limit:.1e})")]
    InsufficientBasis {
        deficit: f64,
        basis_size: usize,
        limit: f64,
    },

    /// A phase-space grid does not cover the requested region.
    #[error("grid coverage error: {0}")]
    GridCoverage(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl KhoError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        KhoError::Domain(msg.into())
    }

    pub(crate) fn numeric(context: impl Into<String>, message: impl Into<String>) -> Self {
        KhoError::Numeric {
            context: context.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, KhoError>;

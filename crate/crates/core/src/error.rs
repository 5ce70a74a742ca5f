//! Crate-wide error type.
//!
//! Every fallible operation returns [`Result`]. Variants are grouped by the
//! invariant they protect so a caller (the CLI in particular) can map them
//! onto stable exit codes without string matching.

use thiserror::Error;

use crate::coefficients::Basis;
use crate::scalar::MAX_FACTORIAL_INDEX;

/// Errors raised by the projection and simulation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed function description (bad JSON, empty series, non-finite
    /// parameters, unknown builtin name).
    #[error("invalid function: {0}")]
    InvalidFunction(String),

    /// A configuration value violates a documented invariant; the message
    /// names the invariant.
    #[error("configuration violates invariant: {0}")]
    Config(String),

    /// Factorial index beyond the overflow guard.
    #[error("factorial index {n} exceeds the overflow guard (maximum {MAX_FACTORIAL_INDEX})")]
    FactorialRange { n: usize },

    /// A truncated Fock space is too small for the requested state or gate.
    #[error(
        "Fock cutoff overflow in {context}: probability {leaked:.3e} lies outside dim = {dim}; \
         suggested dim >= {suggested}"
    )]
    CutoffOverflow {
        context: &'static str,
        dim: usize,
        suggested: usize,
        leaked: f64,
    },

    /// Coefficient vectors in different bases were mixed without an explicit
    /// conversion.
    #[error("coefficient basis mismatch: expected {expected:?}, found {found:?}")]
    BasisMismatch { expected: Basis, found: Basis },

    /// An operation received an empty coefficient list.
    #[error("empty coefficient vector")]
    EmptyCoefficients,

    /// A vector with zero norm cannot be normalized into a state.
    #[error("cannot normalize a zero-norm vector: {0}")]
    ZeroNorm(&'static str),

    /// The sampler received a list that is not a probability distribution.
    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    /// Reconstruction is missing a fitted phase for an above-threshold index.
    #[error("missing phase for above-threshold index {n}")]
    MissingPhase { n: usize },

    /// JSON (de)serialization failure for the function wire format.
    #[error("JSON error: {0}")]
    Json(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

//! Projection of entire functions onto the Gaussian-weighted monomial basis,
//! by direct quadrature over the complex plane and by simulation of a
//! photon-number-resolving interferometric measurement protocol.
//!
//! The library is generic over the scalar type through [`scalar::Real`]
//! (`f64` and `f32` both satisfy it); the aliases at the crate root fix the
//! common double-precision instantiations.

// The `Real` bound does not carry the `*Assign` operator traits.
#![allow(clippy::assign_op_pattern)]
// Guards are written as negated comparisons so that NaN also trips them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coefficients;
pub mod error;
pub mod fock;
pub mod functions;
pub mod protocol;
pub mod quadrature;
pub mod sampler;
pub mod scalar;

pub use coefficients::{fidelity, Basis, CoefficientVector};
pub use error::{Error, Result};
pub use functions::{AdmissibilityReport, FunctionSpec};
pub use protocol::{
    CoefficientLoading, EstimationMode, PhaseObjective, ProtocolConfig, Reconstruction,
};

/// Double-precision complex scalar.
pub type C64 = num_complex::Complex<f64>;
/// Double-precision target function.
pub type FunctionSpec64 = FunctionSpec<f64>;
/// Double-precision coefficient vector.
pub type CoefficientVector64 = CoefficientVector<f64>;

//! Coefficient vectors and the two bases they live in.
//!
//! The same list of complex numbers means different things depending on the
//! basis. In the [`Basis::Monomial`] basis entry n multiplies the monomial
//! z^n (a Maclaurin coefficient); in the [`Basis::FockOrthonormal`] basis it
//! multiplies the normalized basis vector, and the two differ entrywise by
//! sqrt(n!). Mixing them silently is the classic off-by-sqrt(n!) bug, so the
//! basis is carried as data and every mixed operation demands an explicit
//! [`CoefficientVector::to_basis`] or [`CoefficientVector::reinterpreted`].

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{sqrt_factorial, Real};

/// Basis tag for a coefficient list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Coefficients of the monomials z^n (Maclaurin coefficients).
    Monomial,
    /// Amplitudes over the orthonormal (Fock) basis.
    FockOrthonormal,
}

/// A finite list of complex coefficients together with its basis and the
/// cached squared norm of the entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector<T: Real> {
    values: Vec<Complex<T>>,
    basis: Basis,
    norm_sq: T,
}

impl<T: Real> CoefficientVector<T> {
    /// Builds a vector from raw values. Rejects empty lists and non-finite
    /// entries; the squared norm is computed once here.
    pub fn new(values: Vec<Complex<T>>, basis: Basis) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyCoefficients);
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::InvalidFunction(
                "coefficient vector contains a non-finite entry".into(),
            ));
        }
        let norm_sq = values
            .iter()
            .fold(T::zero(), |acc, v| acc + v.norm_sqr());
        Ok(Self {
            values,
            basis,
            norm_sq,
        })
    }

    /// Entries in index order.
    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    /// Entry n, or zero past the stored length (the vector represents a
    /// finite truncation of an infinite series).
    pub fn get(&self, n: usize) -> Complex<T> {
        self.values
            .get(n)
            .copied()
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    /// Number of stored entries (max degree + 1).
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Never true: construction rejects empty lists.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Highest stored index.
    pub fn max_degree(&self) -> usize {
        self.values.len() - 1
    }

    /// Basis the entries are expressed in.
    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// Sum of |entry|^2, cached at construction.
    pub fn norm_sq(&self) -> T {
        self.norm_sq
    }

    /// Converts between bases by the sqrt(n!) entrywise factor.
    ///
    /// Monomial -> FockOrthonormal multiplies entry n by sqrt(n!); the
    /// reverse divides. Conversion of the same vector there and back is
    /// exact up to rounding because both directions use the identical
    /// sqrt(n!) value. Degrees above the factorial guard are rejected.
    pub fn to_basis(&self, target: Basis) -> Result<Self> {
        if self.basis == target {
            return Ok(self.clone());
        }
        let mut values = Vec::with_capacity(self.values.len());
        for (n, v) in self.values.iter().enumerate() {
            let s = sqrt_factorial::<T>(n)?;
            let scaled = match target {
                Basis::FockOrthonormal => Complex::new(v.re * s, v.im * s),
                Basis::Monomial => Complex::new(v.re / s, v.im / s),
            };
            values.push(scaled);
        }
        Self::new(values, target)
    }

    /// Re-tags the same numerical entries as belonging to `basis`, without
    /// scaling. This is the measurement-benchmark convention where Maclaurin
    /// values are loaded directly as state amplitudes; use [`Self::to_basis`]
    /// for the isometric conversion.
    pub fn reinterpreted(&self, basis: Basis) -> Self {
        Self {
            values: self.values.clone(),
            basis,
            norm_sq: self.norm_sq,
        }
    }

    /// Returns the vector scaled to unit norm.
    pub fn normalized(&self) -> Result<Self> {
        if self.norm_sq <= T::zero() {
            return Err(Error::ZeroNorm("coefficient vector"));
        }
        let inv = self.norm_sq.sqrt().recip();
        let values = self
            .values
            .iter()
            .map(|v| Complex::new(v.re * inv, v.im * inv))
            .collect();
        Self::new(values, self.basis)
    }
}

/// Squared overlap |<a, b>|^2 of the two vectors after normalizing each,
/// padding the shorter one with zeros. Both must be in the same basis.
pub fn fidelity<T: Real>(a: &CoefficientVector<T>, b: &CoefficientVector<T>) -> Result<T> {
    if a.basis() != b.basis() {
        return Err(Error::BasisMismatch {
            expected: a.basis(),
            found: b.basis(),
        });
    }
    let an = a.normalized()?;
    let bn = b.normalized()?;
    let len = an.len().max(bn.len());
    let mut acc = Complex::new(T::zero(), T::zero());
    for n in 0..len {
        acc = acc + an.get(n).conj() * bn.get(n);
    }
    Ok(acc.norm_sqr())
}

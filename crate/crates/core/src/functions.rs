//! Catalog of target functions: entire-function builtins, coherent-state
//! exponentials, and finite power series.
//!
//! Every variant is an entire function of one complex variable with growth
//! order at most one, so its Gaussian-weighted projection integrals converge.
//! [`FunctionSpec::exact_coefficients`] is the analytic Maclaurin oracle the
//! numerical routes are validated against.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::coefficients::{Basis, CoefficientVector};
use crate::error::{Error, Result};
use crate::scalar::{from_f64, Real};

/// A target function f(z).
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec<T: Real> {
    /// e^z
    Exp,
    /// e^{iz}
    ExpI,
    /// sin z
    Sin,
    /// cos z
    Cos,
    /// exp(alpha z - |alpha|^2 / 2), the Bargmann image of the coherent
    /// state |alpha>.
    Coherent(Complex<T>),
    /// Finite power series sum_k coeffs[k] z^k.
    Series(Vec<Complex<T>>),
}

/// Outcome of the heuristic admissibility probe.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport<T: Real> {
    /// Largest sampled value of |f(z)| e^{-|z|^2}.
    pub max_ratio: T,
    /// Radius of the ring where the maximum was seen.
    pub radius_at_max: T,
    /// False when the ring maxima still grow on the outermost rings, which
    /// signals mass escaping the probed disk.
    pub admissible: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum Wire {
    Exp,
    Expi,
    Sin,
    Cos,
    Coherent { alpha: [f64; 2] },
    Series { coeffs: Vec<[f64; 2]> },
}

impl<T: Real> FunctionSpec<T> {
    /// Validating constructor for the coherent variant.
    pub fn coherent(alpha: Complex<T>) -> Result<Self> {
        if !alpha.re.is_finite() || !alpha.im.is_finite() {
            return Err(Error::InvalidFunction(
                "coherent amplitude must be finite".into(),
            ));
        }
        Ok(Self::Coherent(alpha))
    }

    /// Validating constructor for the series variant.
    pub fn series(coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidFunction(
                "series coefficient list must be non-empty".into(),
            ));
        }
        if coeffs
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::InvalidFunction(
                "series coefficients must be finite".into(),
            ));
        }
        Ok(Self::Series(coeffs))
    }

    /// Evaluates f(z). Series are evaluated by Horner's scheme.
    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        let i = Complex::new(T::zero(), T::one());
        match self {
            Self::Exp => z.exp(),
            Self::ExpI => (i * z).exp(),
            Self::Sin => z.sin(),
            Self::Cos => z.cos(),
            Self::Coherent(alpha) => {
                let half = from_f64::<T>(0.5);
                (*alpha * z - Complex::new(alpha.norm_sqr() * half, T::zero())).exp()
            }
            Self::Series(coeffs) => {
                let mut acc = Complex::new(T::zero(), T::zero());
                for c in coeffs.iter().rev() {
                    acc = acc * z + c;
                }
                acc
            }
        }
    }

    /// Analytic Maclaurin coefficients a_0..a_max_degree in the monomial
    /// basis. Computed by stable recurrences, never by raw factorials.
    pub fn exact_coefficients(&self, max_degree: usize) -> CoefficientVector<T> {
        let zero = Complex::new(T::zero(), T::zero());
        let mut values = vec![zero; max_degree + 1];
        match self {
            Self::Exp => {
                let mut a = Complex::new(T::one(), T::zero());
                for (n, slot) in values.iter_mut().enumerate() {
                    if n > 0 {
                        a = a / from_f64::<T>(n as f64);
                    }
                    *slot = a;
                }
            }
            Self::ExpI => {
                let i = Complex::new(T::zero(), T::one());
                let mut a = Complex::new(T::one(), T::zero());
                for (n, slot) in values.iter_mut().enumerate() {
                    if n > 0 {
                        a = a * i / from_f64::<T>(n as f64);
                    }
                    *slot = a;
                }
            }
            Self::Sin => {
                // a_{2k+1} = (-1)^k / (2k+1)!
                let mut a = T::one();
                let mut n = 1usize;
                let mut sign = T::one();
                while n <= max_degree {
                    if n > 1 {
                        a = a / from_f64::<T>((n * (n - 1)) as f64);
                        sign = -sign;
                    }
                    values[n] = Complex::new(sign * a, T::zero());
                    n += 2;
                }
            }
            Self::Cos => {
                let mut a = T::one();
                let mut n = 0usize;
                let mut sign = T::one();
                while n <= max_degree {
                    if n > 0 {
                        a = a / from_f64::<T>((n * (n - 1)) as f64);
                        sign = -sign;
                    }
                    values[n] = Complex::new(sign * a, T::zero());
                    n += 2;
                }
            }
            Self::Coherent(alpha) => {
                let half = from_f64::<T>(0.5);
                let mut a = Complex::new((-alpha.norm_sqr() * half).exp(), T::zero());
                for (n, slot) in values.iter_mut().enumerate() {
                    if n > 0 {
                        a = a * *alpha / from_f64::<T>(n as f64);
                    }
                    *slot = a;
                }
            }
            Self::Series(coeffs) => {
                for (n, slot) in values.iter_mut().enumerate() {
                    if let Some(c) = coeffs.get(n) {
                        *slot = *c;
                    }
                }
            }
        }
        CoefficientVector::new(values, Basis::Monomial)
            .expect("oracle coefficients are finite by construction")
    }

    /// Samples |f(z)| e^{-|z|^2} on concentric rings up to `r_max` and flags
    /// distributions whose ring maxima still grow at the probed boundary.
    /// Heuristic and report-only; every catalog function is admissible, so a
    /// negative report means `r_max` cuts the function's mass, not that the
    /// function is outside the space.
    pub fn admissibility_probe(&self, r_max: T, samples: usize) -> AdmissibilityReport<T> {
        let rings = samples.max(8);
        let angular = samples.max(8);
        let two_pi = T::PI() + T::PI();
        let mut ring_max = Vec::with_capacity(rings);
        let mut max_ratio = T::neg_infinity();
        let mut radius_at_max = T::zero();
        for i in 0..rings {
            let r = r_max * from_f64::<T>(i as f64) / from_f64::<T>((rings - 1) as f64);
            let mut m = T::neg_infinity();
            for k in 0..angular {
                let theta = two_pi * from_f64::<T>(k as f64) / from_f64::<T>(angular as f64);
                let z = Complex::from_polar(r, theta);
                let ratio = self.eval(z).norm() * (-r * r).exp();
                if ratio > m {
                    m = ratio;
                }
            }
            if m > max_ratio {
                max_ratio = m;
                radius_at_max = r;
            }
            ring_max.push(m);
        }
        // Non-decay test: strictly increasing maxima across the outer quarter
        // of the rings (at least three rings).
        let window = (rings / 4).max(3).min(rings);
        let tail = &ring_max[rings - window..];
        let growing = tail.windows(2).all(|w| w[1] > w[0]);
        AdmissibilityReport {
            max_ratio,
            radius_at_max,
            admissible: !growing,
        }
    }

    /// Degree used by the command line when none is given: a series is taken
    /// at its own length, builtins at degree 10.
    pub fn default_max_degree(&self) -> usize {
        match self {
            Self::Series(coeffs) => coeffs.len() - 1,
            _ => 10,
        }
    }

    /// Short human-readable tag for reports.
    pub fn label(&self) -> String {
        match self {
            Self::Exp => "exp".into(),
            Self::ExpI => "expi".into(),
            Self::Sin => "sin".into(),
            Self::Cos => "cos".into(),
            Self::Coherent(a) => format!("coherent(alpha = {} + {}i)", a.re, a.im),
            Self::Series(c) => format!("series(degree {})", c.len() - 1),
        }
    }

    /// Parses the JSON wire format:
    /// `{"kind":"exp"|"expi"|"sin"|"cos"}`,
    /// `{"kind":"coherent","alpha":[re,im]}`, or
    /// `{"kind":"series","coeffs":[[re,im],...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let wire: Wire =
            serde_json::from_str(text).map_err(|e| Error::InvalidFunction(e.to_string()))?;
        match wire {
            Wire::Exp => Ok(Self::Exp),
            Wire::Expi => Ok(Self::ExpI),
            Wire::Sin => Ok(Self::Sin),
            Wire::Cos => Ok(Self::Cos),
            Wire::Coherent { alpha } => Self::coherent(Complex::new(
                T::from_f64(alpha[0])
                    .ok_or_else(|| Error::InvalidFunction("alpha out of range".into()))?,
                T::from_f64(alpha[1])
                    .ok_or_else(|| Error::InvalidFunction("alpha out of range".into()))?,
            )),
            Wire::Series { coeffs } => {
                let vals = coeffs
                    .iter()
                    .map(|&[re, im]| {
                        Ok(Complex::new(
                            T::from_f64(re).ok_or_else(|| {
                                Error::InvalidFunction("series entry out of range".into())
                            })?,
                            T::from_f64(im).ok_or_else(|| {
                                Error::InvalidFunction("series entry out of range".into())
                            })?,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::series(vals)
            }
        }
    }

    /// Serializes to the JSON wire format accepted by [`Self::from_json`].
    pub fn to_json(&self) -> String {
        let wire = match self {
            Self::Exp => Wire::Exp,
            Self::ExpI => Wire::Expi,
            Self::Sin => Wire::Sin,
            Self::Cos => Wire::Cos,
            Self::Coherent(a) => Wire::Coherent {
                alpha: [
                    a.re.to_f64().expect("finite by invariant"),
                    a.im.to_f64().expect("finite by invariant"),
                ],
            },
            Self::Series(coeffs) => Wire::Series {
                coeffs: coeffs
                    .iter()
                    .map(|c| {
                        [
                            c.re.to_f64().expect("finite by invariant"),
                            c.im.to_f64().expect("finite by invariant"),
                        ]
                    })
                    .collect(),
            },
        };
        serde_json::to_string(&wire).expect("wire format serializes")
    }
}

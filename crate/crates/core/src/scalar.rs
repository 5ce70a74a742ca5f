//! Scalar abstraction and factorial utilities shared by every numerical module.
//!
//! All core math is generic over a real scalar type implementing [`Real`]
//! (`f64` for production accuracy, `f32` available for quick runs). Factorials
//! follow a fixed policy: exact products up to 20!, log-gamma beyond that, and
//! a hard guard at index 150 where downstream Gaussian-norm weights stop being
//! representable.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

use crate::error::{Error, Result};

/// Largest index accepted by the factorial helpers.
///
/// `150!` is still finite in `f64` (about 5.7e262) but the Gaussian weights
/// built from it leave no usable headroom beyond this point.
pub const MAX_FACTORIAL_INDEX: usize = 150;

/// Largest index computed as an exact floating-point product; larger
/// arguments go through `exp(ln_gamma)`.
pub const EXACT_FACTORIAL_INDEX: usize = 20;

/// Floating-point scalar usable by the whole crate.
///
/// The blanket implementation covers `f32` and `f64`; no manual impls are
/// required for new float types that satisfy the bounds.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
///
/// Conversion from `f64` is total for the supported float types, so the
/// `expect` never fires in practice.
pub fn from_f64<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant must convert into the scalar type")
}

/// Lanczos approximation (g = 7, 9 terms) of ln Γ(z) for z > 0.
///
/// Relative accuracy is near machine precision for the integer arguments
/// used throughout this crate.
pub fn ln_gamma<T: Real>(z: T) -> T {
    // Published coefficient table, kept digit-for-digit.
    #[allow(clippy::excessive_precision)]
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    debug_assert!(z > T::zero(), "ln_gamma requires a positive argument");
    let z = z - T::one();
    let mut x = from_f64::<T>(COEFFS[0]);
    for (i, &c) in COEFFS.iter().enumerate().skip(1) {
        x = x + from_f64::<T>(c) / (z + from_f64::<T>(i as f64));
    }
    let g = from_f64::<T>(7.5);
    let t = z + g;
    let half = from_f64::<T>(0.5);
    let ln_sqrt_two_pi = from_f64::<T>(0.918_938_533_204_672_7);
    ln_sqrt_two_pi + (z + half) * t.ln() - t + x.ln()
}

/// ln(n!) under the factorial guard.
pub fn ln_factorial<T: Real>(n: usize) -> Result<T> {
    guard(n)?;
    if n <= EXACT_FACTORIAL_INDEX {
        Ok(exact_product::<T>(n).ln())
    } else {
        Ok(ln_gamma(from_f64::<T>(n as f64 + 1.0)))
    }
}

/// n! with the exact-then-log-gamma policy.
pub fn factorial<T: Real>(n: usize) -> Result<T> {
    guard(n)?;
    if n <= EXACT_FACTORIAL_INDEX {
        Ok(exact_product::<T>(n))
    } else {
        Ok(ln_gamma(from_f64::<T>(n as f64 + 1.0)).exp())
    }
}

/// sqrt(n!), kept in log space above the exact range so intermediate values
/// stay representable longer than n! itself.
pub fn sqrt_factorial<T: Real>(n: usize) -> Result<T> {
    guard(n)?;
    if n <= EXACT_FACTORIAL_INDEX {
        Ok(exact_product::<T>(n).sqrt())
    } else {
        let half = from_f64::<T>(0.5);
        Ok((half * ln_gamma(from_f64::<T>(n as f64 + 1.0))).exp())
    }
}

/// Binomial coefficient C(n, k) as a scalar, via the multiplicative
/// recurrence. Exact for the small arguments used by the loss model.
pub fn binomial<T: Real>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    let k = k.min(n - k);
    let mut acc = T::one();
    for i in 1..=k {
        acc = acc * from_f64::<T>((n - k + i) as f64) / from_f64::<T>(i as f64);
    }
    acc
}

fn guard(n: usize) -> Result<()> {
    if n > MAX_FACTORIAL_INDEX {
        Err(Error::FactorialRange { n })
    } else {
        Ok(())
    }
}

fn exact_product<T: Real>(n: usize) -> T {
    let mut acc = T::one();
    for i in 1..=n {
        acc = acc * from_f64::<T>(i as f64);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn small_factorials_are_exact() {
        assert_eq!(factorial::<f64>(0).unwrap(), 1.0);
        assert_eq!(factorial::<f64>(1).unwrap(), 1.0);
        assert_eq!(factorial::<f64>(5).unwrap(), 120.0);
        assert_eq!(factorial::<f64>(10).unwrap(), 3_628_800.0);
        assert_eq!(factorial::<f64>(20).unwrap(), 2_432_902_008_176_640_000.0);
    }

    #[test]
    fn large_factorials_match_log_sum_oracle() {
        // Independent oracle: ln(n!) as a plain sum of logarithms.
        for n in [21usize, 50, 100, 150] {
            let oracle: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
            let ln_fact = ln_factorial::<f64>(n).unwrap();
            assert_relative_eq!(ln_fact, oracle, max_relative = 1e-13);
            let fact = factorial::<f64>(n).unwrap();
            assert_relative_eq!(fact, oracle.exp(), max_relative = 1e-11);
        }
    }

    #[test]
    fn sqrt_factorial_squares_back() {
        for n in [0usize, 1, 7, 20, 21, 60, 150] {
            let s = sqrt_factorial::<f64>(n).unwrap();
            let f = factorial::<f64>(n).unwrap();
            assert_relative_eq!(s * s, f, max_relative = 1e-12);
        }
    }

    #[test]
    fn factorial_guard_fires_past_150() {
        assert!(matches!(
            factorial::<f64>(151),
            Err(Error::FactorialRange { n: 151 })
        ));
        assert!(factorial::<f64>(150).is_ok());
    }

    #[test]
    fn binomial_matches_pascal() {
        assert_eq!(binomial::<f64>(0, 0), 1.0);
        assert_eq!(binomial::<f64>(5, 2), 10.0);
        assert_eq!(binomial::<f64>(10, 10), 1.0);
        assert_eq!(binomial::<f64>(10, 11), 0.0);
        for n in 1..20usize {
            for k in 1..n {
                let lhs = binomial::<f64>(n, k);
                let rhs = binomial::<f64>(n - 1, k - 1) + binomial::<f64>(n - 1, k);
                assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn generic_path_works_in_f32() {
        assert_eq!(factorial::<f32>(5).unwrap(), 120.0f32);
        let s = sqrt_factorial::<f32>(30).unwrap();
        let oracle: f64 = (1..=30).map(|k| (k as f64).ln()).sum();
        assert_relative_eq!(s as f64, (0.5 * oracle).exp(), max_relative = 1e-5);
    }
}

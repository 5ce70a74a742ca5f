//! Dense matrix exponential by scaling and squaring with a Taylor core.
//!
//! The generators this crate exponentiates (displacement and beam-splitter
//! blocks) are anti-Hermitian, so their exponentials are unitary and the
//! Taylor series after scaling to inf-norm <= 1/2 converges in a few dozen
//! terms with no numerical drama.

use ndarray::Array2;
use num_complex::Complex;

use crate::scalar::{from_f64, Real};

/// Largest entry magnitude, used for the truncation test.
fn max_abs<T: Real>(a: &Array2<Complex<T>>) -> T {
    a.iter().fold(T::zero(), |m, v| m.max(v.norm()))
}

/// Inf-norm (max absolute row sum).
fn inf_norm<T: Real>(a: &Array2<Complex<T>>) -> T {
    let mut worst = T::zero();
    for row in a.rows() {
        let sum = row.iter().fold(T::zero(), |s, v| s + v.norm());
        worst = worst.max(sum);
    }
    worst
}

/// exp(A) for a square complex matrix.
pub fn expm<T: Real>(a: &Array2<Complex<T>>) -> Array2<Complex<T>> {
    let dim = a.nrows();
    assert_eq!(dim, a.ncols(), "expm needs a square matrix");
    let norm = inf_norm(a);
    // Scale until the norm is at most 1/2, then undo by repeated squaring.
    let mut squarings = 0u32;
    let half = from_f64::<T>(0.5);
    let mut scale = T::one();
    while norm * scale > half && squarings < 64 {
        scale = scale * half;
        squarings += 1;
    }
    let scaled = a.mapv(|v| v * scale);

    let mut sum = Array2::<Complex<T>>::eye(dim);
    let mut term = Array2::<Complex<T>>::eye(dim);
    for k in 1..=60usize {
        term = term.dot(&scaled).mapv(|v| v / from_f64::<T>(k as f64));
        sum += &term;
        if max_abs(&term) <= T::epsilon() * max_abs(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.dot(&sum);
    }
    sum
}

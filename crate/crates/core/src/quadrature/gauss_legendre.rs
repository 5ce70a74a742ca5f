//! Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
//! Legendre polynomial from the Chebyshev-based initial guess.

use crate::scalar::{from_f64, Real};

/// Returns `(nodes, weights)` of the `n`-point Gauss-Legendre rule on
/// [-1, 1], nodes ascending. Exact for polynomials of degree 2n - 1.
pub fn nodes_and_weights<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = from_f64::<T>(n as f64);
    // Newton converges in a handful of steps from the Chebyshev guess; the
    // tolerance sits a little above machine epsilon to avoid limit cycling.
    let tol = T::epsilon() * from_f64::<T>(8.0);
    for i in 0..n {
        let guess =
            (T::PI() * (from_f64::<T>(i as f64) + from_f64::<T>(0.75)) / (nf + from_f64::<T>(0.5)))
                .cos();
        let mut x = guess;
        let mut dp = T::zero();
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() <= tol {
                let (_, d) = legendre_and_derivative(n, x);
                dp = d;
                break;
            }
        }
        // Descending from cos guarantees x_i here descends; store ascending.
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = from_f64::<T>(2.0) / ((T::one() - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Evaluates (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre_and_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    if n == 0 {
        return (p0, T::zero());
    }
    let mut p1 = x;
    for k in 2..=n {
        let kf = from_f64::<T>(k as f64);
        let p2 = ((from_f64::<T>(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = (from_f64::<T>(n as f64)) * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

//! Truncated Fock-space linear algebra: single- and two-mode states, ladder
//! and displacement operators, the sector-built beam splitter, and exact
//! outcome probabilities.
//!
//! Cutoff policy: callers pick `dim`; every state-changing operation checks
//! a leakage guard (mass at the truncation boundary at most 1e-8) and fails
//! with a cutoff-overflow error rather than returning silently corrupted
//! amplitudes.

mod expm;

pub use expm::expm;

use ndarray::Array2;
use num_complex::Complex;
use serde_json::json;

use crate::coefficients::{Basis, CoefficientVector};
use crate::error::{Error, Result};
use crate::quadrature::radial_truncation_factor;
use crate::scalar::{from_f64, Real};

/// Probability mass tolerated at a truncation boundary.
pub const LEAKAGE_TOL: f64 = 1e-8;
/// Norm tolerance for prepared states.
pub const NORM_TOL: f64 = 1e-10;

/// Single-mode pure state on the truncated Fock basis |0..dim-1>.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState<T: Real> {
    amplitudes: Vec<Complex<T>>,
    dim: usize,
}

impl<T: Real> FockState<T> {
    /// Wraps amplitudes that must already be normalized to 1e-10.
    pub fn new(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::Config(format!(
                "Fock cutoff must be at least 2, got {}",
                amplitudes.len()
            )));
        }
        let norm_sq: T = amplitudes.iter().map(|a| a.norm_sqr()).fold(T::zero(), |s, v| s + v);
        if (norm_sq.sqrt() - T::one()).abs() > from_f64::<T>(NORM_TOL) {
            return Err(Error::Config(format!(
                "state norm {} is not 1 within {NORM_TOL}",
                norm_sq.sqrt()
            )));
        }
        let dim = amplitudes.len();
        Ok(Self { amplitudes, dim })
    }

    /// |n> at the given cutoff.
    pub fn number_state(n: usize, dim: usize) -> Result<Self> {
        if dim < 2 || n >= dim {
            return Err(Error::Config(format!(
                "number state |{n}> does not fit in dim {dim}"
            )));
        }
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); dim];
        amplitudes[n] = Complex::new(T::one(), T::zero());
        Ok(Self { amplitudes, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    /// Photon-number outcome probabilities |amplitude_n|^2.
    pub fn probabilities(&self) -> Vec<T> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Mass sitting on the last retained level.
    pub fn leakage(&self) -> T {
        self.amplitudes[self.dim - 1].norm_sqr()
    }

    fn check_leakage(&self, context: &'static str) -> Result<()> {
        let leaked = self.leakage().to_f64().unwrap_or(f64::NAN);
        if !(leaked <= LEAKAGE_TOL) {
            return Err(Error::CutoffOverflow {
                context,
                dim: self.dim,
                suggested: self.dim * 2,
                leaked,
            });
        }
        Ok(())
    }

    /// Debug dump `{"dim":D,"amplitudes":[[re,im],...]}`.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "dim": self.dim,
            "amplitudes": self
                .amplitudes
                .iter()
                .map(|a| [a.re.to_f64().unwrap_or(f64::NAN), a.im.to_f64().unwrap_or(f64::NAN)])
                .collect::<Vec<_>>(),
        })
    }
}

/// Operator provenance tag carried next to the matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorLabel<T: Real> {
    Lower,
    Raise,
    Number,
    Displacement(Complex<T>),
    Identity,
}

/// A dense single-mode operator on the truncated basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeOperator<T: Real> {
    pub matrix: Array2<Complex<T>>,
    pub label: OperatorLabel<T>,
}

impl<T: Real> ModeOperator<T> {
    /// Applies the operator and enforces the leakage guard on the result.
    pub fn apply(&self, state: &FockState<T>) -> Result<FockState<T>> {
        if self.matrix.nrows() != state.dim {
            return Err(Error::Config(format!(
                "operator dim {} does not match state dim {}",
                self.matrix.nrows(),
                state.dim
            )));
        }
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); state.dim];
        for (i, slot) in amplitudes.iter_mut().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for j in 0..state.dim {
                acc += self.matrix[[i, j]] * state.amplitudes[j];
            }
            *slot = acc;
        }
        let out = FockState {
            amplitudes,
            dim: state.dim,
        };
        out.check_leakage("mode operator application")?;
        Ok(out)
    }
}

/// Truncated ladder matrices: Lower[n-1, n] = sqrt(n), Raise = Lower
/// conjugate-transposed, Number = diag(0..dim-1).
pub fn mode_operators<T: Real>(dim: usize) -> (ModeOperator<T>, ModeOperator<T>, ModeOperator<T>) {
    assert!(dim >= 2, "ladder operators need dim >= 2");
    let zero = Complex::new(T::zero(), T::zero());
    let mut lower = Array2::from_elem((dim, dim), zero);
    let mut raise = Array2::from_elem((dim, dim), zero);
    let mut number = Array2::from_elem((dim, dim), zero);
    for n in 1..dim {
        let root = from_f64::<T>(n as f64).sqrt();
        lower[[n - 1, n]] = Complex::new(root, T::zero());
        raise[[n, n - 1]] = Complex::new(root, T::zero());
    }
    for n in 0..dim {
        number[[n, n]] = Complex::new(from_f64::<T>(n as f64), T::zero());
    }
    (
        ModeOperator { matrix: lower, label: OperatorLabel::Lower },
        ModeOperator { matrix: raise, label: OperatorLabel::Raise },
        ModeOperator { matrix: number, label: OperatorLabel::Number },
    )
}

/// Max entry of |M^dagger M - I| over the leading `block` rows and columns.
pub fn unitarity_defect<T: Real>(matrix: &Array2<Complex<T>>, block: usize) -> T {
    let gram = matrix.t().mapv(|v| v.conj()).dot(matrix);
    let block = block.min(gram.nrows());
    let mut worst = T::zero();
    for i in 0..block {
        for j in 0..block {
            let expect = if i == j { T::one() } else { T::zero() };
            worst = worst.max((gram[[i, j]] - Complex::new(expect, T::zero())).norm());
        }
    }
    worst
}

/// D(alpha) = exp(alpha a^dagger - conj(alpha) a) on the truncated basis.
///
/// Truncation corrupts only the top of the matrix; accuracy claims hold on
/// the leading dim - ceil(4|alpha|) block, and a defect beyond 1e-8 there is
/// reported on stderr.
pub fn displacement<T: Real>(alpha: Complex<T>, dim: usize) -> ModeOperator<T> {
    assert!(dim >= 2, "displacement needs dim >= 2");
    let (lower, raise, _) = mode_operators::<T>(dim);
    let generator = raise.matrix.mapv(|v| v * alpha) - lower.matrix.mapv(|v| v * alpha.conj());
    let matrix = expm(&generator);
    let margin = (from_f64::<T>(4.0) * alpha.norm())
        .ceil()
        .to_usize()
        .unwrap_or(dim);
    let guarded = dim.saturating_sub(margin).max(1);
    let defect = unitarity_defect(&matrix, guarded);
    if defect > from_f64::<T>(1e-8) {
        eprintln!(
            "warning: displacement(|alpha| = {}) at dim {} has unitarity defect {} on the leading {} block; increase dim",
            alpha.norm(),
            dim,
            defect,
            guarded
        );
    }
    ModeOperator {
        matrix,
        label: OperatorLabel::Displacement(alpha),
    }
}

/// Exact Poisson tail mass a coherent state of amplitude alpha loses to the
/// cutoff.
pub fn coherent_tail_mass<T: Real>(alpha: Complex<T>, dim: usize) -> T {
    radial_truncation_factor(dim - 1, alpha.norm())
}

/// |alpha> with amplitudes e^{-|alpha|^2/2} alpha^n / sqrt(n!), renormalized
/// over the cutoff. Tail mass beyond 1e-8 is a cutoff-overflow error.
pub fn coherent_state<T: Real>(alpha: Complex<T>, dim: usize) -> Result<FockState<T>> {
    if dim < 2 {
        return Err(Error::Config(format!("coherent state needs dim >= 2, got {dim}")));
    }
    let tail = coherent_tail_mass(alpha, dim).to_f64().unwrap_or(f64::NAN);
    if !(tail <= LEAKAGE_TOL) {
        let suggested = (alpha.norm().to_f64().unwrap_or(0.0) + 4.0).powi(2).ceil() as usize;
        return Err(Error::CutoffOverflow {
            context: "coherent state preparation",
            dim,
            suggested: suggested.max(dim + 1),
            leaked: tail,
        });
    }
    let half = from_f64::<T>(0.5);
    let mut amplitudes = Vec::with_capacity(dim);
    let mut amp = Complex::new((-alpha.norm_sqr() * half).exp(), T::zero());
    for n in 0..dim {
        if n > 0 {
            amp = amp * alpha / from_f64::<T>(n as f64).sqrt();
        }
        amplitudes.push(amp);
    }
    let norm = amplitudes
        .iter()
        .map(|a| a.norm_sqr())
        .fold(T::zero(), |s, v| s + v)
        .sqrt();
    for a in &mut amplitudes {
        *a = *a / norm;
    }
    Ok(FockState { amplitudes, dim })
}

/// Loads a coefficient vector as state amplitudes: values / sqrt(sum |v|^2),
/// zero-padded to `dim`. The vector must already be tagged Fock-orthonormal.
pub fn prepare_state<T: Real>(c: &CoefficientVector<T>, dim: usize) -> Result<FockState<T>> {
    if c.basis() != Basis::FockOrthonormal {
        return Err(Error::BasisMismatch {
            expected: Basis::FockOrthonormal,
            found: c.basis(),
        });
    }
    if c.len() > dim {
        return Err(Error::Config(format!(
            "coefficient vector of length {} does not fit in dim {}",
            c.len(),
            dim
        )));
    }
    if dim < 2 {
        return Err(Error::Config(format!("state preparation needs dim >= 2, got {dim}")));
    }
    let norm = c.norm_sq().sqrt();
    if norm == T::zero() {
        return Err(Error::ZeroNorm("state preparation"));
    }
    let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); dim];
    for (n, v) in c.values().iter().enumerate() {
        amplitudes[n] = *v / norm;
    }
    Ok(FockState { amplitudes, dim })
}

/// Two-mode pure state on the dim x dim truncated grid; first index is the
/// signal mode, second the ancilla.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState<T: Real> {
    amplitudes: Array2<Complex<T>>,
    dim: usize,
}

impl<T: Real> TwoModeState<T> {
    /// Tensor product a (x) b; the modes must share one cutoff.
    pub fn product(a: &FockState<T>, b: &FockState<T>) -> Result<Self> {
        if a.dim != b.dim {
            return Err(Error::Config(format!(
                "mode cutoffs differ: {} vs {}",
                a.dim, b.dim
            )));
        }
        let dim = a.dim;
        let mut amplitudes = Array2::from_elem((dim, dim), Complex::new(T::zero(), T::zero()));
        for n in 0..dim {
            for k in 0..dim {
                amplitudes[[n, k]] = a.amplitudes[n] * b.amplitudes[k];
            }
        }
        Ok(Self { amplitudes, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &Array2<Complex<T>> {
        &self.amplitudes
    }

    pub fn norm(&self) -> T {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .fold(T::zero(), |s, v| s + v)
            .sqrt()
    }

    /// Distribution of the total photon number N = n + k, length 2 dim - 1.
    pub fn total_photon_marginal(&self) -> Vec<T> {
        let mut marginal = vec![T::zero(); 2 * self.dim - 1];
        for n in 0..self.dim {
            for k in 0..self.dim {
                marginal[n + k] += self.amplitudes[[n, k]].norm_sqr();
            }
        }
        marginal
    }

    /// Mass on total-photon sectors the grid clips (N >= dim), where gate
    /// action is inexact.
    pub fn clipped_shell_mass(&self) -> T {
        let marginal = self.total_photon_marginal();
        marginal[self.dim..].iter().fold(T::zero(), |s, &v| s + v)
    }

    /// Debug dump `{"dim":D,"amplitudes":[[re,im],...]}` in row-major order.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "dim": self.dim,
            "amplitudes": self
                .amplitudes
                .iter()
                .map(|a| [a.re.to_f64().unwrap_or(f64::NAN), a.im.to_f64().unwrap_or(f64::NAN)])
                .collect::<Vec<_>>(),
        })
    }
}

/// Entrywise outcome probabilities P_{n,k} = |amplitude|^2 of a normalized
/// two-mode state.
pub fn joint_probabilities<T: Real>(state: &TwoModeState<T>) -> Result<Array2<T>> {
    if ((state.norm() - T::one()).abs()) > from_f64::<T>(NORM_TOL) {
        return Err(Error::Config(format!(
            "joint probabilities need a normalized state, got norm {}",
            state.norm()
        )));
    }
    Ok(state.amplitudes.mapv(|a| a.norm_sqr()))
}

/// Two-mode beam splitter exp[theta (a b^dagger - a^dagger b)], assembled
/// per total-photon sector.
///
/// Within sector N the basis is |j, N-j> with j ascending; the restricted
/// generator is real antisymmetric tridiagonal, so each block exponential is
/// exactly orthogonal and the full operator conserves photon number by
/// construction. Sectors the grid clips (N >= dim) are exponentiated on
/// their retained slice, which keeps the operator unitary; their physical
/// accuracy is covered by the caller-side leakage guard.
#[derive(Debug, Clone)]
pub struct BeamSplitter<T: Real> {
    theta: T,
    dim: usize,
    sectors: Vec<Array2<Complex<T>>>,
}

impl<T: Real> BeamSplitter<T> {
    pub fn new(theta: T, dim: usize) -> Self {
        assert!(dim >= 2, "beam splitter needs dim >= 2");
        let mut sectors = Vec::with_capacity(2 * dim - 1);
        for total in 0..=(2 * dim - 2) {
            let j_min = total.saturating_sub(dim - 1);
            let j_max = total.min(dim - 1);
            let size = j_max - j_min + 1;
            let mut generator =
                Array2::from_elem((size, size), Complex::new(T::zero(), T::zero()));
            for j in j_min..=j_max {
                let l = j - j_min;
                // a b^dagger: |j, N-j> -> sqrt(j (N-j+1)) |j-1, N-j+1>.
                if j > j_min {
                    let amp = (from_f64::<T>(j as f64)
                        * from_f64::<T>((total - j + 1) as f64))
                    .sqrt();
                    generator[[l - 1, l]] = Complex::new(theta * amp, T::zero());
                }
                // a^dagger b: |j, N-j> -> sqrt((j+1)(N-j)) |j+1, N-j-1>.
                if j < j_max {
                    let amp = (from_f64::<T>((j + 1) as f64)
                        * from_f64::<T>((total - j) as f64))
                    .sqrt();
                    generator[[l + 1, l]] = Complex::new(-theta * amp, T::zero());
                }
            }
            sectors.push(expm(&generator));
        }
        Self { theta, dim, sectors }
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Block of the unitary acting on total-photon sector N.
    pub fn sector(&self, total: usize) -> &Array2<Complex<T>> {
        &self.sectors[total]
    }

    /// Applies the beam splitter; mass above 1e-8 on clipped sectors is a
    /// cutoff-overflow error because those sectors rotate inexactly.
    pub fn apply(&self, state: &TwoModeState<T>) -> Result<TwoModeState<T>> {
        if state.dim != self.dim {
            return Err(Error::Config(format!(
                "beam splitter dim {} does not match state dim {}",
                self.dim, state.dim
            )));
        }
        let clipped = state.clipped_shell_mass().to_f64().unwrap_or(f64::NAN);
        if !(clipped <= LEAKAGE_TOL) {
            return Err(Error::CutoffOverflow {
                context: "beam splitter application",
                dim: self.dim,
                suggested: self.dim * 2,
                leaked: clipped,
            });
        }
        let mut out = Array2::from_elem(
            (self.dim, self.dim),
            Complex::new(T::zero(), T::zero()),
        );
        for total in 0..=(2 * self.dim - 2) {
            let j_min = total.saturating_sub(self.dim - 1);
            let j_max = total.min(self.dim - 1);
            let size = j_max - j_min + 1;
            let block = &self.sectors[total];
            for row in 0..size {
                let mut acc = Complex::new(T::zero(), T::zero());
                for col in 0..size {
                    let j = j_min + col;
                    acc += block[[row, col]] * state.amplitudes[[j, total - j]];
                }
                let j = j_min + row;
                out[[j, total - j]] = acc;
            }
        }
        Ok(TwoModeState {
            amplitudes: out,
            dim: self.dim,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::FunctionSpec;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ladder_matrices_match_definitions() {
        let (lower, raise, number) = mode_operators::<f64>(3);
        assert_eq!(lower.matrix[[0, 1]], c(1.0, 0.0));
        assert_eq!(lower.matrix[[1, 2]], c(2.0f64.sqrt(), 0.0));
        assert_eq!(lower.matrix[[2, 2]], c(0.0, 0.0));
        for n in 0..3 {
            assert_eq!(number.matrix[[n, n]], c(n as f64, 0.0));
        }
        // Raise is the conjugate transpose of Lower, and Raise * Lower
        // reproduces Number up to floating-point rounding of sqrt(n)^2.
        let hermitian = lower.matrix.t().mapv(|v| v.conj());
        assert_eq!(raise.matrix, hermitian);
        let product = raise.matrix.dot(&lower.matrix);
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(
                    (product[[i, j]] - number.matrix[[i, j]]).norm(),
                    0.0,
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn displacement_of_zero_is_identity() {
        let d = displacement(c(0.0, 0.0), 8);
        for i in 0..8 {
            for j in 0..8 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(d.matrix[[i, j]], c(expect, 0.0));
            }
        }
    }

    #[test]
    fn displacement_builds_coherent_state_from_vacuum() {
        let dim = 30;
        let alpha = c(1.0, 0.0);
        let d = displacement(alpha, dim);
        let vacuum = FockState::number_state(0, dim).unwrap();
        let displaced = d.apply(&vacuum).unwrap();
        assert_abs_diff_eq!(displaced.amplitudes()[0].re, (-0.5f64).exp(), epsilon = 1e-8);
        let coherent = coherent_state(alpha, dim).unwrap();
        for n in 0..dim {
            assert_abs_diff_eq!(
                (displaced.amplitudes()[n] - coherent.amplitudes()[n]).norm(),
                0.0,
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn displacement_inverse_recovers_identity_on_guarded_block() {
        let dim = 30;
        let alpha = c(0.8, -0.6);
        let d = displacement(alpha, dim);
        let d_inv = displacement(-alpha, dim);
        let product = d.matrix.dot(&d_inv.matrix);
        let guarded = dim - 4;
        for i in 0..guarded {
            for j in 0..guarded {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!((product[[i, j]] - c(expect, 0.0)).norm(), 0.0, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn displacement_composition_matches_group_law() {
        // D(alpha) D(beta) = e^{i Im(alpha conj(beta))} D(alpha + beta).
        // Truncation corrupts a band below the cutoff whose width grows
        // like |alpha| sqrt(dim), so the law is checked on the leading
        // half-block, where the defect sits far below tolerance.
        let dim = 40;
        for (alpha, beta) in [(c(0.3, 0.4), c(-0.5, 0.1)), (c(1.0, 0.0), c(0.0, 1.0))] {
            let lhs = displacement(alpha, dim).matrix.dot(&displacement(beta, dim).matrix);
            let phase = Complex64::from_polar(1.0, (alpha * beta.conj()).im);
            let rhs = displacement(alpha + beta, dim).matrix.mapv(|v| v * phase);
            for i in 0..dim / 2 {
                for j in 0..dim / 2 {
                    assert_abs_diff_eq!((lhs[[i, j]] - rhs[[i, j]]).norm(), 0.0, epsilon = 1e-7);
                }
            }
        }
    }

    #[test]
    fn coherent_state_examples() {
        let vac = coherent_state(c(0.0, 0.0), 6).unwrap();
        assert_eq!(vac.amplitudes()[0], c(1.0, 0.0));
        assert!(vac.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));

        assert!(coherent_tail_mass(c(1.0, 0.0), 30) < 1e-20);

        // Amplitude recurrence against the closed form at alpha = 0.5.
        let state = coherent_state(c(0.5, 0.0), 16).unwrap();
        let mut fact = 1.0f64;
        for n in 0..8 {
            if n > 0 {
                fact *= n as f64;
            }
            let expect = (-0.125f64).exp() * 0.5f64.powi(n as i32) / fact.sqrt();
            assert_relative_eq!(state.amplitudes()[n].re, expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn coherent_state_rejects_tight_cutoffs() {
        let err = coherent_state(c(3.0, 0.0), 10).unwrap_err();
        match err {
            Error::CutoffOverflow { dim, suggested, leaked, .. } => {
                assert_eq!(dim, 10);
                assert_eq!(suggested, 49);
                assert!(leaked > 1e-8);
            }
            other => panic!("expected cutoff overflow, got {other:?}"),
        }
    }

    #[test]
    fn mode_operator_apply_guards_leakage() {
        // Displacing the vacuum by 2 at dim 6 parks visible mass on the top
        // level, which the guard must catch.
        let d = displacement(c(2.0, 0.0), 6);
        let vacuum = FockState::number_state(0, 6).unwrap();
        assert!(matches!(
            d.apply(&vacuum),
            Err(Error::CutoffOverflow { .. })
        ));
    }

    #[test]
    fn prepare_state_normalizes_and_pads() {
        let c34 = CoefficientVector::new(vec![c(3.0, 0.0), c(0.0, 4.0)], Basis::FockOrthonormal)
            .unwrap();
        let state = prepare_state(&c34, 4).unwrap();
        assert_abs_diff_eq!((state.amplitudes()[0] - c(0.6, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((state.amplitudes()[1] - c(0.0, 0.8)).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(state.amplitudes()[2], c(0.0, 0.0));
        assert_eq!(state.amplitudes()[3], c(0.0, 0.0));

        let delta = CoefficientVector::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], Basis::FockOrthonormal)
            .unwrap();
        let state = prepare_state(&delta, 3).unwrap();
        assert_eq!(state.amplitudes()[0], c(1.0, 0.0));
    }

    #[test]
    fn prepare_state_loads_cos_series_with_frozen_ground_probability() {
        // Maclaurin values of cos through degree 10, loaded directly as
        // amplitudes: p_0 = 1 / sum_{even n <= 10} (1/n!)^2.
        let cos = FunctionSpec::<f64>::Cos.exact_coefficients(10);
        let state = prepare_state(&cos.reinterpreted(Basis::FockOrthonormal), 16).unwrap();
        let p0 = state.probabilities()[0];
        assert_abs_diff_eq!(p0, 0.7988891984219791, epsilon = 1e-12);
        assert_abs_diff_eq!(p0, 1.0 / 1.251737, epsilon = 1e-5);
    }

    #[test]
    fn prepare_state_validates_inputs() {
        let mono = CoefficientVector::new(vec![c(1.0, 0.0)], Basis::Monomial).unwrap();
        assert!(matches!(
            prepare_state(&mono, 4),
            Err(Error::BasisMismatch { .. })
        ));
        let zero = CoefficientVector::new(vec![c(0.0, 0.0), c(0.0, 0.0)], Basis::FockOrthonormal)
            .unwrap();
        assert!(matches!(prepare_state(&zero, 4), Err(Error::ZeroNorm(_))));
        let long = CoefficientVector::new(vec![c(1.0, 0.0); 5], Basis::FockOrthonormal).unwrap();
        assert!(prepare_state(&long, 4).is_err());
    }

    #[test]
    fn beam_splitter_at_zero_is_identity() {
        let bs = BeamSplitter::new(0.0, 8);
        let a = coherent_state(c(0.4, 0.2), 8).unwrap();
        let b = FockState::number_state(1, 8).unwrap();
        let joint = TwoModeState::product(&a, &b).unwrap();
        let out = bs.apply(&joint).unwrap();
        for n in 0..8 {
            for k in 0..8 {
                assert_abs_diff_eq!(
                    (out.amplitudes()[[n, k]] - joint.amplitudes()[[n, k]]).norm(),
                    0.0,
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn balanced_beam_splitter_splits_a_single_photon() {
        let dim = 4;
        let bs = BeamSplitter::new(std::f64::consts::FRAC_PI_4, dim);
        let one = FockState::number_state(1, dim).unwrap();
        let vac = FockState::number_state(0, dim).unwrap();
        let joint = TwoModeState::product(&one, &vac).unwrap();
        let out = bs.apply(&joint).unwrap();
        let root_half = 0.5f64.sqrt();
        assert_abs_diff_eq!(out.amplitudes()[[1, 0]].re, root_half, epsilon = 1e-14);
        assert_abs_diff_eq!(out.amplitudes()[[0, 1]].re, root_half, epsilon = 1e-14);
        let probs = joint_probabilities(&out).unwrap();
        assert_abs_diff_eq!(probs[[1, 0]], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(probs[[0, 1]], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn beam_splitter_blocks_are_unitary_for_any_angle() {
        for &theta in &[0.0, 0.3, std::f64::consts::FRAC_PI_4, 1.2, 2.0 * std::f64::consts::PI] {
            let bs = BeamSplitter::new(theta, 6);
            for total in 0..=10 {
                let block = bs.sector(total);
                assert!(
                    unitarity_defect(block, block.nrows()) <= 1e-10,
                    "sector {total} at theta {theta}"
                );
            }
        }
    }

    #[test]
    fn beam_splitter_conserves_total_photon_number() {
        let dim = 10;
        let a = coherent_state(c(0.5, 0.3), dim).unwrap();
        let b = coherent_state(c(-0.2, 0.4), dim).unwrap();
        let joint = TwoModeState::product(&a, &b).unwrap();
        let before = joint.total_photon_marginal();
        let out = BeamSplitter::new(0.9, dim).apply(&joint).unwrap();
        let after = out.total_photon_marginal();
        for (x, y) in before.iter().zip(&after) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn beam_splitter_factorizes_coherent_inputs() {
        // U(theta) |alpha, beta> = |alpha cos - beta sin> (x) |alpha sin +
        // beta cos> with no extra phase; an independent closed-form oracle
        // for the sector construction.
        let dim = 25;
        let theta = 0.7f64;
        let alpha = c(0.6, 0.0);
        let beta = c(-0.3, 0.2);
        let joint = TwoModeState::product(
            &coherent_state(alpha, dim).unwrap(),
            &coherent_state(beta, dim).unwrap(),
        )
        .unwrap();
        let out = BeamSplitter::new(theta, dim).apply(&joint).unwrap();
        let expect = TwoModeState::product(
            &coherent_state(alpha * theta.cos() - beta * theta.sin(), dim).unwrap(),
            &coherent_state(alpha * theta.sin() + beta * theta.cos(), dim).unwrap(),
        )
        .unwrap();
        for n in 0..dim {
            for k in 0..dim {
                assert_abs_diff_eq!(
                    (out.amplitudes()[[n, k]] - expect.amplitudes()[[n, k]]).norm(),
                    0.0,
                    epsilon = 1e-8
                );
            }
        }
    }

    #[test]
    fn beam_splitter_guards_clipped_sectors() {
        let dim = 3;
        let top = FockState::number_state(2, dim).unwrap();
        let joint = TwoModeState::product(&top, &top).unwrap();
        assert!(matches!(
            BeamSplitter::new(0.5, dim).apply(&joint),
            Err(Error::CutoffOverflow { .. })
        ));
    }

    #[test]
    fn joint_probabilities_require_normalization_and_sum_to_one() {
        let dim = 10;
        let a = coherent_state(c(0.4, -0.1), dim).unwrap();
        let b = coherent_state(c(0.2, 0.3), dim).unwrap();
        let joint = TwoModeState::product(&a, &b).unwrap();
        let probs = joint_probabilities(&joint).unwrap();
        let total: f64 = probs.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);

        let vacuum = TwoModeState::product(
            &FockState::<f64>::number_state(0, dim).unwrap(),
            &FockState::<f64>::number_state(0, dim).unwrap(),
        )
        .unwrap();
        let probs = joint_probabilities(&vacuum).unwrap();
        assert_eq!(probs[[0, 0]], 1.0);

        let unnormalized = TwoModeState {
            amplitudes: Array2::from_elem((2, 2), c(1.0, 0.0)),
            dim: 2,
        };
        assert!(joint_probabilities(&unnormalized).is_err());
    }

    #[test]
    fn json_dumps_have_documented_shape() {
        let state = FockState::<f64>::number_state(1, 3).unwrap();
        let dump = state.to_json();
        assert_eq!(dump["dim"], 3);
        assert_eq!(dump["amplitudes"].as_array().unwrap().len(), 3);
        assert_eq!(dump["amplitudes"][1][0], 1.0);

        let joint = TwoModeState::product(&state, &state).unwrap();
        let dump = joint.to_json();
        assert_eq!(dump["dim"], 3);
        assert_eq!(dump["amplitudes"].as_array().unwrap().len(), 9);
    }
}

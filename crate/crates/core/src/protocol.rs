//! The measurement protocol end to end: magnitude estimation from
//! photon-number sampling of the prepared state, interferometric phase
//! recovery by scanning a displaced ancilla, sequential phase bootstrap,
//! and full coefficient reconstruction.
//!
//! Phase fitting uses the exact simulator as its model function, so the fit
//! has no model error; its only noise is statistical. The PRNG stream rule:
//! stream 0 samples the magnitude stage, stream 1 + n*J + j samples scan
//! point j of the degree-n phase scan.

use std::time::{Duration, Instant};

use ndarray::Array2;
use num_complex::Complex;
use serde_json::json;

use crate::coefficients::{Basis, CoefficientVector};
use crate::error::{Error, Result};
use crate::fock::{coherent_state, joint_probabilities, prepare_state, BeamSplitter, TwoModeState};
use crate::functions::FunctionSpec;
use crate::sampler::{
    apply_loss, estimate_from_exact, estimate_magnitudes, sample_counts, sample_counts_joint,
    CountsTable, MagnitudeEstimate,
};
use crate::scalar::{from_f64, Real};

/// Whether probabilities are estimated from finite shots or taken exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimationMode {
    /// Finite-shot sampling through the seeded generator.
    Sampled,
    /// The shot-free limit: empirical frequencies replaced by exact
    /// probabilities. Error bars are zero.
    Exact,
}

/// How Maclaurin coefficients become state amplitudes.
///
/// The benchmark convention loads the Maclaurin values directly as Fock
/// amplitudes, so the measured magnitudes reproduce the coefficients
/// themselves. `FockConverted` instead multiplies by sqrt(n!) first, which
/// prepares the actual Segal-Bargmann expansion vector of f.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientLoading {
    MaclaurinDirect,
    FockConverted,
}

/// Objective minimized by the phase fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseObjective {
    /// Sum of squared deviations between observed and model probabilities.
    LeastSquares,
    /// Negative binomial log-likelihood of the outcome-(n,0) counts.
    MaxLikelihood,
}

/// Full parameter set for a protocol run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig<T: Real> {
    /// Highest coefficient degree N.
    pub max_degree: usize,
    /// Fock cutoff.
    pub dim: usize,
    /// Shots M for the magnitude stage.
    pub shots_magnitude: u64,
    /// Scan points J per phase fit.
    pub scan_points: usize,
    pub shots_per_point: u64,
    /// Ancilla displacement magnitude r.
    pub displacement_radius: T,
    pub seed: u64,
    /// Magnitude threshold tau below which phases are undefined; `None`
    /// resolves to 1e-3 sqrt(norm_sq) at run time.
    pub magnitude_threshold: Option<T>,
    pub mode: EstimationMode,
    pub loading: CoefficientLoading,
    pub objective: PhaseObjective,
    /// Detector efficiency for the magnitude stage; `None` means ideal.
    pub efficiency: Option<T>,
}

impl<T: Real> ProtocolConfig<T> {
    /// Defaults: r = 0.8, J = 32, 1e5 shots per stage, sampled mode,
    /// direct coefficient loading, least-squares objective, cutoff with
    /// displaced-ancilla headroom.
    pub fn new(max_degree: usize, seed: u64) -> Self {
        let r = from_f64::<T>(0.8);
        Self {
            max_degree,
            dim: (max_degree + 8).max(16),
            shots_magnitude: 100_000,
            scan_points: 32,
            shots_per_point: 100_000,
            displacement_radius: r,
            seed,
            magnitude_threshold: None,
            mode: EstimationMode::Sampled,
            loading: CoefficientLoading::MaclaurinDirect,
            objective: PhaseObjective::LeastSquares,
            efficiency: None,
        }
    }

    /// Cutoff headroom needed once the displaced ancilla is in play:
    /// dim >= N + ceil(4r) + 4.
    pub fn phase_headroom(&self) -> usize {
        let four_r = (from_f64::<T>(4.0) * self.displacement_radius)
            .ceil()
            .to_usize()
            .unwrap_or(usize::MAX);
        self.max_degree + four_r + 4
    }

    /// Checks fields shared by every stage.
    pub fn validate(&self) -> Result<()> {
        if self.dim < self.max_degree + 2 {
            return Err(Error::Config(format!(
                "dim = {} cannot hold degree {} plus a leakage slot",
                self.dim, self.max_degree
            )));
        }
        if self.shots_magnitude == 0 || self.shots_per_point == 0 {
            return Err(Error::Config("shot counts must be at least 1".into()));
        }
        if self.scan_points < 8 {
            return Err(Error::Config(format!(
                "scan_points = {} cannot resolve a phase; need at least 8",
                self.scan_points
            )));
        }
        if !(self.displacement_radius > T::zero()) {
            return Err(Error::Config(format!(
                "displacement radius must be positive, got {}",
                self.displacement_radius
            )));
        }
        if let Some(eta) = self.efficiency {
            if !(eta > T::zero() && eta <= T::one()) {
                return Err(Error::Config(format!(
                    "efficiency must lie in (0, 1], got {eta}"
                )));
            }
        }
        Ok(())
    }

    /// Checks the displaced-ancilla headroom on top of [`Self::validate`].
    pub fn validate_for_phase(&self) -> Result<()> {
        self.validate()?;
        let needed = self.phase_headroom();
        if self.dim < needed {
            return Err(Error::Config(format!(
                "dim = {} lacks displaced-ancilla headroom; need at least {} for N = {} and r = {}",
                self.dim, needed, self.max_degree, self.displacement_radius
            )));
        }
        Ok(())
    }

    /// Resolved threshold: the explicit tau, or 1e-3 sqrt(norm_sq).
    pub fn threshold(&self, norm_sq: T) -> T {
        self.magnitude_threshold
            .unwrap_or_else(|| from_f64::<T>(1e-3) * norm_sq.sqrt())
    }
}

/// Loads the Maclaurin coefficients of f for state preparation under the
/// configured convention; the result is tagged Fock-orthonormal.
pub fn load_coefficients<T: Real>(
    f: &FunctionSpec<T>,
    cfg: &ProtocolConfig<T>,
) -> Result<CoefficientVector<T>> {
    let exact = f.exact_coefficients(cfg.max_degree);
    match cfg.loading {
        CoefficientLoading::MaclaurinDirect => Ok(exact.reinterpreted(Basis::FockOrthonormal)),
        CoefficientLoading::FockConverted => exact.to_basis(Basis::FockOrthonormal),
    }
}

/// Output of the magnitude stage.
#[derive(Debug, Clone)]
pub struct MagnitudeStage<T: Real> {
    /// Estimates for degrees 0..=N.
    pub estimates: Vec<MagnitudeEstimate<T>>,
    /// Squared norm of the loaded coefficient vector.
    pub norm_sq: T,
    /// Raw counts; `None` on the exact path.
    pub counts: Option<CountsTable>,
    /// Resolved magnitude threshold tau.
    pub threshold: T,
    /// The coefficient vector that was loaded (Fock basis).
    pub loaded: CoefficientVector<T>,
}

/// Prepares |f>, measures photon number M times (or takes exact
/// probabilities), and returns magnitude estimates for degrees 0..=N.
pub fn run_magnitude_protocol<T: Real>(
    f: &FunctionSpec<T>,
    cfg: &ProtocolConfig<T>,
) -> Result<MagnitudeStage<T>> {
    cfg.validate()?;
    let loaded = load_coefficients(f, cfg)?;
    let state = prepare_state(&loaded, cfg.dim)?;
    let mut probs = state.probabilities();
    if let Some(eta) = cfg.efficiency {
        probs = apply_loss(&probs, eta)?;
    }
    let norm_sq = loaded.norm_sq();
    let (estimates, counts) = match cfg.mode {
        EstimationMode::Sampled => {
            let mut table = sample_counts(&probs, cfg.shots_magnitude, cfg.seed, 0)?;
            if let Some(eta) = cfg.efficiency {
                table.efficiency = eta.to_f64().unwrap_or(f64::NAN);
            }
            let estimates = estimate_magnitudes(&table, norm_sq)?;
            (estimates, Some(table))
        }
        EstimationMode::Exact => (estimate_from_exact(&probs, norm_sq)?, None),
    };
    Ok(MagnitudeStage {
        estimates: estimates.into_iter().take(cfg.max_degree + 1).collect(),
        norm_sq,
        counts,
        threshold: cfg.threshold(norm_sq),
        loaded,
    })
}

/// Exact joint outcome distribution of the interference circuit: prepare
/// |f> (x) |alpha>, apply the balanced beam splitter, read probabilities.
pub fn interference_distribution<T: Real>(
    f: &FunctionSpec<T>,
    alpha: Complex<T>,
    cfg: &ProtocolConfig<T>,
) -> Result<Array2<T>> {
    cfg.validate()?;
    let loaded = load_coefficients(f, cfg)?;
    let bs = BeamSplitter::new(T::FRAC_PI_4(), cfg.dim);
    interference_from_values(&loaded, alpha, cfg.dim, &bs)
}

/// The same distribution from an explicit Fock-basis coefficient vector,
/// reusing a prebuilt beam splitter.
fn interference_from_values<T: Real>(
    values: &CoefficientVector<T>,
    alpha: Complex<T>,
    dim: usize,
    bs: &BeamSplitter<T>,
) -> Result<Array2<T>> {
    let signal = prepare_state(values, dim)?;
    let ancilla = coherent_state(alpha, dim)?;
    let joint = TwoModeState::product(&signal, &ancilla)?;
    let out = bs.apply(&joint)?;
    joint_probabilities(&out)
}

/// Result of one phase scan.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScanResult<T: Real> {
    /// Target degree.
    pub n: usize,
    /// Displacement magnitude r.
    pub r: T,
    /// Scan angles, uniform and increasing on [0, 2 pi).
    pub thetas: Vec<T>,
    /// Observed outcome-(n, 0) frequencies per angle.
    pub probs_observed: Vec<T>,
    /// Fitted phase in [0, 2 pi), relative to the reference index; `None`
    /// when the magnitude sits below threshold (phase undefined).
    pub phase: Option<T>,
    /// Second fitted phase when a near-degenerate minimum lies within 5%
    /// of the best residual.
    pub alt_phase: Option<T>,
    /// Sum of squared fit residuals at the fitted phase.
    pub residual: T,
    /// Gauge index n0 whose phase is pinned to zero.
    pub reference_index: usize,
}

/// Grid resolution of the coarse phase search.
const PHASE_GRID: usize = 1024;
/// Golden-section refinement stops at this bracket width (radians). The
/// bootstrap amplifies lower-degree phase error by roughly
/// |s_{n-1} a_1| / |s_n a_0| per level for decaying coefficient sequences,
/// so the per-scan floor must sit far below the 1e-3 rad target.
const PHASE_TOL: f64 = 1e-7;

/// Scans the ancilla phase over J uniform angles and fits arg(c_n).
///
/// `known` carries the magnitudes of every degree (phases already fixed for
/// degrees below n, zero elsewhere); the fit's model is the exact simulator
/// run on `known` with the candidate phase substituted at degree n.
pub fn run_phase_scan<T: Real>(
    f: &FunctionSpec<T>,
    n: usize,
    known: &CoefficientVector<T>,
    reference_index: usize,
    cfg: &ProtocolConfig<T>,
) -> Result<PhaseScanResult<T>> {
    cfg.validate_for_phase()?;
    if n > cfg.max_degree {
        return Err(Error::Config(format!(
            "scan degree {n} exceeds max degree {}",
            cfg.max_degree
        )));
    }
    let norm_sq = known.norm_sq();
    let tau = cfg.threshold(norm_sq);
    let magnitude = known.get(n).norm();
    let j_points = cfg.scan_points;
    let two_pi = T::PI() + T::PI();
    let thetas: Vec<T> = (0..j_points)
        .map(|j| two_pi * from_f64::<T>(j as f64) / from_f64::<T>(j_points as f64))
        .collect();

    if magnitude <= tau {
        return Ok(PhaseScanResult {
            n,
            r: cfg.displacement_radius,
            thetas,
            probs_observed: Vec::new(),
            phase: None,
            alt_phase: None,
            residual: T::zero(),
            reference_index,
        });
    }

    let truth = load_coefficients(f, cfg)?;
    let bs = BeamSplitter::new(T::FRAC_PI_4(), cfg.dim);

    // Observation: outcome-(n, 0) frequency at each scan angle, each angle
    // on its own PRNG substream.
    let mut probs_observed = Vec::with_capacity(j_points);
    for (j, &theta) in thetas.iter().enumerate() {
        let alpha = Complex::from_polar(cfg.displacement_radius, theta);
        let dist = interference_from_values(&truth, alpha, cfg.dim, &bs)?;
        let p = match cfg.mode {
            EstimationMode::Exact => dist[[n, 0]],
            EstimationMode::Sampled => {
                let stream = 1 + (n as u64) * (j_points as u64) + j as u64;
                let table =
                    sample_counts_joint(&dist, cfg.shots_per_point, cfg.seed, stream)?;
                from_f64::<T>(table.count_joint(n, 0) as f64)
                    / from_f64::<T>(cfg.shots_per_point as f64)
            }
        };
        probs_observed.push(p);
    }

    // Model: the outcome-(n, 0) amplitude is linear in the candidate phase
    // factor. With W_m the beam-splitter sector-n matrix row for outcome
    // (n, 0), s the normalized known amplitudes, and a_k(theta) the ancilla
    // amplitudes, the amplitude is A(theta) + e^{i phi} B(theta):
    //   A = sum_{m < n} W_m s_m a_{n-m},   B = W_n |s_n| a_0.
    let norm = norm_sq.sqrt();
    let sector = bs.sector(n);
    let mut model_base = Vec::with_capacity(j_points);
    for &theta in &thetas {
        let alpha = Complex::from_polar(cfg.displacement_radius, theta);
        let ancilla = coherent_state(alpha, cfg.dim)?;
        let mut a = Complex::new(T::zero(), T::zero());
        for m in 0..n {
            let s_m = known.get(m) / norm;
            a += sector[[n, m]] * s_m * ancilla.amplitudes()[n - m];
        }
        let b = sector[[n, n]] * Complex::new(magnitude / norm, T::zero())
            * ancilla.amplitudes()[0];
        model_base.push((a, b));
    }

    let model_probs = |phi: T| -> Vec<T> {
        let rot = Complex::from_polar(T::one(), phi);
        model_base
            .iter()
            .map(|&(a, b)| (a + b * rot).norm_sqr())
            .collect()
    };
    let least_squares = |phi: T| -> T {
        model_probs(phi)
            .iter()
            .zip(&probs_observed)
            .map(|(&m, &o)| (o - m) * (o - m))
            .fold(T::zero(), |s, v| s + v)
    };
    let objective = |phi: T| -> T {
        match cfg.objective {
            PhaseObjective::LeastSquares => least_squares(phi),
            PhaseObjective::MaxLikelihood => {
                // Negative binomial log-likelihood of the (n, 0) counts,
                // clamped away from log(0).
                let floor = from_f64::<T>(1e-12);
                let shots = from_f64::<T>(cfg.shots_per_point as f64);
                model_probs(phi)
                    .iter()
                    .zip(&probs_observed)
                    .map(|(&m, &o)| {
                        let p = m.max(floor).min(T::one() - floor);
                        let k = o * shots;
                        -(k * p.ln() + (shots - k) * (T::one() - p).ln())
                    })
                    .fold(T::zero(), |s, v| s + v)
            }
        }
    };

    // Coarse grid, then golden-section refinement of each surviving
    // minimum to 1e-4 rad.
    let grid: Vec<T> = (0..PHASE_GRID)
        .map(|i| two_pi * from_f64::<T>(i as f64) / from_f64::<T>(PHASE_GRID as f64))
        .collect();
    let values: Vec<T> = grid.iter().map(|&phi| objective(phi)).collect();
    let mut minima: Vec<(usize, T)> = (0..PHASE_GRID)
        .filter(|&i| {
            let prev = values[(i + PHASE_GRID - 1) % PHASE_GRID];
            let next = values[(i + 1) % PHASE_GRID];
            values[i] <= prev && values[i] <= next
        })
        .map(|i| (i, values[i]))
        .collect();
    minima.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite objective"));

    let step = two_pi / from_f64::<T>(PHASE_GRID as f64);
    let refine = |i: usize| -> (T, T) {
        let center = grid[i];
        let mut lo = center - step;
        let mut hi = center + step;
        let inv_phi = from_f64::<T>(0.618_033_988_749_894_8);
        let mut x1 = hi - (hi - lo) * inv_phi;
        let mut x2 = lo + (hi - lo) * inv_phi;
        let mut f1 = objective(x1);
        let mut f2 = objective(x2);
        while (hi - lo) > from_f64::<T>(PHASE_TOL) {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - (hi - lo) * inv_phi;
                f1 = objective(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + (hi - lo) * inv_phi;
                f2 = objective(x2);
            }
        }
        let phi = (lo + hi) * from_f64::<T>(0.5);
        let wrapped = ((phi % two_pi) + two_pi) % two_pi;
        (wrapped, objective(phi))
    };

    let (best_idx, _) = minima[0];
    let (phase, best_value) = refine(best_idx);
    // Report a near-degenerate second minimum when its refined objective
    // sits within 5% of the best.
    let alt_phase = minima
        .get(1)
        .map(|&(idx, _)| refine(idx))
        .filter(|&(alt, value)| {
            let rel = (value - best_value).abs()
                <= from_f64::<T>(0.05) * best_value.max(T::epsilon());
            let distinct = {
                let d = (alt - phase).abs();
                d.min(two_pi - d) > from_f64::<T>(10.0 * PHASE_TOL)
            };
            rel && distinct
        })
        .map(|(alt, _)| alt);

    let residual = least_squares(phase);
    Ok(PhaseScanResult {
        n,
        r: cfg.displacement_radius,
        thetas,
        probs_observed,
        phase: Some(phase),
        alt_phase,
        residual,
        reference_index,
    })
}

/// A reconstructed coefficient vector with its bookkeeping.
#[derive(Debug, Clone)]
pub struct Reconstruction<T: Real> {
    /// Reconstructed values |c_n| e^{i phi_n}, gauge arg(c_{n0}) = 0. The
    /// basis tag matches the loading convention (monomial for direct
    /// loading, Fock-orthonormal for converted loading).
    pub coefficients: CoefficientVector<T>,
    /// Degrees whose magnitude sat below tau and were zeroed.
    pub below_threshold: Vec<bool>,
    /// Gauge index n0.
    pub reference_index: usize,
    /// Magnitude stage output.
    pub magnitudes: MagnitudeStage<T>,
    /// One scan per degree above threshold (excluding the reference).
    pub scans: Vec<PhaseScanResult<T>>,
    /// Wall-clock spent in each stage; in-memory diagnostics only, never
    /// serialized into reports.
    pub magnitude_elapsed: Duration,
    pub phase_elapsed: Duration,
}

impl<T: Real> Reconstruction<T> {
    /// JSON report: config echo lives with the caller; this carries the
    /// estimates, phases, threshold bookkeeping, and gauge. Timings are
    /// deliberately excluded so reports are byte-stable across reruns.
    pub fn to_json(&self) -> serde_json::Value {
        let mags: Vec<serde_json::Value> = self
            .magnitudes
            .estimates
            .iter()
            .map(|e| {
                json!({
                    "n": e.n,
                    "abs": e.abs_c.to_f64().unwrap_or(f64::NAN),
                    "stderr": e.stderr.to_f64().unwrap_or(f64::NAN),
                })
            })
            .collect();
        let scans: Vec<serde_json::Value> = self
            .scans
            .iter()
            .map(|s| {
                json!({
                    "n": s.n,
                    "phase": s.phase.map(|p| p.to_f64().unwrap_or(f64::NAN)),
                    "alt_phase": s.alt_phase.map(|p| p.to_f64().unwrap_or(f64::NAN)),
                    "residual": s.residual.to_f64().unwrap_or(f64::NAN),
                })
            })
            .collect();
        json!({
            "norm_sq": self.magnitudes.norm_sq.to_f64().unwrap_or(f64::NAN),
            "threshold": self.magnitudes.threshold.to_f64().unwrap_or(f64::NAN),
            "reference_index": self.reference_index,
            "magnitudes": mags,
            "scans": scans,
            "below_threshold": self.below_threshold,
            "coefficients": self
                .coefficients
                .values()
                .iter()
                .map(|c| [c.re.to_f64().unwrap_or(f64::NAN), c.im.to_f64().unwrap_or(f64::NAN)])
                .collect::<Vec<_>>(),
        })
    }
}

/// Assembles c_n = |c_n| e^{i phi_n} from magnitude estimates and phase
/// scans: gauge arg(c_{n0}) = 0 at the lowest above-threshold index,
/// sub-threshold entries exactly zero.
pub fn reconstruct_coefficients<T: Real>(
    mags: &[MagnitudeEstimate<T>],
    phases: &[PhaseScanResult<T>],
    tau: T,
    basis: Basis,
) -> Result<(CoefficientVector<T>, Vec<bool>, usize)> {
    if mags.is_empty() {
        return Err(Error::EmptyCoefficients);
    }
    let reference_index = mags
        .iter()
        .position(|e| e.abs_c > tau)
        .ok_or(Error::ZeroNorm("reconstruction: every magnitude sits below threshold"))?;
    let mut values = Vec::with_capacity(mags.len());
    let mut below = Vec::with_capacity(mags.len());
    for est in mags {
        if est.abs_c <= tau {
            values.push(Complex::new(T::zero(), T::zero()));
            below.push(true);
            continue;
        }
        below.push(false);
        if est.n == reference_index {
            values.push(Complex::new(est.abs_c, T::zero()));
            continue;
        }
        let scan = phases
            .iter()
            .find(|s| s.n == est.n)
            .ok_or(Error::MissingPhase { n: est.n })?;
        let phi = scan.phase.ok_or(Error::MissingPhase { n: est.n })?;
        values.push(Complex::from_polar(est.abs_c, phi));
    }
    Ok((
        CoefficientVector::new(values, basis)?,
        below,
        reference_index,
    ))
}

/// Runs the whole pipeline: magnitude stage, sequential phase bootstrap
/// from the gauge index upward, reconstruction.
pub fn run_reconstruction<T: Real>(
    f: &FunctionSpec<T>,
    cfg: &ProtocolConfig<T>,
) -> Result<Reconstruction<T>> {
    cfg.validate_for_phase()?;
    let t0 = Instant::now();
    let magnitudes = run_magnitude_protocol(f, cfg)?;
    let magnitude_elapsed = t0.elapsed();
    let tau = magnitudes.threshold;

    let reference_index = magnitudes
        .estimates
        .iter()
        .position(|e| e.abs_c > tau)
        .ok_or(Error::ZeroNorm("reconstruction: every magnitude sits below threshold"))?;

    // Sequential bootstrap: the working vector carries fitted phases below
    // the current degree and zero phases above it.
    let t1 = Instant::now();
    let mut working: Vec<Complex<T>> = magnitudes
        .estimates
        .iter()
        .map(|e| {
            if e.abs_c > tau {
                Complex::new(e.abs_c, T::zero())
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
        .collect();
    let mut scans = Vec::new();
    for n in (reference_index + 1)..=cfg.max_degree {
        if magnitudes.estimates[n].abs_c <= tau {
            continue;
        }
        let known = CoefficientVector::new(working.clone(), Basis::FockOrthonormal)?;
        let scan = run_phase_scan(f, n, &known, reference_index, cfg)?;
        if let Some(phi) = scan.phase {
            working[n] = Complex::from_polar(magnitudes.estimates[n].abs_c, phi);
        }
        scans.push(scan);
    }
    let phase_elapsed = t1.elapsed();

    let basis = match cfg.loading {
        CoefficientLoading::MaclaurinDirect => Basis::Monomial,
        CoefficientLoading::FockConverted => Basis::FockOrthonormal,
    };
    let (coefficients, below_threshold, reference_check) =
        reconstruct_coefficients(&magnitudes.estimates, &scans, tau, basis)?;
    debug_assert_eq!(reference_check, reference_index);
    Ok(Reconstruction {
        coefficients,
        below_threshold,
        reference_index,
        magnitudes,
        scans,
        magnitude_elapsed,
        phase_elapsed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::fidelity;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use num_complex::Complex64;

    type F = FunctionSpec<f64>;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn exact_cfg(max_degree: usize) -> ProtocolConfig<f64> {
        let mut cfg = ProtocolConfig::new(max_degree, 0);
        cfg.mode = EstimationMode::Exact;
        cfg
    }

    /// Circular distance between two angles.
    fn circ(a: f64, b: f64) -> f64 {
        let two_pi = std::f64::consts::TAU;
        let d = (a - b).rem_euclid(two_pi);
        d.min(two_pi - d)
    }

    #[test]
    fn config_validation_covers_the_documented_invariants() {
        let mut cfg = ProtocolConfig::<f64>::new(6, 0);
        assert!(cfg.validate().is_ok());
        assert!(cfg.validate_for_phase().is_ok());
        // N = 6, r = 0.8: headroom is 6 + 4 + 4 = 14.
        assert_eq!(cfg.phase_headroom(), 14);
        cfg.dim = 13;
        assert!(cfg.validate_for_phase().is_err());
        assert!(cfg.validate().is_ok());
        cfg.dim = 7;
        assert!(cfg.validate().is_err());

        let mut cfg = ProtocolConfig::<f64>::new(4, 0);
        cfg.scan_points = 4;
        assert!(cfg.validate().is_err());
        let mut cfg = ProtocolConfig::<f64>::new(4, 0);
        cfg.displacement_radius = -0.5;
        assert!(cfg.validate().is_err());
        let mut cfg = ProtocolConfig::<f64>::new(4, 0);
        cfg.efficiency = Some(1.5);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn exact_magnitude_stage_reproduces_loaded_magnitudes() {
        // Shot-free limit: |c_n| = sqrt(norm_sq p_n) recovers the loaded
        // magnitudes to machine precision for every builtin.
        for f in [F::Exp, F::ExpI, F::Sin, F::Cos] {
            let cfg = exact_cfg(6);
            let stage = run_magnitude_protocol(&f, &cfg).unwrap();
            let exact = f.exact_coefficients(6);
            for n in 0..=6 {
                assert_abs_diff_eq!(
                    stage.estimates[n].abs_c,
                    exact.get(n).norm(),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn sampled_magnitude_stage_on_a_constant_is_exact() {
        let f = F::series(vec![c(1.0, 0.0)]).unwrap();
        let mut cfg = ProtocolConfig::new(0, 5);
        cfg.shots_magnitude = 1000;
        let stage = run_magnitude_protocol(&f, &cfg).unwrap();
        assert_eq!(stage.estimates[0].abs_c, 1.0);
        assert_eq!(stage.estimates.len(), 1);
        let counts = stage.counts.unwrap();
        assert_eq!(counts.count(0), 1000);
    }

    #[test]
    fn sampled_cos_benchmark_lands_near_truth() {
        let mut cfg = ProtocolConfig::new(10, 7);
        cfg.dim = 16;
        let stage = run_magnitude_protocol(&F::Cos, &cfg).unwrap();
        assert!(stage.estimates[0].abs_c > 0.99 && stage.estimates[0].abs_c < 1.01);
        assert!((stage.estimates[2].abs_c - 0.5).abs() < 0.01);
        // Odd degrees carry zero probability, so their estimates are
        // exactly zero for every seed.
        for n in [1, 3, 5, 7, 9] {
            assert_eq!(stage.estimates[n].abs_c, 0.0);
        }
        assert_relative_eq!(stage.norm_sq, 1.2517380407386515, max_relative = 1e-12);
    }

    #[test]
    fn coherent_magnitudes_match_closed_form_within_three_sigma() {
        let alpha = c(0.5, 0.0);
        let f = F::coherent(alpha).unwrap();
        let mut cfg = ProtocolConfig::new(6, 11);
        cfg.loading = CoefficientLoading::FockConverted;
        let stage = run_magnitude_protocol(&f, &cfg).unwrap();
        // Fock amplitudes of |alpha>: e^{-1/8} 0.5^n / sqrt(n!).
        let mut fact = 1.0f64;
        for n in 0..=6 {
            if n > 0 {
                fact *= n as f64;
            }
            let truth = (-0.125f64).exp() * 0.5f64.powi(n as i32) / fact.sqrt();
            let est = &stage.estimates[n];
            let band = 3.0 * est.stderr;
            assert!(
                (est.abs_c - truth).abs() <= band,
                "n = {n}: {} vs {truth} exceeds 3 sigma = {band}",
                est.abs_c
            );
        }
    }

    #[test]
    fn interference_distribution_examples() {
        let constant = F::series(vec![c(1.0, 0.0)]).unwrap();
        let cfg = exact_cfg(0);
        let dist = interference_distribution(&constant, c(0.0, 0.0), &cfg).unwrap();
        assert_abs_diff_eq!(dist[[0, 0]], 1.0, epsilon = 1e-12);

        let single = F::series(vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let cfg = exact_cfg(1);
        let dist = interference_distribution(&single, c(0.0, 0.0), &cfg).unwrap();
        assert_abs_diff_eq!(dist[[1, 0]], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(dist[[0, 1]], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn interference_preserves_the_total_photon_marginal() {
        let cfg = exact_cfg(4);
        let loaded = load_coefficients(&F::Cos, &cfg).unwrap();
        let alpha = Complex64::from_polar(0.8, 1.1);
        let signal = prepare_state(&loaded, cfg.dim).unwrap();
        let ancilla = coherent_state(alpha, cfg.dim).unwrap();
        let joint = TwoModeState::product(&signal, &ancilla).unwrap();
        let before = joint.total_photon_marginal();
        let bs = BeamSplitter::new(std::f64::consts::FRAC_PI_4, cfg.dim);
        let after = bs.apply(&joint).unwrap().total_photon_marginal();
        for (x, y) in before.iter().zip(&after) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_phase_scan_recovers_known_progressions() {
        // e^{iz}: arg(c_n) - arg(c_0) = n pi / 2.
        let recon = run_reconstruction(&F::ExpI, &exact_cfg(3)).unwrap();
        assert_eq!(recon.reference_index, 0);
        for scan in &recon.scans {
            let expect = (scan.n as f64) * std::f64::consts::FRAC_PI_2;
            let got = scan.phase.unwrap();
            assert!(
                circ(got, expect) < 1e-3,
                "degree {}: {got} vs {expect}",
                scan.n
            );
        }

        // Coherent 0.5 e^{i pi/3}: arg(c_n) - arg(c_0) = n pi / 3.
        let alpha = Complex64::from_polar(0.5, std::f64::consts::FRAC_PI_3);
        let f = F::coherent(alpha).unwrap();
        let mut cfg = exact_cfg(3);
        cfg.loading = CoefficientLoading::FockConverted;
        let recon = run_reconstruction(&f, &cfg).unwrap();
        for scan in &recon.scans {
            let expect = (scan.n as f64) * std::f64::consts::FRAC_PI_3;
            assert!(circ(scan.phase.unwrap(), expect) < 1e-3);
        }
    }

    #[test]
    fn exact_reconstruction_matches_oracles_for_all_builtins() {
        // Noise-free pipeline: magnitudes to 1e-12, relative phases to
        // 1e-3 rad, N <= 6, r = 0.8. The default threshold is a shot-noise
        // heuristic; the exact path has no noise, so tau is pinned low
        // enough that every nonzero magnitude survives (exp's smallest is
        // 1/720).
        for f in [F::Exp, F::ExpI, F::Sin, F::Cos] {
            let mut cfg = exact_cfg(6);
            cfg.magnitude_threshold = Some(1e-9);
            let recon = run_reconstruction(&f, &cfg).unwrap();
            let exact = f.exact_coefficients(6);
            let n0 = recon.reference_index;
            let gauge = exact.get(n0);
            for n in 0..=6 {
                let got = recon.coefficients.get(n);
                let truth = exact.get(n);
                assert_abs_diff_eq!(got.norm(), truth.norm(), epsilon = 1e-12);
                if !recon.below_threshold[n] && n != n0 {
                    let expect_rel = (truth / gauge).arg().rem_euclid(std::f64::consts::TAU);
                    let got_rel = got.arg().rem_euclid(std::f64::consts::TAU);
                    assert!(
                        circ(got_rel, expect_rel) < 1e-3,
                        "{} degree {n}: got {got_rel}, expected {expect_rel}",
                        f.label()
                    );
                }
            }
        }
    }

    #[test]
    fn sin_gauge_lands_on_degree_one() {
        let recon = run_reconstruction(&F::Sin, &exact_cfg(6)).unwrap();
        assert_eq!(recon.reference_index, 1);
        assert!(recon.below_threshold[0]);
        assert_eq!(recon.coefficients.get(0), c(0.0, 0.0));
        // Even degrees are zeroed, odd degrees survive.
        for n in [2usize, 4, 6] {
            assert!(recon.below_threshold[n]);
        }
        for n in [3usize, 5] {
            assert!(!recon.below_threshold[n]);
        }
    }

    #[test]
    fn phase_gauge_invariance_under_global_rotation() {
        // Multiplying all coefficients by e^{i gamma} must not move any
        // relative phase on the exact path.
        let base = vec![c(0.9, 0.0), c(0.3, 0.4), c(-0.2, 0.25), c(0.1, -0.15)];
        let gamma = Complex64::from_polar(1.0, 0.9);
        let rotated: Vec<Complex64> = base.iter().map(|&v| v * gamma).collect();
        let f_base = F::series(base).unwrap();
        let f_rot = F::series(rotated).unwrap();
        let cfg = exact_cfg(3);
        let a = run_reconstruction(&f_base, &cfg).unwrap();
        let b = run_reconstruction(&f_rot, &cfg).unwrap();
        assert_eq!(a.reference_index, b.reference_index);
        for (sa, sb) in a.scans.iter().zip(&b.scans) {
            assert!(circ(sa.phase.unwrap(), sb.phase.unwrap()) < 1e-6);
        }
    }

    #[test]
    fn sampled_pipeline_is_deterministic_and_seed_sensitive() {
        let mut cfg = ProtocolConfig::new(2, 9);
        cfg.shots_magnitude = 20_000;
        cfg.shots_per_point = 5_000;
        let a = run_reconstruction(&F::ExpI, &cfg).unwrap();
        let b = run_reconstruction(&F::ExpI, &cfg).unwrap();
        assert_eq!(a.coefficients.values(), b.coefficients.values());
        assert_eq!(
            a.magnitudes.counts.as_ref().unwrap().counts(),
            b.magnitudes.counts.as_ref().unwrap().counts()
        );
        cfg.seed = 10;
        let c = run_reconstruction(&F::ExpI, &cfg).unwrap();
        assert_ne!(a.coefficients.values(), c.coefficients.values());
    }

    #[test]
    fn magnitude_estimates_stay_in_band_across_fifty_seeds() {
        let mut covered = 0;
        for seed in 0..50u64 {
            let mut cfg = ProtocolConfig::new(10, seed);
            cfg.dim = 16;
            let stage = run_magnitude_protocol(&F::Cos, &cfg).unwrap();
            let est = &stage.estimates[0];
            if (est.abs_c - 1.0).abs() <= 3.0 * est.stderr {
                covered += 1;
            }
        }
        assert!(covered >= 47, "coverage {covered}/50");
    }

    #[test]
    fn reconstruct_coefficients_handles_trivial_and_error_cases() {
        let mags = vec![
            MagnitudeEstimate { n: 0, abs_c: 1.0, stderr: 0.0 },
            MagnitudeEstimate { n: 1, abs_c: 0.0, stderr: 0.0 },
            MagnitudeEstimate { n: 2, abs_c: 0.0, stderr: 0.0 },
        ];
        let (values, below, n0) =
            reconstruct_coefficients(&mags, &[], 1e-3, Basis::Monomial).unwrap();
        assert_eq!(values.get(0), c(1.0, 0.0));
        assert_eq!(values.get(1), c(0.0, 0.0));
        assert_eq!(below, vec![false, true, true]);
        assert_eq!(n0, 0);

        // An above-threshold degree with no scan is an error.
        let mags = vec![
            MagnitudeEstimate { n: 0, abs_c: 1.0, stderr: 0.0 },
            MagnitudeEstimate { n: 1, abs_c: 0.5, stderr: 0.0 },
        ];
        assert!(matches!(
            reconstruct_coefficients(&mags, &[], 1e-3, Basis::Monomial),
            Err(Error::MissingPhase { n: 1 })
        ));
    }

    #[test]
    fn below_threshold_scan_is_flagged_not_fatal() {
        let cfg = exact_cfg(4);
        let loaded = load_coefficients(&F::Sin, &cfg).unwrap();
        // Degree 0 of sin has zero magnitude, far below any tau.
        let scan = run_phase_scan(&F::Sin, 0, &loaded, 1, &cfg).unwrap();
        assert_eq!(scan.phase, None);
        assert!(scan.probs_observed.is_empty());
    }

    #[test]
    fn sampled_phase_scan_recovers_coarse_phase() {
        // Degree 1 of e^{iz} has a pi/2 phase; a sampled scan at finite
        // shot counts must land within 0.05 rad.
        let mut cfg = ProtocolConfig::new(1, 3);
        cfg.shots_per_point = 100_000;
        let recon = run_reconstruction(&F::ExpI, &cfg).unwrap();
        let scan = &recon.scans[0];
        assert!(circ(scan.phase.unwrap(), std::f64::consts::FRAC_PI_2) < 0.05);
        assert_eq!(scan.thetas.len(), 32);
        assert_eq!(scan.probs_observed.len(), 32);
    }

    #[test]
    fn full_sampled_reconstruction_has_high_fidelity() {
        let alpha = Complex64::from_polar(0.5, std::f64::consts::FRAC_PI_3);
        let f = F::coherent(alpha).unwrap();
        let mut cfg = ProtocolConfig::new(3, 1);
        cfg.loading = CoefficientLoading::FockConverted;
        let recon = run_reconstruction(&f, &cfg).unwrap();
        let exact = f
            .exact_coefficients(3)
            .to_basis(Basis::FockOrthonormal)
            .unwrap();
        let fid = fidelity(&recon.coefficients, &exact).unwrap();
        assert!(fid >= 0.995, "fidelity {fid}");
    }

    #[test]
    fn report_json_has_no_timing_fields() {
        let recon = run_reconstruction(&F::ExpI, &exact_cfg(2)).unwrap();
        let report = recon.to_json();
        let text = report.to_string();
        assert!(!text.contains("elapsed"));
        assert!(!text.contains("wall"));
        assert_eq!(report["reference_index"], 0);
        assert_eq!(report["magnitudes"].as_array().unwrap().len(), 3);
    }
}

//! Finite-shot measurement records from exact outcome probabilities:
//! seeded, platform-independent sampling, an optional detector-efficiency
//! smear, and magnitude estimates with binomial error bars.
//!
//! Reproducibility contract: one ChaCha8 generator per (seed, stream) pair;
//! identical (probs, shots, seed, stream) give identical counts on every
//! platform. Callers split independent sampling stages onto distinct
//! streams.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::scalar::{binomial, from_f64, Real};

/// Probability-sum slack accepted before renormalizing.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// Outcome space of a counts table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountsShape {
    /// Outcomes are photon numbers n of one mode.
    Single,
    /// Outcomes are pairs (n, k) on a dim x dim grid, flattened row-major.
    Joint { dim: usize },
}

/// Measurement record of `shots` draws.
#[derive(Debug, Clone, PartialEq)]
pub struct CountsTable {
    counts: Vec<u64>,
    shape: CountsShape,
    pub shots: u64,
    pub seed: u64,
    pub stream: u64,
    /// Detector efficiency the sampled distribution was smeared with; 1
    /// means ideal detection.
    pub efficiency: f64,
}

impl CountsTable {
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn shape(&self) -> CountsShape {
        self.shape
    }

    /// Count for single outcome n.
    pub fn count(&self, n: usize) -> u64 {
        self.counts.get(n).copied().unwrap_or(0)
    }

    /// Count for joint outcome (n, k).
    pub fn count_joint(&self, n: usize, k: usize) -> u64 {
        match self.shape {
            CountsShape::Joint { dim } if n < dim && k < dim => self.counts[n * dim + k],
            _ => 0,
        }
    }

    /// CSV rows `outcome,count`; joint outcomes are written `n:k`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("outcome,count\n");
        match self.shape {
            CountsShape::Single => {
                for (n, c) in self.counts.iter().enumerate() {
                    out.push_str(&format!("{n},{c}\n"));
                }
            }
            CountsShape::Joint { dim } => {
                for n in 0..dim {
                    for k in 0..dim {
                        out.push_str(&format!("{n}:{k},{}\n", self.counts[n * dim + k]));
                    }
                }
            }
        }
        out
    }

    /// JSON record including the sampling metadata.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "counts": self.counts,
            "shape": match self.shape {
                CountsShape::Single => json!("single"),
                CountsShape::Joint { dim } => json!({"joint": dim}),
            },
            "shots": self.shots,
            "seed": self.seed,
            "stream": self.stream,
            "efficiency": self.efficiency,
        })
    }
}

/// The deterministic generator for one (seed, stream) pair.
pub fn rng_for_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Validates and normalizes a probability vector for sampling.
fn checked_cumulative<T: Real>(probs: &[T]) -> Result<Vec<f64>> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty probability vector".into()));
    }
    let mut total = 0.0f64;
    let mut cumulative = Vec::with_capacity(probs.len());
    for (i, &p) in probs.iter().enumerate() {
        let p = p.to_f64().unwrap_or(f64::NAN);
        if !(p >= 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "probability at outcome {i} is {p}"
            )));
        }
        total += p;
        cumulative.push(total);
    }
    if (total - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {total}, not 1 within {PROB_SUM_TOL}"
        )));
    }
    for c in &mut cumulative {
        *c /= total;
    }
    Ok(cumulative)
}

fn draw_counts(cumulative: &[f64], probs_len: usize, shots: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    // The last outcome with nonzero width absorbs draws that rounding
    // pushes past the final cumulative value.
    let last_positive = (0..probs_len)
        .rev()
        .find(|&i| cumulative[i] > if i == 0 { 0.0 } else { cumulative[i - 1] })
        .unwrap_or(0);
    let mut counts = vec![0u64; probs_len];
    for _ in 0..shots {
        let u: f64 = rng.gen();
        // First index whose cumulative edge exceeds u; ties collapse onto
        // the first of a run of equal edges, so zero-width outcomes are
        // never selected.
        let outcome = cumulative.partition_point(|&edge| edge <= u);
        counts[outcome.min(last_positive)] += 1;
    }
    counts
}

/// Draws `shots` single-mode outcomes by inverse-CDF walk.
pub fn sample_counts<T: Real>(
    probs: &[T],
    shots: u64,
    seed: u64,
    stream: u64,
) -> Result<CountsTable> {
    if shots == 0 {
        return Err(Error::Config("shots must be at least 1".into()));
    }
    let cumulative = checked_cumulative(probs)?;
    let mut rng = rng_for_stream(seed, stream);
    let counts = draw_counts(&cumulative, probs.len(), shots, &mut rng);
    Ok(CountsTable {
        counts,
        shape: CountsShape::Single,
        shots,
        seed,
        stream,
        efficiency: 1.0,
    })
}

/// Draws `shots` joint outcomes (n, k) from a dim x dim probability grid.
pub fn sample_counts_joint<T: Real>(
    probs: &Array2<T>,
    shots: u64,
    seed: u64,
    stream: u64,
) -> Result<CountsTable> {
    if shots == 0 {
        return Err(Error::Config("shots must be at least 1".into()));
    }
    if probs.nrows() != probs.ncols() {
        return Err(Error::InvalidDistribution(format!(
            "joint grid must be square, got {}x{}",
            probs.nrows(),
            probs.ncols()
        )));
    }
    let dim = probs.nrows();
    let flat: Vec<T> = probs.iter().copied().collect();
    let cumulative = checked_cumulative(&flat)?;
    let mut rng = rng_for_stream(seed, stream);
    let counts = draw_counts(&cumulative, flat.len(), shots, &mut rng);
    Ok(CountsTable {
        counts,
        shape: CountsShape::Joint { dim },
        shots,
        seed,
        stream,
        efficiency: 1.0,
    })
}

/// Binomial thinning by detector efficiency eta:
/// q_k = sum_{n>=k} p_n C(n,k) eta^k (1-eta)^{n-k}.
pub fn apply_loss<T: Real>(probs: &[T], eta: T) -> Result<Vec<T>> {
    if !(eta > T::zero() && eta <= T::one()) {
        return Err(Error::Config(format!(
            "efficiency must lie in (0, 1], got {eta}"
        )));
    }
    let loss = T::one() - eta;
    let mut out = vec![T::zero(); probs.len()];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (n, &p) in probs.iter().enumerate().skip(k) {
            let kept = eta.powi(k as i32) * loss.powi((n - k) as i32);
            acc += p * binomial::<T>(n, k) * kept;
        }
        *slot = acc;
    }
    Ok(out)
}

/// One magnitude with its shot-noise error bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnitudeEstimate<T: Real> {
    pub n: usize,
    /// sqrt(norm_sq * p_hat_n).
    pub abs_c: T,
    /// Binomial noise propagated through the square root; the one-sided
    /// rule-of-three bound sqrt(3 norm_sq / M) when no counts landed on n.
    pub stderr: T,
}

/// Converts a single-mode counts table into magnitude estimates,
/// |c_n| = sqrt(norm_sq * counts_n / shots).
pub fn estimate_magnitudes<T: Real>(
    table: &CountsTable,
    norm_sq: T,
) -> Result<Vec<MagnitudeEstimate<T>>> {
    if table.shape != CountsShape::Single {
        return Err(Error::Config(
            "magnitude estimation needs single-mode counts".into(),
        ));
    }
    if !(norm_sq > T::zero()) {
        return Err(Error::ZeroNorm("magnitude estimation"));
    }
    let shots = from_f64::<T>(table.shots as f64);
    let half = from_f64::<T>(0.5);
    Ok(table
        .counts
        .iter()
        .enumerate()
        .map(|(n, &count)| {
            let p_hat = from_f64::<T>(count as f64) / shots;
            let abs_c = (norm_sq * p_hat).sqrt();
            let stderr = if count > 0 {
                norm_sq.sqrt() * (p_hat * (T::one() - p_hat) / shots).sqrt() * half / p_hat.sqrt()
            } else {
                (norm_sq * from_f64::<T>(3.0) / shots).sqrt()
            };
            MagnitudeEstimate { n, abs_c, stderr }
        })
        .collect())
}

/// The shot-free limit: magnitudes straight from exact probabilities, zero
/// error bars.
pub fn estimate_from_exact<T: Real>(probs: &[T], norm_sq: T) -> Result<Vec<MagnitudeEstimate<T>>> {
    if !(norm_sq > T::zero()) {
        return Err(Error::ZeroNorm("magnitude estimation"));
    }
    Ok(probs
        .iter()
        .enumerate()
        .map(|(n, &p)| MagnitudeEstimate {
            n,
            abs_c: (norm_sq * p).sqrt(),
            stderr: T::zero(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::Basis;
    use crate::fock::{coherent_state, prepare_state};
    use crate::functions::FunctionSpec;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use num_complex::Complex64;

    #[test]
    fn deterministic_for_fixed_seed_and_stream() {
        let probs = [0.2f64, 0.5, 0.3];
        let a = sample_counts(&probs, 10_000, 7, 0).unwrap();
        let b = sample_counts(&probs, 10_000, 7, 0).unwrap();
        assert_eq!(a, b);
        let c = sample_counts(&probs, 10_000, 7, 1).unwrap();
        assert_ne!(a.counts(), c.counts());
        let d = sample_counts(&probs, 10_000, 8, 0).unwrap();
        assert_ne!(a.counts(), d.counts());
        assert_eq!(a.counts().iter().sum::<u64>(), 10_000);
    }

    #[test]
    fn point_mass_sends_every_shot_to_one_outcome() {
        let table = sample_counts(&[1.0f64, 0.0, 0.0], 100, 3, 0).unwrap();
        assert_eq!(table.counts(), &[100, 0, 0]);
        // Zero-probability outcomes never receive counts even when the
        // point mass sits between them.
        let table = sample_counts(&[0.0f64, 1.0, 0.0], 100, 3, 0).unwrap();
        assert_eq!(table.counts(), &[0, 100, 0]);
    }

    #[test]
    fn invalid_distributions_are_rejected() {
        assert!(sample_counts(&[0.5f64, -0.1, 0.6], 10, 0, 0).is_err());
        assert!(sample_counts(&[0.4f64, 0.4], 10, 0, 0).is_err());
        assert!(sample_counts::<f64>(&[], 10, 0, 0).is_err());
        assert!(sample_counts(&[1.0f64], 0, 0, 0).is_err());
    }

    #[test]
    fn coherent_counts_pass_chi_square_against_poisson() {
        // |alpha|^2 = 1 gives Poisson(1) photon statistics; chi-square with
        // bins pooled to expected count >= 5, significance 0.001.
        let state = coherent_state(Complex64::new(1.0, 0.0), 16).unwrap();
        let probs = state.probabilities();
        let shots = 100_000u64;
        let table = sample_counts(&probs, shots, 42, 0).unwrap();

        let mut expected = Vec::new();
        let mut term = (-1.0f64).exp() * shots as f64;
        for n in 0..16 {
            if n > 0 {
                term /= n as f64;
            }
            expected.push(term);
        }
        let mut chi2 = 0.0;
        let mut pooled_obs = 0.0;
        let mut pooled_exp = 0.0;
        let mut bins = 0usize;
        for (n, &exp_n) in expected.iter().enumerate() {
            if exp_n >= 5.0 {
                chi2 += (table.count(n) as f64 - exp_n).powi(2) / exp_n;
                bins += 1;
            } else {
                pooled_obs += table.count(n) as f64;
                pooled_exp += exp_n;
            }
        }
        chi2 += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        bins += 1;
        // Frozen chi-square 0.999 quantiles for df = 4..=11.
        let criticals = [18.467, 20.515, 22.458, 24.322, 26.124, 27.877, 29.588, 31.264];
        let df = bins - 1;
        assert!((4..=11).contains(&df), "unexpected df {df}");
        let critical = criticals[df - 4];
        assert!(
            chi2 < critical,
            "chi-square {chi2} exceeds the 0.999 critical value {critical} at {df} df"
        );
    }

    #[test]
    fn joint_sampling_matches_grid_layout() {
        let mut grid = Array2::<f64>::zeros((3, 3));
        grid[[1, 2]] = 0.75;
        grid[[2, 0]] = 0.25;
        let table = sample_counts_joint(&grid, 4_000, 11, 5).unwrap();
        assert_eq!(table.shape(), CountsShape::Joint { dim: 3 });
        assert_eq!(
            table.count_joint(1, 2) + table.count_joint(2, 0),
            4_000
        );
        assert!(table.count_joint(1, 2) > 2_400);
        let csv = table.to_csv();
        assert!(csv.starts_with("outcome,count\n0:0,"));
        assert_eq!(csv.lines().count(), 10);
    }

    #[test]
    fn loss_examples_and_conservation() {
        let identity = apply_loss(&[0.1f64, 0.2, 0.3, 0.4], 1.0).unwrap();
        assert_eq!(identity, vec![0.1, 0.2, 0.3, 0.4]);

        let one_photon = apply_loss(&[0.0f64, 1.0], 0.5).unwrap();
        assert_abs_diff_eq!(one_photon[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(one_photon[1], 0.5, epsilon = 1e-15);

        let two_photon = apply_loss(&[0.0f64, 0.0, 1.0], 0.5).unwrap();
        assert_abs_diff_eq!(two_photon[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(two_photon[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(two_photon[2], 0.25, epsilon = 1e-15);

        let probs = [0.05f64, 0.25, 0.35, 0.2, 0.15];
        let eta = 0.73;
        let smeared = apply_loss(&probs, eta).unwrap();
        let total: f64 = smeared.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        let mean = |p: &[f64]| p.iter().enumerate().map(|(n, &v)| n as f64 * v).sum::<f64>();
        assert_relative_eq!(mean(&smeared), eta * mean(&probs), max_relative = 1e-12);

        assert!(apply_loss(&probs, 0.0).is_err());
        assert!(apply_loss(&probs, 1.1).is_err());
    }

    #[test]
    fn magnitude_estimates_follow_the_square_root_law() {
        let table = sample_counts(&[1.0f64, 0.0, 0.0], 400, 0, 0).unwrap();
        let estimates = estimate_magnitudes(&table, 1.0).unwrap();
        assert_eq!(estimates[0].abs_c, 1.0);
        assert_eq!(estimates[1].abs_c, 0.0);
        // Rule-of-three bound for unobserved outcomes.
        assert_relative_eq!(
            estimates[1].stderr,
            (3.0f64 / 400.0).sqrt(),
            max_relative = 1e-14
        );

        // abs_c^2 recovers norm_sq * p_hat exactly.
        let probs = [0.7f64, 0.3];
        let table = sample_counts(&probs, 10_000, 5, 0).unwrap();
        let norm_sq = 2.5f64;
        let estimates = estimate_magnitudes(&table, norm_sq).unwrap();
        for est in &estimates {
            let p_hat = table.count(est.n) as f64 / 10_000.0;
            assert_relative_eq!(est.abs_c * est.abs_c, norm_sq * p_hat, max_relative = 1e-12);
            if p_hat > 0.0 {
                let expect = norm_sq.sqrt() * (p_hat * (1.0 - p_hat) / 10_000.0).sqrt()
                    / (2.0 * p_hat.sqrt());
                assert_relative_eq!(est.stderr, expect, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn exact_path_reproduces_magnitudes_to_machine_precision() {
        let cos = FunctionSpec::<f64>::Cos.exact_coefficients(10);
        let fockified = cos.reinterpreted(Basis::FockOrthonormal);
        let state = prepare_state(&fockified, 16).unwrap();
        let norm_sq = fockified.norm_sq();
        let estimates = estimate_from_exact(&state.probabilities(), norm_sq).unwrap();
        for (n, est) in estimates.iter().enumerate().take(11) {
            let truth = cos.get(n).norm();
            assert_abs_diff_eq!(est.abs_c, truth, epsilon = 1e-12);
            assert_eq!(est.stderr, 0.0);
        }
    }

    #[test]
    fn three_sigma_coverage_over_two_hundred_seeds() {
        // Cos loaded directly: p_0 = 1/norm_sq, true |c_0| = 1. The 3 sigma
        // band must cover the truth in at least 98% of seeds.
        let cos = FunctionSpec::<f64>::Cos.exact_coefficients(10);
        let fockified = cos.reinterpreted(Basis::FockOrthonormal);
        let state = prepare_state(&fockified, 16).unwrap();
        let probs = state.probabilities();
        let norm_sq = fockified.norm_sq();
        let mut covered = 0;
        for seed in 0..200u64 {
            let table = sample_counts(&probs, 100_000, seed, 0).unwrap();
            let estimates = estimate_magnitudes(&table, norm_sq).unwrap();
            let est = &estimates[0];
            if (est.abs_c - 1.0).abs() <= 3.0 * est.stderr {
                covered += 1;
            }
        }
        assert!(covered >= 196, "3 sigma coverage {covered}/200 below 98%");
    }

    #[test]
    fn csv_and_json_match_documented_schema() {
        let table = sample_counts(&[0.5f64, 0.5], 10, 1, 2).unwrap();
        let csv = table.to_csv();
        assert!(csv.starts_with("outcome,count\n0,"));
        assert_eq!(csv.lines().count(), 3);
        let js = table.to_json();
        assert_eq!(js["shots"], 10);
        assert_eq!(js["seed"], 1);
        assert_eq!(js["stream"], 2);
        assert_eq!(js["efficiency"], 1.0);
        assert_eq!(js["shape"], "single");
    }
}

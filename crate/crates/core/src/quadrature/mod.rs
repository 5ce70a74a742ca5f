//! Gaussian-weighted inner products over a disk, projection coefficients
//! c_n = <z^n, f> / (pi n!), and the truncation-error norm.
//!
//! Two node layouts share one integrand: a midpoint-radial by left-angular
//! Riemann grid, and a Gauss-Legendre radial rule crossed with the uniform
//! angular rule (the trapezoid rule on a periodic integrand, which is exact
//! for trigonometric polynomials below the node count). The disk radius is
//! explicit: on a finite disk the exact projection of z^k is its Maclaurin
//! coefficient times [`radial_truncation_factor`], which is the oracle the
//! tests compare against.

mod gauss_legendre;

pub use gauss_legendre::nodes_and_weights;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::coefficients::{Basis, CoefficientVector};
use crate::error::{Error, Result};
use crate::functions::FunctionSpec;
use crate::scalar::{factorial, from_f64, Real};

/// Largest disk radius kept after clamping; e^{-R^2} underflows past it.
pub const MAX_RADIUS: f64 = 12.0;
/// Smallest node count accepted on either axis.
pub const MIN_NODES: usize = 8;

/// Node layout for the disk integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Midpoint rule in r, left endpoints in theta.
    RiemannPolar,
    /// Gauss-Legendre in r mapped to [0, R], uniform rule in theta.
    GaussRadial,
}

/// Disk quadrature parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig<T: Real> {
    pub method: Method,
    /// Disk cutoff R, clamped to [`MAX_RADIUS`] by the constructor.
    pub radius: T,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
}

impl<T: Real> QuadratureConfig<T> {
    /// Validates node counts and the radius sign; radii beyond
    /// [`MAX_RADIUS`] are clamped rather than rejected.
    pub fn new(method: Method, radius: T, radial_nodes: usize, angular_nodes: usize) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::Config(format!(
                "disk radius must be positive and finite, got {radius}"
            )));
        }
        if radial_nodes < MIN_NODES || angular_nodes < MIN_NODES {
            return Err(Error::Config(format!(
                "node counts must be at least {MIN_NODES}, got {radial_nodes}x{angular_nodes}"
            )));
        }
        let max_radius = from_f64::<T>(MAX_RADIUS);
        Ok(Self {
            method,
            radius: if radius > max_radius { max_radius } else { radius },
            radial_nodes,
            angular_nodes,
        })
    }

    /// Angular Nyquist check for the e^{-i n theta} factor at max degree
    /// `n_max`.
    pub fn check_degree(&self, n_max: usize) -> Result<()> {
        let needed = 2 * (n_max + 1);
        if self.angular_nodes < needed {
            return Err(Error::Config(format!(
                "angular_nodes = {} aliases degree {} coefficients; need at least {}",
                self.angular_nodes, n_max, needed
            )));
        }
        Ok(())
    }
}

/// Projection output: coefficients, the raw inner products they came from,
/// the configuration used, and a node-halving residual per degree.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult<T: Real> {
    /// Monomial-basis coefficients c_n.
    pub coefficients: CoefficientVector<T>,
    /// Inner products <z^n, f>; coefficients[n] = inner_products[n]/(pi n!).
    pub inner_products: Vec<Complex<T>>,
    pub config: QuadratureConfig<T>,
    /// |c_n at full nodes - c_n at halved nodes| per degree.
    pub residual_estimates: Vec<T>,
}

impl<T: Real> ProjectionResult<T> {
    /// CSV rows `n,re,im,abs,residual` at 15 significant digits, LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,re,im,abs,residual\n");
        for (n, c) in self.coefficients.values().iter().enumerate() {
            let re = c.re.to_f64().unwrap_or(f64::NAN);
            let im = c.im.to_f64().unwrap_or(f64::NAN);
            let abs = c.norm().to_f64().unwrap_or(f64::NAN);
            let res = self.residual_estimates[n].to_f64().unwrap_or(f64::NAN);
            out.push_str(&format!("{n},{re:.14e},{im:.14e},{abs:.14e},{res:.14e}\n"));
        }
        out
    }

    /// JSON mirror of the result, coefficients as [re, im] pairs.
    pub fn to_json(&self) -> serde_json::Value {
        let coeffs: Vec<[f64; 2]> = self
            .coefficients
            .values()
            .iter()
            .map(|c| {
                [
                    c.re.to_f64().unwrap_or(f64::NAN),
                    c.im.to_f64().unwrap_or(f64::NAN),
                ]
            })
            .collect();
        let inner: Vec<[f64; 2]> = self
            .inner_products
            .iter()
            .map(|c| {
                [
                    c.re.to_f64().unwrap_or(f64::NAN),
                    c.im.to_f64().unwrap_or(f64::NAN),
                ]
            })
            .collect();
        let residuals: Vec<f64> = self
            .residual_estimates
            .iter()
            .map(|r| r.to_f64().unwrap_or(f64::NAN))
            .collect();
        json!({
            "basis": "monomial",
            "coefficients": coeffs,
            "inner_products": inner,
            "residual_estimates": residuals,
            "config": {
                "method": match self.config.method {
                    Method::RiemannPolar => "riemann_polar",
                    Method::GaussRadial => "gauss_radial",
                },
                "radius": self.config.radius.to_f64().unwrap_or(f64::NAN),
                "radial_nodes": self.config.radial_nodes,
                "angular_nodes": self.config.angular_nodes,
            },
        })
    }
}

/// ||z^n||^2 = pi n!.
pub fn monomial_norm_squared<T: Real>(n: usize) -> Result<T> {
    Ok(T::PI() * factorial::<T>(n)?)
}

/// Radial rule on [0, R]: node radii and weights with the r e^{-r^2} Jacobian
/// and measure factor folded in.
fn radial_rule<T: Real>(method: Method, radius: T, nodes: usize) -> (Vec<T>, Vec<T>) {
    match method {
        Method::RiemannPolar => {
            let dr = radius / from_f64::<T>(nodes as f64);
            let half = from_f64::<T>(0.5);
            (0..nodes)
                .map(|i| {
                    let r = (from_f64::<T>(i as f64) + half) * dr;
                    (r, r * (-r * r).exp() * dr)
                })
                .unzip()
        }
        Method::GaussRadial => {
            let (x, w) = nodes_and_weights::<T>(nodes);
            let half = from_f64::<T>(0.5);
            x.iter()
                .zip(&w)
                .map(|(&xi, &wi)| {
                    let r = radius * (xi + T::one()) * half;
                    (r, wi * radius * half * r * (-r * r).exp())
                })
                .unzip()
        }
    }
}

/// Inner products <z^n, f> for n = 0..=n_max on one shared grid.
fn inner_products_on_grid<T: Real>(
    f: &FunctionSpec<T>,
    n_max: usize,
    method: Method,
    radius: T,
    radial_nodes: usize,
    angular_nodes: usize,
) -> Vec<Complex<T>> {
    let (radii, radial_weights) = radial_rule(method, radius, radial_nodes);
    let j = angular_nodes;
    let two_pi = T::PI() + T::PI();
    let angular_weight = two_pi / from_f64::<T>(j as f64);
    let thetas: Vec<T> = (0..j)
        .map(|k| two_pi * from_f64::<T>(k as f64) / from_f64::<T>(j as f64))
        .collect();
    let cis_neg: Vec<Complex<T>> = thetas.iter().map(|&t| Complex::from_polar(T::one(), -t)).collect();

    // F[i*j + k] starts as f(r_i e^{i theta_k}) and accumulates the
    // conjugate-phase factor e^{-i n theta_k} as n advances.
    let mut field: Vec<Complex<T>> = Vec::with_capacity(radii.len() * j);
    for &r in &radii {
        for &t in &thetas {
            field.push(f.eval(Complex::from_polar(r, t)));
        }
    }
    let mut radial_pow: Vec<T> = vec![T::one(); radii.len()];
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            for (i, &r) in radii.iter().enumerate() {
                radial_pow[i] *= r;
                for k in 0..j {
                    field[i * j + k] *= cis_neg[k];
                }
            }
        }
        let mut total = Complex::new(T::zero(), T::zero());
        for (i, &rw) in radial_weights.iter().enumerate() {
            let mut ring = Complex::new(T::zero(), T::zero());
            for k in 0..j {
                ring += field[i * j + k];
            }
            total += ring * (radial_pow[i] * rw);
        }
        out.push(total * angular_weight);
    }
    out
}

/// <z^n, f> on the midpoint-radial, left-angular Riemann grid.
pub fn inner_product_riemann<T: Real>(
    f: &FunctionSpec<T>,
    n: usize,
    cfg: &QuadratureConfig<T>,
) -> Result<Complex<T>> {
    if cfg.method != Method::RiemannPolar {
        return Err(Error::Config(
            "inner_product_riemann requires method = riemann_polar".into(),
        ));
    }
    Ok(inner_products_on_grid(f, n, cfg.method, cfg.radius, cfg.radial_nodes, cfg.angular_nodes)
        .pop()
        .expect("n_max + 1 >= 1 products"))
}

/// <z^n, f> on the Gauss-Legendre radial by uniform angular grid.
pub fn inner_product_gauss<T: Real>(
    f: &FunctionSpec<T>,
    n: usize,
    cfg: &QuadratureConfig<T>,
) -> Result<Complex<T>> {
    if cfg.method != Method::GaussRadial {
        return Err(Error::Config(
            "inner_product_gauss requires method = gauss_radial".into(),
        ));
    }
    Ok(inner_products_on_grid(f, n, cfg.method, cfg.radius, cfg.radial_nodes, cfg.angular_nodes)
        .pop()
        .expect("n_max + 1 >= 1 products"))
}

/// Projects f onto degrees 0..=n_max: c_n = <z^n, f> / (pi n!), with a
/// node-halving residual estimate per degree.
pub fn project<T: Real>(
    f: &FunctionSpec<T>,
    n_max: usize,
    cfg: &QuadratureConfig<T>,
) -> Result<ProjectionResult<T>> {
    cfg.check_degree(n_max)?;
    let inner = inner_products_on_grid(f, n_max, cfg.method, cfg.radius, cfg.radial_nodes, cfg.angular_nodes);
    // The halved grid keeps the Nyquist floor so residuals measure radial
    // and angular refinement, not aliasing.
    let half_radial = (cfg.radial_nodes / 2).max(MIN_NODES);
    let half_angular = (cfg.angular_nodes / 2).max(MIN_NODES).max(2 * (n_max + 1));
    let inner_half =
        inner_products_on_grid(f, n_max, cfg.method, cfg.radius, half_radial, half_angular);

    let mut values = Vec::with_capacity(n_max + 1);
    let mut residuals = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let norm = monomial_norm_squared::<T>(n)?;
        let c = inner[n] / norm;
        values.push(c);
        residuals.push((c - inner_half[n] / norm).norm());
    }
    Ok(ProjectionResult {
        coefficients: CoefficientVector::new(values, Basis::Monomial)?,
        inner_products: inner,
        config: *cfg,
        residual_estimates: residuals,
    })
}

/// t_n(R) = 1 - e^{-R^2} sum_{k<=n} R^{2k}/k!, the factor by which a disk of
/// radius R shrinks the degree-n projection of z^n.
///
/// Evaluated as the complementary Poisson(R^2) tail sum_{k>n} e^{-R^2}
/// R^{2k}/k!, which is cancellation-free and stays in (0, 1) for every n.
pub fn radial_truncation_factor<T: Real>(n: usize, radius: T) -> T {
    let lambda = radius * radius;
    if !(lambda > T::zero()) {
        return T::zero();
    }
    // Head H = e^{-lambda} sum_{k<=n} lambda^k/k!. When H is small, 1 - H
    // is exact to an ulp; the tail series is summed directly only when it
    // is the smaller piece, so neither branch cancels.
    let mut term = (-lambda).exp();
    let mut head = T::zero();
    let mut k = T::zero();
    for _ in 0..=n {
        head += term;
        k += T::one();
        term *= lambda / k;
    }
    if head <= from_f64::<T>(0.5) {
        return T::one() - head;
    }
    // First tail term e^{-lambda} lambda^{n+1} / (n+1)! in log space.
    let first = from_f64::<T>((n + 1) as f64);
    let mut term = (first * lambda.ln() - crate::scalar::ln_gamma(first + T::one()) - lambda).exp();
    let mut acc = T::zero();
    let mut k = first;
    for _ in 0..100_000 {
        acc += term;
        k += T::one();
        term *= lambda / k;
        // Terms grow until k reaches lambda; only stop past the mode.
        if k > lambda && term <= acc * T::epsilon() {
            break;
        }
    }
    acc.min(T::one())
}

/// Tail of the squared expansion norm past degree `n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationTail<T: Real> {
    /// pi * sum of `terms`.
    pub norm_sq: T,
    /// |c_n|^2 n! for n = n_max+1 ..= n_max+tail.
    pub terms: Vec<T>,
}

/// ||E_N||^2 = pi sum_{n=N+1}^{N+tail} |c_n|^2 n! for a monomial-basis
/// vector, plus the per-degree terms for plotting.
pub fn truncation_error_norm<T: Real>(
    c: &CoefficientVector<T>,
    n_max: usize,
    tail: usize,
) -> Result<TruncationTail<T>> {
    if c.basis() != Basis::Monomial {
        return Err(Error::BasisMismatch {
            expected: Basis::Monomial,
            found: c.basis(),
        });
    }
    if c.len() < n_max + tail + 1 {
        return Err(Error::Config(format!(
            "need coefficients through degree {}, have {}",
            n_max + tail,
            c.len().saturating_sub(1)
        )));
    }
    let mut terms = Vec::with_capacity(tail);
    let mut sum = T::zero();
    for n in (n_max + 1)..=(n_max + tail) {
        let term = c.get(n).norm_sqr() * factorial::<T>(n)?;
        terms.push(term);
        sum += term;
    }
    Ok(TruncationTail {
        norm_sq: T::PI() * sum,
        terms,
    })
}

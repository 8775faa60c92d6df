//! The univariate Horseshoe at a fixed global scale τ.
//!
//! θ | λ, τ ~ N(0, λ²τ²), λ ~ C⁺(0, 1). Given y ~ N(θ, 1) the local scale has
//! posterior density
//!
//!   π(λ | y, τ) = (1+λ²τ²)^{−1/2} e^{−y²/(2(1+λ²τ²))} / ((1+λ²) H(y, τ))
//!
//! with H(y, τ) = τ·Φ₁(1, 1, 3/2, −y²/2, 1−τ²).

mod sampler;

pub use sampler::{sample_t2_once, ShrinkageSampler};

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::specfun::QuadratureSpec;
use crate::specfun::{exp_integral_e1_scaled, log_kernel_range, log_phi1_h, Weight, INV_SQRT_2PI};

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        domain(format!("tau must be positive and finite, got {tau}"))
    }
}

/// Prior density π(θ | τ) = e^{z}E₁(z)/(√(2π³)·τ), z = θ²/(2τ²).
///
/// Returns `+∞` at θ = 0, where the density has a logarithmic pole.
pub fn prior_density(theta: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if !theta.is_finite() {
        return domain(format!("theta must be finite, got {theta}"));
    }
    if theta == 0.0 {
        return Ok(f64::INFINITY);
    }
    let z = theta * theta / (2.0 * tau * tau);
    if z == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(exp_integral_e1_scaled(z)? / ((2.0 * PI.powi(3)).sqrt() * tau))
}

/// Lower and upper envelopes of the prior density:
/// log(1 + 4τ²/θ²)/(2√(2π³)τ) < π(θ|τ) < log(1 + 2τ²/θ²)/(√(2π³)τ).
pub fn prior_density_bounds(theta: f64, tau: f64) -> Result<(f64, f64)> {
    check_tau(tau)?;
    if theta == 0.0 || !theta.is_finite() {
        return domain(format!("bounds need finite theta != 0, got {theta}"));
    }
    let c = 1.0 / ((2.0 * PI.powi(3)).sqrt() * tau);
    let s = (tau / theta).powi(2);
    Ok((0.5 * c * (4.0 * s).ln_1p(), c * (2.0 * s).ln_1p()))
}

/// log m(y | τ) for one observation y ~ N(θ, 1), θ ~ Horseshoe(τ).
pub fn log_marginal_density(y: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let lh = log_phi1_h(y, tau);
    if !lh.is_finite() {
        return Err(Error::Numeric(format!("H({y}, {tau}) evaluation failed")));
    }
    Ok((2.0 * INV_SQRT_2PI / PI).ln() + lh)
}

/// m(y | τ) = (2/π)·φ(0)·H(y, τ).
pub fn marginal_density(y: f64, tau: f64) -> Result<f64> {
    log_marginal_density(y, tau).map(f64::exp)
}

/// κ = 1/(1 + λ²τ²).
pub fn kappa_of(lambda: f64, tau: f64) -> f64 {
    1.0 / (1.0 + (lambda * tau).powi(2))
}

/// Posterior shrinkage factor κ ∈ (0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkageKappa {
    kappa: f64,
}

impl ShrinkageKappa {
    pub fn from_scales(lambda: f64, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return domain(format!("lambda must be finite and nonnegative, got {lambda}"));
        }
        Ok(Self { kappa: kappa_of(lambda, tau) })
    }

    pub fn value(&self) -> f64 {
        self.kappa
    }
}

/// Unnormalized log π(λ | y, τ).
#[inline]
pub fn lambda_log_kernel(lambda: f64, y: f64, tau: f64) -> f64 {
    let p = (lambda * tau).powi(2);
    -0.5 * p.ln_1p() - 0.5 * y * y / (1.0 + p) - (lambda * lambda).ln_1p()
}

/// Tabulated local-scale posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalScalePosterior {
    y: f64,
    tau: f64,
    normalizer: f64,
    lambdas: Vec<f64>,
    density: Vec<f64>,
    cdf: Vec<f64>,
}

pub const DEFAULT_LAMBDA_GRID: usize = 2048;

/// Tabulate π(λ | y, τ) on [0, λ_max].
///
/// λ_max = max(100, 20/τ, √(5·10⁵/(τH))) keeps the analytic tail mass
/// ∫_{λ_max}^∞ π ≤ 1/(2τλ_max²H) below 10⁻⁶. The grid is 0 followed by a
/// geometric ladder from 10⁻⁴ to λ_max.
pub fn lambda_posterior(y: f64, tau: f64, grid_size: usize) -> Result<LocalScalePosterior> {
    check_tau(tau)?;
    if !y.is_finite() {
        return domain(format!("y must be finite, got {y}"));
    }
    if grid_size < 64 {
        return domain(format!("grid_size must be at least 64, got {grid_size}"));
    }
    let log_h = log_phi1_h(y, tau);
    if !log_h.is_finite() {
        return Err(Error::Numeric(format!("H({y}, {tau}) evaluation failed")));
    }
    let h = log_h.exp();
    let lambda_max = 100f64.max(20.0 / tau).max((5e5 / (tau * h)).sqrt());
    let lo = 1e-4f64.min(lambda_max * 1e-6);
    let steps = grid_size - 2;
    let ratio = (lambda_max / lo).ln() / steps as f64;
    let mut lambdas = Vec::with_capacity(grid_size);
    lambdas.push(0.0);
    for k in 0..=steps {
        lambdas.push(lo * (ratio * k as f64).exp());
    }
    *lambdas.last_mut().unwrap() = lambda_max;

    let mut density: Vec<f64> = lambdas.iter().map(|&l| (lambda_log_kernel(l, y, tau) - log_h).exp()).collect();
    let mut cdf = Vec::with_capacity(grid_size);
    cdf.push(0.0);
    let mut acc = 0.0;
    for k in 1..grid_size {
        acc += 0.5 * (density[k] + density[k - 1]) * (lambdas[k] - lambdas[k - 1]);
        cdf.push(acc);
    }
    if !(acc > 0.0) || !acc.is_finite() {
        return Err(Error::Numeric(format!("lambda posterior mass {acc} at y={y} tau={tau}")));
    }
    for d in density.iter_mut() {
        *d /= acc;
    }
    for c in cdf.iter_mut() {
        *c /= acc;
    }
    Ok(LocalScalePosterior { y, tau, normalizer: log_h, lambdas, density, cdf })
}

impl LocalScalePosterior {
    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// log H(y, τ), the analytic normalizer.
    pub fn log_normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lambdas[0], *self.lambdas.last().unwrap())
    }

    /// Trapezoid mass of the stored (self-normalized) density.
    pub fn trapezoid_mass(&self) -> f64 {
        self.lambdas.windows(2).zip(self.density.windows(2)).map(|(l, d)| 0.5 * (d[0] + d[1]) * (l[1] - l[0])).sum()
    }

    /// Exact density from the closed form, normalized by H.
    pub fn density_at(&self, lambda: f64) -> f64 {
        if lambda < 0.0 {
            return 0.0;
        }
        (lambda_log_kernel(lambda, self.y, self.tau) - self.normalizer).exp()
    }

    fn quantile(&self, u: f64) -> f64 {
        let k = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let (l0, l1) = (self.lambdas[k - 1], self.lambdas[k]);
        if c1 > c0 {
            l0 + (l1 - l0) * ((u - c0) / (c1 - c0)).clamp(0.0, 1.0)
        } else {
            l0
        }
    }
}

/// Inverse-CDF draws from the tabulated posterior, linear within grid cells.
pub fn sample_lambda<R: Rng + ?Sized>(posterior: &LocalScalePosterior, count: usize, rng: &mut R) -> Vec<f64> {
    (0..count).map(|_| posterior.quantile(rng.random::<f64>())).collect()
}

/// Stationary-point structure of π(λ | y, τ).
///
/// With p = λ²τ² the log-density derivative has the sign of
/// −(3p² + (5+τ²−y²)p + 2+τ²−y²τ²), so there are at most two interior
/// stationary points: an antimode and a second mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeStructure {
    pub zero_is_mode: bool,
    pub antimode: Option<f64>,
    pub second_mode: Option<f64>,
}

pub fn lambda_mode_structure(y: f64, tau: f64) -> Result<ModeStructure> {
    check_tau(tau)?;
    let y2 = y * y;
    let t2 = tau * tau;
    let b = 5.0 + t2 - y2;
    let c = 2.0 + t2 - y2 * t2;
    let disc = b * b - 12.0 * c;
    let zero_is_mode = c > 0.0;
    let to_lambda = |p: f64| p.sqrt() / tau;
    if disc < 0.0 {
        return Ok(ModeStructure { zero_is_mode, antimode: None, second_mode: None });
    }
    // stable roots of 3p² + bp + c
    let s = disc.sqrt();
    let qq = -0.5 * (b + b.signum() * s);
    let (r1, r2) = if qq == 0.0 { (0.0, 0.0) } else { (qq / 3.0, c / qq) };
    let (p_lo, p_hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
    let second_mode = (p_hi > 0.0).then(|| to_lambda(p_hi));
    let antimode = (p_lo > 0.0 && zero_is_mode).then(|| to_lambda(p_lo));
    Ok(ModeStructure { zero_is_mode, antimode, second_mode })
}

/// All local maxima of π(λ | y, τ); the boundary mode λ = 0 comes first.
pub fn lambda_posterior_modes(y: f64, tau: f64) -> Result<Vec<f64>> {
    let m = lambda_mode_structure(y, tau)?;
    let mut out = Vec::with_capacity(2);
    if m.zero_is_mode {
        out.push(0.0);
    }
    if let Some(l) = m.second_mode {
        out.push(l);
    }
    Ok(out)
}

/// Posterior mass in the basin of λ = 0 and in the basin of the second mode,
/// split at the antimode. A unimodal posterior puts all mass in one basin.
pub fn basin_masses(y: f64, tau: f64, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let m = lambda_mode_structure(y, tau)?;
    match (m.zero_is_mode, m.antimode) {
        (true, Some(anti)) => {
            let p = (anti * tau).powi(2);
            let t_anti = (p / (1.0 + p)).sqrt();
            let x = -0.5 * y * y;
            let a = log_kernel_range(Weight::Flat, x, tau, 0.0, t_anti, spec)?;
            let b = log_kernel_range(Weight::Flat, x, tau, t_anti, 1.0, spec)?;
            let top = a.max(b);
            let (ea, eb) = ((a - top).exp(), (b - top).exp());
            Ok((ea / (ea + eb), eb / (ea + eb)))
        }
        (true, None) => Ok((1.0, 0.0)),
        (false, _) => Ok((0.0, 1.0)),
    }
}

/// What "the second mode dominates" means in a crossover search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    /// density at λ₂* exceeds the density at λ = 0
    Density,
    /// the second basin carries more than half of the posterior mass
    Mass,
}

fn dominated(y: f64, tau: f64, rule: Dominance, spec: &QuadratureSpec) -> Result<bool> {
    let m = lambda_mode_structure(y, tau)?;
    if !m.zero_is_mode {
        return Ok(true);
    }
    let Some(l2) = m.second_mode else { return Ok(false) };
    match rule {
        Dominance::Density => Ok(lambda_log_kernel(l2, y, tau) > lambda_log_kernel(0.0, y, tau)),
        Dominance::Mass => Ok(basin_masses(y, tau, spec)?.1 > 0.5),
    }
}

/// Smallest |y| at which the second mode dominates, to about 1e−9.
pub fn mode_crossover(tau: f64, rule: Dominance, spec: &QuadratureSpec) -> Result<f64> {
    check_tau(tau)?;
    let step = 0.05;
    let mut lo = 0.0;
    let mut hi = step;
    while !dominated(hi, tau, rule, spec)? {
        lo = hi;
        hi += step;
        if hi > 1e4 {
            return Err(Error::Numeric(format!("no crossover below |y| = 1e4 at tau={tau}")));
        }
    }
    while hi - lo > 1e-9 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if dominated(mid, tau, rule, spec)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests;

//! Full-Bayes layer: the posterior of τ, the adaptive predictive density and
//! the Monte Carlo risk estimator.

use std::hash::{DefaultHasher, Hash, Hasher};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::horseshoe::{sample_t2_once, ShrinkageSampler};
use crate::model::ParameterVector;
use crate::rng::{substream, Stream};
use crate::samples::PredictiveSampleSet;
use crate::specfun::log_phi1_h;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Hyperprior on the global scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HyperPrior {
    /// Density rate·e^{−rate·τ}; the default uses rate n.
    ExponentialRateN(f64),
    /// τ fixed at the given value.
    FixedPoint(f64),
}

impl HyperPrior {
    pub fn exponential_rate_n(n: usize) -> Self {
        HyperPrior::ExponentialRateN(n as f64)
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            HyperPrior::ExponentialRateN(v) | HyperPrior::FixedPoint(v) => v,
        };
        if !(v > 0.0 && v.is_finite()) {
            return domain(format!("hyperprior parameter must be positive and finite, got {v}"));
        }
        Ok(())
    }

    /// log π(τ). FixedPoint has no density; it reports 0 at its point and −∞ elsewhere.
    pub fn log_density(&self, tau: f64) -> f64 {
        match *self {
            HyperPrior::ExponentialRateN(rate) => rate.ln() - rate * tau,
            HyperPrior::FixedPoint(t0) => {
                if tau == t0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }
}

/// log π(τ) + Σᵢ log H(Yᵢ, τ), the log posterior of τ up to a constant.
pub fn tau_log_posterior_unnorm(tau: f64, y: &[f64], prior: &HyperPrior) -> Result<f64> {
    if !(tau > 0.0) {
        return domain(format!("tau must be positive, got {tau}"));
    }
    Ok(prior.log_density(tau) + y.iter().map(|&yi| log_phi1_h(yi, tau)).sum::<f64>())
}

/// Grid for the τ posterior. The final grid has `points` nodes, log-uniform
/// over the part of the range that carries mass; `lo` and `hi` are extended
/// automatically when the posterior has not decayed at either end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauGrid {
    pub points: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Default for TauGrid {
    fn default() -> Self {
        Self { points: 1024, lo: 1e-8, hi: 10.0 }
    }
}

const SCAN_POINTS: usize = 128;
// log-density drop that defines the window kept from the scan
const WINDOW_DROP: f64 = 45.0;
const TAIL_MASS: f64 = 1e-6;

/// Normalized posterior of u = log τ on a uniform grid. A single-node grid is
/// the point mass of a FixedPoint prior.
#[derive(Debug, Clone)]
pub struct TauPosterior {
    log_tau: Vec<f64>,
    log_density: Vec<f64>,
    density: Vec<f64>,
    cdf: Vec<f64>,
    observation_hash: u64,
    point: Option<f64>,
}

impl TauPosterior {
    fn point(tau: f64, hash: u64) -> Self {
        Self {
            log_tau: vec![tau.ln()],
            log_density: vec![0.0],
            density: vec![1.0],
            cdf: vec![1.0],
            observation_hash: hash,
            point: Some(tau),
        }
    }

    pub fn log_tau_grid(&self) -> &[f64] {
        &self.log_tau
    }
    /// Log density of log τ at the grid nodes.
    pub fn log_density(&self) -> &[f64] {
        &self.log_density
    }
    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }
    pub fn observation_hash(&self) -> u64 {
        self.observation_hash
    }
    pub fn is_point(&self) -> bool {
        self.point.is_some()
    }

    /// (τ, density in τ) pairs. A point posterior gives its single node with mass 1.
    pub fn tau_density(&self) -> Vec<(f64, f64)> {
        if let Some(t0) = self.point {
            return vec![(t0, 1.0)];
        }
        self.log_tau.iter().zip(&self.density).map(|(&u, &p)| (u.exp(), p / u.exp())).collect()
    }

    /// P(τ ≤ t | Y).
    pub fn cdf_at(&self, tau: f64) -> f64 {
        if let Some(t0) = self.point {
            return if tau >= t0 { 1.0 } else { 0.0 };
        }
        let u = tau.ln();
        let g = &self.log_tau;
        if u <= g[0] {
            return 0.0;
        }
        if u >= g[g.len() - 1] {
            return 1.0;
        }
        let j = g.partition_point(|&x| x <= u);
        let h = u - g[j - 1];
        // exact integral of the linear density interpolant over [g[j−1], u]
        let slope = (self.density[j] - self.density[j - 1]) / (g[j] - g[j - 1]);
        self.cdf[j - 1] + h * (self.density[j - 1] + 0.5 * slope * h)
    }

    fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        if let Some(t0) = self.point {
            return f(t0.ln());
        }
        let h = self.log_tau[1] - self.log_tau[0];
        let vals: Vec<f64> = self.log_tau.iter().zip(&self.density).map(|(&u, &p)| f(u) * p).collect();
        h * (vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[vals.len() - 1]))
    }
}

fn hash_observations(y: &[f64], prior: &HyperPrior) -> u64 {
    let mut h = DefaultHasher::new();
    for v in y {
        v.to_bits().hash(&mut h);
    }
    format!("{prior:?}").hash(&mut h);
    h.finish()
}

fn log_post_u(u: f64, y: &[f64], rate: f64) -> f64 {
    let tau = u.exp();
    let mut acc = rate.ln() - rate * tau + u;
    for &yi in y {
        acc += log_phi1_h(yi, tau);
    }
    acc
}

fn eval_grid(us: &[f64], y: &[f64], rate: f64) -> Vec<f64> {
    us.par_iter().map(|&u| log_post_u(u, y, rate)).collect()
}

fn linspace(a: f64, b: f64, m: usize) -> Vec<f64> {
    (0..m).map(|k| a + (b - a) * k as f64 / (m - 1) as f64).collect()
}

/// Grid posterior of τ. The range is scanned coarsely (and extended while the
/// log density at an end is within 40 of the maximum), then the grid is laid
/// over the window where the log density is within 45 of its maximum, widened
/// until the estimated tail mass beyond each end is below 1e−6.
pub fn build_tau_posterior(y: &[f64], prior: &HyperPrior, grid: &TauGrid) -> Result<TauPosterior> {
    if y.is_empty() {
        return domain("tau posterior needs at least one observation");
    }
    if y.iter().any(|v| !v.is_finite()) {
        return domain("observations must be finite");
    }
    prior.validate()?;
    if grid.points < 16 || !(grid.lo > 0.0 && grid.hi > grid.lo && grid.hi.is_finite()) {
        return domain(format!("invalid tau grid {grid:?}"));
    }
    let hash = hash_observations(y, prior);
    let rate = match *prior {
        HyperPrior::FixedPoint(t0) => return Ok(TauPosterior::point(t0, hash)),
        HyperPrior::ExponentialRateN(rate) => rate,
    };

    let (mut a, mut b) = (grid.lo.ln(), grid.hi.ln());
    let (scan_u, scan_f) = loop {
        let us = linspace(a, b, SCAN_POINTS);
        let fs = eval_grid(&us, y, rate);
        let top = fs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(Error::Numeric("tau posterior is -inf on the whole grid".into()));
        }
        let grow_lo = fs[0] > top - 40.0 && a > -690.0;
        let grow_hi = fs[SCAN_POINTS - 1] > top - 40.0 && b < 20.0;
        if !grow_lo && !grow_hi {
            break (us, fs);
        }
        if grow_lo {
            a -= std::f64::consts::LN_10 * 2.0;
        }
        if grow_hi {
            b += std::f64::consts::LN_10;
        }
    };
    let top = scan_f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let step = scan_u[1] - scan_u[0];
    let first = scan_f.iter().position(|&f| f > top - WINDOW_DROP).unwrap();
    let last = scan_f.iter().rposition(|&f| f > top - WINDOW_DROP).unwrap();
    let mut lo = scan_u[first.saturating_sub(1)];
    let mut hi = scan_u[(last + 1).min(SCAN_POINTS - 1)];

    for _ in 0..20 {
        let us = linspace(lo, hi, grid.points);
        let f = eval_grid(&us, y, rate);
        let m = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let h = us[1] - us[0];
        let raw: Vec<f64> = f.iter().map(|&v| (v - m).exp()).collect();
        let z = h * (raw.iter().sum::<f64>() - 0.5 * (raw[0] + raw[raw.len() - 1]));
        // tail beyond an end, assuming the log density keeps its end slope
        let tail = |p: f64, q: f64| {
            let slope = (q.ln() - p.ln()) / h;
            if p == 0.0 {
                0.0
            } else if slope > 0.0 {
                p / slope / z
            } else {
                f64::INFINITY
            }
        };
        let n = grid.points;
        let left_bad = tail(raw[0], raw[1]) > 0.5 * TAIL_MASS;
        let right_bad = tail(raw[n - 1], raw[n - 2]) > 0.5 * TAIL_MASS;
        if left_bad || right_bad {
            if left_bad {
                lo -= step;
            }
            if right_bad {
                hi += step;
            }
            continue;
        }
        let density: Vec<f64> = raw.iter().map(|&p| p / z).collect();
        let mut cdf = Vec::with_capacity(n);
        let mut acc = 0.0;
        cdf.push(0.0);
        for k in 1..n {
            acc += 0.5 * h * (density[k - 1] + density[k]);
            cdf.push(acc);
        }
        let total = acc;
        cdf.iter_mut().for_each(|c| *c /= total);
        let log_z = z.ln() + m;
        return Ok(TauPosterior {
            log_tau: us,
            log_density: f.iter().map(|&v| v - log_z).collect(),
            density,
            cdf,
            observation_hash: hash,
            point: None,
        });
    }
    Err(Error::Numeric("tau posterior tails did not decay within the extended grid".into()))
}

/// Inverse-CDF draws of τ, linear in log τ between grid nodes.
pub fn sample_tau<R: Rng + ?Sized>(posterior: &TauPosterior, count: usize, rng: &mut R) -> Vec<f64> {
    (0..count).map(|_| draw_tau(posterior, rng)).collect()
}

fn draw_tau<R: Rng + ?Sized>(posterior: &TauPosterior, rng: &mut R) -> f64 {
    if let Some(t0) = posterior.point {
        return t0;
    }
    let (g, c) = (&posterior.log_tau, &posterior.cdf);
    let u: f64 = rng.random();
    let j = c.partition_point(|&x| x < u).clamp(1, c.len() - 1);
    let span = c[j] - c[j - 1];
    let frac = if span > 0.0 { ((u - c[j - 1]) / span).clamp(0.0, 1.0) } else { 0.5 };
    (g[j - 1] + frac * (g[j] - g[j - 1])).exp()
}

pub fn posterior_mean_tau(posterior: &TauPosterior) -> f64 {
    posterior.expect(f64::exp)
}

pub fn posterior_mean_log_inv_tau(posterior: &TauPosterior) -> f64 {
    posterior.expect(|u| -u)
}

/// log of (1/L)Σ_l N(ỹ; t²_l y, r + t²_l) over L draws of t², guarded by
/// factoring out the largest exponent.
fn log_inner_mean(
    sampler: &ShrinkageSampler,
    y: f64,
    yf: f64,
    r: f64,
    rng: &mut Stream,
    t2: &mut [f64],
    ex: &mut [f64],
) -> f64 {
    sampler.fill_t2(rng, t2);
    let mut top = f64::NEG_INFINITY;
    for (e, &t) in ex.iter_mut().zip(t2.iter()) {
        let d = yf - t * y;
        *e = -d * d / (2.0 * (r + t));
        top = top.max(*e);
    }
    let mut s = 0.0;
    for (&e, &t) in ex.iter().zip(t2.iter()) {
        s += (e - top).exp() / (r + t).sqrt();
    }
    top + (s / t2.len() as f64).ln() - 0.5 * LN_2PI
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// log p̂(ỹ|Y) = log (1/Q)Σ_q Πᵢ (1/L)Σ_l p̂_λ(ỹᵢ|yᵢ,τ_q). The λ draws for
/// (q, i) come from substream [path.., q, i] of `seed`; samplers are rebuilt
/// only when τ changes between consecutive draws.
fn log_mixture(y: &[f64], yf: &[f64], taus: &[f64], r: f64, l_draws: usize, seed: u64, path: &[u64]) -> f64 {
    let mut t2 = vec![0.0; l_draws];
    let mut ex = vec![0.0; l_draws];
    let mut samplers: Vec<ShrinkageSampler> = Vec::new();
    let mut cached = f64::NAN;
    let mut key: Vec<u64> = path.to_vec();
    key.extend([0, 0]);
    let depth = path.len();
    let per_tau: Vec<f64> = taus
        .iter()
        .enumerate()
        .map(|(q, &tau)| {
            if tau != cached {
                samplers = y.iter().map(|&yi| ShrinkageSampler::new(yi, tau)).collect();
                cached = tau;
            }
            key[depth] = q as u64;
            let mut acc = 0.0;
            for (i, s) in samplers.iter().enumerate() {
                key[depth + 1] = i as u64;
                let mut rng = substream(seed, &key);
                acc += log_inner_mean(s, y[i], yf[i], r, &mut rng, &mut t2, &mut ex);
            }
            acc
        })
        .collect();
    log_sum_exp(&per_tau) - (taus.len() as f64).ln()
}

fn check_counts(q_draws: usize, l_draws: usize) -> Result<()> {
    if q_draws == 0 || l_draws == 0 {
        return domain("q_draws and l_draws must be positive");
    }
    Ok(())
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return domain(format!("r must be positive, got {r}"));
    }
    Ok(())
}

/// Monte Carlo log density of the adaptive predictive at `y_future`.
#[allow(clippy::too_many_arguments)]
pub fn adaptive_predictive_density<R: Rng + ?Sized>(
    y_future: &[f64],
    y: &[f64],
    prior: &HyperPrior,
    r: f64,
    q_draws: usize,
    l_draws: usize,
    rng: &mut R,
) -> Result<f64> {
    if y_future.len() != y.len() {
        return domain(format!("dimension mismatch: {} future vs {} observed", y_future.len(), y.len()));
    }
    check_r(r)?;
    check_counts(q_draws, l_draws)?;
    let post = build_tau_posterior(y, prior, &TauGrid::default())?;
    let taus = sample_tau(&post, q_draws, rng);
    let seed: u64 = rng.random();
    Ok(log_mixture(y, y_future, &taus, r, l_draws, seed, &[]))
}

/// Monte Carlo risk: mean loss over replicates and its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub losses: Vec<f64>,
}

/// Summation by halves; the association depends only on the length.
fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let (a, b) = x.split_at(x.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Loss log π(Ỹ|θ) − log p̂_π(Ỹ|Y) for replicate `b`.
fn replicate_loss(
    theta: &[f64],
    prior: &HyperPrior,
    r: f64,
    q_draws: usize,
    l_draws: usize,
    seed: u64,
    b: u64,
) -> Result<f64> {
    let mut rng = substream(seed, &[b]);
    let n = theta.len();
    let y: Vec<f64> = theta.iter().map(|&t| t + rng.sample::<f64, _>(StandardNormal)).collect();
    let sr = r.sqrt();
    let yf: Vec<f64> = theta.iter().map(|&t| t + sr * rng.sample::<f64, _>(StandardNormal)).collect();
    let post = build_tau_posterior(&y, prior, &TauGrid::default())?;
    let taus = sample_tau(&post, q_draws, &mut rng);
    let log_true: f64 = yf.iter().zip(theta).map(|(&v, &t)| -0.5 * (v - t) * (v - t) / r).sum::<f64>()
        - 0.5 * n as f64 * (LN_2PI + r.ln());
    Ok(log_true - log_mixture(&y, &yf, &taus, r, l_draws, seed, &[b]))
}

/// Monte Carlo risk: B replicates of (Y, Ỹ) ~ N(θ, I) × N(θ, rI), each scored by
/// log{π(Ỹ|θ)/p̂_π(Ỹ|Y)}. Replicates run in parallel on independent
/// substreams and are summed in a fixed order.
pub fn estimate_adaptive_risk(
    theta: &ParameterVector,
    prior: &HyperPrior,
    r: f64,
    b_reps: usize,
    q_draws: usize,
    l_draws: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    if b_reps < 2 {
        return domain(format!("need at least 2 replicates, got {b_reps}"));
    }
    if theta.is_empty() {
        return domain("theta must be non-empty");
    }
    check_r(r)?;
    check_counts(q_draws, l_draws)?;
    prior.validate()?;
    let th = theta.theta();
    let losses = (0..b_reps as u64)
        .into_par_iter()
        .map(|b| replicate_loss(th, prior, r, q_draws, l_draws, seed, b))
        .collect::<Result<Vec<_>>>()?;
    let bf = b_reps as f64;
    let mean = pairwise_sum(&losses) / bf;
    let dev: Vec<f64> = losses.iter().map(|&l| (l - mean) * (l - mean)).collect();
    let var = pairwise_sum(&dev) / (bf - 1.0);
    Ok(RiskEstimate { estimate: mean, std_error: (var / bf).sqrt(), losses })
}

/// Draws from the adaptive predictive: per draw, τ from its posterior, then
/// per coordinate t² given (yᵢ, τ) and ỹᵢ ~ N(t²yᵢ, r + t²).
pub fn sample_predictive_adaptive<R: Rng + ?Sized>(
    y: &[f64],
    prior: &HyperPrior,
    r: f64,
    count: usize,
    rng: &mut R,
) -> Result<PredictiveSampleSet> {
    check_r(r)?;
    let post = build_tau_posterior(y, prior, &TauGrid::default())?;
    let n = y.len();
    let mut data = Vec::with_capacity(count * n);
    if post.is_point() {
        let tau = draw_tau(&post, rng);
        let samplers: Vec<ShrinkageSampler> = y.iter().map(|&yi| ShrinkageSampler::new(yi, tau)).collect();
        for _ in 0..count {
            for (s, &yi) in samplers.iter().zip(y) {
                let t = s.sample_t2(rng);
                let z: f64 = rng.sample(StandardNormal);
                data.push(t * yi + (r + t).sqrt() * z);
            }
        }
    } else {
        // τ differs on every draw, so samplers are never reused
        for _ in 0..count {
            let tau = draw_tau(&post, rng);
            for &yi in y {
                let t = sample_t2_once(yi, tau, rng);
                let z: f64 = rng.sample(StandardNormal);
                data.push(t * yi + (r + t).sqrt() * z);
            }
        }
    }
    PredictiveSampleSet::new(count, n, data)
}

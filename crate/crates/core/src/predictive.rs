//! Fixed-τ predictive densities and their Kullback–Leibler risk.
//!
//! Given λ and τ the predictive of a future Ỹ ~ N(θ, r) is Gaussian. The
//! Horseshoe predictive mixes those Gaussians over π(λ | y, τ); its risk is
//! evaluated exactly through
//!
//!   ρ(θ) = E_Z[ log H(Z+θ, τ) − log H(Z + θ/√v, τ/√v) ],   Z ~ N(0, 1),
//!
//! which is the scale-mixture risk decomposition after the θ²/2r term cancels
//! against the Gaussian factors of N^{HS}.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::horseshoe::ShrinkageSampler;
use crate::model::{variance_share, ParameterVector};
use crate::samples::PredictiveSampleSet;
use crate::specfun::{
    gauss, gauss_cdf, integrate_with_breaks, kernel_mean, ln_normal_pdf, log_phi1_h, phi1_ratios, QuadratureSpec,
    LN_SQRT_2PI,
};

/// Half-width of the standard-normal integration range.
pub const Z_RANGE: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPredictive {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianPredictive {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() || !mean.is_finite() {
            return domain(format!("Gaussian needs finite mean and variance > 0, got ({mean}, {variance})"));
        }
        Ok(Self { mean, variance })
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        ln_normal_pdf(x, self.mean, self.variance)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        gauss_cdf((x - self.mean) / self.variance.sqrt())
    }

    /// KL(N(mean, var) ‖ self).
    pub fn kl_from(&self, mean: f64, variance: f64) -> f64 {
        let ratio = variance / self.variance;
        0.5 * (-ratio.ln() + ratio - 1.0 + (mean - self.mean).powi(2) / self.variance)
    }
}

fn check_pos(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be positive and finite, got {x}"))
    }
}

/// Conjugate predictive for fixed λ, τ: N(t²y, r + t²) with t² = λ²τ²/(1+λ²τ²).
pub fn predictive_fixed_lambda(y: f64, lambda: f64, tau: f64, r: f64) -> Result<GaussianPredictive> {
    check_pos("tau", tau)?;
    check_pos("r", r)?;
    if !(lambda >= 0.0) {
        return domain(format!("lambda must be nonnegative, got {lambda}"));
    }
    let m = (lambda * tau).powi(2);
    let v = variance_share(r);
    let t2 = if m.is_infinite() { 1.0 } else { m / (1.0 + m) };
    let variance = if m.is_infinite() { 1.0 / (1.0 - v) } else { (v + m) / ((1.0 - v) * (1.0 + m)) };
    GaussianPredictive::new(t2 * y, variance)
}

/// KL(N(θ, r) ‖ p̂_λ(· | y)).
///
/// With m = λ²τ² this is
/// (1−v)(1+m)/(2(v+m))·(m y/(1+m) − θ)² + ½ log(1 + (1−v)m/(v(1+m))) − (1−v)m/(2(v+m)).
pub fn kl_loss_fixed_lambda(theta: f64, y: f64, lambda: f64, tau: f64, r: f64) -> Result<f64> {
    let p = predictive_fixed_lambda(y, lambda, tau, r)?;
    Ok(p.kl_from(theta, r).max(0.0))
}

/// Conjugate predictive under θ ~ N(0, 1): N(y/2, r + 1/2).
pub fn gaussian_baseline_predictive(y: f64, r: f64) -> Result<GaussianPredictive> {
    check_pos("r", r)?;
    GaussianPredictive::new(0.5 * y, r + 0.5)
}

/// Exact KL risk of the N(0, 1)-prior predictive at θ.
pub fn gaussian_baseline_kl_risk(theta: f64, r: f64) -> Result<f64> {
    check_pos("r", r)?;
    let var = r + 0.5;
    // E(Y/2 − θ)² = 1/4 + θ²/4
    Ok(0.5 * ((var / r).ln() + (r + 0.25 + 0.25 * theta * theta) / var - 1.0))
}

fn log_h(y: f64, tau: f64) -> Result<f64> {
    let v = log_phi1_h(y, tau);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric(format!("log H({y}, {tau}) failed")))
    }
}

/// Horseshoe predictive density p̂_π(ỹ | y) at fixed τ, as a mixture of the
/// conjugate Gaussians over the local-scale posterior (numerical quadrature).
pub fn predictive_density_fixed_tau(y_future: f64, y: f64, tau: f64, r: f64) -> Result<f64> {
    predictive_log_density_fixed_tau(y_future, y, tau, r).map(f64::exp)
}

/// log of [`predictive_density_fixed_tau`], safe when the density underflows.
pub fn predictive_log_density_fixed_tau(y_future: f64, y: f64, tau: f64, r: f64) -> Result<f64> {
    check_pos("tau", tau)?;
    check_pos("r", r)?;
    let (yf, y) = (y_future, y);
    let log_g = |t2: f64| ln_normal_pdf(yf, t2 * y, r + t2);
    // scale by the largest Gaussian value over t² ∈ [0, 1]
    let mut feats = Vec::new();
    let mut top = log_g(0.0).max(log_g(1.0));
    if y != 0.0 {
        let sd = (r + 1.0).sqrt();
        for k in [-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0] {
            let t2 = (yf + k * sd) / y;
            if t2 > 0.0 && t2 < 1.0 {
                feats.push(t2.sqrt());
                top = top.max(log_g(t2));
            }
        }
    }
    let spec = QuadratureSpec::default();
    let m = kernel_mean(-0.5 * y * y, tau, |t2| (log_g(t2) - top).exp(), &feats, &spec)?;
    if !(m > 0.0) {
        return Err(Error::Numeric(format!("predictive density underflow at y~={yf} y={y} tau={tau}")));
    }
    Ok(m.ln() + top)
}

/// log p̂_π(ỹ | y) from two H evaluations:
/// −½log(2πr) − ỹ²/(2r) − y²/2 + s²/2 + log H(s, τ/√v) − log H(y, τ), s = √v(y + ỹ/r).
pub fn predictive_log_density_closed(y_future: f64, y: f64, tau: f64, r: f64) -> Result<f64> {
    check_pos("tau", tau)?;
    check_pos("r", r)?;
    let v = variance_share(r);
    let s = v.sqrt() * (y + y_future / r);
    Ok(-LN_SQRT_2PI - 0.5 * r.ln() - 0.5 * y_future * y_future / r - 0.5 * y * y
        + 0.5 * s * s
        + log_h(s, tau / v.sqrt())?
        - log_h(y, tau)?)
}

/// P(Ỹ ≤ x | y) under the fixed-τ predictive.
pub fn predictive_cdf_fixed_tau(x: f64, y: f64, tau: f64, r: f64) -> Result<f64> {
    check_pos("tau", tau)?;
    check_pos("r", r)?;
    let mut feats = Vec::new();
    if y != 0.0 {
        let t2 = x / y;
        if t2 > 0.0 && t2 < 1.0 {
            feats.push(t2.sqrt());
        }
    }
    let spec = QuadratureSpec::default();
    kernel_mean(-0.5 * y * y, tau, |t2| gauss_cdf((x - t2 * y) / (r + t2).sqrt()), &feats, &spec)
}

fn expect_z<F: Fn(f64) -> Result<f64>>(f: F, breaks: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    let mut pts = vec![-Z_RANGE, Z_RANGE];
    pts.extend(breaks.iter().copied().filter(|b| b.abs() < Z_RANGE));
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let mut failure = None;
    let g = |z: f64| match f(z) {
        Ok(v) => gauss(z) * v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let est = integrate_with_breaks(g, &pts, spec);
    if let Some(e) = failure {
        return Err(e);
    }
    match est {
        Ok(e) => Ok(e.value),
        Err(Error::NoConvergence { estimate, error }) if error <= (1e-7 * estimate.abs()).max(1e-12) => Ok(estimate),
        Err(e) => Err(e),
    }
}

/// Exact predictive KL risk ρ(θ, p̂) of the fixed-τ Horseshoe predictive.
pub fn kl_risk_fixed_tau(theta: f64, tau: f64, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_pos("tau", tau)?;
    check_pos("r", r)?;
    let theta = theta.abs();
    let v = variance_share(r);
    let sv = v.sqrt();
    let (shift, tau_v) = (theta / sv, tau / sv);
    let f = |z: f64| Ok(log_h(z + theta, tau)? - log_h(z + shift, tau_v)?);
    let risk = expect_z(f, &[0.0, -theta, -shift], spec)?;
    Ok(risk.max(0.0))
}

/// Upper bound on ρ(θ, p̂) from mixing the conjugate KL losses over π(λ | y):
/// (1−v)/6·E[R₁(Y)(Y−θ)²] + (1−v)/3·E[R₂(Y)(θ²/v − 2θ(Y−θ))], Y ~ N(θ, 1),
/// where R₁ = Φ₁(1,1,5/2)/Φ₁(1,1,3/2) and R₂ = Φ₁(2,1,5/2)/Φ₁(1,1,3/2).
pub fn risk_bound_spectroscopy(theta: f64, tau: f64, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_pos("tau", tau)?;
    check_pos("r", r)?;
    let v = variance_share(r);
    let inner = QuadratureSpec::default();
    let f = |z: f64| {
        let (r1, r2) = phi1_ratios(theta + z, tau, &inner)?;
        Ok((1.0 - v) / 6.0 * r1 * z * z + (1.0 - v) / 3.0 * r2 * (theta * theta / v - 2.0 * theta * z))
    };
    expect_z(f, &[0.0, -theta], spec)
}

/// ρ(θ, p̂) on a set of θ values.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskCurve {
    pub thetas: Vec<f64>,
    pub risks: Vec<f64>,
    pub tau: f64,
    pub r: f64,
}

impl RiskCurve {
    pub fn argmax(&self) -> Option<(f64, f64)> {
        self.thetas.iter().zip(&self.risks).fold(None, |best: Option<(f64, f64)>, (&t, &rk)| match best {
            Some((_, b)) if b >= rk => best,
            _ => Some((t, rk)),
        })
    }
}

/// Evaluate ρ over `thetas` (parallel; results keep the input order).
pub fn risk_curve(thetas: &[f64], tau: f64, r: f64, spec: &QuadratureSpec) -> Result<RiskCurve> {
    let risks = thetas.par_iter().map(|&t| kl_risk_fixed_tau(t, tau, r, spec)).collect::<Result<Vec<_>>>()?;
    Ok(RiskCurve { thetas: thetas.to_vec(), risks, tau, r })
}

/// Upper end of the θ search range for sup_θ ρ: 3√(2 log(1/τ)) + 10.
pub fn sup_search_limit(tau: f64) -> f64 {
    3.0 * (2.0 * (1.0 / tau).ln().max(0.0)).sqrt() + 10.0
}

pub const SUP_GRID_POINTS: usize = 401;

/// sup_θ ρ(θ, p̂): 401-point grid on [0, sup_search_limit(τ)] then golden
/// section on the bracket around the best grid point. Returns (θ*, ρ(θ*)).
pub fn sup_risk_fixed_tau(tau: f64, r: f64, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let hi = sup_search_limit(tau);
    let thetas: Vec<f64> = (0..SUP_GRID_POINTS).map(|k| hi * k as f64 / (SUP_GRID_POINTS - 1) as f64).collect();
    let curve = risk_curve(&thetas, tau, r, spec)?;
    let (mut best_t, mut best) = curve.argmax().expect("grid is nonempty");
    let k = thetas.iter().position(|&t| t == best_t).unwrap();
    let (mut a, mut b) = (thetas[k.saturating_sub(1)], thetas[(k + 1).min(thetas.len() - 1)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let risk = |t: f64| kl_risk_fixed_tau(t, tau, r, spec);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (risk(c)?, risk(d)?);
    for _ in 0..80 {
        if b - a < 1e-7 * (1.0 + best_t) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = risk(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = risk(d)?;
        }
    }
    for (t, f) in [(c, fc), (d, fd)] {
        if f > best {
            best = f;
            best_t = t;
        }
    }
    Ok((best_t, best))
}

/// (n − sₙ)ρ(0) + sₙ·sup_θ ρ(θ).
pub fn max_risk_fixed_tau(n: usize, s_n: usize, tau: f64, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    if s_n == 0 || s_n >= n {
        return domain(format!("need 1 <= s_n < n, got s_n={s_n} n={n}"));
    }
    let zero = kl_risk_fixed_tau(0.0, tau, r, spec)?;
    let (_, sup) = sup_risk_fixed_tau(tau, r, spec)?;
    Ok((n - s_n) as f64 * zero + s_n as f64 * sup)
}

/// Σᵢ ρ(θᵢ, p̂): the total predictive risk of the product predictive at fixed τ.
/// Repeated |θᵢ| values are evaluated once.
pub fn total_risk_fixed_tau(theta: &ParameterVector, tau: f64, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    let mut mags: Vec<f64> = theta.theta().iter().map(|t| t.abs()).collect();
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for m in mags {
        match groups.last_mut() {
            Some((v, c)) if *v == m => *c += 1,
            _ => groups.push((m, 1)),
        }
    }
    let risks = groups.par_iter().map(|&(t, _)| kl_risk_fixed_tau(t, tau, r, spec)).collect::<Result<Vec<_>>>()?;
    Ok(groups.iter().zip(&risks).map(|(&(_, c), &rk)| c as f64 * rk).sum())
}

/// Draws from the fixed-τ predictive, coordinates independent: per draw and
/// coordinate, t² from the local-scale posterior, then ỹ ~ N(t²yᵢ, r + t²).
/// Row l of the result is the l-th predictive vector.
pub fn sample_predictive_fixed_tau<R: Rng + ?Sized>(
    y: &[f64],
    tau: f64,
    r: f64,
    count: usize,
    rng: &mut R,
) -> Result<PredictiveSampleSet> {
    check_pos("tau", tau)?;
    check_pos("r", r)?;
    if y.iter().any(|v| !v.is_finite()) {
        return domain("observations must be finite");
    }
    let n = y.len();
    let mut data = vec![0.0; count * n];
    let mut t2 = vec![0.0; count];
    for (i, &yi) in y.iter().enumerate() {
        ShrinkageSampler::new(yi, tau).fill_t2(rng, &mut t2);
        for (l, &t) in t2.iter().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            data[l * n + i] = t * yi + (r + t).sqrt() * z;
        }
    }
    PredictiveSampleSet::new(count, n, data)
}

#[cfg(test)]
mod tests;

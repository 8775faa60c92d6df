//! Humbert's confluent hypergeometric function Φ₁ of two variables.
//!
//! Φ₁(a,b,c,x,y) = Γ(c)/(Γ(a)Γ(c−a)) ∫₀¹ u^{a−1}(1−u)^{c−a−1}(1−yu)^{−b} e^{xu} du.
//!
//! The model only ever needs (a,b,c) ∈ {(1,1,3/2), (1,1,5/2), (2,1,5/2)}. For
//! those, u = 1−t² gives
//!
//! Φ₁ = k ∫₀¹ P(t) e^{x(1−t²)} / (τ² + (1−τ²)t²) dt,   τ² = 1−y,
//!
//! with (k, P) = (1, 1), (3, t²), (3/2, 1−t²). The denominator has a
//! Lorentzian spike of width τ at t = 0 when τ is small and a spike at t = 1
//! when τ is large; both are flattened by a change of variable (tan or tanh)
//! whose Jacobian cancels the denominator exactly. What remains is a bounded
//! integrand whose only features come from the exponential, and those sit at
//! known places (1−t² ≈ k/|x|), which become breakpoints.

use super::quadrature::{integrate_with_breaks, QuadratureSpec};
use crate::error::{domain, Error, Result};

/// Arguments of Φ₁. Construct with [`Phi1Args::new`] to get validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phi1Args {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub x: f64,
    pub y: f64,
}

impl Phi1Args {
    pub fn new(a: f64, b: f64, c: f64, x: f64, y: f64) -> Result<Self> {
        let args = Self { a, b, c, x, y };
        args.validate()?;
        Ok(args)
    }

    fn validate(&self) -> Result<()> {
        if ![self.a, self.b, self.c, self.x, self.y].iter().all(|v| v.is_finite()) {
            return domain("Phi1 arguments must be finite");
        }
        if !(self.c > self.a && self.a > 0.0) {
            return domain(format!("Phi1 needs c > a > 0, got a={} c={}", self.a, self.c));
        }
        if !(self.y < 1.0) {
            return domain(format!("Phi1 needs y < 1, got {}", self.y));
        }
        Ok(())
    }
}

/// Polynomial weight left over after the u = 1−t² substitution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    /// (1, 1, 3/2): P = 1
    Flat,
    /// (1, 1, 5/2): P = t²
    Square,
    /// (2, 1, 5/2): P = 1−t²
    Complement,
}

impl Weight {
    fn from_triple(a: f64, b: f64, c: f64) -> Option<Self> {
        match (a, b, c) {
            (1.0, 1.0, 1.5) => Some(Weight::Flat),
            (1.0, 1.0, 2.5) => Some(Weight::Square),
            (2.0, 1.0, 2.5) => Some(Weight::Complement),
            _ => None,
        }
    }

    /// 2·Γ(c)/(Γ(a)Γ(c−a)): the Γ-prefactor times the Jacobian of u = 1−t².
    fn factor(self) -> f64 {
        match self {
            Weight::Flat => 1.0,
            Weight::Square => 3.0,
            Weight::Complement => 1.5,
        }
    }

    #[inline]
    fn at(self, t2: f64, omt2: f64) -> f64 {
        match self {
            Weight::Flat => 1.0,
            Weight::Square => t2,
            Weight::Complement => omt2,
        }
    }
}

#[derive(Clone, Copy)]
enum Map {
    /// τ < 1/2: t = r/tan d on d ∈ [atan r, π/2], r = τ/√(1−τ²); dt/D = −dd/(τ√(1−τ²)).
    /// t = 1 sits at the small end, so the t ≈ 1 feature keeps full resolution.
    Cot { r: f64 },
    /// moderate τ: plain t, D bounded between min(τ²,1) and max(τ²,1).
    Plain { tau2: f64 },
    /// τ > 2: t = r·tanh(Σ − e) on e ∈ [0, Σ], r = τ/b, b = √(τ²−1), Σ = ln(τ+b);
    /// dt/D = −de/(τb). 1−t is formed directly from tanh e.
    Tanh { b: f64, tau: f64 },
}

impl Map {
    /// (map, lower and upper limit of the mapped variable, log of the constant Jacobian)
    fn for_tau(tau: f64) -> (Map, f64, f64, f64) {
        if tau < 0.5 {
            let a = ((1.0 - tau) * (1.0 + tau)).sqrt();
            let r = tau / a;
            (Map::Cot { r }, r.atan(), std::f64::consts::FRAC_PI_2, -(tau * a).ln())
        } else if tau <= 2.0 {
            (Map::Plain { tau2: tau * tau }, 0.0, 1.0, 0.0)
        } else {
            let b = ((tau - 1.0) * (tau + 1.0)).sqrt();
            (Map::Tanh { b, tau }, 0.0, (tau + b).ln(), -(tau * b).ln())
        }
    }

    /// (t², 1−t²) at the mapped variable
    #[inline]
    fn eval(self, s: f64) -> (f64, f64) {
        match self {
            Map::Cot { r } => {
                let t = (r / s.tan()).min(1.0);
                let t2 = t * t;
                (t2, (1.0 - t) * (1.0 + t))
            }
            Map::Plain { .. } => (s * s, (1.0 - s) * (1.0 + s)),
            Map::Tanh { b, tau } => {
                let th = s.tanh();
                let omt = th / (b * tau * (1.0 - (b / tau) * th));
                let t = 1.0 - omt;
                (t * t, omt * (2.0 - omt))
            }
        }
    }

    fn s_of(self, t: f64) -> f64 {
        match self {
            Map::Cot { r } => {
                if t == 0.0 {
                    std::f64::consts::FRAC_PI_2
                } else {
                    (r / t).atan()
                }
            }
            Map::Plain { .. } => t,
            Map::Tanh { b, tau } => {
                let omt = 1.0 - t;
                (omt * b * tau / (1.0 + omt * b * b)).atanh()
            }
        }
    }
}

/// log of J_P(x, τ) = ∫₀¹ P(t) e^{x(1−t²)} / (τ² + (1−τ²)t²) dt.
pub fn log_kernel(weight: Weight, x: f64, tau: f64, spec: &QuadratureSpec) -> Result<f64> {
    log_kernel_range(weight, x, tau, 0.0, 1.0, spec)
}

/// log of the same integral restricted to t ∈ [t_lo, t_hi] ⊂ [0, 1].
pub fn log_kernel_range(weight: Weight, x: f64, tau: f64, t_lo: f64, t_hi: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(tau > 0.0) || !tau.is_finite() || !x.is_finite() {
        return domain(format!("kernel needs finite x and tau > 0, got x={x} tau={tau}"));
    }
    if !(0.0 <= t_lo && t_lo < t_hi && t_hi <= 1.0) {
        return domain(format!("kernel range must satisfy 0 <= t_lo < t_hi <= 1, got [{t_lo}, {t_hi}]"));
    }
    let full = t_lo == 0.0 && t_hi == 1.0;
    let w = -x;
    if full && weight == Weight::Flat && w > 1e12 * tau.max(1.0).powi(2) {
        // Laplace expansion at t = 1; the neglected term is O(w⁻²).
        return Ok(-(2.0 * w).ln() + ((1.5 - tau * tau) / w).ln_1p());
    }
    let (est, scale) = kernel_core(|t2, omt2| weight.at(t2, omt2), x, tau, t_lo, t_hi, &[], spec)?;
    if !(est > 0.0) {
        if !full && est == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        return Err(Error::Numeric(format!("kernel integral underflow at x={x} tau={tau}")));
    }
    Ok(est.ln() + scale)
}

/// Posterior-style average of `g(t²)` under the weight e^{x(1−t²)}/(τ²+(1−τ²)t²)
/// on [0, 1]. `g` must be nonnegative. `features` lists t-values where `g`
/// changes quickly; they become quadrature breakpoints.
pub fn kernel_mean<G: Fn(f64) -> f64>(x: f64, tau: f64, g: G, features: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    if !(tau > 0.0) || !tau.is_finite() || !x.is_finite() {
        return domain(format!("kernel needs finite x and tau > 0, got x={x} tau={tau}"));
    }
    let (den, _) = kernel_core(|_, _| 1.0, x, tau, 0.0, 1.0, features, spec)?;
    let (num, _) = kernel_core(|t2, _| g(t2), x, tau, 0.0, 1.0, features, spec)?;
    if !(den > 0.0) {
        return Err(Error::Numeric(format!("kernel integral underflow at x={x} tau={tau}")));
    }
    Ok(num / den)
}

// Returns (I, c) with the integral equal to I·e^c.
fn kernel_core<G: Fn(f64, f64) -> f64>(
    g: G,
    x: f64,
    tau: f64,
    t_lo: f64,
    t_hi: f64,
    features: &[f64],
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let full = t_lo == 0.0 && t_hi == 1.0;
    let (map, lo_full, hi_full, log_jac) = Map::for_tau(tau);
    let (lo, hi) = if full {
        (lo_full, hi_full)
    } else {
        let (a, b) = (map.s_of(t_lo), map.s_of(t_hi));
        (a.min(b), a.max(b))
    };

    let mut ts: Vec<f64> = Vec::with_capacity(48 + features.len());
    if let Map::Cot { r } = map {
        // dyadic t-levels resolve the region where the cot map compresses t ~ 1
        let mut t = 0.5;
        while t > r && ts.len() < 64 {
            if t > t_lo && t < t_hi {
                ts.push(t);
            }
            t *= 0.5;
        }
    }
    let mag = x.abs();
    let mut k = 1.0;
    while k < mag && k < 1e18 {
        let t = if x < 0.0 { (1.0 - k / mag).sqrt() } else { (k / mag).sqrt() };
        if t > t_lo && t < t_hi {
            ts.push(t);
        }
        k *= 2.0;
    }
    ts.extend(features.iter().copied().filter(|&t| t > t_lo && t < t_hi));
    let mut pts: Vec<f64> = ts.iter().map(|&t| map.s_of(t)).filter(|&s| s > lo && s < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();

    let f = |s: f64| {
        let (t2, omt2) = map.eval(s);
        let omt2 = omt2.max(0.0);
        let e = if x <= 0.0 { x * omt2 } else { -x * t2 };
        let mut v = g(t2, omt2) * e.exp();
        if let Map::Plain { tau2 } = map {
            v /= tau2 + (1.0 - tau2) * t2;
        }
        v
    };
    let est = match integrate_with_breaks(f, &pts, spec) {
        Ok(e) => e.value,
        Err(Error::NoConvergence { estimate, error }) if error <= 1e-6 * estimate.abs() => estimate,
        Err(e) => return Err(e),
    };
    Ok((est, log_jac + x.max(0.0)))
}

/// log Φ₁(a,b,c,x,y).
pub fn log_phi1(args: Phi1Args, spec: &QuadratureSpec) -> Result<f64> {
    args.validate()?;
    match Weight::from_triple(args.a, args.b, args.c) {
        Some(wt) => {
            let tau = (1.0 - args.y).sqrt();
            Ok(wt.factor().ln() + log_kernel(wt, args.x, tau, spec)?)
        }
        None => log_phi1_generic(args, spec),
    }
}

/// Φ₁(a,b,c,x,y). Fails with a numeric error if the value overflows; use
/// [`log_phi1`] or [`phi1_scaled`] for large positive x.
pub fn phi1(args: Phi1Args, spec: &QuadratureSpec) -> Result<f64> {
    let l = log_phi1(args, spec)?;
    let v = l.exp();
    if !v.is_finite() {
        return Err(Error::Numeric(format!("Phi1 overflows (log value {l})")));
    }
    Ok(v)
}

/// e^{−max(x,0)}·Φ₁(a,b,c,x,y), finite for every admissible argument.
pub fn phi1_scaled(args: Phi1Args, spec: &QuadratureSpec) -> Result<f64> {
    Ok((log_phi1(args, spec)? - args.x.max(0.0)).exp())
}

/// Slow path for arbitrary c > a > 0: split at u = 1/2 and straighten each
/// endpoint power with u = s^{1/a} and 1−u = v^{1/(c−a)}.
fn log_phi1_generic(args: Phi1Args, spec: &QuadratureSpec) -> Result<f64> {
    let Phi1Args { a, b, c, x, y } = args;
    let shift = x.max(0.0);
    let ca = c - a;
    let body = |u: f64| (1.0 - y * u).powf(-b) * (x * u - shift).exp();
    let left = |s: f64| {
        let u = s.powf(1.0 / a);
        (1.0 - u).powf(ca - 1.0) * body(u) / a
    };
    let right = |v: f64| {
        let omu = v.powf(1.0 / ca);
        let u = 1.0 - omu;
        u.powf(a - 1.0) * body(u) / ca
    };
    let s_hi = 0.5f64.powf(a);
    let v_hi = 0.5f64.powf(ca);
    let mut right_pts = vec![0.0, v_hi];
    if y > 0.0 {
        // the pole at u = 1/y sits (1−y)/y beyond u = 1
        let vb = ((1.0 - y) / y).powf(ca);
        if vb > 0.0 && vb < v_hi {
            right_pts.insert(1, vb);
        }
    }
    let l = integrate_with_breaks(left, &[0.0, s_hi], spec)?.value;
    let r = integrate_with_breaks(right, &right_pts, spec)?.value;
    let total = l + r;
    if !(total > 0.0) {
        return Err(Error::Numeric("Phi1 integral underflow".into()));
    }
    let lg = libm::lgamma(c) - libm::lgamma(a) - libm::lgamma(ca);
    Ok(lg + total.ln() + shift)
}

/// log H(y, τ) with H(y, τ) = τ·Φ₁(1, 1, 3/2, −y²/2, 1−τ²).
///
/// H is, up to the constant 2/(π√(2π)), the marginal density of one
/// observation under the Horseshoe prior with global scale τ, i.e. the λ-integral
/// ∫₀^∞ (1+λ²τ²)^{−1/2} e^{−y²/(2(1+λ²τ²))} /(1+λ²) dλ.
pub fn log_phi1_h(y_obs: f64, tau: f64) -> f64 {
    log_h_with(y_obs, tau, &HOT_SPEC)
}

pub(crate) const HOT_SPEC: QuadratureSpec = QuadratureSpec { rel_tol: 1e-11, abs_tol: 0.0, max_subdivisions: 400 };

/// [`log_phi1_h`] with an explicit tolerance for the quadrature branch.
pub fn log_h_with(y_obs: f64, tau: f64, spec: &QuadratureSpec) -> f64 {
    let x = -0.5 * y_obs * y_obs;
    if tau > 0.0 && tau < 0.5 && -x <= 600.0 {
        return tau.ln() + log_kernel_series(-x, tau);
    }
    match log_kernel(Weight::Flat, x, tau, spec) {
        Ok(v) => tau.ln() + v,
        Err(_) => f64::NAN,
    }
}

/// log J for the flat weight via e^{wt²} = Σ (wt²)^k/k!:
///
/// J = e^{−w} Σ_k (w^k/k!) I_k,  I_k = ∫₀¹ t^{2k}/(τ²+a²t²) dt,  a² = 1−τ².
///
/// I_k = (1/(2k−1) − τ²I_{k−1})/a² is stable forward whenever τ² < a², and all
/// terms are positive, so the sum carries no cancellation. Needs w ≤ ~700.
fn log_kernel_series(w: f64, tau: f64) -> f64 {
    let a2 = (1.0 - tau) * (1.0 + tau);
    let a = a2.sqrt();
    let mut ik = (a / tau).atan() / (a * tau);
    let mut term = 1.0;
    let mut sum = ik;
    let mut k = 1.0;
    loop {
        ik = (1.0 / (2.0 * k - 1.0) - tau * tau * ik) / a2;
        term *= w / k;
        let add = term * ik;
        sum += add;
        if k > w {
            let ratio = w / (k + 1.0);
            if add < 1e-17 * sum * (1.0 - ratio) {
                break;
            }
        }
        k += 1.0;
    }
    sum.ln() - w
}

/// Ratios Φ₁(1,1,5/2,·)/Φ₁(1,1,3/2,·) and Φ₁(2,1,5/2,·)/Φ₁(1,1,3/2,·) at
/// (−y²/2, 1−τ²). With t² = λ²τ²/(1+λ²τ²) = 1−κ these are 3·E[1−κ] and
/// (3/2)·E[κ] under the λ-posterior.
pub fn phi1_ratios(y_obs: f64, tau: f64, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let x = -0.5 * y_obs * y_obs;
    let base = log_kernel(Weight::Flat, x, tau, spec)?;
    let sq = log_kernel(Weight::Square, x, tau, spec)?;
    let sc = log_kernel(Weight::Complement, x, tau, spec)?;
    Ok((3.0 * (sq - base).exp(), 1.5 * (sc - base).exp()))
}

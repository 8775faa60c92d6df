//! Sparse Gaussian sequence model: Y ~ N(θ, Iₙ), future Ỹ ~ N(θ, r·Iₙ).

use crate::error::{domain, Result};

/// Dimension and future-variance ratio, plus the derived share v = (1+1/r)⁻¹.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceProblem {
    n: usize,
    r: f64,
    v: f64,
}

impl SequenceProblem {
    pub fn new(n: usize, r: f64) -> Result<Self> {
        if n == 0 {
            return domain("dimension n must be positive");
        }
        if !(r > 0.0) || !r.is_finite() {
            return domain(format!("variance ratio r must be positive and finite, got {r}"));
        }
        Ok(Self { n, r, v: variance_share(r) })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn v(&self) -> f64 {
        self.v
    }
}

/// v = (1 + 1/r)⁻¹ = r/(1+r).
#[inline]
pub fn variance_share(r: f64) -> f64 {
    r / (1.0 + r)
}

/// A mean vector with its support cached.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    theta: Vec<f64>,
    support: Vec<usize>,
}

impl ParameterVector {
    pub fn new(theta: Vec<f64>) -> Self {
        let support = theta.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect();
        Self { theta, support }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
    pub fn support(&self) -> &[usize] {
        &self.support
    }
    pub fn len(&self) -> usize {
        self.theta.len()
    }
    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
    pub fn nnz(&self) -> usize {
        self.support.len()
    }
}

/// Θₙ(sₙ, c): at most sₙ nonzeros, each above c·√(2 log n) in magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaMinSpec {
    pub s_n: usize,
    pub c: f64,
}

impl ThetaMinSpec {
    pub fn contains(&self, p: &ParameterVector) -> bool {
        if p.nnz() > self.s_n {
            return false;
        }
        let floor = self.c * detection_scale(p.len());
        p.support().iter().all(|&i| p.theta()[i].abs() > floor)
    }
}

/// √(2 log n).
pub fn detection_scale(n: usize) -> f64 {
    (2.0 * (n as f64).ln()).sqrt()
}

/// Global shrinkage scale τ > 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct GlobalScale(f64);

impl GlobalScale {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return domain(format!("tau must be positive and finite, got {tau}"));
        }
        Ok(Self(tau))
    }
    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_sparsity(n: usize, s_n: usize) -> Result<()> {
    if s_n == 0 || s_n >= n {
        return domain(format!("need 1 <= s_n < n, got s_n={s_n} n={n}"));
    }
    Ok(())
}

/// sₙ/(1+r)·log(n/sₙ).
pub fn minimax_rate(n: usize, s_n: usize, r: f64) -> Result<f64> {
    check_sparsity(n, s_n)?;
    if !(r > 0.0) {
        return domain(format!("r must be positive, got {r}"));
    }
    Ok(s_n as f64 / (1.0 + r) * (n as f64 / s_n as f64).ln())
}

/// τ_{n,α} = sₙ·log^α(n/sₙ)/n for α ∈ [0, 1/2].
pub fn tau_calibration(n: usize, s_n: usize, alpha: f64) -> Result<GlobalScale> {
    check_sparsity(n, s_n)?;
    if !(0.0..=0.5).contains(&alpha) {
        return domain(format!("alpha must lie in [0, 1/2], got {alpha}"));
    }
    let ratio = n as f64 / s_n as f64;
    GlobalScale::new(s_n as f64 * ratio.ln().powf(alpha) / n as f64)
}

/// Simulation designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setup {
    /// s strong signals at 3√(2 log n).
    Setup1,
    /// Setup1 plus weak signals at 0.3√(2 log n) filling up to n/2 nonzeros.
    Setup2,
    /// s* strong signals at c√(2 log n) plus weak ones up to a fixed total.
    StrongWeak,
}

/// Setup-specific counts. `None` means the design default.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThetaExtras {
    /// Setup2: number of weak signals (default n/2 − s_strong).
    pub weak_count: Option<usize>,
    /// StrongWeak: total number of nonzeros (default 300).
    pub total_nonzero: Option<usize>,
    /// StrongWeak: weak level as a multiple of √(2 log n) (default 0.3).
    pub weak_multiplier: Option<f64>,
}

pub const STRONG_WEAK_TOTAL: usize = 300;
pub const STRONG_WEAK_WEAK_MULTIPLIER: f64 = 0.3;
const SETUP_STRONG: f64 = 3.0;
const SETUP2_WEAK: f64 = 0.3;

/// Build θ for a simulation design. Nonzeros occupy the lowest indices,
/// strong first. `c` is the strong multiplier for StrongWeak; Setup1 and
/// Setup2 use their fixed level 3.
pub fn make_theta(setup: Setup, n: usize, s_strong: usize, c: f64, extras: &ThetaExtras) -> Result<ParameterVector> {
    if n == 0 {
        return domain("dimension n must be positive");
    }
    let scale = detection_scale(n);
    let (strong_level, weak_level, weak) = match setup {
        Setup::Setup1 => (SETUP_STRONG * scale, 0.0, 0),
        Setup::Setup2 => {
            let weak = match extras.weak_count {
                Some(k) => k,
                None => (n / 2)
                    .checked_sub(s_strong)
                    .ok_or_else(|| crate::Error::Domain(format!("s_strong={s_strong} exceeds n/2={}", n / 2)))?,
            };
            (SETUP_STRONG * scale, SETUP2_WEAK * scale, weak)
        }
        Setup::StrongWeak => {
            if !(c > 0.0) {
                return domain(format!("signal multiplier c must be positive, got {c}"));
            }
            let total = extras.total_nonzero.unwrap_or(STRONG_WEAK_TOTAL);
            let weak = total
                .checked_sub(s_strong)
                .ok_or_else(|| crate::Error::Domain(format!("s_strong={s_strong} exceeds total nonzeros {total}")))?;
            let m = extras.weak_multiplier.unwrap_or(STRONG_WEAK_WEAK_MULTIPLIER);
            if !(m > 0.0) {
                return domain(format!("weak multiplier must be positive, got {m}"));
            }
            (c * scale, m * scale, weak)
        }
    };
    if s_strong + weak > n {
        return domain(format!("{s_strong} strong + {weak} weak signals exceed n={n}"));
    }
    let mut theta = vec![0.0; n];
    theta[..s_strong].iter_mut().for_each(|v| *v = strong_level);
    theta[s_strong..s_strong + weak].iter_mut().for_each(|v| *v = weak_level);
    Ok(ParameterVector::new(theta))
}

//! Standard normal density and distribution function.

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// φ(x).
#[inline]
pub fn gauss(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Φ(x), via the complementary error function so both tails keep full
/// relative precision.
#[inline]
pub fn gauss_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// log of the N(mean, var) density at x.
#[inline]
pub fn ln_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -LN_SQRT_2PI - 0.5 * var.ln() - 0.5 * d * d / var
}

/// Inverse of Φ by Newton refinement of a rational start. Used for test
/// fixtures and quantile bookkeeping, not in hot loops.
pub fn gauss_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    // Acklam-style start, then Halley steps on Φ(x) − p.
    let q = if p < 0.5 { p } else { 1.0 - p };
    let t = (-2.0 * q.ln()).sqrt();
    let mut x = -(t
        - (2.515517 + 0.802853 * t + 0.010328 * t * t)
            / (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t));
    if p > 0.5 {
        x = -x;
    }
    for _ in 0..4 {
        let e = gauss_cdf(x) - p;
        let d = gauss(x);
        if d == 0.0 {
            break;
        }
        let u = e / d;
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((gauss(0.0) - 0.3989422804014327).abs() < 1e-15);
        assert_eq!(gauss_cdf(0.0), 0.5);
        assert!((gauss_cdf(-1.959963984540054) - 0.025).abs() < 1e-14);
        assert!((gauss_cdf(1.0) - 0.8413447460685429).abs() < 1e-15);
        // deep tail keeps relative accuracy
        let t = gauss_cdf(-10.0);
        assert!((t / 7.619853024160527e-24 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-10, 0.001, 0.025, 0.3, 0.5, 0.77, 0.999] {
            assert!((gauss_cdf(gauss_quantile(p)) / p - 1.0).abs() < 1e-12, "p={p}");
        }
    }
}

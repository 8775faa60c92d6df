use super::*;
use crate::model::{minimax_rate, tau_calibration};
use crate::rng::stream;
use crate::specfun::{integrate_adaptive, integrate_smooth};
use proptest::prelude::*;
use std::f64::consts::PI;

fn spec() -> QuadratureSpec {
    QuadratureSpec::new(1e-9, 0.0, 400).unwrap()
}

#[test]
fn fixed_lambda_examples() {
    let p = predictive_fixed_lambda(3.7, 0.0, 0.4, 2.5).unwrap();
    assert_eq!(p.mean, 0.0);
    assert!((p.variance - 2.5).abs() < 1e-14);
    let p = predictive_fixed_lambda(1.3, 1e9, 1.0, 0.5).unwrap();
    assert!((p.mean - 1.3).abs() < 1e-12);
    assert!((p.variance - 1.5).abs() < 1e-12);
    let p = predictive_fixed_lambda(2.0, 1.0, 1.0, 1.0).unwrap();
    assert!((p.mean - 1.0).abs() < 1e-15);
    assert!((p.variance - 1.5).abs() < 1e-15);
    assert!(predictive_fixed_lambda(1.0, -1.0, 1.0, 1.0).is_err());
    assert!(GaussianPredictive::new(0.0, 0.0).is_err());
}

// KL(N(θ, r) ‖ q) by direct quadrature of p·log(p/q)
fn kl_oracle(theta: f64, r: f64, q: &GaussianPredictive) -> f64 {
    let sd = r.sqrt();
    let f = |x: f64| {
        let lp = ln_normal_pdf(x, theta, r);
        lp.exp() * (lp - q.ln_pdf(x))
    };
    integrate_smooth(f, theta - 20.0 * sd, theta + 20.0 * sd, &QuadratureSpec::new(1e-13, 0.0, 200).unwrap()).unwrap()
}

#[test]
fn kl_loss_examples() {
    assert_eq!(kl_loss_fixed_lambda(0.0, 5.0, 0.0, 0.3, 1.7).unwrap(), 0.0);
    // m → ∞ with y = θ: ½log(1/v) − (1−v)/2
    for &r in &[0.5, 1.0, 3.0] {
        let v = variance_share(r);
        let got = kl_loss_fixed_lambda(2.0, 2.0, 1e12, 1.0, r).unwrap();
        assert!((got - (0.5 * (1.0 / v).ln() - 0.5 * (1.0 - v))).abs() < 1e-10, "r={r}");
    }
    // (θ=1, y=2, m=1, r=1)
    let q = predictive_fixed_lambda(2.0, 1.0, 1.0, 1.0).unwrap();
    let want = kl_oracle(1.0, 1.0, &q);
    let got = kl_loss_fixed_lambda(1.0, 2.0, 1.0, 1.0, 1.0).unwrap();
    assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    assert!((got - (0.5 * (1.5f64).ln() - 1.0 / 6.0)).abs() < 1e-15);
}

#[test]
fn kl_closed_form_terms() {
    // the quadratic and linear terms of the closed form, with the log term ½log(V/r)
    for &(theta, y, m, r) in &[(0.3, 1.2, 0.7, 1.0), (-2.0, 4.0, 30.0, 0.4), (1.0, -1.0, 1e-3, 5.0)] {
        let v = variance_share(r);
        let quad = 0.5 * (1.0 - v) * (1.0 + m) / (v + m) * (m / (1.0 + m) * y - theta).powi(2);
        let lin = 0.5 * (1.0 - v) * m / (v + m);
        let log = 0.5 * ((1.0 - v) * m / (v * (1.0 + m))).ln_1p();
        let got = kl_loss_fixed_lambda(theta, y, m.sqrt(), 1.0, r).unwrap();
        assert!((got - (quad + log - lin)).abs() < 1e-13);
        let q = predictive_fixed_lambda(y, m.sqrt(), 1.0, r).unwrap();
        assert!((got - kl_oracle(theta, r, &q)).abs() < 1e-11);
    }
}

#[test]
fn baseline_examples() {
    let p = gaussian_baseline_predictive(0.0, 2.0).unwrap();
    assert_eq!((p.mean, p.variance), (0.0, 2.5));
    let p = gaussian_baseline_predictive(4.0, 1.0).unwrap();
    assert_eq!((p.mean, p.variance), (2.0, 1.5));
    let r = 1.0;
    let closed = gaussian_baseline_kl_risk(0.0, r).unwrap();
    assert!((closed - 0.5 * ((1.0 + 0.5 / r).ln() + (r + 0.25) / (r + 0.5) - 1.0)).abs() < 1e-15);
    assert!(closed > kl_risk_fixed_tau(0.0, 0.05, r, &spec()).unwrap());
}

// p̂(ỹ|y) = ∫N(ỹ; t²y, r+t²)N(y; 0, 1+λ²τ²)ν(λ)dλ / ∫N(y; 0, 1+λ²τ²)ν(λ)dλ
fn density_oracle(yf: f64, y: f64, tau: f64, r: f64) -> f64 {
    let s = QuadratureSpec::new(1e-12, 0.0, 4000).unwrap();
    let mix = |g: &dyn Fn(f64) -> f64| {
        let f = |u: f64| {
            if u >= 1.0 {
                return 0.0;
            }
            let l = u / (1.0 - u);
            g(l) * (2.0 / PI) / (1.0 + l * l) / (1.0 - u).powi(2)
        };
        integrate_adaptive(f, 0.0, 1.0, &s).unwrap()
    };
    let like = |l: f64| ln_normal_pdf(y, 0.0, 1.0 + (l * tau).powi(2)).exp();
    let num = mix(&|l: f64| {
        let p = predictive_fixed_lambda(y, l, tau, r).unwrap();
        p.pdf(yf) * like(l)
    });
    num / mix(&like)
}

#[test]
fn predictive_density_oracle() {
    for &(yf, y, tau, r) in &[(1.0, 4.0, 0.05, 1.0), (-0.5, 1.0, 0.3, 2.0), (6.0, 7.0, 0.01, 0.5), (0.0, 0.0, 2.0, 1.0)]
    {
        let want = density_oracle(yf, y, tau, r);
        let got = predictive_density_fixed_tau(yf, y, tau, r).unwrap();
        assert!((got / want - 1.0).abs() < 1e-8, "({yf},{y},{tau},{r}): {got} vs {want}");
        let closed = predictive_log_density_closed(yf, y, tau, r).unwrap().exp();
        assert!((closed / want - 1.0).abs() < 1e-8, "closed ({yf},{y},{tau},{r}): {closed} vs {want}");
    }
}

#[test]
fn predictive_density_normalized() {
    let (y, tau, r) = (3.0, 0.05, 1.0);
    let s = QuadratureSpec::new(1e-10, 0.0, 400).unwrap();
    let mass = integrate_smooth(|x| predictive_density_fixed_tau(x, y, tau, r).unwrap(), -12.0, 15.0, &s).unwrap();
    assert!((mass - 1.0).abs() < 1e-6, "mass={mass}");
}

#[test]
fn total_shrinkage_limit() {
    for &x in &[0.0, 1.0, 2.0] {
        let got = predictive_density_fixed_tau(x, 0.0, 1e-6, 1.0).unwrap();
        let want = ln_normal_pdf(x, 0.0, 1.0).exp();
        assert!((got - want).abs() < 1e-3);
    }
}

#[test]
fn cdf_matches_density() {
    let (y, tau, r) = (2.5, 0.1, 1.0);
    let s = QuadratureSpec::new(1e-11, 0.0, 400).unwrap();
    let x = 0.7;
    let integral = integrate_smooth(|t| predictive_density_fixed_tau(t, y, tau, r).unwrap(), -15.0, x, &s).unwrap();
    let cdf = predictive_cdf_fixed_tau(x, y, tau, r).unwrap();
    assert!((integral - cdf).abs() < 1e-8);
}

#[test]
fn risk_is_symmetric() {
    for &t in &[1.0, 3.0, 7.0] {
        let a = kl_risk_fixed_tau(t, 0.05, 1.0, &spec()).unwrap();
        let b = kl_risk_fixed_tau(-t, 0.05, 1.0, &spec()).unwrap();
        assert!((a - b).abs() <= 1e-10);
    }
}

#[test]
fn risk_in_total_shrinkage_limit() {
    // τ → 0 predicts N(0, r): ρ(θ) → θ²/(2r)
    for &t in &[0.0, 0.5, 1.5] {
        let got = kl_risk_fixed_tau(t, 1e-9, 2.0, &spec()).unwrap();
        assert!((got - t * t / 4.0).abs() < 1e-6, "theta={t}: {got}");
    }
}

fn mc_risk(theta: f64, tau: f64, r: f64, draws: usize, seed: u64, closed: bool) -> (f64, f64) {
    let mut rng = stream(seed);
    let mut vals = Vec::with_capacity(draws);
    for _ in 0..draws {
        let y = theta + rng.sample::<f64, _>(StandardNormal);
        let yf = theta + r.sqrt() * rng.sample::<f64, _>(StandardNormal);
        let lp = if closed {
            predictive_log_density_closed(yf, y, tau, r).unwrap()
        } else {
            predictive_log_density_fixed_tau(yf, y, tau, r).unwrap()
        };
        vals.push(ln_normal_pdf(yf, theta, r) - lp);
    }
    let n = draws as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn risk_matches_monte_carlo() {
    let exact = kl_risk_fixed_tau(0.0, 0.05, 1.0, &spec()).unwrap();
    let (mc, se) = mc_risk(0.0, 0.05, 1.0, 100_000, 21, false);
    assert!((mc - exact).abs() < 3.0 * se, "exact={exact} mc={mc} se={se}");
}

#[test]
fn decomposition_consistency() {
    let mut rng = stream(77);
    for k in 0..5 {
        let theta = rng.random_range(-6.0..6.0);
        let tau = 10f64.powf(rng.random_range(-3.0..0.0));
        let r = rng.random_range(0.3..3.0);
        let exact = kl_risk_fixed_tau(theta, tau, r, &spec()).unwrap();
        let (mc, se) = mc_risk(theta, tau, r, 200_000, 100 + k, true);
        assert!((mc - exact).abs() < 3.0 * se, "theta={theta} tau={tau} r={r}: {exact} vs {mc}±{se}");
    }
}

#[test]
fn spectroscopy_bound_dominates() {
    for &tau in &[0.05, 0.2] {
        let b = risk_bound_spectroscopy(0.0, tau, 1.0, &spec()).unwrap();
        let rk = kl_risk_fixed_tau(0.0, tau, 1.0, &spec()).unwrap();
        assert!(b >= rk, "tau={tau}: bound {b} < risk {rk}");
    }
    for &theta in &[0.5, 2.0, 5.0] {
        for &tau in &[0.01, 0.1, 0.5] {
            let b = risk_bound_spectroscopy(theta, tau, 1.0, &spec()).unwrap();
            let rk = kl_risk_fixed_tau(theta, tau, 1.0, &spec()).unwrap();
            assert!(b >= rk, "theta={theta} tau={tau}: bound {b} < risk {rk}");
        }
    }
}

#[test]
fn spectroscopy_bound_at_tau_one() {
    // at τ = 1 the ratio is 3E[t²] under a density ∝ e^{y²t²/2} on [0, 1]:
    // between 1 (y = 0) and 3 (|y| → ∞)
    let inner = QuadratureSpec::default();
    for &y in &[0.0, 0.5, 2.0, 8.0, 30.0] {
        let (r1, _) = phi1_ratios(y, 1.0, &inner).unwrap();
        assert!((1.0 - 1e-12..=3.0).contains(&r1), "y={y} r1={r1}");
    }
    let v = 0.5;
    let b = risk_bound_spectroscopy(0.0, 1.0, 1.0, &spec()).unwrap();
    assert!(b >= (1.0 - v) / 6.0 && b <= (1.0 - v) / 6.0 * 3.0, "bound={b}");
}

#[test]
fn spectroscopy_bound_rate() {
    // the θ = 0 bound scales like τ√log(1/τ), under the constant 2(1−v)/√π
    let c = 2.0 * 0.5 / PI.sqrt();
    let ratios: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&tau| risk_bound_spectroscopy(0.0, tau, 1.0, &spec()).unwrap() / (tau * (1.0f64 / tau).ln().sqrt()))
        .collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi / lo < 1.2, "{ratios:?}");
    assert!(hi < c, "{ratios:?}");
}

#[test]
fn risk_curve_shape() {
    let tau = 0.05;
    let hi = sup_search_limit(tau);
    let thetas: Vec<f64> = (0..81).map(|k| hi * k as f64 / 80.0).collect();
    let c = risk_curve(&thetas, tau, 1.0, &spec()).unwrap();
    let (_, top) = c.argmax().unwrap();
    assert!(*c.risks.last().unwrap() < top);
    assert!(c.risks.iter().all(|&r| r >= -1e-12));
}

#[test]
fn max_risk_near_minimax() {
    let (n, s) = (10_000, 100);
    let tau = tau_calibration(n, s, 0.0).unwrap().value();
    let m = max_risk_fixed_tau(n, s, tau, 1.0, &spec()).unwrap();
    let mm = minimax_rate(n, s, 1.0).unwrap();
    assert!(m <= 3.0 * mm && m > 0.0, "max={m} minimax={mm}");
}

#[test]
fn zero_and_sup_tradeoff() {
    let mut last: Option<(f64, f64)> = None;
    for &tau in &[0.2, 0.05, 0.01] {
        let z = kl_risk_fixed_tau(0.0, tau, 1.0, &spec()).unwrap();
        let (_, s) = sup_risk_fixed_tau(tau, 1.0, &spec()).unwrap();
        if let Some((pz, ps)) = last {
            assert!(z < pz && s > ps, "tau={tau}");
        }
        last = Some((z, s));
    }
}

#[test]
fn predictive_sampler() {
    let mut rng = stream(3);
    let s = sample_predictive_fixed_tau(&[0.0, 2.5], 1e-6, 1.0, 100_000, &mut rng).unwrap();
    let col = s.column(0);
    let m = col.iter().sum::<f64>() / col.len() as f64;
    let var = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
    assert!((var - 1.0).abs() < 0.05);
    let again = sample_predictive_fixed_tau(&[0.0, 2.5], 1e-6, 1.0, 100_000, &mut stream(3)).unwrap();
    assert_eq!(s, again);
}

#[test]
fn predictive_sampler_ks() {
    let (y, tau, r) = (3.0, 0.05, 1.0);
    let n = 100_000;
    let s = sample_predictive_fixed_tau(&[y], tau, r, n, &mut stream(8)).unwrap();
    let mut col = s.column(0);
    col.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut d: f64 = 0.0;
    for k in 1..50 {
        let idx = k * n / 50;
        let f = predictive_cdf_fixed_tau(col[idx], y, tau, r).unwrap();
        d = d.max((f - idx as f64 / n as f64).abs());
    }
    assert!(d < 1.63 / (n as f64).sqrt(), "D={d}");
}

#[test]
fn total_risk_groups_values() {
    let p = ParameterVector::new(vec![0.0, 0.0, 3.0, -3.0, 1.0]);
    let s = spec();
    let want = 2.0 * kl_risk_fixed_tau(0.0, 0.1, 1.0, &s).unwrap()
        + 2.0 * kl_risk_fixed_tau(3.0, 0.1, 1.0, &s).unwrap()
        + kl_risk_fixed_tau(1.0, 0.1, 1.0, &s).unwrap();
    let got = total_risk_fixed_tau(&p, 0.1, 1.0, &s).unwrap();
    assert!((got - want).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kl_loss_nonnegative(theta in -10.0f64..10.0, y in -10.0f64..10.0, l in 0.0f64..1e4, tau in 1e-4f64..3.0, r in 0.05f64..20.0) {
        prop_assert!(kl_loss_fixed_lambda(theta, y, l, tau, r).unwrap() >= 0.0);
    }

    #[test]
    fn risk_nonnegative(theta in -8.0f64..8.0, tau in 1e-4f64..2.0, r in 0.1f64..5.0) {
        prop_assert!(kl_risk_fixed_tau(theta, tau, r, &spec()).unwrap() >= -1e-12);
    }
}

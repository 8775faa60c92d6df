use super::*;
use crate::rng::stream;
use crate::specfun::{integrate_adaptive, kernel_mean, ln_normal_pdf};
use proptest::prelude::*;

fn spec() -> QuadratureSpec {
    QuadratureSpec::new(1e-12, 0.0, 2000).unwrap()
}

// ∫₀^∞ g(λ)(2/π)/(1+λ²) dλ through λ = u/(1−u)
fn half_cauchy_mixture<G: Fn(f64) -> f64>(g: G) -> f64 {
    let f = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let l = u / (1.0 - u);
        g(l) * (2.0 / PI) / (1.0 + l * l) / (1.0 - u).powi(2)
    };
    integrate_adaptive(f, 0.0, 1.0, &spec()).unwrap()
}

#[test]
fn prior_density_matches_mixture_oracle() {
    for &(theta, tau) in &[(2.0, 1.0), (0.3, 0.1), (5.0, 0.5)] {
        let want = half_cauchy_mixture(|l| {
            let s = l * tau;
            if s == 0.0 {
                0.0
            } else {
                ln_normal_pdf(theta, 0.0, s * s).exp()
            }
        });
        let got = prior_density(theta, tau).unwrap();
        assert!((got / want - 1.0).abs() < 1e-9, "theta={theta} tau={tau}: {got} vs {want}");
    }
    assert_eq!(prior_density(0.0, 0.3).unwrap(), f64::INFINITY);
    assert!(prior_density(1.0, 0.0).is_err());
}

#[test]
fn prior_bounds_example() {
    let (lo, hi) = prior_density_bounds(1.0, 0.1).unwrap();
    let c = 1.0 / ((2.0 * PI.powi(3)).sqrt() * 0.1);
    assert!((lo - 0.5 * c * 1.04f64.ln()).abs() < 1e-15);
    assert!((hi - c * 1.02f64.ln()).abs() < 1e-15);
    let p = prior_density(1.0, 0.1).unwrap();
    assert!(lo < p && p < hi);
}

#[test]
fn prior_sandwich_on_grid() {
    for i in 0..=40 {
        let theta = 1e-3 * 1e4f64.powf(i as f64 / 40.0);
        for j in 0..=12 {
            let tau = 1e-3 * 1e3f64.powf(j as f64 / 12.0);
            let (lo, hi) = prior_density_bounds(theta, tau).unwrap();
            let p = prior_density(theta, tau).unwrap();
            assert!(lo < p && p < hi, "theta={theta} tau={tau}");
        }
    }
}

#[test]
fn prior_integrates_to_one() {
    for &tau in &[0.05, 1.0] {
        // θ = τ·u/(1−u) on each half line
        let f = |u: f64| {
            if u <= 0.0 || u >= 1.0 {
                return 0.0;
            }
            let th = tau * u / (1.0 - u);
            prior_density(th, tau).unwrap() * tau / (1.0 - u).powi(2)
        };
        let mass = 2.0 * integrate_adaptive(f, 0.0, 1.0, &spec()).unwrap();
        assert!((mass - 1.0).abs() < 1e-8, "tau={tau} mass={mass}");
    }
}

#[test]
fn marginal_oracles() {
    let m0 = marginal_density(0.0, 1.0).unwrap();
    assert!((m0 - 2.0 / (PI * (2.0 * PI).sqrt())).abs() < 1e-14);
    for &(y, tau) in &[(0.0, 1.0), (1.5, 0.05), (4.0, 0.01), (-2.0, 3.0)] {
        let want = half_cauchy_mixture(|l| ln_normal_pdf(y, 0.0, 1.0 + (l * tau).powi(2)).exp());
        let got = marginal_density(y, tau).unwrap();
        assert!((got / want - 1.0).abs() < 1e-9, "y={y} tau={tau}");
    }
}

#[test]
fn marginal_integrates_to_one() {
    let tau = 0.05;
    let inner = integrate_adaptive(|y| marginal_density(y, tau).unwrap(), 0.0, 40.0, &spec()).unwrap();
    // tail beyond 40 from the λ⁻² prior tail: ≈ 2τ/(√(2π³)y²)
    let tail = 2.0 * tau / ((2.0 * PI.powi(3)).sqrt() * 40.0);
    let total = 2.0 * (inner + tail);
    assert!((total - 1.0).abs() < 1e-5, "total={total}");
}

#[test]
fn kappa_and_symmetry() {
    assert_eq!(kappa_of(0.0, 0.3), 1.0);
    assert!(kappa_of(2.0, 0.3) < 1.0);
    assert!(ShrinkageKappa::from_scales(-1.0, 0.1).is_err());
    let a = lambda_posterior(2.5, 0.1, 256).unwrap();
    let b = lambda_posterior(-2.5, 0.1, 256).unwrap();
    assert_eq!(a.density(), b.density());
}

#[test]
fn grid_posterior_mass() {
    for &y in &[0.0, 2.0, 6.0] {
        for &tau in &[0.05, 0.5] {
            let p = lambda_posterior(y, tau, DEFAULT_LAMBDA_GRID).unwrap();
            assert!((p.trapezoid_mass() - 1.0).abs() < 1e-12);
            // raw mass with the analytic normalizer, before self-normalization
            let raw: f64 =
                p.lambdas().windows(2).map(|l| 0.5 * (p.density_at(l[0]) + p.density_at(l[1])) * (l[1] - l[0])).sum();
            assert!((raw - 1.0).abs() < 1e-4, "y={y} tau={tau} raw={raw}");
            assert!(p.density().iter().all(|&d| d >= 0.0));
        }
    }
    assert!(lambda_posterior(1.0, 0.1, 63).is_err());
}

#[test]
fn zero_observation_is_decreasing() {
    let p = lambda_posterior(0.0, 0.1, 512).unwrap();
    assert!(p.density().windows(2).all(|d| d[1] < d[0]));
    assert_eq!(lambda_posterior_modes(0.0, 0.1).unwrap(), vec![0.0]);
}

#[test]
fn modes_match_numeric_argmax() {
    let (y, tau) = (5.0, 0.01);
    let modes = lambda_posterior_modes(y, tau).unwrap();
    assert_eq!(modes.len(), 2);
    assert_eq!(modes[0], 0.0);
    // fine log grid argmax away from the boundary basin
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut prev = f64::INFINITY;
    let mut rising = false;
    for k in 0..200_000 {
        let l = 1e-2 * 1e6f64.powf(k as f64 / 200_000.0);
        let v = lambda_log_kernel(l, y, tau);
        if v > prev {
            rising = true;
        }
        if rising && v > best.0 {
            best = (v, l);
        }
        prev = v;
    }
    assert!((modes[1] / best.1 - 1.0).abs() < 1e-4, "{} vs {}", modes[1], best.1);
    // the second basin carries most of the mass, although the pointwise
    // density at λ₂* is still below the density at 0 for this pair
    let (zero, second) = basin_masses(y, tau, &QuadratureSpec::default()).unwrap();
    assert!(second > zero);
    assert!(lambda_log_kernel(modes[1], y, tau) < lambda_log_kernel(0.0, y, tau));
}

#[test]
fn second_mode_takes_the_mass() {
    let (y, tau) = (4.0, 0.01);
    let modes = lambda_posterior_modes(y, tau).unwrap();
    assert_eq!(modes.len(), 2);
    let (zero, second) = basin_masses(y, tau, &QuadratureSpec::default()).unwrap();
    assert!(zero < second, "zero={zero} second={second}");
    assert!((zero + second - 1.0).abs() < 1e-12);
}

#[test]
fn basin_masses_agree_with_grid() {
    let (y, tau) = (4.5, 0.001);
    let m = lambda_mode_structure(y, tau).unwrap();
    let anti = m.antimode.unwrap();
    let p = lambda_posterior(y, tau, 8192).unwrap();
    let k = p.lambdas().partition_point(|&l| l < anti);
    let (zero, _) = basin_masses(y, tau, &QuadratureSpec::default()).unwrap();
    assert!((p.cdf()[k] - zero).abs() < 2e-3, "grid {} vs {zero}", p.cdf()[k]);
}

#[test]
fn crossover_grows_like_sqrt_log() {
    let s = QuadratureSpec::default();
    let mut ratios = Vec::new();
    for &tau in &[1e-2, 1e-3, 1e-4] {
        let yd = mode_crossover(tau, Dominance::Density, &s).unwrap();
        let ym = mode_crossover(tau, Dominance::Mass, &s).unwrap();
        assert!(ym < yd);
        ratios.push(yd / (1.0f64 / tau).ln().sqrt());
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi / lo < 2.0, "{ratios:?}");
}

#[test]
fn grid_sampler_kappa_mean() {
    let (y, tau) = (0.0, 0.05);
    let p = lambda_posterior(y, tau, DEFAULT_LAMBDA_GRID).unwrap();
    let mut rng = stream(11);
    let draws = sample_lambda(&p, 100_000, &mut rng);
    let ks: Vec<f64> = draws.iter().map(|&l| kappa_of(l, tau)).collect();
    let n = ks.len() as f64;
    let mean = ks.iter().sum::<f64>() / n;
    let sd = (ks.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let want = kernel_mean(-0.5 * y * y, tau, |t2| 1.0 - t2, &[], &spec()).unwrap();
    assert!((mean - want).abs() < 3.0 * sd / n.sqrt(), "mean={mean} want={want}");
    let (lo, hi) = p.support();
    assert!(draws.iter().all(|&l| l >= lo && l <= hi));
    let again = sample_lambda(&p, 1000, &mut stream(11));
    assert_eq!(&draws[..1000], &again[..]);
}

// Kolmogorov statistic against the exact CDF of t, computed by partial
// kernel integrals.
fn ks_statistic(y: f64, tau: f64, draws: &mut [f64]) -> f64 {
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let s = QuadratureSpec::default();
    let x = -0.5 * y * y;
    let total = log_kernel_range(Weight::Flat, x, tau, 0.0, 1.0, &s).unwrap();
    let n = draws.len();
    let mut d: f64 = 0.0;
    for k in 1..40 {
        let idx = k * n / 40;
        let t = draws[idx].sqrt();
        if t <= 0.0 || t >= 1.0 {
            continue;
        }
        let f = (log_kernel_range(Weight::Flat, x, tau, 0.0, t, &s).unwrap() - total).exp();
        let emp = idx as f64 / n as f64;
        d = d.max((f - emp).abs());
    }
    d
}

#[test]
fn exact_sampler_matches_distribution() {
    let n = 100_000;
    for &(y, tau) in &[(0.0, 0.05), (3.0, 0.01), (6.0, 1e-4), (1.0, 0.7), (2.0, 1.0), (4.0, 25.0), (40.0, 1e-3)] {
        let s = ShrinkageSampler::new(y, tau);
        let mut rng = stream(5);
        let mut draws: Vec<f64> = (0..n).map(|_| s.sample_t2(&mut rng)).collect();
        assert!(draws.iter().all(|&t2| (0.0..=1.0).contains(&t2)));
        let d = ks_statistic(y, tau, &mut draws);
        assert!(d < 1.63 / (n as f64).sqrt(), "y={y} tau={tau} D={d}");
        let mut block = vec![0.0; n];
        s.fill_t2(&mut rng, &mut block);
        let d = ks_statistic(y, tau, &mut block);
        assert!(d < 1.63 / (n as f64).sqrt(), "block fill y={y} tau={tau} D={d}");
    }
}

#[test]
fn one_off_draws_match_distribution() {
    let n = 100_000;
    // prior proposals, the τ ≥ 1 and large-y fallbacks, and a mixed case
    for &(y, tau) in &[(0.0, 0.05), (1.4, 0.001), (-1.0, 0.6), (0.5, 2.0), (3.0, 0.01)] {
        let mut rng = stream(6);
        let mut draws: Vec<f64> = (0..n).map(|_| sample_t2_once(y, tau, &mut rng)).collect();
        let d = ks_statistic(y, tau, &mut draws);
        assert!(d < 1.63 / (n as f64).sqrt(), "y={y} tau={tau} D={d}");
    }
}

#[test]
fn exact_sampler_kappa_mean() {
    for &(y, tau) in &[(0.0, 0.05), (5.0, 0.01), (2.0, 3.0)] {
        let s = ShrinkageSampler::new(y, tau);
        let mut rng = stream(9);
        let n = 200_000;
        let ks: Vec<f64> = (0..n).map(|_| 1.0 - s.sample_t2(&mut rng)).collect();
        let mean = ks.iter().sum::<f64>() / n as f64;
        let sd = (ks.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        let want = kernel_mean(-0.5 * y * y, tau, |t2| 1.0 - t2, &[], &spec()).unwrap();
        assert!((mean - want).abs() < 3.5 * sd / (n as f64).sqrt(), "y={y} tau={tau}: {mean} vs {want}");
    }
}

proptest! {
    #[test]
    fn marginal_ratio_bound(y in -8.0f64..8.0, a in 1e-4f64..5.0, b in 1e-4f64..5.0) {
        let (t1, t2) = if a >= b { (a, b) } else { (b, a) };
        let m1 = marginal_density(y, t1).unwrap();
        let m2 = marginal_density(y, t2).unwrap();
        prop_assert!(m1 <= (t1 / t2) * m2 * (1.0 + 1e-10));
    }

    #[test]
    fn kappa_in_unit_interval(l in 0.0f64..1e6, tau in 1e-6f64..10.0) {
        let k = kappa_of(l, tau);
        prop_assert!(k > 0.0 && k <= 1.0);
        prop_assert_eq!(k == 1.0, l * tau == 0.0 || (l * tau).powi(2) < f64::EPSILON / 2.0);
    }

    #[test]
    fn lambda_posterior_symmetric(y in 0.0f64..10.0, tau in 1e-4f64..3.0) {
        prop_assert_eq!(lambda_log_kernel(1.3, y, tau), lambda_log_kernel(1.3, -y, tau));
        prop_assert_eq!(lambda_posterior_modes(y, tau).unwrap(), lambda_posterior_modes(-y, tau).unwrap());
    }
}

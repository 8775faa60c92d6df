use super::*;
use crate::rng::stream;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

fn random_image(side: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed);
    (0..side * side).map(|_| rng.random::<f64>()).collect()
}

#[test]
fn constant_image_has_no_detail() {
    let side = 32;
    let c = dwt2_d4(&vec![0.7; side * side], side, 3).unwrap();
    for j in 1..=3 {
        for blk in c.details(j).unwrap() {
            assert!(blk.iter().all(|v| v.abs() < 1e-10));
        }
    }
    let approx = c.approximation();
    assert_eq!(approx.len(), 16);
    // each level scales the constant by 2 (orthonormal 2D lowpass)
    assert!(approx.iter().all(|v| (v - 0.7 * 8.0).abs() < 1e-10));
    let e: f64 = approx.iter().map(|v| v * v).sum();
    assert!((e - 0.49 * (side * side) as f64).abs() < 1e-9);
}

#[test]
fn round_trip_and_energy() {
    let x = random_image(64, 1);
    let c = dwt2_d4(&x, 64, 4).unwrap();
    let back = idwt2_d4(&c);
    assert!(x.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-10));

    let x = random_image(128, 2);
    let c = dwt2_d4(&x, 128, 7).unwrap();
    let ex: f64 = x.iter().map(|v| v * v).sum();
    let ec: f64 = c.as_slice().iter().map(|v| v * v).sum();
    assert!(((ex - ec) / ex).abs() < 1e-9);
}

#[test]
fn synthesis_from_a_pyramid() {
    let mut data = vec![0.0; 16 * 16];
    data[0] = 8.0;
    data[9 * 16 + 12] = 1.5;
    let c = WaveletCoefficients::from_pyramid(data.clone(), 16, 4).unwrap();
    let img = idwt2_d4(&c);
    let ex: f64 = img.iter().map(|v| v * v).sum();
    assert!((ex - 64.0 - 2.25).abs() < 1e-10);
    assert_eq!(
        dwt2_d4(&img, 16, 4).unwrap().as_slice().iter().zip(&data).filter(|(a, b)| (*a - *b).abs() > 1e-10).count(),
        0
    );
    assert!(WaveletCoefficients::from_pyramid(vec![0.0; 15], 4, 1).is_err());
}

#[test]
fn single_level_matches_hand_filter() {
    // row-then-column lowpass at (0, 0) is Σ h[a]h[b]x[a][b] on the 4×4 corner
    let x = random_image(8, 3);
    let c = dwt2_d4(&x, 8, 1).unwrap();
    let h = [
        (1.0 + 3f64.sqrt()) / (4.0 * 2f64.sqrt()),
        (3.0 + 3f64.sqrt()) / (4.0 * 2f64.sqrt()),
        (3.0 - 3f64.sqrt()) / (4.0 * 2f64.sqrt()),
        (1.0 - 3f64.sqrt()) / (4.0 * 2f64.sqrt()),
    ];
    let mut want = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            want += h[a] * h[b] * x[a * 8 + b];
        }
    }
    assert!((c.as_slice()[0] - want).abs() < 1e-14);
    assert!((h.iter().sum::<f64>() - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn bad_sizes_are_rejected() {
    assert!(dwt2_d4(&[0.0; 36], 6, 1).is_err());
    assert!(dwt2_d4(&[0.0; 16], 4, 3).is_err());
    assert!(dwt2_d4(&[0.0; 15], 4, 1).is_err());
    let c = dwt2_d4(&[0.0; 16], 4, 1).unwrap();
    assert!(coarse_coefficient_vector(&c, 2).is_err());
    assert!(c.details(0).is_err());
}

#[test]
fn coarse_vector_lengths_and_prefixes() {
    let x = random_image(256, 4);
    let c = dwt2_d4(&x, 256, 3).unwrap();
    let v0 = coarse_coefficient_vector(&c, 0).unwrap();
    assert_eq!(v0.len(), 32 * 32);
    assert_eq!(v0, c.approximation());
    let mut prev = v0;
    for j in 1..=3 {
        let v = coarse_coefficient_vector(&c, j).unwrap();
        assert_eq!(v.len(), 32 * 32 * 4usize.pow(j as u32));
        assert_eq!(&v[..prev.len()], &prev[..]);
        prev = v;
    }
}

#[test]
fn standardizer_gives_unit_variance() {
    let corpus: Vec<Vec<f64>> =
        (0..5).map(|s| random_image(8, 10 + s).iter().map(|v| 3.0 * v + 1.0).collect()).collect();
    let st = Standardizer::fit(&corpus).unwrap();
    let out: Vec<Vec<f64>> = corpus.iter().map(|v| st.apply(v)).collect();
    let n = 5.0 * 64.0;
    let mean = out.iter().flatten().sum::<f64>() / n;
    let var = out.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    assert!((var - 1.0).abs() < 1e-12);
    assert!(Standardizer::fit(&[vec![1.0, 1.0]]).is_err());
}

fn grid(t: usize) -> Vec<f64> {
    (0..t).map(|k| k as f64 / (t - 1) as f64).collect()
}

fn phi(k: usize, t: f64) -> f64 {
    2f64.sqrt() * (PI * k as f64 * t).sin()
}

fn panel(n: usize, t: usize, sds: &[f64], seed: u64) -> Vec<Vec<f64>> {
    let g = grid(t);
    let mut rng = stream(seed);
    (0..n)
        .map(|_| {
            let a: Vec<f64> = sds.iter().map(|s| s * rng.sample::<f64, _>(StandardNormal)).collect();
            g.iter().map(|&x| a.iter().enumerate().map(|(k, ak)| ak * phi(k + 1, x)).sum()).collect()
        })
        .collect()
}

fn inner(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), z)| x * y * z).sum()
}

#[test]
fn recovers_planted_eigenfunction() {
    let t = 101;
    let g = grid(t);
    let m = fit_fpca(&panel(500, t, &[1.5], 5), &g, 1).unwrap();
    let w = trapezoid_weights(&g);
    let truth: Vec<f64> = g.iter().map(|&x| phi(1, x)).collect();
    let ip = inner(&w, &m.eigenfunctions[0], &truth);
    assert!(ip.abs() > 0.99, "{ip}");
    let mx = m.eigenfunctions[0].iter().cloned().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
    assert!(mx > 0.0);
}

#[test]
fn eigenfunctions_are_orthonormal_and_values_sorted() {
    let t = 81;
    let g = grid(t);
    let m = fit_fpca(&panel(300, t, &[2.0, 1.0, 0.5], 6), &g, 3).unwrap();
    assert!(m.eigenvalues.windows(2).all(|p| p[0] >= p[1]));
    for a in 0..3 {
        for b in 0..3 {
            let ip = inner(m.weights(), &m.eigenfunctions[a], &m.eigenfunctions[b]);
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((ip - want).abs() < 1e-8, "{a},{b}: {ip}");
        }
    }
}

#[test]
fn scores_of_a_scaled_eigenfunction() {
    let t = 51;
    let g = grid(t);
    let m = fit_fpca(&panel(200, t, &[1.0, 0.6], 7), &g, 2).unwrap();
    let curve: Vec<f64> = m.eigenfunctions[0].iter().map(|v| v * m.eigenvalues[0].sqrt()).collect();
    let s = fpca_scores(&m, &curve).unwrap();
    assert!((s[0] - 1.0).abs() < 1e-8 && s[1].abs() < 1e-8, "{s:?}");
    assert!(fpca_scores(&m, &vec![0.0; t]).unwrap().iter().all(|&v| v == 0.0));
    assert!(fpca_scores(&m, &[0.0; 3]).is_err());
}

#[test]
fn training_scores_are_standardized_and_uncorrelated() {
    let t = 61;
    let g = grid(t);
    let curves = panel(500, t, &[1.2, 0.7], 8);
    let m = fit_fpca(&curves, &g, 2).unwrap();
    let scores: Vec<Vec<f64>> = curves.iter().map(|c| fpca_scores(&m, c).unwrap()).collect();
    let n = scores.len() as f64;
    for k in 0..2 {
        // second moment: the covariance is uncentered, so this is exactly 1 in-sample
        let v = scores.iter().map(|s| s[k] * s[k]).sum::<f64>() / n;
        assert!((0.9..=1.1).contains(&v), "component {k}: {v}");
    }
    let c = scores.iter().map(|s| s[0] * s[1]).sum::<f64>() / n;
    assert!(c.abs() < 0.05);
}

#[test]
fn fpca_rejects_bad_input() {
    let g = grid(11);
    let curves = panel(10, 11, &[1.0], 9);
    assert!(fit_fpca(&curves, &g, 2).is_err(), "rank one panel");
    assert!(fit_fpca(&curves[..1], &g, 1).is_err());
    assert!(fit_fpca(&curves, &g, 12).is_err());
    assert!(fit_fpca(&curves, &g[..10], 1).is_err());
}

#[test]
fn pgm_and_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.pgm");
    let px: Vec<f64> = (0..12).map(|k| k as f64 / 255.0).collect();
    write_pgm(&p, 4, 3, &px).unwrap();
    let (w, h, back) = read_pgm(&p).unwrap();
    assert_eq!((w, h), (4, 3));
    assert!(px.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-12));

    let ascii = dir.path().join("a.pgm");
    std::fs::write(&ascii, "P2\n2 2\n65535\n0 65535\n32768 1\n").unwrap();
    let (_, _, v) = read_pgm(&ascii).unwrap();
    assert_eq!(v[1], 1.0);
    assert!((v[2] - 32768.0 / 65535.0).abs() < 1e-15);
    assert!(read_pgm(&dir.path().join("missing.pgm")).is_err());

    let c = dir.path().join("p.csv");
    std::fs::write(&c, "0,0.5,1\n1,2,3\n4,5,6\n").unwrap();
    let panel = read_curve_panel(&c).unwrap();
    assert_eq!(panel.grid, vec![0.0, 0.5, 1.0]);
    assert_eq!(panel.curves.len(), 2);
    std::fs::write(&c, "0,0.5,1\n1,2\n").unwrap();
    assert!(read_curve_panel(&c).is_err());

    let o = dir.path().join("o.csv");
    write_vectors_csv(&o, "y", &[vec![0.1, 1.0 / 3.0]]).unwrap();
    let text = std::fs::read_to_string(&o).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("y0,y1"));
    let vals: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(vals, vec![0.1, 1.0 / 3.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dwt_is_orthogonal(seed in 0u64..1000, k in 1usize..6, levels in 1usize..6) {
        let side = 1 << k;
        let levels = levels.min(k);
        let x = random_image(side, seed);
        let c = dwt2_d4(&x, side, levels).unwrap();
        let ex: f64 = x.iter().map(|v| v * v).sum();
        let ec: f64 = c.as_slice().iter().map(|v| v * v).sum();
        prop_assert!(((ex - ec) / ex).abs() < 1e-12);
        let back = idwt2_d4(&c);
        prop_assert!(x.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}

//! Scores of one observation against a predictive sample set.

use rand::Rng;

use crate::error::{domain, Result};
use crate::rng::stream;
use crate::samples::PredictiveSampleSet;

/// Sample sizes above this use the subsampled spread term.
pub const EXACT_ENERGY_LIMIT: usize = 5000;
/// Pairs drawn by the subsampled spread estimator.
pub const SUBSAMPLED_PAIRS: usize = 2000;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn check_dim(samples: &PredictiveSampleSet, y: &[f64]) -> Result<()> {
    if y.len() != samples.dim() {
        return domain(format!("observation has {} coordinates, samples have {}", y.len(), samples.dim()));
    }
    if samples.draws() < 2 {
        return domain("scores need at least two predictive draws");
    }
    Ok(())
}

/// The spread term (1/2N²)ΣΣ‖ŷᵏ − ŷˡ‖ of the energy score. It depends only on
/// the sample set, so a score matrix computes it once per row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySpread {
    pub value: f64,
    /// Zero in exact mode.
    pub std_error: f64,
}

/// Exact double sum for N ≤ 5000; beyond that the mean of ½‖ŷᵏ − ŷˡ‖ over
/// 2000 pairs (k, l) drawn uniformly from all N² ordered pairs, which is
/// unbiased for the exact value.
pub fn energy_spread(samples: &PredictiveSampleSet, seed: u64) -> EnergySpread {
    let n = samples.draws();
    if n <= EXACT_ENERGY_LIMIT {
        let mut total = 0.0;
        for k in 0..n {
            let rk = samples.row(k);
            for l in k + 1..n {
                total += dist(rk, samples.row(l));
            }
        }
        // each unordered pair appears twice in the double sum
        return EnergySpread { value: total / (n as f64 * n as f64), std_error: 0.0 };
    }
    let mut rng = stream(seed);
    let d: Vec<f64> = (0..SUBSAMPLED_PAIRS)
        .map(|_| {
            let (k, l) = (rng.random_range(0..n), rng.random_range(0..n));
            0.5 * dist(samples.row(k), samples.row(l))
        })
        .collect();
    let m = d.len() as f64;
    let mean = d.iter().sum::<f64>() / m;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    EnergySpread { value: mean, std_error: (var / m).sqrt() }
}

/// (1/N)Σ‖ŷˡ − y‖ minus a precomputed spread term.
pub fn energy_score_with(samples: &PredictiveSampleSet, spread: &EnergySpread, y: &[f64]) -> Result<f64> {
    check_dim(samples, y)?;
    let first = samples.rows().map(|r| dist(r, y)).sum::<f64>() / samples.draws() as f64;
    Ok(first - spread.value)
}

/// Energy score (1/N)Σ‖ŷˡ − y‖ − (1/2N²)ΣΣ‖ŷᵏ − ŷˡ‖, exact for N ≤ 5000.
pub fn energy_score(samples: &PredictiveSampleSet, y: &[f64], seed: u64) -> Result<f64> {
    check_dim(samples, y)?;
    energy_score_with(samples, &energy_spread(samples, seed), y)
}

/// Sample mean and sorted distances of the draws to it.
#[derive(Debug, Clone)]
pub struct RankReference {
    mean: Vec<f64>,
    sorted: Vec<f64>,
}

impl RankReference {
    pub fn new(samples: &PredictiveSampleSet) -> Self {
        let mean = samples.mean();
        let mut sorted: Vec<f64> = samples.rows().map(|r| dist(r, &mean)).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Self { mean, sorted }
    }

    /// Fraction of draws strictly farther from the mean than `y`.
    pub fn score(&self, y: &[f64]) -> f64 {
        let d = dist(y, &self.mean);
        let below = self.sorted.partition_point(|&v| v <= d);
        (self.sorted.len() - below) as f64 / self.sorted.len() as f64
    }
}

pub fn rank_score(samples: &PredictiveSampleSet, y: &[f64]) -> Result<f64> {
    check_dim(samples, y)?;
    Ok(RankReference::new(samples).score(y))
}

/// Per-coordinate α/2 and 1−α/2 sample quantiles (type 7).
#[derive(Debug, Clone)]
pub struct CoverageBands {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

fn type7(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let j = h.floor() as usize;
    if j + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[j] + (h - j as f64) * (sorted[j + 1] - sorted[j])
}

impl CoverageBands {
    pub fn new(samples: &PredictiveSampleSet, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return domain(format!("alpha must lie in (0, 1), got {alpha}"));
        }
        if (samples.draws() as f64) < 20.0 / alpha {
            return domain(format!("coverage at alpha={alpha} needs at least {} draws", (20.0 / alpha).ceil()));
        }
        let (mut lo, mut hi) = (Vec::with_capacity(samples.dim()), Vec::with_capacity(samples.dim()));
        for j in 0..samples.dim() {
            let mut col = samples.column(j);
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
            lo.push(type7(&col, 0.5 * alpha));
            hi.push(type7(&col, 1.0 - 0.5 * alpha));
        }
        Ok(Self { lo, hi })
    }

    /// Fraction of coordinates of `y` strictly inside their band.
    pub fn score(&self, y: &[f64]) -> f64 {
        let inside = y.iter().zip(self.lo.iter().zip(&self.hi)).filter(|(v, (l, h))| *v > l && *v < h).count();
        inside as f64 / y.len() as f64
    }
}

pub fn coverage_rate(samples: &PredictiveSampleSet, y: &[f64], alpha: f64) -> Result<f64> {
    check_dim(samples, y)?;
    Ok(CoverageBands::new(samples, alpha)?.score(y))
}

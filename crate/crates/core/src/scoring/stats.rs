//! Two-sample tests and false-discovery-rate adjustment.

use crate::error::{domain, Result};
use crate::specfun::gauss_cdf;

/// Harmonic number c_K = Σ_{i≤K} 1/i.
pub fn harmonic(k: usize) -> f64 {
    (1..=k).map(|i| 1.0 / i as f64).sum()
}

/// Benjamini–Yekutieli step-up adjustment
/// p_(i) ↦ min_{j≥i} min(1, p_(j)·K·c_K/j), returned in input order.
pub fn benjamini_yekutieli(pvals: &[f64]) -> Result<Vec<f64>> {
    if pvals.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return domain("p-values must lie in [0, 1]");
    }
    let k = pvals.len();
    let factor = k as f64 * harmonic(k);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| pvals[a].partial_cmp(&pvals[b]).unwrap());
    let mut out = vec![0.0; k];
    let mut running = 1.0f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        running = running.min((pvals[i] * factor / (rank + 1) as f64).min(1.0));
        out[i] = running;
    }
    Ok(out)
}

fn ranks(a: &[f64], b: &[f64]) -> (f64, Vec<usize>) {
    let mut all: Vec<(f64, bool)> = a.iter().map(|&v| (v, true)).chain(b.iter().map(|&v| (v, false))).collect();
    all.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut w = 0.0;
    let mut ties = Vec::new();
    let mut k = 0;
    while k < all.len() {
        let mut e = k;
        while e + 1 < all.len() && all[e + 1].0 == all[k].0 {
            e += 1;
        }
        let mid = 0.5 * ((k + 1) + (e + 1)) as f64;
        w += mid * all[k..=e].iter().filter(|x| x.1).count() as f64;
        if e > k {
            ties.push(e - k + 1);
        }
        k = e + 1;
    }
    (w, ties)
}

fn check(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return domain("both samples must be non-empty");
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return domain("samples must be finite");
    }
    Ok(())
}

/// Exact two-sided p-value from the null distribution of the rank sum of `a`
/// (all C(m+k, m) rank assignments equally likely). None when there are ties.
pub fn wilcoxon_exact(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    check(a, b)?;
    let (w, ties) = ranks(a, b);
    if !ties.is_empty() {
        return Ok(None);
    }
    let (m, total) = (a.len(), a.len() + b.len());
    let max_sum = m * total;
    // ways[j][s]: subsets of size j of the ranks seen so far with sum s
    let mut ways = vec![vec![0.0f64; max_sum + 1]; m + 1];
    ways[0][0] = 1.0;
    for r in 1..=total {
        for j in (1..=m.min(r)).rev() {
            for s in (r..=max_sum).rev() {
                ways[j][s] += ways[j - 1][s - r];
            }
        }
    }
    let dist = &ways[m];
    let all: f64 = dist.iter().sum();
    let w = w.round() as usize;
    let lower: f64 = dist[..=w].iter().sum::<f64>() / all;
    let upper: f64 = dist[w..].iter().sum::<f64>() / all;
    Ok(Some((2.0 * lower.min(upper)).min(1.0)))
}

/// Normal approximation with tie and continuity corrections.
pub fn wilcoxon_normal(a: &[f64], b: &[f64]) -> Result<f64> {
    check(a, b)?;
    let (w, ties) = ranks(a, b);
    let (m, k) = (a.len() as f64, b.len() as f64);
    let n = m + k;
    let u = w - m * (m + 1.0) / 2.0;
    let mean = m * k / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0)).max(1.0);
    let var = m * k / 12.0 * ((n + 1.0) - tie_term);
    if !(var > 0.0) {
        return Ok(1.0);
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    Ok((2.0 * (1.0 - gauss_cdf(z))).min(1.0))
}

/// Two-sided rank-sum p-value: exact when the smaller sample has fewer than 8
/// values and there are no ties, normal approximation otherwise.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len().min(b.len()) < 8 {
        if let Some(p) = wilcoxon_exact(a, b)? {
            return Ok(p);
        }
    }
    wilcoxon_normal(a, b)
}

/// Sign of median(a) − median(b): Hyper when group a is higher.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Hyper,
    Hypo,
    None,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::Hyper => "hyper",
            Direction::Hypo => "hypo",
            Direction::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupTestResult {
    pub pair_id: String,
    pub raw_p: f64,
    pub adjusted_p: f64,
    pub direction: Direction,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = s.len() / 2;
    if s.len() % 2 == 1 {
        s[h]
    } else {
        0.5 * (s[h - 1] + s[h])
    }
}

/// One rank-sum test per column, BY-adjusted across columns. Column c of
/// `group_a` and `group_b` holds the scores of pair `ids[c]` in each group.
pub fn group_tests(ids: &[String], group_a: &[Vec<f64>], group_b: &[Vec<f64>]) -> Result<Vec<GroupTestResult>> {
    if group_a.len() != ids.len() || group_b.len() != ids.len() {
        return domain(format!("{} ids but {} and {} columns", ids.len(), group_a.len(), group_b.len()));
    }
    let raw = group_a.iter().zip(group_b).map(|(a, b)| wilcoxon_rank_sum(a, b)).collect::<Result<Vec<_>>>()?;
    let adj = benjamini_yekutieli(&raw)?;
    Ok(ids
        .iter()
        .zip(group_a.iter().zip(group_b))
        .zip(raw.iter().zip(&adj))
        .map(|((id, (a, b)), (&raw_p, &adjusted_p))| {
            let d = median(a) - median(b);
            let direction = if d > 0.0 {
                Direction::Hyper
            } else if d < 0.0 {
                Direction::Hypo
            } else {
                Direction::None
            };
            GroupTestResult { pair_id: id.clone(), raw_p, adjusted_p, direction }
        })
        .collect())
}

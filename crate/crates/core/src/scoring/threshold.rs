//! Cutoffs, acceptance graphs and their accuracy.

use petgraph::unionfind::UnionFind;
use rand::seq::SliceRandom;
use rand::Rng;

use super::matrix::ScoreMatrix;
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// Best pairwise F1 using all labels.
    Oracle,
    /// Best pairwise F1 on a random labeled subset of the given fraction of items.
    HeldOut { fraction: f64 },
    /// Midpoint of the cutoff interval giving exactly this many clusters.
    TargetClusters(usize),
    /// Valley of the smoothed score histogram between its two highest peaks.
    Valley,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairF1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn pair_f1(tp: usize, fp: usize, fneg: usize) -> PairF1 {
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fneg == 0 { 0.0 } else { tp as f64 / (tp + fneg) as f64 };
    let f1 = if tp == 0 { 0.0 } else { 2.0 * tp as f64 / (2 * tp + fp + fneg) as f64 };
    PairF1 { precision, recall, f1 }
}

fn accepts(score: f64, cutoff: f64, accept_low: bool) -> bool {
    if accept_low {
        score < cutoff
    } else {
        score > cutoff
    }
}

/// (score, same-label) for every pair i < j, read from the upper triangle.
pub fn upper_pairs(matrix: &ScoreMatrix, labels: &[usize]) -> Result<Vec<(f64, bool)>> {
    let n = matrix.size();
    if labels.len() != n {
        return domain(format!("{} labels for {n} items", labels.len()));
    }
    Ok((0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| (matrix.get(i, j), labels[i] == labels[j]))
        .collect())
}

/// Precision, recall and F1 of the pairwise accept decisions.
pub fn pairwise_f1(matrix: &ScoreMatrix, labels: &[usize], cutoff: f64) -> Result<PairF1> {
    let accept_low = matrix.kind().accept_low();
    let (mut tp, mut fp, mut fneg) = (0, 0, 0);
    for (s, same) in upper_pairs(matrix, labels)? {
        match (accepts(s, cutoff, accept_low), same) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    Ok(pair_f1(tp, fp, fneg))
}

/// Pairwise F1 of a predicted partition against true labels (co-membership).
pub fn partition_f1(predicted: &[usize], truth: &[usize]) -> Result<PairF1> {
    if predicted.len() != truth.len() {
        return domain("label vectors differ in length");
    }
    let n = truth.len();
    let (mut tp, mut fp, mut fneg) = (0, 0, 0);
    for i in 0..n {
        for j in i + 1..n {
            match (predicted[i] == predicted[j], truth[i] == truth[j]) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                _ => {}
            }
        }
    }
    Ok(pair_f1(tp, fp, fneg))
}

/// Area under the ROC curve traced by all cutoffs: the probability that a
/// matching pair is accepted before a non-matching one, ties counting half.
pub fn roc_auc(scores: &[(f64, bool)], accept_low: bool) -> Result<f64> {
    let pos = scores.iter().filter(|s| s.1).count();
    let neg = scores.len() - pos;
    if pos == 0 || neg == 0 {
        return domain("ROC needs both matching and non-matching pairs");
    }
    let mut v: Vec<(f64, bool)> = scores.iter().map(|&(s, l)| (if accept_low { s } else { -s }, l)).collect();
    v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // midranks of the negatives
    let mut rank_neg = 0.0;
    let mut k = 0;
    while k < v.len() {
        let mut e = k;
        while e + 1 < v.len() && v[e + 1].0 == v[k].0 {
            e += 1;
        }
        let mid = 0.5 * ((k + 1) + (e + 1)) as f64;
        rank_neg += mid * v[k..=e].iter().filter(|x| !x.1).count() as f64;
        k = e + 1;
    }
    let u = rank_neg - (neg * (neg + 1)) as f64 / 2.0;
    Ok(u / (pos * neg) as f64)
}

/// Connected components of the acceptance graph, labelled 0, 1, … in order
/// of each component's first item.
pub fn cluster_by_threshold(matrix: &ScoreMatrix, cutoff: f64, accept_low: bool) -> Vec<usize> {
    let n = matrix.size();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if accepts(matrix.get(i, j), cutoff, accept_low) {
                uf.union(i, j);
            }
        }
    }
    let mut ids = vec![usize::MAX; n];
    let mut next = 0;
    (0..n)
        .map(|i| {
            let r = uf.find(i);
            if ids[r] == usize::MAX {
                ids[r] = next;
                next += 1;
            }
            ids[r]
        })
        .collect()
}

// Cutoffs below work on d = ±score so that a pair is accepted iff d < c.
fn oriented(matrix: &ScoreMatrix, items: &[usize], labels: Option<&[usize]>) -> Vec<(f64, bool, usize, usize)> {
    let sign = if matrix.kind().accept_low() { 1.0 } else { -1.0 };
    let mut v = Vec::new();
    for (a, &i) in items.iter().enumerate() {
        for &j in &items[a + 1..] {
            let same = labels.is_some_and(|l| l[i] == l[j]);
            v.push((sign * matrix.get(i, j), same, i, j));
        }
    }
    v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    v
}

fn best_f1_cutoff(pairs: &[(f64, bool, usize, usize)]) -> Result<f64> {
    let total_pos = pairs.iter().filter(|p| p.1).count();
    if total_pos == 0 || pairs.is_empty() {
        return domain("no matching pairs among the labeled items");
    }
    let (mut tp, mut acc) = (0usize, 0usize);
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut k = 0;
    while k < pairs.len() {
        let mut e = k;
        while e + 1 < pairs.len() && pairs[e + 1].0 == pairs[k].0 {
            e += 1;
        }
        tp += pairs[k..=e].iter().filter(|p| p.1).count();
        acc += e + 1 - k;
        let f1 = 2.0 * tp as f64 / (acc + total_pos) as f64;
        let cut = if e + 1 < pairs.len() {
            0.5 * (pairs[e].0 + pairs[e + 1].0)
        } else {
            pairs[e].0 + 0.5 * (pairs[e].0 - pairs[0].0).max(1.0)
        };
        if f1 > best.0 {
            best = (f1, cut);
        }
        k = e + 1;
    }
    Ok(best.1)
}

fn target_clusters(matrix: &ScoreMatrix, k: usize) -> Result<f64> {
    let n = matrix.size();
    if k == 0 || k > n {
        return domain(format!("target cluster count must lie in 1..={n}, got {k}"));
    }
    let all: Vec<usize> = (0..n).collect();
    let pairs = oriented(matrix, &all, None);
    if pairs.is_empty() {
        return Ok(0.0);
    }
    // (value v, component count once every d ≤ v is accepted)
    let mut levels: Vec<(f64, usize)> = Vec::new();
    let mut uf = UnionFind::new(n);
    let mut count = n;
    let mut idx = 0;
    while idx < pairs.len() {
        let mut e = idx;
        while e + 1 < pairs.len() && pairs[e + 1].0 == pairs[idx].0 {
            e += 1;
        }
        for p in &pairs[idx..=e] {
            if uf.union(p.2, p.3) {
                count -= 1;
            }
        }
        levels.push((pairs[idx].0, count));
        idx = e + 1;
    }
    let first = pairs[0].0;
    let last = levels[levels.len() - 1].0;
    // cutoffs in (levels[j].0, levels[j+1].0] leave levels[j].1 clusters
    let lower = if k == n { None } else { levels.iter().position(|l| l.1 == k) };
    if k != n && lower.is_none() {
        let above = levels.iter().rev().map(|l| l.1).find(|&c| c > k).unwrap_or(n);
        let below = levels.iter().map(|l| l.1).find(|&c| c < k);
        return Err(Error::Numeric(format!(
            "no cutoff gives exactly {k} clusters; nearest achievable counts are {above} and {}",
            below.map_or("none".to_string(), |b| b.to_string())
        )));
    }
    let c = match lower {
        None => first,
        Some(a) => {
            let b = levels.iter().rposition(|l| l.1 == k).unwrap();
            if b + 1 < levels.len() {
                0.5 * (levels[a].0 + levels[b + 1].0)
            } else {
                last + 0.5 * (last - first).max(1.0)
            }
        }
    };
    Ok(c)
}

fn valley(matrix: &ScoreMatrix) -> Result<f64> {
    let n = matrix.size();
    let mut v: Vec<f64> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| matrix.get(i, j)).collect();
    if v.len() < 4 {
        return domain("valley detection needs at least four pairs");
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() as f64;
    let q = |p: f64| {
        let h = (m - 1.0) * p;
        let j = h.floor() as usize;
        v[j] + (h - j as f64) * (v[(j + 1).min(v.len() - 1)] - v[j])
    };
    let (lo, hi) = (v[0], v[v.len() - 1]);
    let iqr = q(0.75) - q(0.25);
    let width = 2.0 * iqr / m.cbrt();
    if !(hi > lo) || !(width > 0.0) {
        return Err(Error::Numeric("scores have no spread; the histogram has no valley".into()));
    }
    let bins = (((hi - lo) / width).ceil() as usize).clamp(1, 100_000);
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0.0; bins];
    for &x in &v {
        counts[(((x - lo) / w) as usize).min(bins - 1)] += 1.0;
    }
    let smooth: Vec<f64> = (0..bins)
        .map(|b| {
            let (a, e) = (b.saturating_sub(2), (b + 2).min(bins - 1));
            counts[a..=e].iter().sum::<f64>() / (e - a + 1) as f64
        })
        .collect();
    // peaks: maximal runs strictly above both neighbouring values
    let mut peaks: Vec<(f64, usize)> = Vec::new();
    let mut b = 0;
    while b < bins {
        let mut e = b;
        while e + 1 < bins && smooth[e + 1] == smooth[b] {
            e += 1;
        }
        let left = b == 0 || smooth[b - 1] < smooth[b];
        let right = e + 1 == bins || smooth[e + 1] < smooth[b];
        if left && right {
            peaks.push((smooth[b], (b + e) / 2));
        }
        b = e + 1;
    }
    if peaks.len() < 2 {
        return Err(Error::Numeric("score histogram is not bimodal".into()));
    }
    peaks.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let (p, r) = (peaks[0].1.min(peaks[1].1), peaks[0].1.max(peaks[1].1));
    let low = smooth[p + 1..r].iter().cloned().fold(f64::INFINITY, f64::min);
    let first = (p + 1..r).find(|&k| smooth[k] == low).unwrap();
    let mut end = first;
    while end + 1 < r && smooth[end + 1] == low {
        end += 1;
    }
    Ok(lo + w * (0.5 * (first + end) as f64 + 0.5))
}

/// Cutoff for a symmetrized score matrix. Oracle and HeldOut need labels;
/// HeldOut draws its subset from `rng`.
pub fn select_threshold<R: Rng + ?Sized>(
    matrix: &ScoreMatrix,
    rule: ThresholdRule,
    labels: Option<&[usize]>,
    rng: &mut R,
) -> Result<f64> {
    if !matrix.is_symmetric() {
        return domain("threshold selection needs a symmetrized matrix");
    }
    let n = matrix.size();
    if let Some(l) = labels {
        if l.len() != n {
            return domain(format!("{} labels for {n} items", l.len()));
        }
    }
    let sign = if matrix.kind().accept_low() { 1.0 } else { -1.0 };
    match rule {
        ThresholdRule::Oracle => {
            let l = labels.ok_or_else(|| Error::Domain("Oracle threshold needs labels".into()))?;
            let all: Vec<usize> = (0..n).collect();
            Ok(sign * best_f1_cutoff(&oriented(matrix, &all, Some(l)))?)
        }
        ThresholdRule::HeldOut { fraction } => {
            let l = labels.ok_or_else(|| Error::Domain("HeldOut threshold needs labels".into()))?;
            if !(fraction > 0.0 && fraction < 1.0) {
                return domain(format!("held-out fraction must lie in (0, 1), got {fraction}"));
            }
            let mut items: Vec<usize> = (0..n).collect();
            items.shuffle(rng);
            let k = ((fraction * n as f64).round() as usize).max(2);
            let mut held = items[..k].to_vec();
            held.sort_unstable();
            Ok(sign * best_f1_cutoff(&oriented(matrix, &held, Some(l)))?)
        }
        ThresholdRule::TargetClusters(k) => Ok(sign * target_clusters(matrix, k)?),
        ThresholdRule::Valley => valley(matrix),
    }
}

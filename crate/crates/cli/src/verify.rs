//! The verification pipeline: predictive draws per item, all-pairs scores,
//! a cutoff, clusters and accuracy against labels when present.

use std::collections::HashMap;
use std::path::Path;

use hspredict_core::rng::{substream, substream_seed};
use hspredict_core::samples::PredictiveSampleSet;
use hspredict_core::scoring::{
    cluster_by_threshold, pairwise_f1, partition_f1, roc_auc, score_matrix, select_threshold, upper_pairs, PairF1,
    ScoreKind, ScoreMatrix, ScoreOptions, ThresholdRule,
};
use rayon::prelude::*;
use serde_json::json;

use crate::args::VerifyArgs;
use crate::commands::{draw_samples, required};
use crate::table::{write_bytes, Cell, Table};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub id: String,
    pub label: Option<String>,
    pub y: Vec<f64>,
}

/// Items CSV: id,label,y0,y1,... with a header row.
pub fn read_items(path: &Path) -> Result<Vec<Item>, CliError> {
    let err = |e: String| CliError::Config(format!("{}: {e}", path.display()));
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| err(e.to_string()))?;
    let mut items = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        if rec.len() < 3 {
            return Err(err("each item needs an id, a label column and at least one value".into()));
        }
        let y = rec
            .iter()
            .skip(2)
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| err(format!("item `{}` has a non-numeric value", &rec[0])))?;
        let label = Some(rec[1].to_string()).filter(|l| !l.is_empty());
        items.push(Item { id: rec[0].to_string(), label, y });
    }
    if items.len() < 2 {
        return Err(err("need at least two items".into()));
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(d) = items.iter().find(|it| !seen.insert(it.id.clone())) {
        return Err(err(format!("duplicate id `{}`", d.id)));
    }
    Ok(items)
}

/// Label indices in order of first appearance, or None when any item is unlabeled.
pub fn label_indices(items: &[Item]) -> Option<Vec<usize>> {
    let mut map = HashMap::new();
    items
        .iter()
        .map(|it| {
            let l = it.label.as_ref()?;
            let next = map.len();
            Some(*map.entry(l.clone()).or_insert(next))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Rule(ThresholdRule),
    Value(f64),
}

pub fn parse_threshold(s: &str) -> Result<Threshold, CliError> {
    let bad = || CliError::Config(format!("unknown threshold rule `{s}`"));
    let (head, arg) = s.split_once(':').map_or((s, None), |(h, a)| (h, Some(a)));
    Ok(match (head, arg) {
        ("oracle", None) => Threshold::Rule(ThresholdRule::Oracle),
        ("valley", None) => Threshold::Rule(ThresholdRule::Valley),
        ("heldout", None) => Threshold::Rule(ThresholdRule::HeldOut { fraction: 0.5 }),
        ("heldout", Some(a)) => Threshold::Rule(ThresholdRule::HeldOut { fraction: a.parse().map_err(|_| bad())? }),
        ("clusters", Some(a)) => Threshold::Rule(ThresholdRule::TargetClusters(a.parse().map_err(|_| bad())?)),
        ("value", Some(a)) => Threshold::Value(a.parse().map_err(|_| bad())?),
        _ => return Err(bad()),
    })
}

pub fn parse_score(s: &str) -> Result<ScoreKind, CliError> {
    match s {
        "energy" => Ok(ScoreKind::Energy),
        "rank" => Ok(ScoreKind::Rank),
        "coverage" => Ok(ScoreKind::Coverage),
        _ => Err(CliError::Config(format!("unknown score `{s}`"))),
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    /// Row i scores item j's observation against item i's draws.
    pub raw: ScoreMatrix,
    pub symmetric: ScoreMatrix,
    pub cutoff: f64,
    pub clusters: Vec<usize>,
    pub labels: Option<Vec<usize>>,
    pub auc: Option<f64>,
    pub pair_f1: Option<PairF1>,
    pub cluster_f1: Option<PairF1>,
}

/// Score, threshold and cluster a corpus given one sample set per item.
pub fn run_pipeline(
    items: &[Item],
    samples: &[PredictiveSampleSet],
    kind: ScoreKind,
    threshold: Threshold,
    alpha: f64,
    seed: u64,
) -> Result<VerifyOutcome, CliError> {
    let ids: Vec<String> = items.iter().map(|it| it.id.clone()).collect();
    let obs: Vec<Vec<f64>> = items.iter().map(|it| it.y.clone()).collect();
    let opts = ScoreOptions { alpha, seed: substream_seed(seed, &[1]) };
    let raw = score_matrix(kind, ids, samples, &obs, &opts)?;
    let symmetric = raw.symmetrize();
    let labels = label_indices(items);
    let cutoff = match threshold {
        Threshold::Value(v) => v,
        Threshold::Rule(rule) => select_threshold(&symmetric, rule, labels.as_deref(), &mut substream(seed, &[2]))?,
    };
    let clusters = cluster_by_threshold(&symmetric, cutoff, kind.accept_low());
    let (auc, pair_f1, cluster_f1) = match &labels {
        Some(l) if l.iter().any(|&x| x != l[0]) && has_match(l) => (
            Some(roc_auc(&upper_pairs(&symmetric, l)?, kind.accept_low())?),
            Some(pairwise_f1(&symmetric, l, cutoff)?),
            Some(partition_f1(&clusters, l)?),
        ),
        _ => (None, None, None),
    };
    Ok(VerifyOutcome { raw, symmetric, cutoff, clusters, labels, auc, pair_f1, cluster_f1 })
}

fn has_match(l: &[usize]) -> bool {
    (0..l.len()).any(|i| (i + 1..l.len()).any(|j| l[i] == l[j]))
}

/// ROC points: accepting every pair at least as good as `score`.
pub fn roc_table(m: &ScoreMatrix, labels: &[usize]) -> Result<Table, CliError> {
    let mut pairs = upper_pairs(m, labels)?;
    let sign = if m.kind().accept_low() { 1.0 } else { -1.0 };
    pairs.sort_by(|a, b| (sign * a.0).partial_cmp(&(sign * b.0)).unwrap());
    let pos = pairs.iter().filter(|p| p.1).count() as f64;
    let neg = pairs.len() as f64 - pos;
    let mut t = Table::new(["score", "tpr", "fpr"]);
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut k = 0;
    while k < pairs.len() {
        let v = pairs[k].0;
        while k < pairs.len() && pairs[k].0 == v {
            if pairs[k].1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            k += 1;
        }
        t.push(vec![v.into(), (tp / pos).into(), (fp / neg).into()]);
    }
    Ok(t)
}

fn read_samples(dir: &Path, id: &str) -> Result<PredictiveSampleSet, CliError> {
    let path = dir.join(format!("{id}.csv"));
    let err = |e: String| CliError::Config(format!("{}: {e}", path.display()));
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(&path).map_err(|e| err(e.to_string()))?;
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        rows.push(rec.iter().map(|f| f.parse::<f64>().map_err(|e| err(e.to_string()))).collect::<Result<Vec<_>, _>>()?);
    }
    Ok(PredictiveSampleSet::from_rows(&rows)?)
}

fn f1_json(p: Option<PairF1>) -> serde_json::Value {
    p.map_or(serde_json::Value::Null, |p| json!({ "precision": p.precision, "recall": p.recall, "f1": p.f1 }))
}

pub(crate) fn verify_cmd(a: VerifyArgs) -> Result<(), CliError> {
    let seed = required(a.seed, "seed")?;
    let items = read_items(&required(a.items, "items")?)?;
    let out = required(a.common.out, "out")?;
    let kind = parse_score(a.score.as_deref().unwrap_or("energy"))?;
    let threshold_name = a.threshold.unwrap_or_else(|| "valley".into());
    let threshold = parse_threshold(&threshold_name)?;
    let alpha = a.alpha.unwrap_or(0.1);
    let r = a.r.unwrap_or(1.0);
    let samples: Vec<PredictiveSampleSet> = match &a.pred_dir {
        Some(dir) => items.iter().map(|it| read_samples(dir, &it.id)).collect::<Result<_, _>>()?,
        None => {
            let mode = a.mode.unwrap_or_else(|| "adaptive".into());
            let draws = a.draws.unwrap_or(10_000);
            items
                .par_iter()
                .enumerate()
                .map(|(i, it)| {
                    draw_samples(&it.y, &mode, a.hyperprior.as_deref(), r, draws, &mut substream(seed, &[0, i as u64]))
                })
                .collect::<Result<_, _>>()?
        }
    };
    let res = run_pipeline(&items, &samples, kind, threshold, alpha, seed)?;

    std::fs::create_dir_all(&out).map_err(|e| CliError::Config(format!("{}: {e}", out.display())))?;
    res.raw.write_csv(&out.join("matrix.csv"))?;
    let mut ct = Table::new(["id", "label", "cluster"]);
    for (it, &c) in items.iter().zip(&res.clusters) {
        ct.push(vec![it.id.clone().into(), it.label.clone().map_or(Cell::Empty, Cell::Str), c.into()]);
    }
    ct.write(Some(&out.join("clusters.csv")), crate::table::Format::Csv)?;
    if let (Some(l), Some(_)) = (&res.labels, res.auc) {
        roc_table(&res.symmetric, l)?.write(Some(&out.join("roc.csv")), crate::table::Format::Csv)?;
    }
    let n_clusters = res.clusters.iter().max().map_or(0, |m| m + 1);
    let summary = json!({
        "score": a.score.as_deref().unwrap_or("energy"),
        "threshold": threshold_name,
        "cutoff": res.cutoff,
        "items": items.len(),
        "clusters": n_clusters,
        "auc": res.auc,
        "pairwise": f1_json(res.pair_f1),
        "partition": f1_json(res.cluster_f1),
    });
    let mut bytes = serde_json::to_vec_pretty(&summary).map_err(CliError::io)?;
    bytes.push(b'\n');
    write_bytes(Some(&out.join("summary.json")), &bytes)
}

//! Score matrices over a corpus: row i₁ scores the observation of item i₂
//! against the predictive draws of item i₁.

use std::path::Path;

use rayon::prelude::*;

use super::scores::{energy_score_with, energy_spread, CoverageBands, RankReference};
use crate::error::{domain, Error, Result};
use crate::rng::substream_seed;
use crate::samples::PredictiveSampleSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    Energy,
    Rank,
    Coverage,
}

impl ScoreKind {
    pub fn diagonal(self) -> f64 {
        match self {
            ScoreKind::Energy => 0.0,
            ScoreKind::Rank | ScoreKind::Coverage => 1.0,
        }
    }

    /// Energy accepts a match below the cutoff; rank and coverage above it.
    pub fn accept_low(self) -> bool {
        matches!(self, ScoreKind::Energy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    kind: ScoreKind,
    ids: Vec<String>,
    entries: Vec<f64>,
}

impl ScoreMatrix {
    /// Row-major entries; the diagonal is overwritten with the kind's convention.
    pub fn new(kind: ScoreKind, ids: Vec<String>, mut entries: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        if n == 0 || entries.len() != n * n {
            return domain(format!("need a non-empty square matrix for {n} ids, got {} entries", entries.len()));
        }
        for i in 0..n {
            entries[i * n + i] = kind.diagonal();
        }
        Ok(Self { kind, ids, entries })
    }

    pub fn size(&self) -> usize {
        self.ids.len()
    }
    pub fn kind(&self) -> ScoreKind {
        self.kind
    }
    pub fn ids(&self) -> &[String] {
        &self.ids
    }
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size() + j]
    }
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.size();
        (0..n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// (E + Eᵀ)/2 off the diagonal.
    pub fn symmetrize(&self) -> Self {
        let n = self.size();
        let entries = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                if i == j {
                    self.entries[k]
                } else {
                    0.5 * (self.get(i, j) + self.get(j, i))
                }
            })
            .collect();
        Self { kind: self.kind, ids: self.ids.clone(), entries }
    }

    /// CSV with an `id` corner cell, item ids along the header and first column,
    /// reals at 17 significant digits.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| Error::Io(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(std::iter::once("id").chain(self.ids.iter().map(String::as_str))).map_err(io)?;
        for (i, id) in self.ids.iter().enumerate() {
            let row = (0..self.size()).map(|j| format!("{:.16e}", self.get(i, j)));
            w.write_record(std::iter::once(id.clone()).chain(row)).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    pub fn read_csv(path: &Path, kind: ScoreKind) -> Result<Self> {
        let io = |e: String| Error::Io(format!("{}: {e}", path.display()));
        let mut r = csv::Reader::from_path(path).map_err(|e| io(e.to_string()))?;
        let ids: Vec<String> = r.headers().map_err(|e| io(e.to_string()))?.iter().skip(1).map(String::from).collect();
        let mut entries = Vec::with_capacity(ids.len() * ids.len());
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| io(e.to_string()))?;
            if rec.get(0) != ids.get(i).map(String::as_str) {
                return Err(io(format!("row {i} id does not match the header")));
            }
            for f in rec.iter().skip(1) {
                entries.push(f.trim().parse::<f64>().map_err(|e| io(format!("row {i}: {e}")))?);
            }
        }
        Self::new(kind, ids, entries)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreOptions {
    /// Coverage significance level.
    pub alpha: f64,
    /// Seeds the subsampled energy spread of each row.
    pub seed: u64,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self { alpha: 0.1, seed: 0 }
    }
}

/// All-pairs score matrix. Rows are computed in parallel; each entry depends
/// only on its inputs.
pub fn score_matrix(
    kind: ScoreKind,
    ids: Vec<String>,
    samples: &[PredictiveSampleSet],
    observations: &[Vec<f64>],
    opts: &ScoreOptions,
) -> Result<ScoreMatrix> {
    let n = ids.len();
    if samples.len() != n || observations.len() != n {
        return domain(format!("{n} ids, {} sample sets, {} observations", samples.len(), observations.len()));
    }
    let rows = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| -> Result<Vec<f64>> {
            let score: Box<dyn Fn(&[f64]) -> Result<f64> + Sync> = match kind {
                ScoreKind::Energy => {
                    let spread = energy_spread(s, substream_seed(opts.seed, &[i as u64]));
                    Box::new(move |y| energy_score_with(s, &spread, y))
                }
                ScoreKind::Rank => {
                    let r = RankReference::new(s);
                    Box::new(move |y| {
                        if y.len() != s.dim() {
                            return domain("observation dimension mismatch");
                        }
                        Ok(r.score(y))
                    })
                }
                ScoreKind::Coverage => {
                    let b = CoverageBands::new(s, opts.alpha)?;
                    Box::new(move |y| {
                        if y.len() != s.dim() {
                            return domain("observation dimension mismatch");
                        }
                        Ok(b.score(y))
                    })
                }
            };
            (0..n).map(|j| if i == j { Ok(kind.diagonal()) } else { score(&observations[j]) }).collect()
        })
        .collect::<Result<Vec<_>>>()?;
    ScoreMatrix::new(kind, ids, rows.concat())
}

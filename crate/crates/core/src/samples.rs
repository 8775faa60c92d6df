//! Predictive sample sets.

use crate::error::{domain, Result};

/// N draws of an n-dimensional predictive distribution, stored row-major
/// (one row per draw).
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveSampleSet {
    draws: usize,
    dim: usize,
    data: Vec<f64>,
}

impl PredictiveSampleSet {
    pub fn new(draws: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if draws == 0 || dim == 0 {
            return domain("sample set needs at least one draw and one coordinate");
        }
        if data.len() != draws * dim {
            return domain(format!("expected {} values for {draws}x{dim}, got {}", draws * dim, data.len()));
        }
        Ok(Self { draws, dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != dim) {
            return domain("ragged sample rows");
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    pub fn draws(&self) -> usize {
        self.draws
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, l: usize) -> &[f64] {
        &self.data[l * self.dim..(l + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Values of coordinate `j` across draws.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for r in self.rows() {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        let inv = 1.0 / self.draws as f64;
        m.iter_mut().for_each(|v| *v *= inv);
        m
    }
}

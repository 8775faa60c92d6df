//! Functional principal components of a curve panel.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{domain, Result};

const MIN_EIGENVALUE: f64 = 1e-12;

/// Trapezoid weights for integrals over `grid`.
pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let t = grid.len();
    let mut w = vec![0.0; t];
    for k in 1..t {
        let h = 0.5 * (grid[k] - grid[k - 1]);
        w[k - 1] += h;
        w[k] += h;
    }
    w
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpcaModel {
    pub grid: Vec<f64>,
    /// Top-M eigenvalues, nonincreasing.
    pub eigenvalues: Vec<f64>,
    /// Eigenfunctions on the grid, orthonormal under the trapezoid weights.
    pub eigenfunctions: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl FpcaModel {
    pub fn m(&self) -> usize {
        self.eigenvalues.len()
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Eigenpairs of K̂(t,t') = n⁻¹Σ g(t)g(t') with trapezoid quadrature: the
/// symmetric problem W^½KW^½ψ = λψ, mapped back by φ = W^{−½}ψ.
pub fn fit_fpca(curves: &[Vec<f64>], grid: &[f64], m: usize) -> Result<FpcaModel> {
    let t = grid.len();
    if curves.len() < 2 {
        return domain("FPCA needs at least two curves");
    }
    if m == 0 || m > t {
        return domain(format!("number of components must lie in 1..={t}, got {m}"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("grid must be strictly increasing");
    }
    if curves.iter().any(|c| c.len() != t || c.iter().any(|v| !v.is_finite())) {
        return domain(format!("every curve needs {t} finite values"));
    }
    let w = trapezoid_weights(grid);
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let n = curves.len() as f64;
    let g = DMatrix::from_fn(curves.len(), t, |i, k| curves[i][k] * sw[k]);
    let a = (g.transpose() * &g) / n;
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..t).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let top = eig.eigenvalues[order[0]];
    let lam_m = eig.eigenvalues[order[m - 1]];
    if !(lam_m > MIN_EIGENVALUE * top.max(1.0)) {
        return domain(format!("requested {m} components but the covariance rank is lower (eigenvalue {lam_m:e})"));
    }
    let mut eigenvalues = Vec::with_capacity(m);
    let mut eigenfunctions = Vec::with_capacity(m);
    for &j in &order[..m] {
        let col = eig.eigenvectors.column(j);
        let mut phi: Vec<f64> = (0..t).map(|k| col[k] / sw[k]).collect();
        let peak = phi.iter().cloned().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        if peak < 0.0 {
            phi.iter_mut().for_each(|v| *v = -*v);
        }
        eigenvalues.push(eig.eigenvalues[j]);
        eigenfunctions.push(phi);
    }
    Ok(FpcaModel { grid: grid.to_vec(), eigenvalues, eigenfunctions, weights: w })
}

/// Standardized scores ⟨g, φ̂_m⟩/√λ̂_m.
pub fn fpca_scores(model: &FpcaModel, curve: &[f64]) -> Result<Vec<f64>> {
    if curve.len() != model.grid.len() {
        return domain(format!("curve has {} values, grid has {}", curve.len(), model.grid.len()));
    }
    model
        .eigenvalues
        .iter()
        .zip(&model.eigenfunctions)
        .map(|(&lam, phi)| {
            if lam < MIN_EIGENVALUE {
                return domain(format!("eigenvalue {lam:e} too small to standardize"));
            }
            let ip: f64 = curve.iter().zip(phi).zip(&model.weights).map(|((g, p), w)| g * p * w).sum();
            Ok(ip / lam.sqrt())
        })
        .collect()
}

//! Ingestion: images to wavelet coefficients, curve panels to FPC scores.

mod fpca;
mod io;
mod wavelet;

pub use fpca::{fit_fpca, fpca_scores, trapezoid_weights, FpcaModel};
pub use io::{read_curve_panel, read_pgm, write_pgm, write_vectors_csv, CurvePanel};
pub use wavelet::{coarse_coefficient_vector, dwt2_d4, idwt2_d4, Standardizer, WaveletCoefficients};

#[cfg(test)]
mod tests;

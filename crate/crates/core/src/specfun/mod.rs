//! Special functions and quadrature.

mod expint;
mod normal;
mod phi1;
mod quadrature;

pub use expint::{exp_integral_e1, exp_integral_e1_scaled};
pub use normal::{gauss, gauss_cdf, gauss_quantile, ln_normal_pdf, INV_SQRT_2PI, LN_SQRT_2PI};
pub use phi1::{
    kernel_mean, log_h_with, log_kernel, log_kernel_range, log_phi1, log_phi1_h, phi1, phi1_ratios, phi1_scaled,
    Phi1Args, Weight,
};
pub use quadrature::{integrate_adaptive, integrate_smooth, integrate_with_breaks, Estimate, QuadratureSpec};

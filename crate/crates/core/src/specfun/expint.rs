//! Exponential integral E₁.

use crate::error::{domain, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// E₁(z) = ∫_z^∞ e^{−t}/t dt for z > 0.
pub fn exp_integral_e1(z: f64) -> Result<f64> {
    Ok(exp_integral_e1_scaled(z)? * (-z).exp())
}

/// e^{z}·E₁(z), finite for every z > 0 (no overflow for large z).
pub fn exp_integral_e1_scaled(z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return domain(format!("E1 needs z > 0, got {z}"));
    }
    if z.is_infinite() {
        return Ok(0.0);
    }
    if z <= 1.0 {
        // power series −γ − ln z − Σ (−z)^k/(k·k!)
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -z / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        return Ok((-EULER_GAMMA - z.ln() - sum) * z.exp());
    }
    // continued fraction, modified Lentz
    let tiny = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    Ok(h)
}

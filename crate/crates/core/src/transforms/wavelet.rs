//! Separable 2D Daubechies-4 transform with periodic boundaries.
//!
//! Layout follows the usual in-place pyramid: after J levels the top-left
//! a×a block (a = side/2^J) holds the approximation. The detail blocks of
//! the level with block size b sit at top-right (H: high-pass along rows),
//! bottom-left (V: high-pass along columns) and bottom-right (D).

use crate::error::{domain, Result};

const S3: f64 = 1.732_050_807_568_877_2;
const H: [f64; 4] = [
    (1.0 + S3) / (4.0 * std::f64::consts::SQRT_2),
    (3.0 + S3) / (4.0 * std::f64::consts::SQRT_2),
    (3.0 - S3) / (4.0 * std::f64::consts::SQRT_2),
    (1.0 - S3) / (4.0 * std::f64::consts::SQRT_2),
];
const G: [f64; 4] = [H[3], -H[2], H[1], -H[0]];

fn forward_1d(x: &mut [f64], tmp: &mut [f64]) {
    let n = x.len();
    let half = n / 2;
    for k in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for m in 0..4 {
            let v = x[(2 * k + m) % n];
            a += H[m] * v;
            d += G[m] * v;
        }
        tmp[k] = a;
        tmp[half + k] = d;
    }
    x.copy_from_slice(&tmp[..n]);
}

fn inverse_1d(x: &mut [f64], tmp: &mut [f64]) {
    let n = x.len();
    let half = n / 2;
    tmp[..n].iter_mut().for_each(|v| *v = 0.0);
    for k in 0..half {
        let (a, d) = (x[k], x[half + k]);
        for m in 0..4 {
            tmp[(2 * k + m) % n] += H[m] * a + G[m] * d;
        }
    }
    x.copy_from_slice(&tmp[..n]);
}

/// Coefficients of a `levels`-level transform of a side×side image, stored in
/// the pyramid layout (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoefficients {
    side: usize,
    levels: usize,
    data: Vec<f64>,
}

impl WaveletCoefficients {
    /// Wraps a row-major pyramid, e.g. to synthesize an image with [`idwt2_d4`].
    pub fn from_pyramid(data: Vec<f64>, side: usize, levels: usize) -> Result<Self> {
        check_square(&data, side, levels)?;
        Ok(Self { side, levels, data })
    }

    pub fn side(&self) -> usize {
        self.side
    }
    pub fn levels(&self) -> usize {
        self.levels
    }
    /// Pyramid layout, row-major.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
    pub fn approx_side(&self) -> usize {
        self.side >> self.levels
    }

    fn block(&self, r0: usize, c0: usize, b: usize) -> impl Iterator<Item = f64> + '_ {
        (r0..r0 + b).flat_map(move |r| (c0..c0 + b).map(move |c| self.data[r * self.side + c]))
    }

    /// Approximation block (level 0), row-major.
    pub fn approximation(&self) -> Vec<f64> {
        self.block(0, 0, self.approx_side()).collect()
    }

    /// (H, V, D) detail blocks of level j ∈ 1..=levels, coarsest first.
    pub fn details(&self, j: usize) -> Result<[Vec<f64>; 3]> {
        if j == 0 || j > self.levels {
            return domain(format!("detail level must lie in 1..={}, got {j}", self.levels));
        }
        let b = self.approx_side() << (j - 1);
        Ok([self.block(0, b, b).collect(), self.block(b, 0, b).collect(), self.block(b, b, b).collect()])
    }
}

fn check_square(pixels: &[f64], side: usize, levels: usize) -> Result<()> {
    if !side.is_power_of_two() || side < 2 {
        return domain(format!("image side must be a power of two, got {side}"));
    }
    if pixels.len() != side * side {
        return domain(format!("expected {} pixels for side {side}, got {}", side * side, pixels.len()));
    }
    if levels == 0 || side >> levels == 0 {
        return domain(format!("side {side} does not support {levels} levels"));
    }
    Ok(())
}

fn apply(data: &mut [f64], side: usize, b: usize, step: fn(&mut [f64], &mut [f64])) {
    let mut line = vec![0.0; b];
    let mut tmp = vec![0.0; b];
    for r in 0..b {
        step(&mut data[r * side..r * side + b], &mut tmp);
    }
    for c in 0..b {
        for r in 0..b {
            line[r] = data[r * side + c];
        }
        step(&mut line, &mut tmp);
        for r in 0..b {
            data[r * side + c] = line[r];
        }
    }
}

/// Forward transform of a row-major side×side image.
pub fn dwt2_d4(pixels: &[f64], side: usize, levels: usize) -> Result<WaveletCoefficients> {
    check_square(pixels, side, levels)?;
    let mut data = pixels.to_vec();
    for l in 0..levels {
        apply(&mut data, side, side >> l, forward_1d);
    }
    Ok(WaveletCoefficients { side, levels, data })
}

/// Inverse of [`dwt2_d4`]; returns the row-major image.
pub fn idwt2_d4(coeffs: &WaveletCoefficients) -> Vec<f64> {
    let mut data = coeffs.data.clone();
    for l in (0..coeffs.levels).rev() {
        let b = coeffs.side >> l;
        // columns first, undoing the forward order
        let mut line = vec![0.0; b];
        let mut tmp = vec![0.0; b];
        for c in 0..b {
            for r in 0..b {
                line[r] = data[r * coeffs.side + c];
            }
            inverse_1d(&mut line, &mut tmp);
            for r in 0..b {
                data[r * coeffs.side + c] = line[r];
            }
        }
        for r in 0..b {
            inverse_1d(&mut data[r * coeffs.side..r * coeffs.side + b], &mut tmp);
        }
    }
    data
}

/// Approximation block, then H, V, D of levels 1..=j_max, each row-major.
/// Length (side/2^levels)²·4^j_max; raising j_max only appends.
pub fn coarse_coefficient_vector(coeffs: &WaveletCoefficients, j_max: usize) -> Result<Vec<f64>> {
    if j_max > coeffs.levels {
        return domain(format!("j_max {j_max} exceeds {} levels", coeffs.levels));
    }
    let mut out = coeffs.approximation();
    for j in 1..=j_max {
        for blk in coeffs.details(j)? {
            out.extend(blk);
        }
    }
    Ok(out)
}

/// One global divisor mapping a corpus of coefficient vectors to unit
/// empirical variance (mean of squared deviations over all entries).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardizer {
    pub divisor: f64,
}

impl Standardizer {
    pub fn fit(corpus: &[Vec<f64>]) -> Result<Self> {
        let n: usize = corpus.iter().map(Vec::len).sum();
        if n < 2 {
            return domain("standardization needs at least two values");
        }
        let mean = corpus.iter().flatten().sum::<f64>() / n as f64;
        let var = corpus.iter().flatten().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        if !(var > 0.0) {
            return domain("corpus has zero variance");
        }
        Ok(Self { divisor: var.sqrt() })
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|x| x / self.divisor).collect()
    }
}

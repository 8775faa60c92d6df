//! Exact draws of t² = 1 − κ from the local-scale posterior.
//!
//! In the variable d (t = r·cot d, τ < 1) the posterior has flat measure and
//! log-density −w(1−t²), which is convex in d. For τ ≥ 1 the plain variable t
//! works: −w(1−t²) − ln(τ² + (1−τ²)t²) is convex there. Chords of a convex
//! function lie above it, so the piecewise-exponential chord interpolant is a
//! rejection envelope and the draws are exact.

use rand::Rng;

const MAX_NODES: usize = 96;
const MASS_FLOOR: f64 = 1e-4;
const GAP_TOL: f64 = 0.03;

#[derive(Debug, Clone, Copy)]
enum Var {
    Cot { r: f64 },
    Plain { tau2: f64 },
}

impl Var {
    #[inline]
    fn t2(self, z: f64) -> f64 {
        match self {
            Var::Cot { r } => {
                let t = r / z.tan();
                t * t
            }
            Var::Plain { .. } => z * z,
        }
    }

    #[inline]
    fn log_density(self, w: f64, z: f64) -> (f64, f64) {
        let t2 = self.t2(z).min(1.0);
        match self {
            Var::Cot { .. } => (-w * (1.0 - t2), t2),
            Var::Plain { tau2 } => (-w * (1.0 - t2) - (tau2 + (1.0 - tau2) * t2).ln(), t2),
        }
    }

    fn z_of(self, t: f64) -> f64 {
        match self {
            Var::Cot { r } => {
                if t == 0.0 {
                    std::f64::consts::FRAC_PI_2
                } else {
                    (r / t).atan()
                }
            }
            Var::Plain { .. } => t,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    z0: f64,
    width: f64,
    l0: f64,
    slope: f64,
    // inversion z0 + base + ln1p(v·em)/slope, measured from the higher end
    flat: bool,
    base: f64,
    em: f64,
    inv_slope: f64,
}

/// Rejection sampler for one (y, τ) pair. Cheap to build (tens of density
/// evaluations), so one is built per coordinate and global-scale draw.
#[derive(Debug, Clone)]
pub struct ShrinkageSampler {
    var: Var,
    w: f64,
    segments: Vec<Segment>,
    cum: Vec<f64>,
    // guide[k] = first segment whose cumulative mass reaches k/guide.len()
    guide: Vec<u32>,
}

impl ShrinkageSampler {
    pub fn new(y: f64, tau: f64) -> Self {
        assert!(tau > 0.0 && tau.is_finite() && y.is_finite(), "sampler needs finite y and tau > 0");
        let w = 0.5 * y * y;
        let (var, lo, hi) = if tau < 1.0 {
            let a = ((1.0 - tau) * (1.0 + tau)).sqrt();
            let r = tau / a;
            (Var::Cot { r }, r.atan(), std::f64::consts::FRAC_PI_2)
        } else {
            (Var::Plain { tau2: tau * tau }, 0.0, 1.0)
        };

        let mut ts: Vec<f64> = Vec::with_capacity(40);
        let mut k = 0.25;
        while k < w {
            ts.push((1.0 - k / w).sqrt());
            k *= 2.0;
        }
        if let Var::Plain { tau2 } = var {
            let b2 = tau2 - 1.0;
            let mut k: f64 = 0.5;
            while k.exp_m1() < b2 && k < 700.0 {
                ts.push((1.0 - k.exp_m1() / b2).sqrt());
                k += 0.5;
            }
        }
        let mut zs: Vec<f64> = ts.iter().map(|&t| var.z_of(t)).filter(|&z| z > lo && z < hi).collect();
        for j in 0..=8 {
            zs.push(lo + (hi - lo) * j as f64 / 8.0);
        }
        zs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        zs.dedup();

        let mut nodes: Vec<(f64, f64)> = zs.iter().map(|&z| (z, var.log_density(w, z).0)).collect();
        for _pass in 0..6 {
            let top = nodes.iter().map(|n| n.1).fold(f64::NEG_INFINITY, f64::max);
            let masses: Vec<f64> = nodes.windows(2).map(|p| chord_mass(p[0], p[1], top)).collect();
            let total: f64 = masses.iter().sum();
            let mut next = Vec::with_capacity(nodes.len() * 2);
            let mut changed = false;
            for (j, p) in nodes.windows(2).enumerate() {
                next.push(p[0]);
                if nodes.len() + next.len() - j >= MAX_NODES || masses[j] < MASS_FLOOR * total {
                    continue;
                }
                let zm = 0.5 * (p[0].0 + p[1].0);
                if zm <= p[0].0 || zm >= p[1].0 {
                    continue;
                }
                let lm = var.log_density(w, zm).0;
                if 0.5 * (p[0].1 + p[1].1) - lm > GAP_TOL {
                    next.push((zm, lm));
                    changed = true;
                }
            }
            next.push(*nodes.last().unwrap());
            nodes = next;
            if !changed {
                break;
            }
        }

        let top = nodes.iter().map(|n| n.1).fold(f64::NEG_INFINITY, f64::max);
        let mut segments = Vec::with_capacity(nodes.len());
        let mut cum = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        for p in nodes.windows(2) {
            let width = p[1].0 - p[0].0;
            let slope = (p[1].1 - p[0].1) / width;
            acc += chord_mass(p[0], p[1], top);
            segments.push(Segment {
                z0: p[0].0,
                width,
                l0: p[0].1,
                slope,
                flat: (slope * width).abs() < 1e-9,
                base: if slope > 0.0 { width } else { 0.0 },
                em: (-slope.abs() * width).exp_m1(),
                inv_slope: 1.0 / slope,
            });
            cum.push(acc);
        }
        for c in cum.iter_mut() {
            *c /= acc;
        }
        *cum.last_mut().unwrap() = 1.0;
        let m = 2 * segments.len();
        let guide = (0..m).map(|k| cum.partition_point(|&c| c < k as f64 / m as f64) as u32).collect();
        Self { var, w, segments, cum, guide }
    }

    /// One draw of t² = λ²τ²/(1+λ²τ²).
    #[inline]
    pub fn sample_t2<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let w = self.w;
        match self.var {
            Var::Cot { r } => self.draw(rng, |z| {
                let t = r / z.tan();
                let t2 = (t * t).min(1.0);
                (-w * (1.0 - t2), t2)
            }),
            Var::Plain { tau2 } => self.draw(rng, |z| {
                let t2 = (z * z).min(1.0);
                (-w * (1.0 - t2) - (tau2 + (1.0 - tau2) * t2).ln(), t2)
            }),
        }
    }

    #[inline(always)]
    fn draw<R: Rng + ?Sized, F: Fn(f64) -> (f64, f64)>(&self, rng: &mut R, log_density: F) -> f64 {
        loop {
            let u: f64 = rng.random();
            let mut j = self.guide[(u * self.guide.len() as f64) as usize] as usize;
            while self.cum[j] < u {
                j += 1;
            }
            let s = &self.segments[j];
            // reuse u for the position inside the segment
            let below = if j == 0 { 0.0 } else { self.cum[j - 1] };
            let v = ((u - below) / (self.cum[j] - below)).clamp(0.0, 1.0);
            let off = if s.flat { v * s.width } else { s.base + (v * s.em).ln_1p() * s.inv_slope };
            let z = s.z0 + off.clamp(0.0, s.width);
            let (l, t2) = log_density(z);
            let chord = s.l0 + s.slope * (z - s.z0);
            let e: f64 = rng.random();
            if e <= (l - chord).exp() {
                return t2;
            }
        }
    }

    /// Fill `out` with independent draws of t². Candidates are proposed in
    /// blocks so the transcendental calls of neighbouring draws overlap.
    pub fn fill_t2<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let w = self.w;
        match self.var {
            Var::Cot { r } => self.fill(rng, out, |z| {
                let t = r / z.tan();
                let t2 = (t * t).min(1.0);
                (-w * (1.0 - t2), t2)
            }),
            Var::Plain { tau2 } => self.fill(rng, out, |z| {
                let t2 = (z * z).min(1.0);
                (-w * (1.0 - t2) - (tau2 + (1.0 - tau2) * t2).ln(), t2)
            }),
        }
    }

    #[inline(always)]
    fn fill<R: Rng + ?Sized, F: Fn(f64) -> (f64, f64)>(&self, rng: &mut R, out: &mut [f64], log_density: F) {
        const BLOCK: usize = 8;
        let mut filled = 0;
        while filled < out.len() {
            let mut u = [0.0f64; BLOCK];
            let mut e = [0.0f64; BLOCK];
            for k in 0..BLOCK {
                u[k] = rng.random();
                e[k] = rng.random();
            }
            let mut t2s = [0.0f64; BLOCK];
            let mut ok = [false; BLOCK];
            for k in 0..BLOCK {
                let mut j = self.guide[(u[k] * self.guide.len() as f64) as usize] as usize;
                while self.cum[j] < u[k] {
                    j += 1;
                }
                let s = &self.segments[j];
                let below = if j == 0 { 0.0 } else { self.cum[j - 1] };
                let v = ((u[k] - below) / (self.cum[j] - below)).clamp(0.0, 1.0);
                let off = if s.flat { v * s.width } else { s.base + (v * s.em).ln_1p() * s.inv_slope };
                let z = s.z0 + off.clamp(0.0, s.width);
                let (l, t2) = log_density(z);
                t2s[k] = t2;
                ok[k] = e[k] <= (l - s.l0 - s.slope * (z - s.z0)).exp();
            }
            for k in 0..BLOCK {
                if ok[k] && filled < out.len() {
                    out[filled] = t2s[k];
                    filled += 1;
                }
            }
        }
    }

    /// One draw of the local scale λ given τ.
    pub fn sample_lambda<R: Rng + ?Sized>(&self, tau: f64, rng: &mut R) -> f64 {
        let t2 = self.sample_t2(rng);
        (t2 / (1.0 - t2)).sqrt() / tau
    }

    pub fn segments(&self) -> usize {
        self.segments.len()
    }
}

/// One draw of t² for a (y, τ) pair that will not be reused. For |y| ≤ 1.5
/// and τ < 1 it proposes λ from the half-Cauchy prior and accepts with the
/// likelihood ratio √(1−t²)·e^{−w(1−t²)} ≤ 1, which costs far less than
/// building a [`ShrinkageSampler`]. Large |y|, τ ≥ 1 or 32 straight rejections
/// fall back to the envelope; an accepted proposal is a target draw whatever
/// the trial count, so the result is exact either way.
pub fn sample_t2_once<R: Rng + ?Sized>(y: f64, tau: f64, rng: &mut R) -> f64 {
    let w = 0.5 * y * y;
    if w <= 1.125 && tau < 1.0 {
        for _ in 0..32 {
            let s = tau * (std::f64::consts::FRAC_PI_2 * rng.random::<f64>()).tan();
            let k = 1.0 / (1.0 + s * s);
            let e: f64 = rng.random();
            if e <= k.sqrt() * (-w * k).exp() {
                return 1.0 - k;
            }
        }
    }
    ShrinkageSampler::new(y, tau).sample_t2(rng)
}

// ∫ exp(chord − top) over one segment
fn chord_mass(a: (f64, f64), b: (f64, f64), top: f64) -> f64 {
    let width = b.0 - a.0;
    let (la, lb) = (a.1 - top, b.1 - top);
    let d = lb - la;
    if d.abs() < 1e-9 {
        width * (0.5 * (la + lb)).exp()
    } else if d < 0.0 {
        // e^{la}(1 − e^{d})/(−d)·width
        width * la.exp() * (-(d.exp_m1())) / (-d)
    } else {
        width * lb.exp() * (-((-d).exp_m1())) / d
    }
}

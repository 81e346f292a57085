//! Shared numerical plumbing: Simpson quadrature, log-sum-exp, running
//! moments with standard errors, 1-D minimization and the seeded RNG streams
//! that make every Monte Carlo routine reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Random stream type used by every sampler in the crate.
pub type StreamRng = ChaCha8Rng;

/// Samples per Monte Carlo chunk. Results depend on `(seed, N)` only.
pub const CHUNK_SIZE: usize = 4096;

/// Deterministic RNG for `(seed, stream)`. Distinct streams never overlap.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer; derives child seeds from a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `work` over `ceil(total / CHUNK_SIZE)` chunks, each with its own
/// stream `(tag << 32) | chunk`, and returns the partials in chunk order.
/// Callers reduce the returned vector sequentially, so results do not depend
/// on thread scheduling.
pub fn run_chunks<T, F>(total: usize, seed: u64, tag: u32, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut StreamRng, usize) -> T + Sync,
{
    let chunks = total.div_ceil(CHUNK_SIZE);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK_SIZE.min(total - c * CHUNK_SIZE);
            let mut rng = stream_rng(seed, (u64::from(tag) << 32) | c as u64);
            work(&mut rng, count)
        })
        .collect()
}

/// Composite Simpson rule on a uniform grid.
#[derive(Debug, Clone)]
pub struct SimpsonGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl SimpsonGrid {
    /// `points` must be odd and at least 3.
    pub fn new(lo: f64, hi: f64, points: usize) -> Self {
        assert!(
            points >= 3 && points % 2 == 1,
            "Simpson grid needs an odd point count >= 3"
        );
        assert!(hi > lo, "empty interval");
        let intervals = points - 1;
        let h = (hi - lo) / intervals as f64;
        let nodes = (0..points)
            .map(|i| {
                if i == intervals {
                    hi
                } else {
                    lo + h * i as f64
                }
            })
            .collect();
        let weights = (0..points)
            .map(|i| {
                let c = if i == 0 || i == intervals {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect();
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Simpson rule with `points` nodes on `[lo, hi]`.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    SimpsonGrid::new(lo, hi, points).integrate(f)
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let fa = f(lo);
    let fb = f(hi);
    let m = 0.5 * (lo + hi);
    let fm = f(m);
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_step(f, lo, hi, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `log(sum(exp(xs)))`, stable for large magnitudes. Empty input gives `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Running mean and variance (Welford), mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAcc {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MeanAcc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &MeanAcc) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        if self.count == 0 {
            return f64::INFINITY;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

impl FromIterator<f64> for MeanAcc {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = MeanAcc::new();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

/// Golden-section minimization of `f` on `[lo, hi]` until the bracket is
/// narrower than `rel_tol * max(|x|, 1)`. Returns `(argmin, min)`, comparing
/// against both endpoints so a boundary minimum is not missed.
pub fn golden_section_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, rel_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..500 {
        if (b - a).abs() <= rel_tol * c.abs().max(1.0) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

use super::Codebook;
use crate::error::{Error, Result};
use crate::numeric::{adaptive_simpson, simpson};

/// Simpson nodes per Voronoi interval for cell moments and distortion.
const CELL_POINTS: usize = 513;

/// Intervals of the cumulative table used for quantile inversion.
const QUANTILE_INTERVALS: usize = 4096;

/// Cumulative integral `G(y) = ∫_lo^y g` on a fixed table, refined inside
/// a table interval by bisection with adaptive Simpson.
struct CumulativeMeasure<'a> {
    g: &'a dyn Fn(f64) -> f64,
    nodes: Vec<f64>,
    cum: Vec<f64>,
}

impl<'a> CumulativeMeasure<'a> {
    fn new(g: &'a dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<Self> {
        let m = QUANTILE_INTERVALS;
        let h = (hi - lo) / m as f64;
        let nodes: Vec<f64> = (0..=m)
            .map(|i| if i == m { hi } else { lo + h * i as f64 })
            .collect();
        let mut cum = Vec::with_capacity(m + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for w in nodes.windows(2) {
            let (a, b) = (w[0], w[1]);
            if g(a) <= 0.0 && g(0.5 * (a + b)) <= 0.0 && g(b) <= 0.0 {
                return Err(Error::domain(format!(
                    "quantile inversion: density vanishes on [{a}, {b}]"
                )));
            }
            acc += adaptive_simpson(g, a, b, 1e-16);
            cum.push(acc);
        }
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(Error::domain(
                "quantile inversion: density has no finite positive mass",
            ));
        }
        Ok(Self { g, nodes, cum })
    }

    fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// `y` with `G(y) = prob · G(hi)`.
    fn quantile(&self, prob: f64) -> f64 {
        let target = prob * self.total();
        let i = self
            .cum
            .partition_point(|&c| c < target)
            .clamp(1, self.cum.len() - 1)
            - 1;
        let (mut a, mut b) = (self.nodes[i], self.nodes[i + 1]);
        let base = self.cum[i];
        let x0 = a;
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if base + adaptive_simpson(self.g, x0, mid, 1e-17) < target {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    }
}

/// Codebook at the quantiles `(2j − 1)/(2k)`, `j = 1..k`, of the measure
/// proportional to `f^{1/3}` on `[lo, hi]`: the high-resolution optimal
/// point density. Consecutive codepoints enclose `1/k` of the
/// `f^{1/3}`-mass; the two end gaps hold `1/(2k)` each.
pub fn panter_dite_1d(
    density: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    k: usize,
) -> Result<Codebook> {
    validate(lo, hi, k)?;
    let g = |y: f64| density(y).max(0.0).cbrt();
    let measure = CumulativeMeasure::new(&g, lo, hi)?;
    let points = symmetric_quantiles(&measure, k);
    Codebook::scalar_on(points, lo, hi)
        .map_err(|e| Error::NumericalDegeneracy(format!("Panter–Dite quantiles collapsed: {e}")))
}

fn symmetric_quantiles(measure: &CumulativeMeasure<'_>, k: usize) -> Vec<f64> {
    (1..=k)
        .map(|j| measure.quantile((2 * j - 1) as f64 / (2 * k) as f64))
        .collect()
}

/// Lloyd–Max design for density `f` on `[lo, hi]`: alternate the
/// nearest-neighbor partition (midpoint boundaries) with the centroid
/// update until no point moves by `tol` or more. Starts from the
/// equal-mass quantiles of `f`. A cell with no mass is re-seeded at the
/// midpoint of the heaviest cell.
pub fn lloyd_max_1d(
    density: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<Codebook> {
    validate(lo, hi, k)?;
    if !(tol > 0.0) {
        return Err(Error::invalid(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let f = |y: f64| density(y);
    let mut points = symmetric_quantiles(&CumulativeMeasure::new(&f, lo, hi)?, k);
    let mut last_distortion = f64::INFINITY;
    let mut movement = f64::INFINITY;
    for iter in 0..max_iter {
        let bounds = voronoi_bounds(&points, lo, hi);
        let mut next = Vec::with_capacity(k);
        let mut masses = Vec::with_capacity(k);
        let mut distortion = 0.0;
        for (j, w) in bounds.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let mass = simpson(f, a, b, CELL_POINTS);
            let first = simpson(|y| y * f(y), a, b, CELL_POINTS);
            let c = points[j];
            distortion += simpson(|y| (y - c) * (y - c) * f(y), a, b, CELL_POINTS);
            masses.push(mass);
            next.push(if mass > 1e-300 {
                (first / mass).clamp(a, b)
            } else {
                f64::NAN
            });
        }
        if distortion > last_distortion * (1.0 + 1e-12) + 1e-300 {
            log::warn!("lloyd: distortion rose from {last_distortion:e} to {distortion:e} at iteration {iter}");
        }
        last_distortion = distortion;

        if next.iter().any(|v| v.is_nan()) {
            let heavy = masses
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap();
            let mid = 0.5 * (bounds[heavy] + bounds[heavy + 1]);
            for (j, v) in next.iter_mut().enumerate() {
                if v.is_nan() {
                    log::warn!("lloyd: cell {j} has no mass; re-seeding at {mid}");
                    *v = mid;
                }
            }
            next.sort_by(f64::total_cmp);
            next.dedup();
            if next.len() < k {
                return Err(Error::NumericalDegeneracy(format!(
                    "lloyd: re-seeding could not restore {k} distinct points"
                )));
            }
        }

        movement = next
            .iter()
            .zip(&points)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        points = next;
        if movement < tol {
            log::debug!(
                "lloyd: converged after {} iterations, distortion {last_distortion:e}",
                iter + 1
            );
            return Codebook::scalar_on(points, lo, hi);
        }
    }
    let last = Codebook::scalar_on(points, lo, hi)?;
    Err(Error::Convergence {
        iterations: max_iter,
        movement,
        last: Box::new(last),
    })
}

/// `∫ e_C(y) f(y) dy` over `[lo, hi]`, integrating each Voronoi interval
/// separately so the integrand is smooth on every piece.
pub fn distortion_on(
    codebook: &Codebook,
    density: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    if codebook.dim() != 1 {
        return Err(Error::invalid(
            "distortion on an interval needs a 1-D codebook",
        ));
    }
    let pts = codebook.coords();
    let bounds = voronoi_bounds(pts, lo, hi);
    Ok(bounds
        .windows(2)
        .zip(pts)
        .map(|(w, &c)| {
            let (a, b) = (w[0].max(lo), w[1].min(hi));
            simpson(|y| (y - c) * (y - c) * density(y), a, b, CELL_POINTS)
        })
        .sum())
}

fn voronoi_bounds(points: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut b = Vec::with_capacity(points.len() + 1);
    b.push(lo);
    b.extend(points.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    b.push(hi);
    b
}

fn validate(lo: f64, hi: f64, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(Error::invalid(format!("bad interval [{lo}, {hi}]")));
    }
    Ok(())
}

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Codebook, CodebookFile};
use crate::error::{Error, Result};
use crate::numeric::{derive_seed, stream_rng};

/// Points in the construction-time randomized covering audit.
pub const AUDIT_POINTS: usize = 100_000;

const AUDIT_SEED: u64 = 0x5EED_C0DE;

/// Centers on a cubic grid covering the radius-`r` ball in `R^p`, plus an
/// overflow cell for everything outside the ball.
///
/// The grid has side `s` and either half-integer offsets `(j + ½)s` or
/// integer offsets `js`; a center is kept when its cell (the side-`s` cube
/// around it) comes strictly closer than `r` to the origin. Those cubes
/// tile a superset of the ball, so every point of the ball is within the
/// half-diagonal `ε = s√p/2` of a center.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveringQuantizer {
    centers: Codebook,
    radius: f64,
    eps: f64,
    side: f64,
    half_offset: bool,
}

impl CoveringQuantizer {
    pub fn centers(&self) -> &Codebook {
        &self.centers
    }

    pub fn dim(&self) -> usize {
        self.centers.dim()
    }

    /// Number of centers; also the overflow cell index.
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Cells including the overflow cell.
    pub fn cells(&self) -> usize {
        self.len() + 1
    }

    pub fn overflow_index(&self) -> usize {
        self.len()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Achieved covering radius.
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn half_offset(&self) -> bool {
        self.half_offset
    }

    /// Nearest center for `‖v‖ ≤ r` (ties to the lowest index), the overflow
    /// index otherwise.
    pub fn quantize(&self, v: &[f64]) -> usize {
        let sq: f64 = v.iter().map(|x| x * x).sum();
        if sq <= self.radius * self.radius {
            self.centers.quantize(v)
        } else {
            self.overflow_index()
        }
    }

    pub fn to_text(&self) -> String {
        self.centers
            .to_text_with(&[("r", self.radius), ("eps", self.eps)])
    }

    /// Rebuilds from a file written by [`CoveringQuantizer::to_text`]. The
    /// grid parameters are not stored; `side` is recovered from `ε`.
    pub fn from_file(file: &CodebookFile) -> Result<Self> {
        let (Some(radius), Some(eps)) = (file.radius, file.eps) else {
            return Err(Error::Config(
                "codebook file has no covering metadata".into(),
            ));
        };
        if !(radius > 0.0 && eps > 0.0) {
            return Err(Error::Config(format!(
                "bad covering metadata r={radius} eps={eps}"
            )));
        }
        let p = file.codebook.dim();
        Ok(Self {
            centers: file.codebook.clone(),
            radius,
            eps,
            side: 2.0 * eps / (p as f64).sqrt(),
            half_offset: false,
        })
    }
}

/// Volume of the unit ball in `R^p`.
pub fn unit_ball_volume(p: usize) -> f64 {
    let mut v = if p.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut q = if p.is_multiple_of(2) { 0 } else { 1 };
    while q < p {
        q += 2;
        v *= 2.0 * PI / q as f64;
    }
    v
}

/// `k_min(p) = ⌈V_p (2√p)^p⌉`: from here on the sharp grid constant applies.
pub fn min_k_for_grid_constant(p: usize) -> usize {
    (unit_ball_volume(p) * (2.0 * (p as f64).sqrt()).powi(p as i32)).ceil() as usize
}

/// `c_grid(p, k)` with `ε ≤ c_grid · r · k^{−1/p}`.
///
/// Disjoint side-`s` cubes within distance `r` of the origin fit in the
/// ball of radius `r + s√p`, so their count is at most `V_p (r/s + √p)^p`.
/// Any `s ≥ r / ((k/V_p)^{1/p} − √p)` therefore uses at most `k` centers.
/// For `k ≥ k_min(p)` the denominator is at least half of `(k/V_p)^{1/p}`,
/// giving `c_grid = √p V_p^{1/p}`. Smaller `k` fall back on the single
/// center with `s = 2r`, covered by `c_grid = 2p V_p^{1/p}`.
pub fn covering_constant(p: usize, k: usize) -> f64 {
    let vp = unit_ball_volume(p).powf(1.0 / p as f64);
    if k >= min_k_for_grid_constant(p) {
        (p as f64).sqrt() * vp
    } else {
        2.0 * p as f64 * vp
    }
}

/// Smallest-side grid with at most `k` centers covering the radius-`r`
/// ball in `R^p`, checked by a randomized audit.
pub fn covering_codebook(p: usize, r: f64, k: usize) -> Result<CoveringQuantizer> {
    if p == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("radius must be positive, got {r}")));
    }
    let best = [true, false]
        .into_iter()
        .filter_map(|half| smallest_side(p, r, k, half).map(|s| (s, half)))
        .min_by(|a, b| a.0.total_cmp(&b.0));
    let (side, half_offset) = best.ok_or_else(|| {
        Error::Construction(format!("no grid with at most {k} centers (p={p}, r={r})"))
    })?;

    let mut centers = Vec::new();
    enumerate(p, r / side, offset(half_offset), &mut |t| {
        centers.push(t.iter().map(|&v| v * side).collect::<Vec<f64>>());
    });
    let eps = side * (p as f64).sqrt() / 2.0;
    let cq = CoveringQuantizer {
        centers: Codebook::new(p, centers)?,
        radius: r,
        eps,
        side,
        half_offset,
    };
    if cq.len() > k {
        return Err(Error::Construction(format!(
            "grid produced {} > {k} centers",
            cq.len()
        )));
    }
    audit(&cq)?;
    Ok(cq)
}

/// Free-function form of [`CoveringQuantizer::quantize`].
pub fn covering_quantize(cq: &CoveringQuantizer, v: &[f64]) -> usize {
    cq.quantize(v)
}

fn offset(half: bool) -> f64 {
    if half {
        0.5
    } else {
        0.0
    }
}

/// Calls `visit` with every grid coordinate vector `t` (in units of `s`)
/// whose cube comes strictly closer than `rho = r/s` to the origin, in
/// lexicographic order.
fn enumerate(p: usize, rho: f64, off: f64, visit: &mut dyn FnMut(&[f64])) {
    fn rec(
        t: &mut Vec<f64>,
        p: usize,
        rho2: f64,
        jmax: i64,
        off: f64,
        acc: f64,
        visit: &mut dyn FnMut(&[f64]),
    ) {
        if t.len() == p {
            visit(t);
            return;
        }
        for j in -jmax..=jmax {
            let c = j as f64 + off;
            let gap = (c.abs() - 0.5).max(0.0);
            let next = acc + gap * gap;
            if next < rho2 {
                t.push(c);
                rec(t, p, rho2, jmax, off, next, visit);
                t.pop();
            }
        }
    }
    let jmax = (rho + 1.0).ceil() as i64 + 1;
    rec(
        &mut Vec::with_capacity(p),
        p,
        rho * rho,
        jmax,
        off,
        0.0,
        visit,
    );
}

fn count(p: usize, r: f64, s: f64, half: bool, cap: usize) -> usize {
    let mut n = 0usize;
    enumerate(p, r / s, offset(half), &mut |_| n += 1);
    n.min(cap)
}

/// Smallest side `s` at which the grid has at most `k` centers, or `None`
/// when this offset cannot get down to `k` (half-integer grids always have
/// at least `2^p` centers).
fn smallest_side(p: usize, r: f64, k: usize, half: bool) -> Option<f64> {
    let vp = unit_ball_volume(p);
    let root = (k as f64 / vp).powf(1.0 / p as f64);
    let denom = root - (p as f64).sqrt();
    let mut hi = if denom > 0.0 {
        (r / denom).min(2.0 * r)
    } else {
        2.0 * r
    };
    let cap = k.saturating_mul(4).max(64);
    if count(p, r, hi, half, cap) > k {
        return None;
    }
    // The cubes cover the ball, so fewer than V_p (r/s)^p of them is
    // impossible: below this side the count exceeds k.
    let mut lo = 0.999 * r / root;
    if lo >= hi || count(p, r, lo, half, cap) <= k {
        lo = hi * 1e-3;
    }
    for _ in 0..200 {
        if hi - lo <= 1e-14 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if count(p, r, mid, half, cap) <= k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // The count only changes where some cube touches the sphere, at
    // s = r/√Q with Q = Σ(|t_i| − ½)₊². Snap down to that breakpoint.
    let rho = r / hi;
    let off = offset(half);
    let jmax = (rho + 2.0).ceil() as i64;
    let mut q_min = f64::INFINITY;
    let mut t = vec![0i64; p];
    let span = (2 * jmax + 1) as usize;
    let total = span.checked_pow(p as u32).unwrap_or(usize::MAX);
    if total <= 50_000_000 {
        for idx in 0..total {
            let mut rem = idx;
            for tj in t.iter_mut() {
                *tj = (rem % span) as i64 - jmax;
                rem /= span;
            }
            let q: f64 = t
                .iter()
                .map(|&j| {
                    let g = ((j as f64 + off).abs() - 0.5).max(0.0);
                    g * g
                })
                .sum();
            if q >= rho * rho && q < q_min {
                q_min = q;
            }
        }
        let snapped = r / q_min.sqrt();
        if snapped <= hi && count(p, r, snapped, half, cap) == count(p, r, hi, half, cap) {
            hi = snapped;
        }
    }
    Some(hi)
}

fn audit(cq: &CoveringQuantizer) -> Result<()> {
    let p = cq.dim();
    let mut rng = stream_rng(
        derive_seed(AUDIT_SEED, (p as u64) << 32 | cq.len() as u64),
        0,
    );
    let eps2 = cq.eps * cq.eps * (1.0 + 1e-12);
    let mut v = vec![0.0; p];
    for _ in 0..AUDIT_POINTS {
        sample_ball(&mut rng, cq.radius, &mut v);
        let d = cq
            .centers
            .points()
            .map(|c| {
                c.iter()
                    .zip(&v)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min);
        if d > eps2 {
            return Err(Error::Construction(format!(
                "covering audit: {v:?} is {} from the nearest center, ε={}",
                d.sqrt(),
                cq.eps
            )));
        }
    }
    Ok(())
}

/// Uniform draw from the radius-`r` ball.
pub fn sample_ball(rng: &mut impl Rng, r: f64, out: &mut [f64]) {
    loop {
        let mut sq = 0.0;
        for x in out.iter_mut() {
            *x = rng.sample(StandardNormal);
            sq += *x * *x;
        }
        if sq > 0.0 {
            let u: f64 = rng.random();
            let scale = r * u.powf(1.0 / out.len() as f64) / sq.sqrt();
            out.iter_mut().for_each(|x| *x *= scale);
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_partition() {
        let cq = covering_codebook(1, 1.0, 4).unwrap();
        assert_eq!(cq.centers().coords(), &[-0.75, -0.25, 0.25, 0.75]);
        assert_eq!(cq.eps(), 0.25);
    }

    #[test]
    fn volumetric_example_in_the_plane() {
        let cq = covering_codebook(2, 1.0, 9).unwrap();
        assert!(cq.len() <= 9);
        assert!(cq.eps() <= 1.0);
    }

    #[test]
    fn eps_within_documented_constant() {
        for p in 1..=4 {
            for k in [1, 2, 5, 16, 64, 256, 1000] {
                let cq = covering_codebook(p, 1.3, k).unwrap();
                assert!(cq.len() <= k);
                let bound = covering_constant(p, k) * 1.3 * (k as f64).powf(-1.0 / p as f64);
                assert!(
                    cq.eps() <= bound * (1.0 + 1e-12),
                    "p={p} k={k}: {} > {bound}",
                    cq.eps()
                );
            }
        }
    }

    #[test]
    fn unit_ball_volumes() {
        assert_close!(unit_ball_volume(1), 2.0, 1e-15);
        assert_close!(unit_ball_volume(2), PI, 1e-15);
        assert_close!(unit_ball_volume(3), 4.0 * PI / 3.0, 1e-15);
    }

    #[test]
    fn quantize_boundary_and_overflow() {
        let cq = covering_codebook(2, 1.0, 16).unwrap();
        assert_eq!(cq.quantize(&[2.0, 0.0]), cq.overflow_index());
        assert!(cq.quantize(&[1.0, 0.0]) < cq.len());
        assert!(cq.quantize(&[0.6, 0.8]) < cq.len());
        for i in 0..cq.len() {
            let c = cq.centers().point(i).to_vec();
            if c.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                assert_eq!(cq.quantize(&c), i);
            }
        }
    }

    #[test]
    fn k_one_gives_single_center() {
        let cq = covering_codebook(3, 2.0, 1).unwrap();
        assert_eq!(cq.len(), 1);
        assert_close!(cq.eps(), 2.0 * 3f64.sqrt(), 1e-12);
    }

    #[test]
    fn text_round_trip_keeps_covering_metadata() {
        let cq = covering_codebook(2, 1.0, 16).unwrap();
        let file = CodebookFile::parse(&cq.to_text()).unwrap();
        let back = CoveringQuantizer::from_file(&file).unwrap();
        assert_eq!(back.centers(), cq.centers());
        assert_eq!(back.eps(), cq.eps());
        assert_eq!(back.radius(), cq.radius());
    }
}

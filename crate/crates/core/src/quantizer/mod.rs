//! Codebooks and nearest-neighbor quantization, 1-D design (Lloyd–Max and
//! Panter–Dite companding), and the covering quantizer with an overflow
//! cell used for vector targets.
//!
//! Cell indices are 0-based throughout: a `k`-point codebook maps into
//! `0..k`, and a covering quantizer with `k` centers uses `k` for the
//! overflow cell.

mod centroids;
mod covering;
mod design;

pub(crate) use centroids::CellSums;
pub use centroids::{centroids_from_samples, Centroids};
pub use covering::{
    covering_codebook, covering_constant, covering_quantize, min_k_for_grid_constant, sample_ball,
    unit_ball_volume, CoveringQuantizer, AUDIT_POINTS,
};
pub use design::{distortion_on, lloyd_max_1d, panter_dite_1d};

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Reconstruction points in `R^p`. One-dimensional codebooks are kept in
/// strictly increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    dim: usize,
    points: Vec<f64>,
    support: Option<(f64, f64)>,
}

impl Codebook {
    pub fn new(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("codebook dimension must be at least 1"));
        }
        if points.is_empty() {
            return Err(Error::invalid("codebook needs at least one point"));
        }
        if let Some(bad) = points.iter().find(|pt| pt.len() != dim) {
            return Err(Error::invalid(format!(
                "point {bad:?} does not have dimension {dim}"
            )));
        }
        let flat: Vec<f64> = points.into_iter().flatten().collect();
        Self::from_flat(dim, flat)
    }

    /// One-dimensional codebook.
    pub fn scalar(points: Vec<f64>) -> Result<Self> {
        Self::from_flat(1, points)
    }

    /// One-dimensional codebook whose points must lie in `[lo, hi]`.
    pub fn scalar_on(points: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        Self::scalar(points)?.with_support(lo, hi)
    }

    fn from_flat(dim: usize, points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("codebook needs at least one point"));
        }
        if let Some(bad) = points.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite codepoint {bad}")));
        }
        if dim == 1 {
            if let Some(w) = points.windows(2).find(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!(
                    "1-D codepoints must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self {
            dim,
            points,
            support: None,
        })
    }

    /// Attaches the support interval of a 1-D codebook.
    pub fn with_support(mut self, lo: f64, hi: f64) -> Result<Self> {
        if self.dim != 1 {
            return Err(Error::invalid(
                "support interval only applies to 1-D codebooks",
            ));
        }
        if !(lo < hi) {
            return Err(Error::invalid(format!("empty support [{lo}, {hi}]")));
        }
        if let Some(v) = self.points.iter().find(|&&v| v < lo || v > hi) {
            return Err(Error::domain(format!("codepoint {v} outside [{lo}, {hi}]")));
        }
        self.support = Some((lo, hi));
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of points `k`.
    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    /// Flat coordinates; for `p = 1` the sorted codepoints.
    pub fn coords(&self) -> &[f64] {
        &self.points
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        self.support
    }

    /// Index of the nearest point, ties to the lowest index.
    pub fn quantize(&self, v: &[f64]) -> usize {
        if self.dim == 1 {
            return self.quantize_scalar(v[0]);
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.points.chunks_exact(self.dim).enumerate() {
            let d: f64 = c.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Nearest 1-D codepoint by binary search, ties to the lower index.
    pub fn quantize_scalar(&self, v: f64) -> usize {
        let pts = &self.points;
        let idx = pts.partition_point(|&c| c < v);
        if idx == 0 {
            0
        } else if idx == pts.len() {
            pts.len() - 1
        } else if (v - pts[idx - 1]).abs() <= (pts[idx] - v).abs() {
            idx - 1
        } else {
            idx
        }
    }

    /// `# codebook p=<p> k=<k> ...` header followed by one point per line,
    /// floats in shortest round-trip form.
    pub fn to_text(&self) -> String {
        self.to_text_with(&[])
    }

    pub(crate) fn to_text_with(&self, extra: &[(&str, f64)]) -> String {
        let mut out = format!("# codebook p={} k={}", self.dim, self.len());
        if let Some((lo, hi)) = self.support {
            let _ = write!(out, " lo={lo} hi={hi}");
        }
        for (key, v) in extra {
            let _ = write!(out, " {key}={v}");
        }
        out.push('\n');
        for pt in self.points() {
            let line: Vec<String> = pt.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let file = CodebookFile::parse(text)?;
        if file.radius.is_some() {
            return Err(Error::Config("file describes a covering quantizer".into()));
        }
        Ok(file.codebook)
    }
}

/// Parsed codebook file: the codebook plus the covering metadata when the
/// file was written by a covering quantizer.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookFile {
    pub codebook: Codebook,
    pub radius: Option<f64>,
    pub eps: Option<f64>,
}

impl CodebookFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("empty codebook file".into()))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("#") || fields.next() != Some("codebook") {
            return Err(Error::Config(format!("bad codebook header: {header:?}")));
        }
        let (mut p, mut k, mut lo, mut hi, mut radius, mut eps) =
            (None, None, None, None, None, None);
        for field in fields {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("bad header field {field:?}")))?;
            let num = || {
                value
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad number in header field {field:?}")))
            };
            let int = || {
                value
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad integer in header field {field:?}")))
            };
            match key {
                "p" => p = Some(int()?),
                "k" => k = Some(int()?),
                "lo" => lo = Some(num()?),
                "hi" => hi = Some(num()?),
                "r" => radius = Some(num()?),
                "eps" => eps = Some(num()?),
                _ => return Err(Error::Config(format!("unknown header key {key:?}"))),
            }
        }
        let p = p.ok_or_else(|| Error::Config("codebook header lacks p".into()))?;
        let k = k.ok_or_else(|| Error::Config("codebook header lacks k".into()))?;
        let mut points = Vec::with_capacity(k);
        for line in lines {
            let pt = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad coordinate {t:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if pt.len() != p {
                return Err(Error::Config(format!(
                    "line {line:?} does not have {p} coordinates"
                )));
            }
            points.push(pt);
        }
        if points.len() != k {
            return Err(Error::Config(format!(
                "header says k={k} but file has {} points",
                points.len()
            )));
        }
        let mut codebook = Codebook::new(p, points).map_err(|e| Error::Config(e.to_string()))?;
        match (lo, hi) {
            (Some(lo), Some(hi)) => {
                codebook = codebook
                    .with_support(lo, hi)
                    .map_err(|e| Error::Config(e.to_string()))?
            }
            (None, None) => {}
            _ => return Err(Error::Config("support needs both lo and hi".into())),
        }
        if radius.is_some() != eps.is_some() {
            return Err(Error::Config(
                "covering metadata needs both r and eps".into(),
            ));
        }
        Ok(Self {
            codebook,
            radius,
            eps,
        })
    }
}

/// `arg min_j ‖v − c_j‖`, ties to the lowest index (0-based).
pub fn quantize_nn(codebook: &Codebook, v: &[f64]) -> usize {
    codebook.quantize(v)
}

/// `Δ_C`: largest gap between consecutive codepoints after padding with
/// `±A`.
pub fn delta(codebook: &Codebook, half_width: f64) -> Result<f64> {
    delta_on(codebook, -half_width, half_width)
}

/// `Δ_C` on a general interval `[lo, hi]`.
pub fn delta_on(codebook: &Codebook, lo: f64, hi: f64) -> Result<f64> {
    if codebook.dim() != 1 {
        return Err(Error::invalid("Δ_C is defined for 1-D codebooks"));
    }
    let pts = codebook.coords();
    if let Some(v) = pts.iter().find(|&&v| v < lo || v > hi) {
        return Err(Error::domain(format!("codepoint {v} outside [{lo}, {hi}]")));
    }
    let mut prev = lo;
    let mut gap: f64 = 0.0;
    for &v in pts.iter().chain(std::iter::once(&hi)) {
        gap = gap.max(v - prev);
        prev = v;
    }
    Ok(gap)
}

/// `e_C(y) = min_j (y − y_j)²`.
pub fn cell_error(codebook: &Codebook, y: f64) -> f64 {
    let c = codebook.coords()[codebook.quantize_scalar(y)];
    (y - c) * (y - c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> Codebook {
        Codebook::scalar(vec![-0.5, 0.5]).unwrap()
    }

    #[test]
    fn nearest_neighbor_with_ties() {
        let c = two();
        assert_eq!(quantize_nn(&c, &[0.4]), 1);
        assert_eq!(quantize_nn(&c, &[0.0]), 0);
        assert_eq!(quantize_nn(&c, &[-3.0]), 0);
        let v = Codebook::new(2, vec![vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(v.quantize(&[0.0, 5.0]), 0);
        assert_eq!(v.quantize(&[-0.1, 5.0]), 1);
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta(&two(), 1.0).unwrap(), 1.0);
        assert_eq!(
            delta(&Codebook::scalar(vec![0.0]).unwrap(), 1.0).unwrap(),
            1.0
        );
        let four = Codebook::scalar(vec![-0.75, -0.25, 0.25, 0.75]).unwrap();
        assert_eq!(delta(&four, 1.0).unwrap(), 0.5);
        assert!(matches!(delta(&four, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn cell_error_examples() {
        assert_close!(
            cell_error(&Codebook::scalar(vec![0.0]).unwrap(), 0.3),
            0.09,
            1e-15
        );
        assert_eq!(cell_error(&two(), 0.5), 0.0);
        assert_close!(cell_error(&two(), 0.1), 0.16, 1e-15);
    }

    #[test]
    fn rejects_unsorted_scalar_codebook() {
        assert!(Codebook::scalar(vec![0.5, -0.5]).is_err());
        assert!(Codebook::scalar(vec![0.5, 0.5]).is_err());
        assert!(Codebook::scalar(vec![]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let c = Codebook::scalar_on(vec![-0.1, 1.0 / 3.0, 0.7], -1.0, 1.0).unwrap();
        let text = c.to_text();
        assert!(text.starts_with("# codebook p=1 k=3"));
        assert_eq!(Codebook::from_text(&text).unwrap(), c);
        let v = Codebook::new(2, vec![vec![0.1, 0.2], vec![-1e-300, 5e10]]).unwrap();
        assert_eq!(Codebook::from_text(&v.to_text()).unwrap(), v);
    }

    #[test]
    fn text_parser_is_strict() {
        assert!(Codebook::from_text("# codebook p=1 k=2\n0.1\n").is_err());
        assert!(Codebook::from_text("# codebook p=1 k=1 q=3\n0.1\n").is_err());
        assert!(Codebook::from_text("# codebook k=1\n0.1\n").is_err());
        assert!(Codebook::from_text("0.1\n").is_err());
    }
}

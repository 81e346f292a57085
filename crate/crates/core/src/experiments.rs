//! Sweeps over `(n, k)` for scalar models and over `k` for linear-Gaussian
//! vector models, with regime labels, log-log slope fits and CSV/JSON
//! output.
//!
//! Each cell gets its own seed derived from the master seed and the cell's
//! position, so rows do not depend on execution order.

use std::fmt;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::{
    corollary_rhs, corollary_rhs_weak, moment_radius, thm2_bound_moment, thm2_bound_subgaussian,
    thm2_objective, BoundConfig,
};
use crate::error::{Error, Result};
use crate::model::{
    moment_report, JointModel, LinearGaussianModel, ScalarChannelModel, ScalarExperiment,
};
use crate::numeric::{derive_seed, run_chunks};
use crate::quantizer::{cell_error, covering_codebook, panter_dite_1d, Codebook};
use crate::regret::{distortion_of_y, run_two_pass, RegretParts};

/// CSV header of sweep output.
pub const CSV_HEADER: &str =
    "model,n,k,N,seed,mmse,mmse_se,mmse_k,mmse_k_se,regret,regret_se,dist_y,bound,regime,wall_ms";

/// Which error source dominates `mmse_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `n > k²`: quantizing `Y` costs more than estimating it.
    QuantizationLimited,
    /// `n ≤ k²`.
    EstimationLimited,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::QuantizationLimited => "quantization-limited",
            Regime::EstimationLimited => "estimation-limited",
        })
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantization-limited" => Ok(Regime::QuantizationLimited),
            "estimation-limited" => Ok(Regime::EstimationLimited),
            _ => Err(Error::invalid(format!("unknown regime {s:?}"))),
        }
    }
}

/// `n > k²` is quantization-limited; the tie `n = k²` counts as
/// estimation-limited.
pub fn regime_classify(n_obs: usize, k: usize) -> Regime {
    if (n_obs as u128) > (k as u128) * (k as u128) {
        Regime::QuantizationLimited
    } else {
        Regime::EstimationLimited
    }
}

/// One sweep cell. The CSV carries the first fifteen fields; JSON carries
/// all of them. Non-finite floats appear as `null` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model: String,
    pub n: usize,
    pub k: usize,
    #[serde(rename = "N")]
    pub samples: usize,
    pub seed: u64,
    #[serde(with = "nullable")]
    pub mmse: f64,
    #[serde(with = "nullable")]
    pub mmse_se: f64,
    #[serde(with = "nullable")]
    pub mmse_k: f64,
    #[serde(with = "nullable")]
    pub mmse_k_se: f64,
    #[serde(with = "nullable")]
    pub regret: f64,
    #[serde(with = "nullable")]
    pub regret_se: f64,
    /// `E e_C(Y)` for scalar rows; `NaN` for vector rows.
    #[serde(with = "nullable")]
    pub dist_y: f64,
    /// Corollary envelope (scalar) or subgaussian bound (vector), times the
    /// row's constant.
    #[serde(with = "nullable")]
    pub bound: f64,
    pub regime: Regime,
    pub wall_ms: u64,
    /// `mmse_k − mmse − regret`.
    #[serde(with = "nullable", default = "nan")]
    pub residual: f64,
    #[serde(with = "nullable", default = "nan")]
    pub residual_se: f64,
    /// Paired estimate of `regret − dist_y` (scalar rows).
    #[serde(with = "nullable", default = "nan")]
    pub gap: f64,
    #[serde(with = "nullable", default = "nan")]
    pub gap_se: f64,
    /// `bound` with every hidden constant set to 1.
    #[serde(with = "nullable", default = "nan")]
    pub bound_shape: f64,
    /// Constant multiplying `bound_shape`.
    #[serde(with = "nullable", default = "nan")]
    pub constant: f64,
    /// Tail constant `c2` (vector rows); `constant` holds `c1` there.
    #[serde(with = "nullable", default = "nan")]
    pub constant_tail: f64,
    /// Part of `regret` from the overflow cell (vector rows).
    #[serde(with = "nullable", default = "nan")]
    pub regret_overflow: f64,
    /// Fourth-moment bound (vector rows).
    #[serde(with = "nullable", default = "nan")]
    pub bound_moment: f64,
    /// Covering radius `r` and achieved `ε` (vector rows).
    #[serde(with = "nullable", default = "nan")]
    pub radius: f64,
    #[serde(with = "nullable", default = "nan")]
    pub eps: f64,
    #[serde(default)]
    pub cells: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn nan() -> f64 {
    f64::NAN
}

mod nullable {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

impl SweepRow {
    fn blank(model: &str, n: usize, k: usize, samples: usize, seed: u64) -> Self {
        Self {
            model: model.to_string(),
            n,
            k,
            samples,
            seed,
            mmse: f64::NAN,
            mmse_se: f64::NAN,
            mmse_k: f64::NAN,
            mmse_k_se: f64::NAN,
            regret: f64::NAN,
            regret_se: f64::NAN,
            dist_y: f64::NAN,
            bound: f64::NAN,
            regime: regime_classify(n, k),
            wall_ms: 0,
            residual: f64::NAN,
            residual_se: f64::NAN,
            gap: f64::NAN,
            gap_se: f64::NAN,
            bound_shape: f64::NAN,
            constant: f64::NAN,
            constant_tail: f64::NAN,
            regret_overflow: f64::NAN,
            bound_moment: f64::NAN,
            radius: f64::NAN,
            eps: f64::NAN,
            cells: 0,
            error: None,
        }
    }

    fn fill_estimates(&mut self, parts: &RegretParts) {
        self.mmse = parts.mmse.mean();
        self.mmse_se = parts.mmse.se();
        self.mmse_k = parts.mmse_k.mean();
        self.mmse_k_se = parts.mmse_k.se();
        self.regret = parts.regret.mean();
        self.regret_se = parts.regret.se();
        (self.residual, self.residual_se) = parts.residual();
        if let Some(gap) = &parts.control_gap {
            self.gap = gap.mean();
            self.gap_se = gap.se();
        }
    }

    /// `|regret − dist_y|` and its standard error, from the paired
    /// estimate when available.
    pub fn deviation(&self) -> (f64, f64) {
        if self.gap.is_finite() {
            (self.gap.abs(), self.gap_se)
        } else {
            ((self.regret - self.dist_y).abs(), self.regret_se)
        }
    }

    /// Rescales the bound column to constant `c`.
    pub fn set_constant(&mut self, c: f64) {
        self.constant = c;
        self.bound = c * self.bound_shape;
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.model,
            self.n,
            self.k,
            self.samples,
            self.seed,
            self.mmse,
            self.mmse_se,
            self.mmse_k,
            self.mmse_k_se,
            self.regret,
            self.regret_se,
            self.dist_y,
            self.bound,
            self.regime,
            self.wall_ms
        )
    }
}

/// How the covering radius is chosen in vector sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RPolicy {
    Fixed(f64),
    /// Minimizer `r*` of the subgaussian bound.
    Optimized,
    /// Balance point of the fourth-moment bound.
    Moment,
}

impl std::str::FromStr for RPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimized" => Ok(RPolicy::Optimized),
            "moment" => Ok(RPolicy::Moment),
            _ => match s.strip_prefix("fixed:").map(str::parse::<f64>) {
                Some(Ok(r)) if r > 0.0 => Ok(RPolicy::Fixed(r)),
                _ => Err(Error::Config(format!(
                    "r_policy must be optimized, moment or fixed:<r>, got {s:?}"
                ))),
            },
        }
    }
}

/// Scalar sweep: for each `(n, k)` in that order, Panter–Dite codebook on
/// `f_Y`, `η`-space regret, `E e_C(Y)`, and the corollary envelope.
pub fn sweep_scalar(
    model: &ScalarChannelModel,
    model_id: &str,
    k_list: &[usize],
    n_list: &[usize],
    samples: usize,
    master_seed: u64,
    config: &BoundConfig,
) -> Result<Vec<SweepRow>> {
    check_lists(k_list, Some(n_list))?;
    check_model_id(model_id)?;
    let mut rows = Vec::with_capacity(k_list.len() * n_list.len());
    for (i, &n) in n_list.iter().enumerate() {
        for (j, &k) in k_list.iter().enumerate() {
            let seed = derive_seed(master_seed, (i * k_list.len() + j) as u64);
            let mut row = SweepRow::blank(model_id, n, k, samples, seed);
            let start = Instant::now();
            if let Err(e) = scalar_cell(model, n, k, samples, seed, config, &mut row) {
                log::warn!("sweep cell n={n} k={k} failed: {e}");
                row.error = Some(format!("{}: {e}", e.kind()));
            }
            row.wall_ms = start.elapsed().as_millis() as u64;
            rows.push(row);
        }
    }
    Ok(rows)
}

fn scalar_cell(
    model: &ScalarChannelModel,
    n: usize,
    k: usize,
    samples: usize,
    seed: u64,
    config: &BoundConfig,
    row: &mut SweepRow,
) -> Result<()> {
    let a = model.half_width();
    let codebook = panter_dite_1d(|y| model.prior_density(y), -a, a, k)?;
    let experiment = ScalarExperiment::new(model, n)?;
    let control = |y: &[f64]| cell_error(&codebook, y[0]);
    let parts = run_two_pass(
        &experiment,
        |_, eta| codebook.quantize(eta),
        k,
        samples,
        seed,
        Some(&control),
    )?;
    row.fill_estimates(&parts);
    row.cells = k;
    row.dist_y = distortion_of_y(&codebook, model)?;
    row.bound_shape = match model.mean_inv_sqrt_fisher() {
        Ok(e) => corollary_rhs(k, n, e, row.mmse, 1.0),
        Err(_) => corollary_rhs_weak(k, row.mmse, 1.0),
    };
    row.set_constant(config.c_corollary);
    Ok(())
}

/// Moments of `‖η(X)‖` and the dimension the vector bounds use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VectorMoments {
    pub e1: f64,
    pub e2: f64,
    pub e4: f64,
    pub v: f64,
    /// Rank of the regression matrix.
    pub p_eff: usize,
}

impl VectorMoments {
    /// Closed forms where available; `E‖η‖` for anisotropic `Σ_η` comes
    /// from a Monte Carlo moment report of `samples` draws.
    pub fn of(model: &LinearGaussianModel, samples: usize, seed: u64) -> Result<Self> {
        let known = model.known_moments();
        let (e2, e4, v) = (
            known.e2.unwrap(),
            known.e4.unwrap(),
            known.subgaussian_v.unwrap(),
        );
        let e1 = match known.e1 {
            Some(e1) => e1,
            None => moment_report(model, samples.max(1000), seed)?.e1,
        };
        Ok(Self {
            e1,
            e2,
            e4,
            v,
            p_eff: model.effective_dim().max(1),
        })
    }

    /// `(min_r g(r), r*)` of the subgaussian bound.
    pub fn subgaussian(&self, k: usize, c1: f64, c2: f64) -> Result<(f64, f64)> {
        thm2_bound_subgaussian(self.e1, self.e4, self.v, k, self.p_eff, c1, c2)
    }

    /// In-ball term `r² k^{−2/p}` of the objective at unit constant.
    pub fn ball_term(&self, r: f64, k: usize) -> f64 {
        r * r * (k as f64).powf(-2.0 / self.p_eff as f64)
    }

    /// Tail term `√E‖η‖⁴ exp(−(r − E‖η‖)²/4v)` at unit constant.
    pub fn tail_term(&self, r: f64) -> f64 {
        let t = r - self.e1;
        self.e4.sqrt() * (-t * t / (4.0 * self.v)).exp()
    }
}

/// Vector sweep over `k` for a linear-Gaussian model: covering quantizer of
/// radius `r` (per `r_policy`) on `η(X)` with an overflow cell, two-pass
/// regret, and both dimension-free bounds evaluated with the rank of the
/// regression matrix as the dimension.
pub fn sweep_vector(
    model: &LinearGaussianModel,
    model_id: &str,
    k_list: &[usize],
    samples: usize,
    master_seed: u64,
    r_policy: RPolicy,
    config: &BoundConfig,
) -> Result<Vec<SweepRow>> {
    check_lists(k_list, None)?;
    check_model_id(model_id)?;
    let mom = VectorMoments::of(model, samples, derive_seed(master_seed, u64::MAX))?;
    let (c1, c2) = (config.c1_thm2, config.c2_thm2);
    let n = model.obs_dim();
    let mut rows = Vec::with_capacity(k_list.len());
    for (j, &k) in k_list.iter().enumerate() {
        let seed = derive_seed(master_seed, j as u64);
        let mut row = SweepRow::blank(model_id, n, k, samples, seed);
        let start = Instant::now();
        let result = (|| -> Result<()> {
            let (bound, r_star) = mom.subgaussian(k, c1, c2)?;
            let r = match r_policy {
                RPolicy::Fixed(r) => r,
                RPolicy::Optimized => r_star,
                RPolicy::Moment => moment_radius(mom.e2, mom.e4, k, mom.p_eff),
            };
            let cq = covering_codebook(model.dim(), r, k)?;
            let parts = run_two_pass(
                model,
                |_, eta| cq.quantize(eta),
                cq.cells(),
                samples,
                seed,
                None,
            )?;
            row.fill_estimates(&parts);
            row.regret_overflow = parts.regret_by_cell[cq.overflow_index()];
            row.cells = cq.cells();
            row.radius = r;
            row.eps = cq.eps();
            row.bound_moment =
                thm2_bound_moment(mom.e2, mom.e4, k, mom.p_eff, config.c_thm2_moment);
            row.bound_shape = mom.subgaussian(k, 1.0, 1.0)?.0;
            row.bound = bound;
            row.constant = c1;
            row.constant_tail = c2;
            Ok(())
        })();
        if let Err(e) = result {
            log::warn!("sweep cell k={k} failed: {e}");
            row.error = Some(format!("{}: {e}", e.kind()));
        }
        row.wall_ms = start.elapsed().as_millis() as u64;
        rows.push(row);
    }
    Ok(rows)
}

/// Radii at which the overflow envelope is checked when fitting `c2`.
const OVERFLOW_GRID: usize = 400;

/// Overflow-cell regret `E[‖η − m_r‖² 1{‖η‖ > r}]`, with `m_r` the mean of
/// `η` over the overflow cell, for each radius in `radii` (ascending).
pub fn overflow_regret_curve(
    model: &LinearGaussianModel,
    radii: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let chunks = run_chunks(samples, seed, 5, |rng, count| -> Result<Vec<Vec<f64>>> {
        (0..count)
            .map(|_| model.regression(&model.sample(rng).0))
            .collect()
    });
    let mut etas = Vec::with_capacity(samples);
    for chunk in chunks {
        etas.extend(chunk?);
    }
    let norm = |e: &[f64]| e.iter().map(|v| v * v).sum::<f64>().sqrt();
    etas.sort_by(|a, b| norm(b).total_cmp(&norm(a)));

    // Walk radii from the largest down, adding each newly exceeding draw to
    // running sums of η and ‖η‖².
    let dim = model.dim();
    let mut sum = vec![0.0; dim];
    let (mut sq, mut count) = (0.0, 0usize);
    let mut out = vec![0.0; radii.len()];
    for (i, &r) in radii.iter().enumerate().rev() {
        while count < etas.len() && norm(&etas[count]) > r {
            for (s, v) in sum.iter_mut().zip(&etas[count]) {
                *s += v;
            }
            sq += etas[count].iter().map(|v| v * v).sum::<f64>();
            count += 1;
        }
        if count > 0 {
            let mean_sq = sum.iter().map(|s| s * s).sum::<f64>() / count as f64;
            out[i] = (sq - mean_sq).max(0.0) / samples as f64;
        }
    }
    Ok(out)
}

/// Fits `(c1, c2)` of the subgaussian bound on one vector sweep row.
///
/// `c1` is the row's in-ball regret over `r² k^{−2/p}` at the row's radius.
/// The overflow regret depends on `r` alone, so `c2` is the smallest
/// constant whose tail term covers the sampled overflow curve at every
/// admissible radius. `samples` and `seed` drive that curve.
pub fn fit_thm2_constants(
    row: &SweepRow,
    moments: &VectorMoments,
    model: &LinearGaussianModel,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let (k, r) = (row.k, row.radius);
    let inside = row.regret - row.regret_overflow;
    let c1 = inside / moments.ball_term(r, k);
    if !(c1 > 0.0 && c1.is_finite()) {
        return Err(Error::NumericalDegeneracy(format!(
            "cannot fit bound constants at k={k}: in-ball regret {inside}"
        )));
    }
    let span = 20.0 * moments.v.sqrt();
    let radii: Vec<f64> = (1..=OVERFLOW_GRID)
        .map(|i| moments.e1 + span * i as f64 / OVERFLOW_GRID as f64)
        .collect();
    let curve = overflow_regret_curve(model, &radii, samples, seed)?;
    let c2 = radii
        .iter()
        .zip(&curve)
        .map(|(&r, &o)| o / moments.tail_term(r))
        .fold(row.regret_overflow / moments.tail_term(r), f64::max)
        .max(c1 * 1e-12);
    Ok((c1, c2))
}

/// Vector sweep with `(c1, c2)` fitted on the row for `k_cal` and frozen
/// for the whole sweep, which then uses the radius the fitted bound
/// prescribes when `r_policy` is [`RPolicy::Optimized`].
#[allow(clippy::too_many_arguments)]
pub fn sweep_vector_calibrated(
    model: &LinearGaussianModel,
    model_id: &str,
    k_list: &[usize],
    samples: usize,
    master_seed: u64,
    r_policy: RPolicy,
    k_cal: usize,
    config: &BoundConfig,
) -> Result<(Vec<SweepRow>, (f64, f64))> {
    let cal = sweep_vector(
        model,
        model_id,
        &[k_cal],
        samples,
        derive_seed(master_seed, u64::MAX - 1),
        r_policy,
        config,
    )?;
    if let Some(e) = &cal[0].error {
        return Err(Error::NumericalDegeneracy(format!(
            "calibration cell k={k_cal} failed: {e}"
        )));
    }
    let moments = VectorMoments::of(model, samples, derive_seed(master_seed, u64::MAX))?;
    let (c1, c2) = fit_thm2_constants(
        &cal[0],
        &moments,
        model,
        samples,
        derive_seed(master_seed, u64::MAX - 2),
    )?;
    let fitted = BoundConfig {
        c1_thm2: c1,
        c2_thm2: c2,
        ..*config
    };
    let rows = sweep_vector(
        model,
        model_id,
        k_list,
        samples,
        master_seed,
        r_policy,
        &fitted,
    )?;
    Ok((rows, (c1, c2)))
}

/// Fits the corollary constant on the calibration cell `(n, k)`: the
/// smallest `c` whose envelope covers the cell's deviation plus three
/// standard errors. Every row is rescaled to that `c`.
pub fn calibrate_scalar(rows: &mut [SweepRow], n: usize, k: usize) -> Result<f64> {
    let cell = rows
        .iter()
        .find(|r| r.n == n && r.k == k)
        .ok_or_else(|| Error::invalid(format!("no calibration cell n={n} k={k} in the sweep")))?;
    let (dev, se) = cell.deviation();
    let c = (dev + 3.0 * se) / cell.bound_shape;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::NumericalDegeneracy(format!(
            "calibration constant {c} at n={n} k={k}"
        )));
    }
    rows.iter_mut().for_each(|r| r.set_constant(c));
    Ok(c)
}

/// Least squares fit of `log y = slope · log x + intercept`; returns
/// `(slope, intercept, r²)`.
pub fn fit_loglog_slope(pairs: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if let Some(bad) = pairs
        .iter()
        .find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(Error::invalid(format!(
            "log-log fit needs positive finite pairs, got {bad:?}"
        )));
    }
    let pts: Vec<(f64, f64)> = pairs.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if pts.len() < 2 || sxx == 0.0 {
        return Err(Error::invalid(
            "log-log fit needs at least two distinct x values",
        ));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok((slope, intercept, r2))
}

pub fn csv_string(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(rows))?;
    Ok(())
}

pub fn emit_json(rows: &[SweepRow], path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(rows).map_err(|e| Error::invalid(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Parses CSV written by [`emit_csv`]. Columns outside the CSV come back
/// as `NaN`/empty.
pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Config(
            "CSV header does not match the sweep format".into(),
        ));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 15 {
                return Err(Error::Config(format!(
                    "CSV row has {} fields: {line:?}",
                    f.len()
                )));
            }
            let bad = |i: usize| Error::Config(format!("bad CSV field {:?} in {line:?}", f[i]));
            let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad(i));
            let int = |i: usize| f[i].parse::<u64>().map_err(|_| bad(i));
            let mut row = SweepRow::blank(
                f[0],
                int(1)? as usize,
                int(2)? as usize,
                int(3)? as usize,
                int(4)?,
            );
            row.mmse = num(5)?;
            row.mmse_se = num(6)?;
            row.mmse_k = num(7)?;
            row.mmse_k_se = num(8)?;
            row.regret = num(9)?;
            row.regret_se = num(10)?;
            row.dist_y = num(11)?;
            row.bound = num(12)?;
            row.regime = f[13].parse()?;
            row.wall_ms = int(14)?;
            Ok(row)
        })
        .collect()
}

pub fn parse_json(text: &str) -> Result<Vec<SweepRow>> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("sweep JSON: {e}")))
}

fn check_lists(k_list: &[usize], n_list: Option<&[usize]>) -> Result<()> {
    if k_list.is_empty() || n_list.is_some_and(<[usize]>::is_empty) {
        return Err(Error::invalid("sweep lists must be nonempty"));
    }
    if k_list.contains(&0) || n_list.is_some_and(|l| l.contains(&0)) {
        return Err(Error::invalid("sweep entries must be at least 1"));
    }
    Ok(())
}

fn check_model_id(id: &str) -> Result<()> {
    if id.is_empty() || id.contains([',', '"', '\n', '\r']) {
        return Err(Error::invalid(format!(
            "model id {id:?} must be nonempty and free of commas and quotes"
        )));
    }
    Ok(())
}

/// Regret of an arbitrary codebook on any joint model (used by examples).
pub fn codebook_regret<M: JointModel>(
    model: &M,
    codebook: &Codebook,
    samples: usize,
    seed: u64,
) -> Result<RegretParts> {
    run_two_pass(
        model,
        |_, eta| codebook.quantize(eta),
        codebook.len(),
        samples,
        seed,
        None,
    )
}

/// `g(r)` of the subgaussian bound at unit constants, exposed for
/// certification against a grid.
pub fn unit_thm2_objective(r: f64, e1: f64, e4: f64, v: f64, k: usize, p: usize) -> f64 {
    thm2_objective(r, e1, e4, v, k, p, 1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_examples() {
        assert_eq!(regime_classify(10_000, 10), Regime::QuantizationLimited);
        assert_eq!(regime_classify(16, 100), Regime::EstimationLimited);
        assert_eq!(regime_classify(100, 10), Regime::EstimationLimited);
    }

    #[test]
    fn slope_examples() {
        let exact: Vec<(f64, f64)> = [1.0f64, 2.0, 4.0, 8.0]
            .iter()
            .map(|&x| (x, x.powi(-2)))
            .collect();
        let (s, _, r2) = fit_loglog_slope(&exact).unwrap();
        assert_close!(s, -2.0, 1e-12);
        assert_close!(r2, 1.0, 1e-12);
        let flat = [(1.0, 3.0), (2.0, 3.0), (5.0, 3.0)];
        assert_close!(fit_loglog_slope(&flat).unwrap().0, 0.0, 1e-15);
        let wobbly: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .enumerate()
            .map(|(i, &x): (usize, &f64)| {
                (
                    x,
                    x.powi(-2) * (1.0 + 0.01 * if i % 2 == 0 { 1.0 } else { -1.0 }),
                )
            })
            .collect();
        assert!((fit_loglog_slope(&wobbly).unwrap().0 + 2.0).abs() < 0.05);
        assert!(fit_loglog_slope(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(fit_loglog_slope(&[(1.0, 1.0)]).is_err());
    }

    #[test]
    fn r_policy_parsing() {
        assert_eq!("optimized".parse::<RPolicy>().unwrap(), RPolicy::Optimized);
        assert_eq!("moment".parse::<RPolicy>().unwrap(), RPolicy::Moment);
        assert_eq!("fixed:2.5".parse::<RPolicy>().unwrap(), RPolicy::Fixed(2.5));
        assert!("fixed:-1".parse::<RPolicy>().is_err());
        assert!("best".parse::<RPolicy>().is_err());
    }

    #[test]
    fn empty_rows_give_header_only() {
        assert_eq!(csv_string(&[]), format!("{CSV_HEADER}\n"));
        assert!(parse_csv(&csv_string(&[])).unwrap().is_empty());
    }

    #[test]
    fn single_cell_sweep_matches_direct_regret() {
        let m = ScalarChannelModel::uniform_gaussian(1.0, 0.3).unwrap();
        let rows = sweep_scalar(&m, "u", &[4], &[10], 5000, 9, &BoundConfig::default()).unwrap();
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        let cb = panter_dite_1d(|y| m.prior_density(y), -1.0, 1.0, 4).unwrap();
        let e = ScalarExperiment::new(&m, 10).unwrap();
        let parts = codebook_regret(&e, &cb, 5000, row.seed).unwrap();
        assert_eq!(row.regret, parts.regret.mean());
        assert_eq!(row.mmse_k, parts.mmse_k.mean());
        assert_eq!(row.dist_y, distortion_of_y(&cb, &m).unwrap());
    }

    #[test]
    fn failed_cells_are_recorded() {
        let m = ScalarChannelModel::uniform_gaussian(1.0, 0.3).unwrap();
        let rows = sweep_scalar(&m, "u", &[4], &[10], 10, 9, &BoundConfig::default()).unwrap();
        assert!(rows[0]
            .error
            .as_deref()
            .unwrap()
            .starts_with("invalid-input"));
        assert!(rows[0].regret.is_nan());
    }

    #[test]
    fn json_round_trip_with_nan() {
        let m = ScalarChannelModel::uniform_gaussian(1.0, 0.3).unwrap();
        let rows = sweep_scalar(&m, "u", &[2, 3], &[5], 2000, 1, &BoundConfig::default()).unwrap();
        let text = serde_json::to_string(&rows).unwrap();
        let back = parse_json(&text).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.regret.to_bits(), b.regret.to_bits());
            assert!(b.bound_moment.is_nan());
        }
    }
}

//! Right-hand sides of the regret bounds, and diagnostics for the
//! Bernstein–von Mises expansion `η(X) = Y + G_n(X, Y) + Z_n` behind the
//! scalar bound.
//!
//! The bounds hold up to unspecified constants. Those constants live in
//! [`BoundConfig`] and default to 1; experiments fit them on one
//! calibration cell and freeze them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Evidence, ScalarChannelModel};
use crate::numeric::{golden_section_min, run_chunks, MeanAcc};

/// Unknown constants of the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundConfig {
    /// Constant of the scalar (Δ-based) bound.
    #[serde(rename = "L")]
    pub l: f64,
    /// Whether `L` was fitted on a calibration cell rather than fixed.
    pub l_fitted: bool,
    pub c_corollary: f64,
    pub c_thm2_moment: f64,
    pub c1_thm2: f64,
    pub c2_thm2: f64,
    /// Radius constant of the event `A_n`.
    #[serde(rename = "L0")]
    pub l0: f64,
    #[serde(rename = "C_abs")]
    pub c_abs: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            l: 1.0,
            l_fitted: false,
            c_corollary: 1.0,
            c_thm2_moment: 1.0,
            c1_thm2: 1.0,
            c2_thm2: 1.0,
            l0: 1.0,
            c_abs: 1.0,
        }
    }
}

impl BoundConfig {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("L", self.l),
            ("c_corollary", self.c_corollary),
            ("c_thm2_moment", self.c_thm2_moment),
            ("c1_thm2", self.c1_thm2),
            ("c2_thm2", self.c2_thm2),
            ("L0", self.l0),
            ("C_abs", self.c_abs),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "bound constant {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// One evaluated bound with its inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub bound: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_star: Option<f64>,
    pub config: BoundConfig,
    pub inputs: BTreeMap<String, f64>,
}

impl BoundReport {
    pub fn new(bound: &str, value: f64, config: BoundConfig, inputs: &[(&str, f64)]) -> Self {
        Self {
            bound: bound.to_string(),
            value,
            r_star: None,
            config,
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

/// `L Δ² min{1, (E[1/√I(Y)] + √mmse) / (Δ √n)}`.
pub fn thm1_rhs(l: f64, delta: f64, n_obs: usize, e_inv_sqrt_fisher: f64, mmse: f64) -> f64 {
    let kappa = e_inv_sqrt_fisher + mmse.max(0.0).sqrt();
    capped_square(l, delta, kappa / (n_obs as f64).sqrt())
}

/// Gaussian-noise form `L Δ² min{1, σ / (Δ √n)}`.
pub fn thm1_rhs_gaussian(l: f64, delta: f64, n_obs: usize, sigma: f64) -> f64 {
    capped_square(l, delta, sigma / (n_obs as f64).sqrt())
}

/// `L Δ² min{1, s/Δ} = L min{Δ², Δ s}`.
fn capped_square(l: f64, delta: f64, s: f64) -> f64 {
    l * (delta * delta).min(delta * s)
}

/// `c min{1/k², (E[1/√I(Y)] + √mmse) / (k √n)}`.
pub fn corollary_rhs(k: usize, n_obs: usize, e_inv_sqrt_fisher: f64, mmse: f64, c: f64) -> f64 {
    let k = k as f64;
    let kappa = e_inv_sqrt_fisher + mmse.max(0.0).sqrt();
    c * (1.0 / (k * k)).min(kappa / (k * (n_obs as f64).sqrt()))
}

/// Weakened form `c min{1/k², √mmse / k}`, valid because
/// `mmse ≥ E[1/I(Y)]/n` and `E[1/√I] ≤ √E[1/I]`.
pub fn corollary_rhs_weak(k: usize, mmse: f64, c: f64) -> f64 {
    let k = k as f64;
    c * (1.0 / (k * k)).min(mmse.max(0.0).sqrt() / k)
}

/// `mmse_hat − E[1/I(Y)]/n`; nonnegative up to Monte Carlo noise.
pub fn info_inequality_gap(model: &ScalarChannelModel, n_obs: usize, mmse_hat: f64) -> Result<f64> {
    if n_obs == 0 {
        return Err(Error::invalid("number of observations must be at least 1"));
    }
    Ok(mmse_hat - model.mean_inv_fisher()? / n_obs as f64)
}

/// `c (E‖η‖² E‖η‖⁴)^{2/3} k^{−2/(3p)}`.
pub fn thm2_bound_moment(e2: f64, e4: f64, k: usize, p: usize, c: f64) -> f64 {
    c * (e2 * e4).powf(2.0 / 3.0) * (k as f64).powf(-2.0 / (3.0 * p as f64))
}

/// Radius balancing `r² k^{−2/p}` against `√(E‖η‖² E‖η‖⁴)/r`.
pub fn moment_radius(e2: f64, e4: f64, k: usize, p: usize) -> f64 {
    ((e2 * e4).sqrt() * (k as f64).powf(2.0 / p as f64)).cbrt()
}

/// `g(r) = c1 r² k^{−2/p} + c2 √E‖η‖⁴ exp(−(r − E‖η‖)² / 4v)`.
#[allow(clippy::too_many_arguments)]
pub fn thm2_objective(
    r: f64,
    e1: f64,
    e4: f64,
    v: f64,
    k: usize,
    p: usize,
    c1: f64,
    c2: f64,
) -> f64 {
    let t = r - e1;
    c1 * r * r * (k as f64).powf(-2.0 / p as f64) + c2 * e4.sqrt() * (-t * t / (4.0 * v)).exp()
}

/// Points of the coarse scan that seeds the golden-section search.
const THM2_SCAN: usize = 2000;

/// `min g(r)` over `r ∈ (E‖η‖, E‖η‖ + 20√v]`, returning `(value, r*)`. A
/// coarse scan picks the best bracket so a non-unimodal `g` cannot trap
/// the golden-section refinement in a worse basin.
#[allow(clippy::too_many_arguments)]
pub fn thm2_bound_subgaussian(
    e1: f64,
    e4: f64,
    v: f64,
    k: usize,
    p: usize,
    c1: f64,
    c2: f64,
) -> Result<(f64, f64)> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::invalid(format!(
            "subgaussian constant must be positive, got {v}"
        )));
    }
    if k == 0 || p == 0 {
        return Err(Error::invalid("k and p must be at least 1"));
    }
    let g = |r: f64| thm2_objective(r, e1, e4, v, k, p, c1, c2);
    let width = 20.0 * v.sqrt();
    let lo = e1 + width * 1e-12;
    let hi = e1 + width;
    let h = (hi - lo) / THM2_SCAN as f64;
    let best = (0..=THM2_SCAN)
        .map(|i| (i, g(lo + h * i as f64)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .unwrap();
    let a = lo + h * best.saturating_sub(1) as f64;
    let b = (lo + h * (best + 1) as f64).min(hi);
    let (r, value) = golden_section_min(g, a, b, 1e-10);
    Ok((value, r))
}

/// `c log k / k^{2/p}`.
pub fn weakened_thm2(k: f64, p: usize, c: f64) -> Result<f64> {
    if !(k >= 2.0) {
        return Err(Error::invalid(format!(
            "weakened bound needs k ≥ 2, got {k}"
        )));
    }
    Ok(c * k.ln() / k.powf(2.0 / p as f64))
}

/// `G_n = Σ ∂ℓ(x_i, y) / (n I(y))`.
pub fn score_average_gn(model: &ScalarChannelModel, evidence: &Evidence, y: f64) -> Result<f64> {
    let n = evidence.count() as f64;
    Ok(model.score_sum(evidence, y)? / (n * model.fisher(y)?))
}

/// Summary of `Z_n = η(X) − Y − G_n(X, Y)` over Monte Carlo draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BvmDiagnostics {
    pub n_obs: usize,
    #[serde(rename = "N")]
    pub samples: usize,
    pub seed: u64,
    pub mean_abs_z: f64,
    pub mean_abs_z_se: f64,
    pub mean_abs_error: f64,
    pub mean_abs_error_se: f64,
    /// Quantiles of `√(n I(Y)) |Z_n|`.
    pub scaled_z_p50: f64,
    pub scaled_z_p90: f64,
    pub scaled_z_p99: f64,
    pub scaled_z_max: f64,
    #[serde(rename = "L0")]
    pub l0: f64,
    /// `L0 (log n / n)^{1/4}`.
    pub event_threshold: f64,
    /// Fraction of draws with `√(n I(Y)) |Z_n|` at most the threshold.
    pub coverage: f64,
}

/// Minimum Monte Carlo size for the diagnostics.
pub const BVM_MIN_SAMPLES: usize = 10_000;

const BVM_PASS: u32 = 4;

/// Monte Carlo summary of the BvM residual for `n_obs` observations.
pub fn bvm_diagnostics(
    model: &ScalarChannelModel,
    n_obs: usize,
    samples: usize,
    seed: u64,
    l0: f64,
) -> Result<BvmDiagnostics> {
    if samples < BVM_MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "need at least {BVM_MIN_SAMPLES} samples, got {samples}"
        )));
    }
    if n_obs == 0 {
        return Err(Error::invalid("number of observations must be at least 1"));
    }
    if !(l0 > 0.0) {
        return Err(Error::invalid(format!("L0 must be positive, got {l0}")));
    }
    let n = n_obs as f64;
    let chunks = run_chunks(
        samples,
        seed,
        BVM_PASS,
        |rng, count| -> Result<Vec<(f64, f64, f64)>> {
            (0..count)
                .map(|_| {
                    let y = model.sample_prior(rng);
                    let evidence = model.sample_evidence(y, n_obs, false, rng);
                    let eta = model.posterior_mean_evidence(&evidence)?;
                    let gn = score_average_gn(model, &evidence, y)?;
                    let z = (eta - y - gn).abs();
                    Ok((z, (eta - y).abs(), (n * model.fisher(y)?).sqrt() * z))
                })
                .collect()
        },
    );
    let mut z_acc = MeanAcc::new();
    let mut err_acc = MeanAcc::new();
    let mut scaled = Vec::with_capacity(samples);
    for chunk in chunks {
        for (z, err, s) in chunk? {
            z_acc.push(z);
            err_acc.push(err);
            scaled.push(s);
        }
    }
    scaled.sort_by(f64::total_cmp);
    let quantile =
        |q: f64| scaled[((q * (scaled.len() - 1) as f64).round() as usize).min(scaled.len() - 1)];
    let threshold = l0 * ((n.ln().max(0.0)) / n).powf(0.25);
    let inside = scaled.partition_point(|&s| s <= threshold);
    Ok(BvmDiagnostics {
        n_obs,
        samples,
        seed,
        mean_abs_z: z_acc.mean(),
        mean_abs_z_se: z_acc.se(),
        mean_abs_error: err_acc.mean(),
        mean_abs_error_se: err_acc.se(),
        scaled_z_p50: quantile(0.5),
        scaled_z_p90: quantile(0.9),
        scaled_z_p99: quantile(0.99),
        scaled_z_max: *scaled.last().unwrap(),
        l0,
        event_threshold: threshold,
        coverage: inside as f64 / samples as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::stream_rng;

    #[test]
    fn thm1_examples() {
        assert_close!(thm1_rhs(1.0, 0.1, 100, 1.0, 0.0), 0.01, 1e-15);
        assert!(thm1_rhs(1.0, 0.1, 1 << 40, 1.0, 0.0) < 1e-7);
        let big = thm1_rhs(1.0, 100.0, 100, 1.0, 0.0);
        assert_close!(big, 100.0 * 1.0 / 10.0, 1e-12);
    }

    #[test]
    fn gaussian_form_examples() {
        assert_close!(thm1_rhs_gaussian(1.0, 0.1, 100, 1.0), 0.01, 1e-15);
        assert_eq!(thm1_rhs_gaussian(1.0, 0.1, 100, 0.0), 0.0);
        // Δ√n = σ: both branches agree.
        let (delta, n, sigma) = (0.2, 25usize, 1.0);
        assert_close!(
            thm1_rhs_gaussian(2.0, delta, n, sigma),
            2.0 * delta * delta,
            1e-15
        );
    }

    #[test]
    fn corollary_examples() {
        assert_close!(corollary_rhs(10, 1_000_000, 1.0, 0.0, 1.0), 1e-4, 1e-18);
        assert_close!(corollary_rhs(10, 100, 1.0, 0.0, 1.0), 0.01, 1e-15);
        // With mmse ≥ E[1/I]/n, κ/√n ≤ 2√mmse, so the weak form with 2c
        // dominates.
        let (n, sigma) = (50usize, 0.3);
        let mmse = sigma * sigma / n as f64 * 1.1;
        for k in [2, 5, 20, 100] {
            assert!(
                corollary_rhs(k, n, sigma, mmse, 1.0) <= corollary_rhs_weak(k, mmse, 2.0) + 1e-18
            );
        }
    }

    #[test]
    fn thm2_moment_examples() {
        assert_close!(thm2_bound_moment(1.0, 1.0, 64, 1, 1.0), 1.0 / 16.0, 1e-15);
        assert_close!(
            thm2_bound_moment(2.0, 3.0, 1, 2, 1.5),
            1.5 * 6f64.powf(2.0 / 3.0),
            1e-13
        );
        let a = thm2_bound_moment(2.0, 3.0, 100, 2, 1.0);
        assert_close!(a, 6f64.powf(2.0 / 3.0) * 100f64.powf(-1.0 / 3.0), 1e-13);
    }

    #[test]
    fn thm2_subgaussian_matches_dense_grid() {
        let (e1, e4, v, k, p) = (1.0, 1.0, 1.0, 64, 2);
        let (value, r) = thm2_bound_subgaussian(e1, e4, v, k, p, 1.0, 1.0).unwrap();
        let grid = 1_000_000;
        let oracle = (1..=grid)
            .map(|i| {
                thm2_objective(
                    e1 + 20.0 * i as f64 / grid as f64,
                    e1,
                    e4,
                    v,
                    k,
                    p,
                    1.0,
                    1.0,
                )
            })
            .fold(f64::INFINITY, f64::min);
        assert!(
            ((value - oracle) / oracle).abs() < 1e-6,
            "{value} vs {oracle}"
        );
        assert!(r > e1);
    }

    #[test]
    fn thm2_subgaussian_limits() {
        let (value, r) = thm2_bound_subgaussian(1.0, 1.0, 1e-12, 16, 1, 1.0, 1.0).unwrap();
        assert!(r > 1.0 && r < 1.0 + 1e-4);
        assert_close!(value, 1.0 / 256.0, 1e-6);
        let mut prev = f64::INFINITY;
        for k in [4, 64, 1024, 1 << 16, 1 << 24] {
            let (v, _) = thm2_bound_subgaussian(1.0, 2.0, 0.5, k, 1, 1.0, 1.0).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-9);
    }

    #[test]
    fn weakened_examples() {
        let e = std::f64::consts::E;
        assert_close!(
            weakened_thm2(e * e, 1, 1.0).unwrap(),
            2.0 / e.powi(4),
            1e-15
        );
        assert_close!(
            weakened_thm2(100.0, 2, 1.0).unwrap(),
            100f64.ln() / 100.0,
            1e-15
        );
        assert!(weakened_thm2(1.0, 2, 1.0).is_err());
    }

    #[test]
    fn score_average_is_mean_offset_for_gaussian() {
        let m = ScalarChannelModel::uniform_gaussian(1.0, 0.4).unwrap();
        let x = vec![0.1, 0.5, -0.2];
        let gn = score_average_gn(&m, &Evidence::Raw(x), 0.3).unwrap();
        assert_close!(gn, 0.4 / 3.0 - 0.3, 1e-15);
        assert!(score_average_gn(&m, &Evidence::Raw(vec![0.0]), 1.5).is_err());
    }

    #[test]
    fn score_average_conditional_moments() {
        let m = ScalarChannelModel::uniform_logistic(1.0, 0.5).unwrap();
        let (n, y) = (5, 0.2);
        let mut rng = stream_rng(21, 0);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| {
                score_average_gn(&m, &Evidence::Raw(m.sample_observations(y, n, &mut rng)), y)
                    .unwrap()
            })
            .collect();
        let acc: MeanAcc = draws.iter().copied().collect();
        assert!(acc.mean().abs() <= 3.0 * acc.se());
        let sq: MeanAcc = draws.iter().map(|g| g * g).collect();
        let target = 1.0 / (n as f64 * m.fisher(y).unwrap());
        assert!(
            (sq.mean() - target).abs() <= 3.0 * sq.se(),
            "{} vs {target}",
            sq.mean()
        );
    }

    #[test]
    fn info_gap_for_gaussian_and_noiseless() {
        let m = ScalarChannelModel::uniform_gaussian(1.0, 0.5).unwrap();
        assert_close!(
            info_inequality_gap(&m, 10, 0.03).unwrap(),
            0.03 - 0.025,
            1e-14
        );
        let nl = ScalarChannelModel::noiseless(1.0).unwrap();
        assert!(matches!(
            info_inequality_gap(&nl, 10, 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn bvm_interior_posterior_is_nearly_gaussian() {
        let m = ScalarChannelModel::uniform_gaussian(1.0, 0.1).unwrap();
        let d = bvm_diagnostics(&m, 100, 10_000, 3, 1.0).unwrap();
        assert!(d.scaled_z_p50 <= 0.5, "{}", d.scaled_z_p50);
        let wider = bvm_diagnostics(&m, 100, 10_000, 3, 2.0).unwrap();
        assert!(wider.coverage >= d.coverage);
    }

    #[test]
    fn config_rejects_nonpositive_constants() {
        let mut c = BoundConfig::default();
        assert!(c.validate().is_ok());
        c.c2_thm2 = 0.0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}

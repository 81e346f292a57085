use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::JointModel;
use crate::error::{Error, Result};
use crate::numeric::{SimpsonGrid, StreamRng};

/// Simpson nodes used for every posterior and prior integral.
pub const QUADRATURE_POINTS: usize = 4097;

/// Cached inverse-CDF table size for prior sampling.
pub const SAMPLING_TABLE_POINTS: usize = 1 << 16;

// Gaussian weights are rebuilt from `exp` at this stride and propagated by
// multiplication in between.
const ANCHOR_STRIDE: usize = 64;

// Gaussian weights below this fraction of the peak weight are dropped;
// with 4097 nodes their total share stays under 1e-14.
const GAUSSIAN_CUTOFF: f64 = 1e-18;

// Largest log-ratio the logistic product kernel lets accumulate before
// renormalizing.
/// Log-likelihood drop beyond which grid nodes are skipped.
const WINDOW_NATS: f64 = 60.0;
/// Largest `(A + |x|)/s` handled by the logistic product kernel.
const MAX_LOGISTIC_EXPONENT: f64 = 350.0;
const LOG_UNDERFLOW_GUARD: f64 = 600.0;

/// Prior shapes on `[-A, A]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prior {
    Uniform,
    /// `f(y) ∝ cos(π y / 4A)`: bounded away from zero, `log f` is
    /// `π/4A`-Lipschitz.
    TruncatedCosine,
}

/// Observation channel `P_{X_1 | Y = y}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseFamily {
    /// `X_1 = y + σ N(0,1)`
    Gaussian { sigma: f64 },
    /// `X_1 = y + s·Logistic(0,1)`
    Logistic { scale: f64 },
    /// `X_1 = y`
    Noiseless,
}

/// Observations fed to the posterior. Gaussian channels only need the
/// sample mean, so experiments may carry that instead of the raw vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Evidence {
    Raw(Vec<f64>),
    Mean { count: usize, mean: f64 },
}

impl Evidence {
    pub fn count(&self) -> usize {
        match self {
            Evidence::Raw(xs) => xs.len(),
            Evidence::Mean { count, .. } => *count,
        }
    }

    /// Raw observations, when available.
    pub fn raw(&self) -> Option<&[f64]> {
        match self {
            Evidence::Raw(xs) => Some(xs),
            Evidence::Mean { .. } => None,
        }
    }

    fn describe(&self) -> String {
        match self {
            Evidence::Raw(xs) if xs.len() <= 8 => format!("x={xs:?}"),
            Evidence::Raw(xs) => format!("x=[{} values, first {:?}]", xs.len(), &xs[..4]),
            Evidence::Mean { count, mean } => format!("x̄={mean} (n={count})"),
        }
    }
}

/// Scalar target `Y` on `[-A, A]` observed through `n` conditionally i.i.d.
/// draws from a location-family channel.
#[derive(Debug, Clone)]
pub struct ScalarChannelModel {
    half_width: f64,
    prior: Prior,
    noise: NoiseFamily,
    grid: SimpsonGrid,
    /// Simpson weight times prior density at each node.
    prior_weight: Vec<f64>,
    log_prior_weight: Vec<f64>,
    /// Normalized prior CDF on a uniform table over `[-A, A]`.
    cdf_table: Vec<f64>,
    /// `exp((y_j + A) / s)` for the logistic kernel; `None` when it would
    /// overflow or the family is not logistic.
    logistic_growth: Option<Vec<f64>>,
}

impl ScalarChannelModel {
    pub fn new(half_width: f64, prior: Prior, noise: NoiseFamily) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::invalid(format!(
                "half-width A must be positive, got {half_width}"
            )));
        }
        match noise {
            NoiseFamily::Gaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                return Err(Error::invalid(format!(
                    "Gaussian sigma must be positive, got {sigma}"
                )))
            }
            NoiseFamily::Logistic { scale } if !(scale > 0.0 && scale.is_finite()) => {
                return Err(Error::invalid(format!(
                    "logistic scale must be positive, got {scale}"
                )))
            }
            _ => {}
        }
        let grid = SimpsonGrid::new(-half_width, half_width, QUADRATURE_POINTS);
        let density = |y: f64| prior_density(prior, half_width, y);
        let prior_weight: Vec<f64> = grid
            .nodes()
            .iter()
            .zip(grid.weights())
            .map(|(&y, &w)| w * density(y))
            .collect();
        let log_prior_weight = prior_weight.iter().map(|w| w.ln()).collect();

        let cdf_table = {
            let m = SAMPLING_TABLE_POINTS;
            let h = 2.0 * half_width / m as f64;
            let mut cdf = Vec::with_capacity(m + 1);
            cdf.push(0.0);
            let mut acc = 0.0;
            let mut prev = density(-half_width);
            for i in 1..=m {
                let y = -half_width + h * i as f64;
                let cur = density(y);
                acc += 0.5 * h * (prev + cur);
                cdf.push(acc);
                prev = cur;
            }
            let total = acc;
            cdf.iter_mut().for_each(|c| *c /= total);
            cdf
        };

        let logistic_growth = match noise {
            NoiseFamily::Logistic { scale } if half_width / scale <= 300.0 => Some(
                grid.nodes()
                    .iter()
                    .map(|&y| ((y + half_width) / scale).exp())
                    .collect(),
            ),
            _ => None,
        };

        Ok(Self {
            half_width,
            prior,
            noise,
            grid,
            prior_weight,
            log_prior_weight,
            cdf_table,
            logistic_growth,
        })
    }

    pub fn uniform_gaussian(half_width: f64, sigma: f64) -> Result<Self> {
        Self::new(half_width, Prior::Uniform, NoiseFamily::Gaussian { sigma })
    }

    pub fn cosine_gaussian(half_width: f64, sigma: f64) -> Result<Self> {
        Self::new(
            half_width,
            Prior::TruncatedCosine,
            NoiseFamily::Gaussian { sigma },
        )
    }

    pub fn uniform_logistic(half_width: f64, scale: f64) -> Result<Self> {
        Self::new(half_width, Prior::Uniform, NoiseFamily::Logistic { scale })
    }

    pub fn noiseless(half_width: f64) -> Result<Self> {
        Self::new(half_width, Prior::Uniform, NoiseFamily::Noiseless)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn prior(&self) -> Prior {
        self.prior
    }

    pub fn noise(&self) -> NoiseFamily {
        self.noise
    }

    pub fn grid(&self) -> &SimpsonGrid {
        &self.grid
    }

    pub fn contains(&self, y: f64) -> bool {
        y.abs() <= self.half_width
    }

    pub fn prior_density(&self, y: f64) -> f64 {
        if self.contains(y) {
            prior_density(self.prior, self.half_width, y)
        } else {
            0.0
        }
    }

    pub fn prior_log_density(&self, y: f64) -> f64 {
        self.prior_density(y).ln()
    }

    /// Lipschitz constant of `log f_Y` on the support.
    pub fn log_density_lipschitz(&self) -> f64 {
        match self.prior {
            Prior::Uniform => 0.0,
            Prior::TruncatedCosine => PI / (4.0 * self.half_width),
        }
    }

    /// `ℓ(u, y) = log dP_{X_1|Y=y}/dλ(u)`.
    pub fn cond_log_density(&self, u: f64, y: f64) -> f64 {
        match self.noise {
            NoiseFamily::Gaussian { sigma } => {
                let z = (u - y) / sigma;
                -0.5 * z * z - (sigma * (2.0 * PI).sqrt()).ln()
            }
            NoiseFamily::Logistic { scale } => {
                let z = ((u - y) / scale).abs();
                -z - 2.0 * (-z).exp().ln_1p() - scale.ln()
            }
            NoiseFamily::Noiseless => {
                if u == y {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// `∂ℓ(u, y)/∂y`.
    pub fn cond_score(&self, u: f64, y: f64) -> f64 {
        match self.noise {
            NoiseFamily::Gaussian { sigma } => (u - y) / (sigma * sigma),
            NoiseFamily::Logistic { scale } => (0.5 * (u - y) / scale).tanh() / scale,
            NoiseFamily::Noiseless => f64::NAN,
        }
    }

    /// Fisher information `I(y)` of one observation.
    pub fn fisher(&self, y: f64) -> Result<f64> {
        if !self.contains(y) {
            return Err(Error::domain(format!(
                "y={y} outside support [-{a}, {a}]",
                a = self.half_width
            )));
        }
        match self.noise {
            NoiseFamily::Gaussian { sigma } => Ok(1.0 / (sigma * sigma)),
            NoiseFamily::Logistic { scale } => Ok(1.0 / (3.0 * scale * scale)),
            NoiseFamily::Noiseless => Err(Error::domain(
                "Fisher information is undefined for a noiseless channel",
            )),
        }
    }

    /// `∫ g(y) f_Y(y) dy` on the model's Simpson grid.
    pub fn prior_expectation(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.grid
            .nodes()
            .iter()
            .zip(&self.prior_weight)
            .map(|(&y, &w)| w * g(y))
            .sum()
    }

    /// `E[1/√I(Y)]`.
    pub fn mean_inv_sqrt_fisher(&self) -> Result<f64> {
        self.fisher(0.0)?;
        Ok(self.prior_expectation(|y| 1.0 / self.fisher(y).map_or(f64::NAN, f64::sqrt)))
    }

    /// `E[1/I(Y)]`.
    pub fn mean_inv_fisher(&self) -> Result<f64> {
        self.fisher(0.0)?;
        Ok(self.prior_expectation(|y| 1.0 / self.fisher(y).unwrap_or(f64::NAN)))
    }

    /// Draw `Y ~ f_Y` by inverse CDF on the cached table.
    pub fn sample_prior(&self, rng: &mut StreamRng) -> f64 {
        let u: f64 = rng.random();
        let table = &self.cdf_table;
        let hi = table.partition_point(|&c| c <= u).clamp(1, table.len() - 1);
        let lo = hi - 1;
        let span = table[hi] - table[lo];
        let frac = if span > 0.0 {
            (u - table[lo]) / span
        } else {
            0.5
        };
        let h = 2.0 * self.half_width / (table.len() - 1) as f64;
        (-self.half_width + h * (lo as f64 + frac)).clamp(-self.half_width, self.half_width)
    }

    /// `count` i.i.d. draws of `X_1` given `Y = y`.
    pub fn sample_observations(&self, y: f64, count: usize, rng: &mut StreamRng) -> Vec<f64> {
        (0..count).map(|_| self.sample_one(y, rng)).collect()
    }

    fn sample_one(&self, y: f64, rng: &mut StreamRng) -> f64 {
        match self.noise {
            NoiseFamily::Gaussian { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                y + sigma * z
            }
            NoiseFamily::Logistic { scale } => {
                let u = loop {
                    let u: f64 = rng.random();
                    if u > 0.0 {
                        break u;
                    }
                };
                y + scale * (u / (1.0 - u)).ln()
            }
            NoiseFamily::Noiseless => y,
        }
    }

    /// `(x, y)` with `y ~ f_Y` and `x ~ P_{X_1|Y=y}^{⊗n}`.
    pub fn sample_joint(&self, n: usize, rng: &mut StreamRng) -> Result<(Vec<f64>, f64)> {
        if n == 0 {
            return Err(Error::invalid("number of observations must be at least 1"));
        }
        let y = self.sample_prior(rng);
        Ok((self.sample_observations(y, n, rng), y))
    }

    /// Evidence for `n` observations given `y`. With `raw == false` a
    /// Gaussian channel draws the sample mean directly from
    /// `N(y, σ²/n)`, which has the same law as averaging `n` raw draws.
    pub fn sample_evidence(&self, y: f64, n: usize, raw: bool, rng: &mut StreamRng) -> Evidence {
        match self.noise {
            NoiseFamily::Gaussian { sigma } if !raw => {
                let z: f64 = rng.sample(StandardNormal);
                Evidence::Mean {
                    count: n,
                    mean: y + sigma / (n as f64).sqrt() * z,
                }
            }
            NoiseFamily::Noiseless if !raw => Evidence::Mean { count: n, mean: y },
            _ => Evidence::Raw(self.sample_observations(y, n, rng)),
        }
    }

    /// `Σ_i ∂ℓ(x_i, y)`.
    pub fn score_sum(&self, evidence: &Evidence, y: f64) -> Result<f64> {
        if !self.contains(y) {
            return Err(Error::domain(format!("y={y} outside the prior support")));
        }
        match (evidence, self.noise) {
            (Evidence::Mean { count, mean }, NoiseFamily::Gaussian { sigma }) => {
                Ok(*count as f64 * (mean - y) / (sigma * sigma))
            }
            (Evidence::Raw(xs), NoiseFamily::Gaussian { .. } | NoiseFamily::Logistic { .. }) => {
                Ok(xs.iter().map(|&u| self.cond_score(u, y)).sum())
            }
            (_, NoiseFamily::Noiseless) => {
                Err(Error::domain("score is undefined for a noiseless channel"))
            }
            (Evidence::Mean { .. }, _) => Err(Error::invalid(
                "mean-only evidence is a sufficient statistic only for Gaussian channels",
            )),
        }
    }

    /// Posterior mean `E[Y | X = x]`.
    pub fn posterior_mean(&self, x: &[f64]) -> Result<f64> {
        validate_observations(x)?;
        self.posterior_mean_evidence(&Evidence::Raw(x.to_vec()))
    }

    /// Posterior mean from either raw or summarized evidence.
    pub fn posterior_mean_evidence(&self, evidence: &Evidence) -> Result<f64> {
        match evidence {
            Evidence::Raw(xs) => validate_observations(xs)?,
            Evidence::Mean { count, mean } => {
                if *count == 0 || !mean.is_finite() {
                    return Err(Error::invalid(format!(
                        "bad summary evidence {}",
                        evidence.describe()
                    )));
                }
            }
        }
        match (self.noise, evidence) {
            (NoiseFamily::Noiseless, _) => self.noiseless_posterior(evidence),
            (NoiseFamily::Gaussian { sigma }, Evidence::Raw(xs)) => {
                let mean = xs.iter().sum::<f64>() / xs.len() as f64;
                self.gaussian_posterior(sigma, xs.len(), mean, evidence)
            }
            (NoiseFamily::Gaussian { sigma }, Evidence::Mean { count, mean }) => {
                self.gaussian_posterior(sigma, *count, *mean, evidence)
            }
            (NoiseFamily::Logistic { scale }, Evidence::Raw(xs)) => {
                let mut w = vec![0.0; self.grid.len()];
                if self.logistic_weights(scale, xs, &mut w)? {
                    self.weighted_mean(&w, evidence)
                } else {
                    self.posterior_mean_reference(xs)
                }
            }
            (NoiseFamily::Logistic { .. }, Evidence::Mean { .. }) => Err(Error::invalid(
                "mean-only evidence is a sufficient statistic only for Gaussian channels",
            )),
        }
    }

    /// Plain log-domain evaluation: sum `ℓ(x_i, y_j)` over the grid,
    /// subtract the maximum, exponentiate, integrate with Simpson weights.
    /// Slow but family-agnostic; the specialized kernels are checked
    /// against it.
    pub fn posterior_mean_reference(&self, x: &[f64]) -> Result<f64> {
        validate_observations(x)?;
        if self.noise == NoiseFamily::Noiseless {
            return self.noiseless_posterior(&Evidence::Raw(x.to_vec()));
        }
        let loglik: Vec<f64> = self
            .grid
            .nodes()
            .iter()
            .map(|&y| x.iter().map(|&u| self.cond_log_density(u, y)).sum())
            .collect();
        let max = loglik.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::NumericalDegeneracy(format!(
                "log-likelihood is not finite anywhere on the grid for x={x:?}"
            )));
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&y, &lw), &ll) in self
            .grid
            .nodes()
            .iter()
            .zip(&self.log_prior_weight)
            .zip(&loglik)
        {
            let w = (lw + ll - max).exp();
            num += w * y;
            den += w;
        }
        finish_mean(num, den, &Evidence::Raw(x.to_vec()))
    }

    fn noiseless_posterior(&self, evidence: &Evidence) -> Result<f64> {
        let y = match evidence {
            Evidence::Raw(xs) => {
                if xs.iter().any(|&u| u != xs[0]) {
                    return Err(Error::NumericalDegeneracy(format!(
                        "inconsistent noiseless observations {}",
                        evidence.describe()
                    )));
                }
                xs[0]
            }
            Evidence::Mean { mean, .. } => *mean,
        };
        if !self.contains(y) {
            return Err(Error::NumericalDegeneracy(format!(
                "noiseless observation {y} has zero prior mass"
            )));
        }
        Ok(y)
    }

    fn weighted_mean(&self, lik: &[f64], evidence: &Evidence) -> Result<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&y, &pw), &l) in self.grid.nodes().iter().zip(&self.prior_weight).zip(lik) {
            if l != 0.0 {
                let w = pw * l;
                num += w * y;
                den += w;
            }
        }
        finish_mean(num, den, evidence)
    }

    /// Posterior mean under the Gaussian log-likelihood
    /// `L(y) = -n (x̄ - y)² / 2σ²`. The maximizer of `L` over the grid is the
    /// node nearest to `x̄`; weights `exp(L(y_j) - L(peak))` are propagated
    /// outward by the ratio recurrence, re-anchored with `exp` every
    /// `ANCHOR_STRIDE` nodes, and summed until they drop below
    /// `GAUSSIAN_CUTOFF`.
    fn gaussian_posterior(
        &self,
        sigma: f64,
        count: usize,
        mean: f64,
        evidence: &Evidence,
    ) -> Result<f64> {
        let nodes = self.grid.nodes();
        let pw = &self.prior_weight;
        let last = nodes.len() - 1;
        let h = self.grid.step();
        let c = count as f64 / (2.0 * sigma * sigma);
        let peak = (((mean + self.half_width) / h).round().max(0.0) as usize).min(last);
        let d_peak = nodes[peak] - mean;
        let base = d_peak * d_peak;
        let exact = |j: usize| {
            let d = nodes[j] - mean;
            (-c * (d * d - base)).exp()
        };
        let q = (-2.0 * c * h * h).exp();
        let (mut num, mut den) = (0.0, 0.0);

        let mut w = 1.0;
        let mut ratio = 0.0;
        for j in peak..=last {
            if (j - peak).is_multiple_of(ANCHOR_STRIDE) {
                w = exact(j);
                ratio = (-c * h * (2.0 * (nodes[j] - mean) + h)).exp();
            }
            if w < GAUSSIAN_CUTOFF {
                break;
            }
            let wp = w * pw[j];
            num += wp * nodes[j];
            den += wp;
            w *= ratio;
            ratio *= q;
        }
        for j in (0..peak).rev() {
            if (peak - j) % ANCHOR_STRIDE == 1 {
                w = exact(j);
                ratio = (-c * h * (-2.0 * (nodes[j] - mean) + h)).exp();
            }
            if w < GAUSSIAN_CUTOFF {
                break;
            }
            let wp = w * pw[j];
            num += wp * nodes[j];
            den += wp;
            w *= ratio;
            ratio *= q;
        }
        finish_mean(num, den, evidence)
    }

    /// Likelihood weights for the logistic channel, computed in the linear
    /// domain as `Π_i g(t_ij)` with `t_ij = exp((y_j - x_i)/s)` and
    /// `g(t) = t/(1+t)²`, renormalized by the running maximum before the
    /// product can underflow. Returns `Ok(false)` when inputs are too
    /// extreme for the product form, in which case the caller falls back to
    /// the log-domain path.
    fn logistic_weights(&self, scale: f64, xs: &[f64], out: &mut [f64]) -> Result<bool> {
        let Some(growth) = &self.logistic_growth else {
            return Ok(false);
        };
        // Keeps (1 + t)² finite for every t = exp((y - u)/s) on the grid.
        if xs
            .iter()
            .any(|&u| (self.half_width + u.abs()) / scale > MAX_LOGISTIC_EXPONENT)
        {
            return Ok(false);
        }
        let (lo, hi) = self.logistic_window(scale, xs);
        out.fill(0.0);
        let out = &mut out[lo..=hi];
        let growth = &growth[lo..=hi];
        out.fill(1.0);
        let mut deficit = 0.0;
        for &u in xs {
            let worst = (self.half_width + u.abs()) / scale + 4f64.ln();
            if deficit + worst > LOG_UNDERFLOW_GUARD {
                renormalize(out, xs)?;
                deficit = 0.0;
            }
            deficit += worst;
            let a = ((-self.half_width - u) / scale).exp();
            for (w, &e) in out.iter_mut().zip(growth) {
                let t = a * e;
                let one_t = 1.0 + t;
                *w *= t / (one_t * one_t);
            }
        }
        renormalize(out, xs)?;
        Ok(true)
    }
}

impl ScalarChannelModel {
    /// Node range outside which the logistic log-likelihood is more than
    /// `WINDOW_NATS` below its maximum. The log-likelihood is concave, so
    /// the range is found from every `ANCHOR_STRIDE`-th node, padded by one
    /// coarse step on each side.
    fn logistic_window(&self, scale: f64, xs: &[f64]) -> (usize, usize) {
        let growth = self.logistic_growth.as_deref().expect("logistic model");
        let last = growth.len() - 1;
        let idx: Vec<usize> = (0..=last).step_by(ANCHOR_STRIDE).collect();
        // (partial product, accumulated log) per coarse node
        let mut acc = vec![(1.0f64, 0.0f64); idx.len()];
        for &u in xs {
            let a = ((-self.half_width - u) / scale).exp();
            for (c, &j) in acc.iter_mut().zip(&idx) {
                let t = a * growth[j];
                c.0 *= t / ((1.0 + t) * (1.0 + t));
                if c.0 < 1e-150 {
                    c.1 += c.0.ln();
                    c.0 = 1.0;
                }
            }
        }
        let ll: Vec<f64> = acc.iter().map(|c| c.1 + c.0.ln()).collect();
        let max = ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let inside = idx
            .iter()
            .zip(&ll)
            .filter(|(_, &l)| l >= max - WINDOW_NATS)
            .map(|(&j, _)| j);
        let (first, lastj) = inside.fold((last, 0), |(a, b), j| (a.min(j), b.max(j)));
        (
            first.saturating_sub(ANCHOR_STRIDE),
            (lastj + ANCHOR_STRIDE).min(last),
        )
    }
}

fn renormalize(w: &mut [f64], xs: &[f64]) -> Result<()> {
    let max = w.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0 && max.is_finite()) {
        return Err(Error::NumericalDegeneracy(format!(
            "likelihood underflowed on the whole grid for x={xs:?}"
        )));
    }
    let inv = 1.0 / max;
    w.iter_mut().for_each(|v| *v *= inv);
    Ok(())
}

fn finish_mean(num: f64, den: f64, evidence: &Evidence) -> Result<f64> {
    if !(den > 0.0 && den.is_finite()) {
        return Err(Error::NumericalDegeneracy(format!(
            "posterior normalizer underflowed for {}",
            evidence.describe()
        )));
    }
    Ok(num / den)
}

fn validate_observations(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::invalid("at least one observation is required"));
    }
    if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite observation {bad}")));
    }
    Ok(())
}

fn prior_density(prior: Prior, half_width: f64, y: f64) -> f64 {
    match prior {
        Prior::Uniform => 0.5 / half_width,
        Prior::TruncatedCosine => {
            PI / (4.0 * SQRT_2 * half_width) * (PI * y / (4.0 * half_width)).cos()
        }
    }
}

/// Free-function form of [`ScalarChannelModel::posterior_mean`].
pub fn posterior_mean_scalar(model: &ScalarChannelModel, x: &[f64]) -> Result<f64> {
    model.posterior_mean(x)
}

/// Free-function form of [`ScalarChannelModel::fisher`].
pub fn fisher_info(model: &ScalarChannelModel, y: f64) -> Result<f64> {
    model.fisher(y)
}

/// Free-function form of [`ScalarChannelModel::sample_joint`].
pub fn sample_joint(
    model: &ScalarChannelModel,
    n: usize,
    rng: &mut StreamRng,
) -> Result<(Vec<f64>, f64)> {
    model.sample_joint(n, rng)
}

/// A scalar channel model together with a fixed observation count, seen as
/// a joint law of `(X, Y)`.
#[derive(Debug, Clone, Copy)]
pub struct ScalarExperiment<'a> {
    model: &'a ScalarChannelModel,
    n_obs: usize,
    raw: bool,
}

impl<'a> ScalarExperiment<'a> {
    pub fn new(model: &'a ScalarChannelModel, n_obs: usize) -> Result<Self> {
        if n_obs == 0 {
            return Err(Error::invalid("number of observations must be at least 1"));
        }
        Ok(Self {
            model,
            n_obs,
            raw: false,
        })
    }

    /// Keep every raw observation, for partitions that look at individual
    /// coordinates of `X`.
    pub fn with_raw_observations(mut self) -> Self {
        self.raw = true;
        self
    }

    pub fn model(&self) -> &'a ScalarChannelModel {
        self.model
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }
}

impl JointModel for ScalarExperiment<'_> {
    type Obs = Evidence;

    fn target_dim(&self) -> usize {
        1
    }

    fn sample(&self, rng: &mut StreamRng) -> (Evidence, Vec<f64>) {
        let y = self.model.sample_prior(rng);
        (
            self.model.sample_evidence(y, self.n_obs, self.raw, rng),
            vec![y],
        )
    }

    fn regression(&self, x: &Evidence) -> Result<Vec<f64>> {
        Ok(vec![self.model.posterior_mean_evidence(x)?])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{stream_rng, MeanAcc};

    /// Trapezoid rule on a dense uniform grid, computed directly from the
    /// densities without log-domain tricks.
    fn trapezoid_posterior_mean(model: &ScalarChannelModel, x: &[f64], points: usize) -> f64 {
        let a = model.half_width();
        let h = 2.0 * a / (points - 1) as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..points {
            let y = -a + h * i as f64;
            let lik: f64 = x
                .iter()
                .map(|&u| model.cond_log_density(u, y).exp())
                .product();
            let w =
                if i == 0 || i == points - 1 { 0.5 } else { 1.0 } * model.prior_density(y) * lik;
            num += w * y;
            den += w;
        }
        num / den
    }

    #[test]
    fn prior_integrates_to_one() {
        for prior in [Prior::Uniform, Prior::TruncatedCosine] {
            let m =
                ScalarChannelModel::new(1.3, prior, NoiseFamily::Gaussian { sigma: 1.0 }).unwrap();
            assert!(
                (m.prior_expectation(|_| 1.0) - 1.0).abs() < 1e-8,
                "{prior:?}"
            );
        }
    }

    #[test]
    fn fisher_positive_on_grid() {
        let models = [
            ScalarChannelModel::uniform_gaussian(1.0, 0.3).unwrap(),
            ScalarChannelModel::uniform_logistic(1.0, 0.7).unwrap(),
        ];
        for m in &models {
            for i in 0..1001 {
                let y = -1.0 + 2.0 * i as f64 / 1000.0;
                assert!(m.fisher(y).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn symmetric_observation_gives_zero() {
        let m = ScalarChannelModel::uniform_gaussian(1.0, 1.0).unwrap();
        assert!(m.posterior_mean(&[0.0]).unwrap().abs() < 1e-14);
    }

    #[test]
    fn huge_noise_returns_prior_mean() {
        let m = ScalarChannelModel::uniform_gaussian(1.0, 1e6).unwrap();
        assert!(m.posterior_mean(&[0.7]).unwrap().abs() < 1e-5);
    }

    #[test]
    fn matches_dense_trapezoid_oracle() {
        let m = ScalarChannelModel::uniform_gaussian(1.0, 1.0).unwrap();
        let oracle = trapezoid_posterior_mean(&m, &[0.5], 100_001);
        let got = m.posterior_mean(&[0.5]).unwrap();
        assert!((got - oracle).abs() < 1e-6, "{got} vs {oracle}");
    }

    #[test]
    fn fast_kernels_agree_with_log_domain_reference() {
        let gauss = ScalarChannelModel::cosine_gaussian(1.0, 0.2).unwrap();
        let logi = ScalarChannelModel::uniform_logistic(1.0, 0.4).unwrap();
        // Narrow enough that the logistic window excludes most of the grid.
        let sharp = ScalarChannelModel::uniform_logistic(1.0, 0.05).unwrap();
        let mut rng = stream_rng(11, 0);
        for m in [&gauss, &logi, &sharp] {
            for n in [1, 3, 40, 400] {
                for _ in 0..5 {
                    let (x, _) = m.sample_joint(n, &mut rng).unwrap();
                    let fast = m.posterior_mean(&x).unwrap();
                    let slow = m.posterior_mean_reference(&x).unwrap();
                    assert!((fast - slow).abs() < 1e-11, "n={n}: {fast} vs {slow}");
                }
            }
        }
    }

    #[test]
    fn mean_evidence_matches_raw_for_gaussian() {
        let m = ScalarChannelModel::uniform_gaussian(1.0, 0.5).unwrap();
        let x = [0.3, -0.1, 0.9, 0.2];
        let mean = x.iter().sum::<f64>() / 4.0;
        let a = m.posterior_mean(&x).unwrap();
        let b = m
            .posterior_mean_evidence(&Evidence::Mean { count: 4, mean })
            .unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn concentrated_posterior_near_edge() {
        let m = ScalarChannelModel::uniform_gaussian(1.0, 0.1).unwrap();
        let e = Evidence::Mean {
            count: 10_000,
            mean: 0.9995,
        };
        let v = m.posterior_mean_evidence(&e).unwrap();
        assert!(v < 1.0 && v > 0.998, "{v}");
        let far = Evidence::Mean {
            count: 10_000,
            mean: 3.0,
        };
        let v = m.posterior_mean_evidence(&far).unwrap();
        assert!(v <= 1.0 && v > 0.999, "{v}");
    }

    #[test]
    fn rejects_bad_input() {
        let m = ScalarChannelModel::uniform_gaussian(1.0, 1.0).unwrap();
        assert!(matches!(m.posterior_mean(&[]), Err(Error::InvalidInput(_))));
        assert!(matches!(
            m.posterior_mean(&[f64::NAN]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            m.sample_joint(0, &mut stream_rng(1, 1)),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(m.fisher(1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn reference_path_reports_degeneracy() {
        let m = ScalarChannelModel::noiseless(1.0).unwrap();
        assert!(matches!(
            m.posterior_mean(&[0.2, 0.3]),
            Err(Error::NumericalDegeneracy(_))
        ));
        assert_eq!(m.posterior_mean(&[0.2, 0.2]).unwrap(), 0.2);
    }

    #[test]
    fn gaussian_fisher_values() {
        let m = ScalarChannelModel::uniform_gaussian(1.0, 0.5).unwrap();
        assert_eq!(m.fisher(0.3).unwrap(), 4.0);
        let m = ScalarChannelModel::uniform_gaussian(1.0, 1.0).unwrap();
        assert_eq!(m.fisher(-0.9).unwrap(), 1.0);
    }

    #[test]
    fn logistic_fisher_matches_score_variance() {
        let m = ScalarChannelModel::uniform_logistic(1.0, 1.0).unwrap();
        let mut rng = stream_rng(5, 0);
        let acc: MeanAcc = (0..4_000_000)
            .map(|_| {
                let u = m.sample_observations(0.0, 1, &mut rng)[0];
                m.cond_score(u, 0.0).powi(2)
            })
            .collect();
        assert!(
            (acc.mean() - m.fisher(0.0).unwrap()).abs() < 1e-3,
            "{}",
            acc.mean()
        );
    }

    #[test]
    fn score_has_zero_mean_and_fisher_variance() {
        let models = [
            ScalarChannelModel::uniform_gaussian(1.0, 0.5).unwrap(),
            ScalarChannelModel::uniform_logistic(1.0, 0.8).unwrap(),
        ];
        let mut rng = stream_rng(9, 0);
        for m in &models {
            for y in [-0.8, 0.0, 0.5] {
                let scores: Vec<f64> = m
                    .sample_observations(y, 200_000, &mut rng)
                    .iter()
                    .map(|&u| m.cond_score(u, y))
                    .collect();
                let acc: MeanAcc = scores.iter().copied().collect();
                assert!(acc.mean().abs() <= 4.0 * acc.se());
                let sq: MeanAcc = scores.iter().map(|s| s * s).collect();
                let fisher = m.fisher(y).unwrap();
                assert!(
                    (sq.mean() - fisher).abs() <= 4.0 * sq.se(),
                    "{} vs {fisher}",
                    sq.mean()
                );
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_unbiased() {
        let m = ScalarChannelModel::uniform_gaussian(1.0, 0.5).unwrap();
        let a = m.sample_joint(3, &mut stream_rng(42, 0)).unwrap();
        let b = m.sample_joint(3, &mut stream_rng(42, 0)).unwrap();
        assert_eq!(a, b);

        let mut rng = stream_rng(1, 0);
        let ys: MeanAcc = (0..1_000_000).map(|_| m.sample_prior(&mut rng)).collect();
        assert!(ys.mean().abs() <= 3.0 * (1.0 / 3f64.sqrt()) / 1e3);

        let resid: MeanAcc = (0..200_000)
            .map(|_| {
                let (x, y) = m.sample_joint(1, &mut rng).unwrap();
                x[0] - y
            })
            .collect();
        // SE of a sample variance of Gaussians: σ²·√(2/(N-1)).
        let se = 0.25 * (2.0 / 200_000f64).sqrt();
        assert!(
            (resid.variance() - 0.25).abs() <= 3.0 * se,
            "{}",
            resid.variance()
        );
    }

    #[test]
    fn cosine_prior_sampling_matches_density() {
        let m = ScalarChannelModel::cosine_gaussian(2.0, 0.5).unwrap();
        let mut rng = stream_rng(3, 0);
        let sq: MeanAcc = (0..400_000)
            .map(|_| m.sample_prior(&mut rng).powi(2))
            .collect();
        let exact = m.prior_expectation(|y| y * y);
        assert!(
            (sq.mean() - exact).abs() <= 4.0 * sq.se(),
            "{} vs {exact}",
            sq.mean()
        );
    }
}

//! TOML experiment files. Every table rejects unknown keys.
//!
//! ```toml
//! [model]
//! kind = "uniform-gaussian"   # cosine-gaussian, uniform-logistic, noiseless, linear-gaussian
//! A = 1.0
//! sigma = 0.1
//! seed = 7
//!
//! [sweep]
//! k = [2, 4, 8]
//! n = [10, 100]
//! N = 100000
//! seed = 1
//!
//! [bounds]
//! k = 4
//! n = 100
//! ```
//!
//! Linear-Gaussian models take either the matrices `sigma_y`, `H`,
//! `sigma_w` (lists of rows) or `p` and `sigma` for `Σ_Y = H = I_p`,
//! `Σ_W = σ² I_p`.

use std::path::Path;

use serde::Deserialize;

use crate::bounds::{
    corollary_rhs, corollary_rhs_weak, info_inequality_gap, thm1_rhs, thm1_rhs_gaussian,
    thm2_bound_moment, thm2_bound_subgaussian, weakened_thm2, BoundConfig, BoundReport,
};
use crate::error::{Error, Result};
use crate::experiments::{
    calibrate_scalar, sweep_scalar, sweep_vector, sweep_vector_calibrated, RPolicy, SweepRow,
};
use crate::model::{
    moment_report, JointModel, LinearGaussianModel, NoiseFamily, ScalarChannelModel,
    ScalarExperiment,
};
use crate::quantizer::{delta, panter_dite_1d};
use crate::regret::estimate_mmse;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    pub sweep: Option<SweepSection>,
    pub bounds: Option<BoundsSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    UniformGaussian,
    CosineGaussian,
    UniformLogistic,
    Noiseless,
    LinearGaussian,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    /// Label written to sweep rows; defaults to the kind.
    pub id: Option<String>,
    #[serde(rename = "A")]
    pub half_width: Option<f64>,
    /// Gaussian noise level; also the logistic scale.
    pub sigma: Option<f64>,
    pub p: Option<usize>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub sigma_y: Option<Vec<Vec<f64>>>,
    #[serde(rename = "H")]
    pub h: Option<Vec<Vec<f64>>>,
    pub sigma_w: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub k: Vec<usize>,
    /// Observation counts; scalar models only.
    pub n: Option<Vec<usize>>,
    #[serde(rename = "N")]
    pub samples: usize,
    pub seed: u64,
    /// `optimized`, `moment` or `fixed:<r>`; vector models only.
    pub r_policy: Option<String>,
    /// Calibration cell for the bound constant.
    pub calibrate_n: Option<usize>,
    pub calibrate_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub k: Option<usize>,
    /// Observation count; scalar models only.
    pub n: Option<usize>,
    /// Monte Carlo size for `mmse` or moments.
    #[serde(rename = "N", default = "default_bound_samples")]
    pub samples: usize,
    pub seed: Option<u64>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub l_fitted: Option<bool>,
    pub c_corollary: Option<f64>,
    pub c_thm2_moment: Option<f64>,
    pub c1_thm2: Option<f64>,
    pub c2_thm2: Option<f64>,
    #[serde(rename = "L0")]
    pub l0: Option<f64>,
    #[serde(rename = "C_abs")]
    pub c_abs: Option<f64>,
}

fn default_bound_samples() -> usize {
    100_000
}

/// A model built from a config file.
#[derive(Debug, Clone)]
pub enum BuiltModel {
    Scalar(ScalarChannelModel),
    Linear(LinearGaussianModel),
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim().replace('\n', " ")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn model_id(&self) -> String {
        self.model.id.clone().unwrap_or_else(|| {
            match self.model.kind {
                ModelKind::UniformGaussian => "uniform-gaussian",
                ModelKind::CosineGaussian => "cosine-gaussian",
                ModelKind::UniformLogistic => "uniform-logistic",
                ModelKind::Noiseless => "noiseless",
                ModelKind::LinearGaussian => "linear-gaussian",
            }
            .to_string()
        })
    }

    pub fn build_model(&self) -> Result<BuiltModel> {
        let m = &self.model;
        let a = || require(m.half_width, "model.A");
        let sigma = || require(m.sigma, "model.sigma");
        let built = match m.kind {
            ModelKind::UniformGaussian => {
                BuiltModel::Scalar(ScalarChannelModel::uniform_gaussian(a()?, sigma()?)?)
            }
            ModelKind::CosineGaussian => {
                BuiltModel::Scalar(ScalarChannelModel::cosine_gaussian(a()?, sigma()?)?)
            }
            ModelKind::UniformLogistic => {
                BuiltModel::Scalar(ScalarChannelModel::uniform_logistic(a()?, sigma()?)?)
            }
            ModelKind::Noiseless => BuiltModel::Scalar(ScalarChannelModel::noiseless(a()?)?),
            ModelKind::LinearGaussian => BuiltModel::Linear(self.linear_model()?),
        };
        Ok(built)
    }

    fn linear_model(&self) -> Result<LinearGaussianModel> {
        let m = &self.model;
        match (&m.sigma_y, &m.h, &m.sigma_w) {
            (Some(sy), Some(h), Some(sw)) => {
                let model = LinearGaussianModel::from_rows(sy, h, sw)?;
                if m.p.is_some_and(|p| p != model.dim())
                    || m.n.is_some_and(|n| n != model.obs_dim())
                {
                    return Err(Error::Config(
                        "model.p / model.n disagree with the matrix shapes".into(),
                    ));
                }
                Ok(model)
            }
            (None, None, None) => {
                let p = require(m.p, "model.p")?;
                if m.n.is_some_and(|n| n != p) {
                    return Err(Error::Config(
                        "model.n must equal model.p without explicit matrices".into(),
                    ));
                }
                let s = require(m.sigma, "model.sigma")?;
                let id: Vec<Vec<f64>> = (0..p)
                    .map(|i| (0..p).map(|j| f64::from(u8::from(i == j))).collect())
                    .collect();
                let noise: Vec<Vec<f64>> = id
                    .iter()
                    .map(|row| row.iter().map(|v| v * s * s).collect())
                    .collect();
                LinearGaussianModel::from_rows(&id, &id, &noise)
            }
            _ => Err(Error::Config(
                "model.sigma_y, model.H and model.sigma_w must be given together".into(),
            )),
        }
    }

    pub fn bound_config(&self) -> Result<BoundConfig> {
        let mut cfg = BoundConfig::default();
        if let Some(b) = &self.bounds {
            let set = |slot: &mut f64, v: Option<f64>| {
                if let Some(v) = v {
                    *slot = v;
                }
            };
            set(&mut cfg.l, b.l);
            set(&mut cfg.c_corollary, b.c_corollary);
            set(&mut cfg.c_thm2_moment, b.c_thm2_moment);
            set(&mut cfg.c1_thm2, b.c1_thm2);
            set(&mut cfg.c2_thm2, b.c2_thm2);
            set(&mut cfg.l0, b.l0);
            set(&mut cfg.c_abs, b.c_abs);
            cfg.l_fitted = b.l_fitted.unwrap_or(false);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Runs the `[sweep]` table. `seed` and `samples` override the file.
    pub fn run_sweep(&self, seed: Option<u64>, samples: Option<usize>) -> Result<Vec<SweepRow>> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::Config("missing [sweep] table".into()))?;
        let seed = seed.unwrap_or(s.seed);
        let samples = samples.unwrap_or(s.samples);
        let bounds = self.bound_config()?;
        let id = self.model_id();
        match self.build_model()? {
            BuiltModel::Scalar(model) => {
                if s.r_policy.is_some() {
                    return Err(Error::Config(
                        "sweep.r_policy applies to linear-gaussian models only".into(),
                    ));
                }
                let n_list = require(s.n.as_ref(), "sweep.n")?;
                let mut rows = sweep_scalar(&model, &id, &s.k, n_list, samples, seed, &bounds)?;
                match (s.calibrate_n, s.calibrate_k) {
                    (Some(n), Some(k)) => {
                        calibrate_scalar(&mut rows, n, k)?;
                    }
                    (None, None) => {}
                    _ => {
                        return Err(Error::Config(
                            "sweep.calibrate_n and sweep.calibrate_k go together".into(),
                        ))
                    }
                }
                Ok(rows)
            }
            BuiltModel::Linear(model) => {
                if s.n.is_some() || s.calibrate_n.is_some() {
                    return Err(Error::Config(
                        "sweep.n and sweep.calibrate_n apply to scalar models only".into(),
                    ));
                }
                let policy = match &s.r_policy {
                    Some(p) => p.parse()?,
                    None => RPolicy::Optimized,
                };
                match s.calibrate_k {
                    Some(k) => Ok(sweep_vector_calibrated(
                        &model, &id, &s.k, samples, seed, policy, k, &bounds,
                    )?
                    .0),
                    None => sweep_vector(&model, &id, &s.k, samples, seed, policy, &bounds),
                }
            }
        }
    }

    /// Evaluates every bound that applies to the model under `[bounds]`.
    pub fn bound_reports(&self) -> Result<Vec<BoundReport>> {
        let b = self
            .bounds
            .as_ref()
            .ok_or_else(|| Error::Config("missing [bounds] table".into()))?;
        let cfg = self.bound_config()?;
        let seed = b.seed.or(self.model.seed).unwrap_or(0);
        let k = require(b.k, "bounds.k")?;
        match self.build_model()? {
            BuiltModel::Scalar(model) => {
                let n = require(b.n, "bounds.n")?;
                let a = model.half_width();
                let codebook = panter_dite_1d(|y| model.prior_density(y), -a, a, k)?;
                let d = delta(&codebook, a)?;
                let mmse =
                    estimate_mmse(&ScalarExperiment::new(&model, n)?, b.samples, seed)?.value;
                let (kf, nf) = (k as f64, n as f64);
                let mut out = Vec::new();
                match model.mean_inv_sqrt_fisher() {
                    Ok(kappa) => {
                        let inputs = [
                            ("k", kf),
                            ("n", nf),
                            ("delta", d),
                            ("e_inv_sqrt_fisher", kappa),
                            ("mmse", mmse),
                        ];
                        out.push(BoundReport::new(
                            "thm1",
                            thm1_rhs(cfg.l, d, n, kappa, mmse),
                            cfg,
                            &inputs,
                        ));
                        if let NoiseFamily::Gaussian { sigma } = model.noise() {
                            let inputs = [("k", kf), ("n", nf), ("delta", d), ("sigma", sigma)];
                            out.push(BoundReport::new(
                                "thm1_gaussian",
                                thm1_rhs_gaussian(cfg.l, d, n, sigma),
                                cfg,
                                &inputs,
                            ));
                        }
                        out.push(BoundReport::new(
                            "corollary",
                            corollary_rhs(k, n, kappa, mmse, cfg.c_corollary),
                            cfg,
                            &[
                                ("k", kf),
                                ("n", nf),
                                ("e_inv_sqrt_fisher", kappa),
                                ("mmse", mmse),
                            ],
                        ));
                        let gap = info_inequality_gap(&model, n, mmse)?;
                        out.push(BoundReport::new(
                            "info_inequality_gap",
                            gap,
                            cfg,
                            &[("n", nf), ("mmse", mmse)],
                        ));
                    }
                    Err(e) => log::info!("Fisher-information bounds skipped: {e}"),
                }
                out.push(BoundReport::new(
                    "corollary_weak",
                    corollary_rhs_weak(k, mmse, cfg.c_corollary),
                    cfg,
                    &[("k", kf), ("mmse", mmse)],
                ));
                Ok(out)
            }
            BuiltModel::Linear(model) => {
                let p = model.effective_dim().max(1);
                let known = model.known_moments();
                let (e2, e4, v) = (
                    known.e2.unwrap(),
                    known.e4.unwrap(),
                    known.subgaussian_v.unwrap(),
                );
                let e1 = match known.e1 {
                    Some(e1) => e1,
                    None => moment_report(&model, b.samples, seed)?.e1,
                };
                let (kf, pf) = (k as f64, p as f64);
                let (value, r_star) =
                    thm2_bound_subgaussian(e1, e4, v, k, p, cfg.c1_thm2, cfg.c2_thm2)?;
                let mut sub = BoundReport::new(
                    "thm2_subgaussian",
                    value,
                    cfg,
                    &[("k", kf), ("p", pf), ("e1", e1), ("e4", e4), ("v", v)],
                );
                sub.r_star = Some(r_star);
                Ok(vec![
                    BoundReport::new(
                        "thm2_moment",
                        thm2_bound_moment(e2, e4, k, p, cfg.c_thm2_moment),
                        cfg,
                        &[("k", kf), ("p", pf), ("e2", e2), ("e4", e4)],
                    ),
                    sub,
                    BoundReport::new(
                        "weakened_thm2",
                        weakened_thm2(kf, p, cfg.c1_thm2)?,
                        cfg,
                        &[("k", kf), ("p", pf)],
                    ),
                ])
            }
        }
    }
}

impl BuiltModel {
    pub fn target_dim(&self) -> usize {
        match self {
            BuiltModel::Scalar(_) => 1,
            BuiltModel::Linear(m) => m.target_dim(),
        }
    }
}

fn require<T>(value: Option<T>, key: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing key {key}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_model_from_text() {
        let cfg =
            Config::parse("[model]\nkind = \"uniform-gaussian\"\nA = 2.0\nsigma = 0.5\n").unwrap();
        match cfg.build_model().unwrap() {
            BuiltModel::Scalar(m) => {
                assert_eq!(m.half_width(), 2.0);
                assert_eq!(m.noise(), NoiseFamily::Gaussian { sigma: 0.5 });
            }
            BuiltModel::Linear(_) => panic!("expected a scalar model"),
        }
        assert_eq!(cfg.model_id(), "uniform-gaussian");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err =
            Config::parse("[model]\nkind = \"noiseless\"\nA = 1.0\nsigam = 0.1\n").unwrap_err();
        assert_eq!(err.kind(), "config");
        let err = Config::parse(
            "[model]\nkind = \"noiseless\"\nA = 1.0\n[sweep]\nk=[2]\nN=1000\nseed=1\nbogus=1\n",
        );
        assert_eq!(err.unwrap_err().kind(), "config");
        assert_eq!(
            Config::parse("[model]\nkind = \"triangle\"\n")
                .unwrap_err()
                .kind(),
            "config"
        );
    }

    #[test]
    fn missing_keys_are_config_errors() {
        let cfg = Config::parse("[model]\nkind = \"uniform-gaussian\"\nA = 1.0\n").unwrap();
        let err = cfg.build_model().unwrap_err();
        assert_eq!(err.kind(), "config");
        assert!(err.to_string().contains("model.sigma"));
        assert_eq!(cfg.run_sweep(None, None).unwrap_err().kind(), "config");
    }

    #[test]
    fn linear_model_forms() {
        let cfg =
            Config::parse("[model]\nkind = \"linear-gaussian\"\np = 3\nsigma = 2.0\n").unwrap();
        let BuiltModel::Linear(m) = cfg.build_model().unwrap() else {
            panic!("expected linear")
        };
        assert_close!(m.closed_form_mmse(), 3.0 * 4.0 / 5.0, 1e-12);
        let text = "[model]\nkind = \"linear-gaussian\"\nsigma_y = [[1.0, 0.0], [0.0, 2.0]]\nH = [[1.0, 1.0]]\nsigma_w = [[0.5]]\n";
        let BuiltModel::Linear(m) = Config::parse(text).unwrap().build_model().unwrap() else {
            panic!()
        };
        assert_eq!((m.dim(), m.obs_dim()), (2, 1));
        let partial = "[model]\nkind = \"linear-gaussian\"\nH = [[1.0]]\n";
        assert_eq!(
            Config::parse(partial)
                .unwrap()
                .build_model()
                .unwrap_err()
                .kind(),
            "config"
        );
    }

    #[test]
    fn bound_constants_override_defaults() {
        let text = "[model]\nkind = \"linear-gaussian\"\np = 2\nsigma = 1.0\n[bounds]\nk = 16\nc1_thm2 = 2.0\nc2_thm2 = 2.0\n";
        let cfg = Config::parse(text).unwrap();
        assert_eq!(cfg.bound_config().unwrap().c1_thm2, 2.0);
        let reports = cfg.bound_reports().unwrap();
        let names: Vec<&str> = reports.iter().map(|r| r.bound.as_str()).collect();
        assert_eq!(names, ["thm2_moment", "thm2_subgaussian", "weakened_thm2"]);
        assert!(reports[1].r_star.unwrap() > 0.0);
        let bad = "[model]\nkind = \"noiseless\"\nA = 1.0\n[bounds]\nk = 2\nL = -1.0\n";
        assert_eq!(
            Config::parse(bad)
                .unwrap()
                .bound_config()
                .unwrap_err()
                .kind(),
            "config"
        );
    }
}

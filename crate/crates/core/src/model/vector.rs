use serde::Serialize;

use super::{norm, JointModel};
use crate::error::{Error, Result};
use crate::numeric::{run_chunks, MeanAcc, StreamRng};

type Sampler = dyn Fn(&mut StreamRng) -> (Vec<f64>, Vec<f64>) + Send + Sync;
type Regression = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Exactly known moment metadata of `‖η(X)‖`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct KnownMoments {
    pub e1: Option<f64>,
    pub e2: Option<f64>,
    pub e4: Option<f64>,
    pub subgaussian_v: Option<f64>,
    pub mmse: Option<f64>,
}

/// A vector model given by closures: a joint sampler and a regression
/// oracle.
pub struct VectorJointModel {
    obs_dim: usize,
    target_dim: usize,
    sampler: Box<Sampler>,
    regression: Box<Regression>,
    moments: KnownMoments,
}

impl std::fmt::Debug for VectorJointModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorJointModel")
            .field("obs_dim", &self.obs_dim)
            .field("target_dim", &self.target_dim)
            .field("moments", &self.moments)
            .finish_non_exhaustive()
    }
}

impl VectorJointModel {
    pub fn new(
        obs_dim: usize,
        target_dim: usize,
        sampler: impl Fn(&mut StreamRng) -> (Vec<f64>, Vec<f64>) + Send + Sync + 'static,
        regression: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            obs_dim,
            target_dim,
            sampler: Box::new(sampler),
            regression: Box::new(regression),
            moments: KnownMoments::default(),
        }
    }

    pub fn with_moments(mut self, moments: KnownMoments) -> Self {
        self.moments = moments;
        self
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }
}

impl JointModel for VectorJointModel {
    type Obs = Vec<f64>;

    fn target_dim(&self) -> usize {
        self.target_dim
    }

    fn sample(&self, rng: &mut StreamRng) -> (Vec<f64>, Vec<f64>) {
        (self.sampler)(rng)
    }

    fn regression(&self, x: &Vec<f64>) -> Result<Vec<f64>> {
        let eta = (self.regression)(x);
        if eta.len() != self.target_dim {
            return Err(Error::invalid(format!(
                "regression returned {} coordinates, expected {}",
                eta.len(),
                self.target_dim
            )));
        }
        Ok(eta)
    }

    fn known_moments(&self) -> KnownMoments {
        self.moments
    }
}

/// Empirical moments of `‖η(X)‖` (and `E‖Y‖⁴` for the Jensen check).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentReport {
    pub samples: usize,
    pub e1: f64,
    pub e1_se: f64,
    pub e2: f64,
    pub e2_se: f64,
    pub e4: f64,
    pub e4_se: f64,
    pub y_e4: f64,
    pub y_e4_se: f64,
    /// Subgaussian constant: the model's known value, or the empirical
    /// proxy when none is declared.
    pub v: f64,
    pub v_approximate: bool,
}

/// λ values scanned by the empirical subgaussian proxy.
const MGF_LAMBDAS: [f64; 8] = [-2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0];

/// Monte Carlo moments of `‖η(X)‖` from `samples` joint draws. Without a
/// declared `v`, reports `max_λ 2 log Ê[exp(λ(‖η‖ − Ê‖η‖))] / λ²`.
pub fn moment_report<M: JointModel>(model: &M, samples: usize, seed: u64) -> Result<MomentReport> {
    if samples < 1000 {
        return Err(Error::invalid(format!(
            "moment report needs at least 1000 samples, got {samples}"
        )));
    }
    let chunks = run_chunks(samples, seed, 3, |rng, count| -> Result<Vec<(f64, f64)>> {
        (0..count)
            .map(|_| {
                let (x, y) = model.sample(rng);
                Ok((norm(&model.regression(&x)?), norm(&y)))
            })
            .collect()
    });
    let mut norms = Vec::with_capacity(samples);
    for chunk in chunks {
        norms.extend(chunk?);
    }

    let (mut m1, mut m2, mut m4, mut y4) = (
        MeanAcc::new(),
        MeanAcc::new(),
        MeanAcc::new(),
        MeanAcc::new(),
    );
    for &(e, y) in &norms {
        m1.push(e);
        m2.push(e * e);
        m4.push(e.powi(4));
        y4.push(y.powi(4));
    }

    let known = model.known_moments();
    let (v, v_approximate) = match known.subgaussian_v {
        Some(v) => (v, false),
        None => {
            let mean = m1.mean();
            let proxy = MGF_LAMBDAS
                .iter()
                .map(|&lambda| {
                    let mgf = norms
                        .iter()
                        .map(|&(e, _)| (lambda * (e - mean)).exp())
                        .sum::<f64>()
                        / norms.len() as f64;
                    2.0 * mgf.ln() / (lambda * lambda)
                })
                .fold(0.0, f64::max);
            (proxy, true)
        }
    };

    Ok(MomentReport {
        samples,
        e1: m1.mean(),
        e1_se: m1.se(),
        e2: m2.mean(),
        e2_se: m2.se(),
        e4: m4.mean(),
        e4_se: m4.se(),
        y_e4: y4.mean(),
        y_e4_se: y4.se(),
        v,
        v_approximate,
    })
}

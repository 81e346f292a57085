//! Joint source models `(X, Y)` and their regression functions
//! `η(x) = E[Y | X = x]`.

mod linear;
mod scalar;
mod vector;

pub use linear::{closed_form_mmse, LinearGaussianModel};
pub use scalar::{
    fisher_info, posterior_mean_scalar, sample_joint, Evidence, NoiseFamily, Prior,
    ScalarChannelModel, ScalarExperiment, QUADRATURE_POINTS, SAMPLING_TABLE_POINTS,
};
pub use vector::{moment_report, KnownMoments, MomentReport, VectorJointModel};

use crate::error::Result;
use crate::numeric::StreamRng;

/// A joint law of `(X, Y)` with `Y ∈ R^p`, sampled one pair at a time, plus
/// an oracle for the regression function.
pub trait JointModel: Sync {
    type Obs: Send + Sync;

    /// `p`.
    fn target_dim(&self) -> usize;

    /// One draw `(x, y)`.
    fn sample(&self, rng: &mut StreamRng) -> (Self::Obs, Vec<f64>);

    /// `η(x)`.
    fn regression(&self, x: &Self::Obs) -> Result<Vec<f64>>;

    /// Exactly known moments of `‖η(X)‖`, if any.
    fn known_moments(&self) -> KnownMoments {
        KnownMoments::default()
    }
}

impl<M: JointModel + ?Sized> JointModel for &M {
    type Obs = M::Obs;

    fn target_dim(&self) -> usize {
        (**self).target_dim()
    }

    fn sample(&self, rng: &mut StreamRng) -> (Self::Obs, Vec<f64>) {
        (**self).sample(rng)
    }

    fn regression(&self, x: &Self::Obs) -> Result<Vec<f64>> {
        (**self).regression(x)
    }

    fn known_moments(&self) -> KnownMoments {
        (**self).known_moments()
    }
}

/// Squared Euclidean distance.
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

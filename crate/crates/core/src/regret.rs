//! Monte Carlo estimates of `mmse`, `mmse_k` and the regret `reg_k` for a
//! given cell function, with standard errors.
//!
//! Every estimator runs two independent passes. Pass 1 fits the cell
//! centroids of `Y` and of `η(X)`, and pass 2 evaluates squared errors
//! against them on fresh draws. Reusing the pass-1 draws would bias the
//! errors downward. Each pass is split into fixed-size chunks with their own
//! RNG streams and reduced in chunk order, so results depend only on
//! `(seed, N)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{sq_dist, JointModel, ScalarChannelModel};
use crate::numeric::{run_chunks, MeanAcc};
use crate::quantizer::{distortion_on, CellSums, Centroids, Codebook};

/// Smallest Monte Carlo sample accepted by the estimators.
pub const MIN_SAMPLES: usize = 1000;

const CENTROID_PASS: u32 = 1;
const EVALUATION_PASS: u32 = 2;

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl From<&MeanAcc> for Estimate {
    fn from(acc: &MeanAcc) -> Self {
        Self {
            value: acc.mean(),
            se: acc.se(),
        }
    }
}

/// Everything one two-pass run produces.
#[derive(Debug, Clone)]
pub struct RegretParts {
    /// `‖Y − η(X)‖²`
    pub mmse: MeanAcc,
    /// `‖Y − ĉ_Y(cell)‖²`
    pub mmse_k: MeanAcc,
    /// `‖η(X) − ĉ_η(cell)‖²`
    pub regret: MeanAcc,
    /// Per-draw `mmse_k − mmse − regret` terms, paired on the same draw.
    pub residual_paired: MeanAcc,
    /// `‖η(X) − Y‖`
    pub abs_error: MeanAcc,
    /// Per-draw `‖η − ĉ_η‖² − g(Y)` when a control function `g` is given.
    pub control_gap: Option<MeanAcc>,
    /// Share of the regret mean contributed by each cell; sums to
    /// `regret.mean()`.
    pub regret_by_cell: Vec<f64>,
    pub centroids_y: Centroids,
    pub centroids_eta: Centroids,
}

impl RegretParts {
    /// `mmse_k − mmse − regret` and the root-sum-square of the three SEs.
    pub fn residual(&self) -> (f64, f64) {
        let r = self.mmse_k.mean() - self.mmse.mean() - self.regret.mean();
        let se =
            (self.mmse.se().powi(2) + self.mmse_k.se().powi(2) + self.regret.se().powi(2)).sqrt();
        (r, se)
    }
}

/// Control function evaluated on `Y` in the evaluation pass.
pub type Control<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// Runs both passes for the partition `cell_of(x, η(x)) ∈ 0..cells`.
pub fn run_two_pass<M, F>(
    model: &M,
    cell_of: F,
    cells: usize,
    samples: usize,
    seed: u64,
    control: Option<Control<'_>>,
) -> Result<RegretParts>
where
    M: JointModel,
    F: Fn(&M::Obs, &[f64]) -> usize + Sync,
{
    if samples < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    if cells == 0 {
        return Err(Error::invalid("need at least one cell"));
    }
    let p = model.target_dim();
    let cell_checked = |x: &M::Obs, eta: &[f64]| -> Result<usize> {
        let c = cell_of(x, eta);
        if c >= cells {
            return Err(Error::invalid(format!(
                "cell index {c} out of range 0..{cells}"
            )));
        }
        Ok(c)
    };

    let partials = run_chunks(
        samples,
        seed,
        CENTROID_PASS,
        |rng, count| -> Result<(CellSums, CellSums)> {
            let mut ys = CellSums::new(cells, p);
            let mut etas = CellSums::new(cells, p);
            for _ in 0..count {
                let (x, y) = model.sample(rng);
                let eta = model.regression(&x)?;
                let c = cell_checked(&x, &eta)?;
                ys.add(c, &y);
                etas.add(c, &eta);
            }
            Ok((ys, etas))
        },
    );
    let mut ys = CellSums::new(cells, p);
    let mut etas = CellSums::new(cells, p);
    for part in partials {
        let (a, b) = part?;
        ys.merge(&a);
        etas.merge(&b);
    }
    let centroids_y = ys.finish("centroids of Y")?;
    let centroids_eta = etas.finish("centroids of η")?;

    #[derive(Default)]
    struct Pass2 {
        mmse: MeanAcc,
        mmse_k: MeanAcc,
        regret: MeanAcc,
        residual: MeanAcc,
        abs_error: MeanAcc,
        control: MeanAcc,
        by_cell: Vec<f64>,
    }
    let fresh = || Pass2 {
        by_cell: vec![0.0; cells],
        ..Pass2::default()
    };
    let partials = run_chunks(
        samples,
        seed,
        EVALUATION_PASS,
        |rng, count| -> Result<Pass2> {
            let mut acc = fresh();
            for _ in 0..count {
                let (x, y) = model.sample(rng);
                let eta = model.regression(&x)?;
                let c = cell_checked(&x, &eta)?;
                let e = sq_dist(&y, &eta);
                let ek = sq_dist(&y, &centroids_y.points[c]);
                let r = sq_dist(&eta, &centroids_eta.points[c]);
                acc.mmse.push(e);
                acc.mmse_k.push(ek);
                acc.regret.push(r);
                acc.by_cell[c] += r;
                acc.residual.push(ek - e - r);
                acc.abs_error.push(e.sqrt());
                if let Some(g) = control {
                    acc.control.push(r - g(&y));
                }
            }
            Ok(acc)
        },
    );
    let mut total = fresh();
    for part in partials {
        let part = part?;
        total.mmse.merge(&part.mmse);
        total.mmse_k.merge(&part.mmse_k);
        total.regret.merge(&part.regret);
        total.residual.merge(&part.residual);
        total.abs_error.merge(&part.abs_error);
        total.control.merge(&part.control);
        total
            .by_cell
            .iter_mut()
            .zip(&part.by_cell)
            .for_each(|(t, p)| *t += p);
    }
    let regret_by_cell = total.by_cell.iter().map(|s| s / samples as f64).collect();
    Ok(RegretParts {
        mmse: total.mmse,
        mmse_k: total.mmse_k,
        regret: total.regret,
        residual_paired: total.residual,
        abs_error: total.abs_error,
        control_gap: control.map(|_| total.control),
        regret_by_cell,
        centroids_y,
        centroids_eta,
    })
}

/// `E‖Y − η(X)‖²` from `samples` joint draws.
pub fn estimate_mmse<M: JointModel>(model: &M, samples: usize, seed: u64) -> Result<Estimate> {
    if samples < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let partials = run_chunks(
        samples,
        seed,
        EVALUATION_PASS,
        |rng, count| -> Result<MeanAcc> {
            let mut acc = MeanAcc::new();
            for _ in 0..count {
                let (x, y) = model.sample(rng);
                acc.push(sq_dist(&y, &model.regression(&x)?));
            }
            Ok(acc)
        },
    );
    let mut acc = MeanAcc::new();
    for part in partials {
        acc.merge(&part?);
    }
    Ok(Estimate::from(&acc))
}

/// `E‖Y − E[Y | q(X)]‖²` for the partition `cell_of`.
pub fn estimate_mmse_k<M, F>(
    model: &M,
    cell_of: F,
    cells: usize,
    samples: usize,
    seed: u64,
) -> Result<Estimate>
where
    M: JointModel,
    F: Fn(&M::Obs, &[f64]) -> usize + Sync,
{
    Ok(Estimate::from(
        &run_two_pass(model, cell_of, cells, samples, seed, None)?.mmse_k,
    ))
}

/// `E‖η(X) − E[η(X) | q(X)]‖²` for the partition `cell_of`.
pub fn estimate_regret_direct<M, F>(
    model: &M,
    cell_of: F,
    cells: usize,
    samples: usize,
    seed: u64,
) -> Result<Estimate>
where
    M: JointModel,
    F: Fn(&M::Obs, &[f64]) -> usize + Sync,
{
    Ok(Estimate::from(
        &run_two_pass(model, cell_of, cells, samples, seed, None)?.regret,
    ))
}

/// Regret of the cell function `x ↦ nearest codepoint to η(x)`.
pub fn regret_via_eta_quantization<M: JointModel>(
    model: &M,
    codebook: &Codebook,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    check_codebook_dim(model, codebook)?;
    estimate_regret_direct(
        model,
        |_, eta| codebook.quantize(eta),
        codebook.len(),
        samples,
        seed,
    )
}

/// `mmse_k − mmse − regret` with its combined SE.
pub fn decomposition_residual<M, F>(
    model: &M,
    cell_of: F,
    cells: usize,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)>
where
    M: JointModel,
    F: Fn(&M::Obs, &[f64]) -> usize + Sync,
{
    Ok(run_two_pass(model, cell_of, cells, samples, seed, None)?.residual())
}

/// Distortion `E e_C(Y)` of a 1-D codebook under the model's prior, by
/// Simpson quadrature on each Voronoi interval.
pub fn distortion_of_y(codebook: &Codebook, model: &ScalarChannelModel) -> Result<f64> {
    let a = model.half_width();
    distortion_on(codebook, |y| model.prior_density(y), -a, a)
}

/// Same as [`distortion_of_y`] for an arbitrary density on `[-A, A]`.
pub fn distortion_of_y_density(
    codebook: &Codebook,
    density: impl Fn(f64) -> f64,
    half_width: f64,
) -> Result<f64> {
    distortion_on(codebook, density, -half_width, half_width)
}

/// Serialized summary of one regret run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretEstimate {
    pub mmse: f64,
    pub mmse_se: f64,
    pub mmse_k: f64,
    pub mmse_k_se: f64,
    pub regret_direct: f64,
    pub regret_direct_se: f64,
    pub regret_decomp: f64,
    pub n_obs: usize,
    pub k: usize,
    #[serde(rename = "N")]
    pub samples: usize,
    pub seed: u64,
}

impl RegretEstimate {
    pub fn from_parts(
        parts: &RegretParts,
        n_obs: usize,
        k: usize,
        samples: usize,
        seed: u64,
    ) -> Self {
        Self {
            mmse: parts.mmse.mean(),
            mmse_se: parts.mmse.se(),
            mmse_k: parts.mmse_k.mean(),
            mmse_k_se: parts.mmse_k.se(),
            regret_direct: parts.regret.mean(),
            regret_direct_se: parts.regret.se(),
            regret_decomp: parts.mmse_k.mean() - parts.mmse.mean(),
            n_obs,
            k,
            samples,
            seed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }
}

/// Full estimate for an `η`-space codebook.
pub fn estimate_with_codebook<M: JointModel>(
    model: &M,
    n_obs: usize,
    codebook: &Codebook,
    samples: usize,
    seed: u64,
) -> Result<RegretEstimate> {
    check_codebook_dim(model, codebook)?;
    let parts = run_two_pass(
        model,
        |_, eta| codebook.quantize(eta),
        codebook.len(),
        samples,
        seed,
        None,
    )?;
    Ok(RegretEstimate::from_parts(
        &parts,
        n_obs,
        codebook.len(),
        samples,
        seed,
    ))
}

fn check_codebook_dim<M: JointModel>(model: &M, codebook: &Codebook) -> Result<()> {
    if codebook.dim() != model.target_dim() {
        return Err(Error::invalid(format!(
            "codebook dimension {} does not match target dimension {}",
            codebook.dim(),
            model.target_dim()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinearGaussianModel, ScalarExperiment};
    use crate::quantizer::panter_dite_1d;

    fn sign(eta: &[f64]) -> usize {
        usize::from(eta[0] >= 0.0)
    }

    #[test]
    fn noiseless_channel_has_zero_mmse() {
        let m = ScalarChannelModel::noiseless(1.0).unwrap();
        let e = ScalarExperiment::new(&m, 3).unwrap();
        let est = estimate_mmse(&e, 5000, 1).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.se, 0.0);
    }

    #[test]
    fn single_cell_gives_prior_variance_and_var_eta() {
        let m = LinearGaussianModel::scalar(1.0, 1.0, 1.0).unwrap();
        let parts = run_two_pass(&m, |_, _| 0, 1, 200_000, 3, None).unwrap();
        assert!((parts.mmse_k.mean() - 1.0).abs() <= 3.0 * parts.mmse_k.se());
        assert!((parts.regret.mean() - 0.5).abs() <= 3.0 * parts.regret.se());
        let (r, se) = parts.residual();
        assert!(r.abs() <= 3.0 * se);
    }

    #[test]
    fn sign_quantizer_closed_forms() {
        let m = LinearGaussianModel::scalar(1.0, 1.0, 1.0).unwrap();
        let parts = run_two_pass(&m, |_, eta| sign(eta), 2, 200_000, 5, None).unwrap();
        let reg = 0.5 - 1.0 / std::f64::consts::PI;
        assert!((parts.regret.mean() - reg).abs() <= 3.0 * parts.regret.se());
        assert!((parts.mmse_k.mean() - 0.5 - reg).abs() <= 3.0 * parts.mmse_k.se());
        for (c, s) in [(0, -1.0), (1, 1.0)] {
            assert!(
                (parts.centroids_eta.points[c][0] - s / std::f64::consts::PI.sqrt()).abs() < 0.01
            );
        }
    }

    #[test]
    fn estimates_are_bit_reproducible() {
        let m = ScalarChannelModel::uniform_gaussian(1.0, 0.5).unwrap();
        let e = ScalarExperiment::new(&m, 2).unwrap();
        let cb = panter_dite_1d(|y| m.prior_density(y), -1.0, 1.0, 4).unwrap();
        let a = estimate_with_codebook(&e, 2, &cb, 10_000, 77).unwrap();
        let b = estimate_with_codebook(&e, 2, &cb, 10_000, 77).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let c = estimate_with_codebook(&e, 2, &cb, 10_000, 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn json_keys() {
        let m = LinearGaussianModel::scalar(1.0, 1.0, 1.0).unwrap();
        let cb = Codebook::scalar(vec![-0.5, 0.5]).unwrap();
        let est = estimate_with_codebook(&m, 1, &cb, 2000, 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&est.to_json()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        for k in [
            "mmse",
            "mmse_se",
            "mmse_k",
            "mmse_k_se",
            "regret_direct",
            "regret_direct_se",
            "regret_decomp",
            "n_obs",
            "k",
            "N",
            "seed",
        ] {
            assert!(keys.contains(&k), "missing {k}");
        }
        assert_eq!(keys.len(), 11);
    }

    #[test]
    fn distortion_examples() {
        let m = ScalarChannelModel::uniform_gaussian(1.0, 1.0).unwrap();
        let two = Codebook::scalar(vec![-0.5, 0.5]).unwrap();
        assert_close!(distortion_of_y(&two, &m).unwrap(), 1.0 / 12.0, 1e-9);
        let one = Codebook::scalar(vec![0.0]).unwrap();
        assert_close!(distortion_of_y(&one, &m).unwrap(), 1.0 / 3.0, 1e-12);
        let pd = panter_dite_1d(|y| m.prior_density(y), -1.0, 1.0, 16).unwrap();
        let d = distortion_of_y(&pd, &m).unwrap();
        assert!((d * 3.0 * 256.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn rejects_small_samples_and_bad_cells() {
        let m = LinearGaussianModel::scalar(1.0, 1.0, 1.0).unwrap();
        assert!(estimate_mmse(&m, 999, 0).is_err());
        assert!(matches!(
            run_two_pass(&m, |_, _| 3, 2, 2000, 0, None),
            Err(Error::InvalidInput(_))
        ));
    }
}

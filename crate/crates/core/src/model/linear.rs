use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{JointModel, KnownMoments};
use crate::error::{Error, Result};
use crate::numeric::StreamRng;

/// `Y ~ N(0, Σ_Y)`, `X = H Y + W`, `W ~ N(0, Σ_W)` independent of `Y`.
/// The regression function is linear, `η(x) = A x` with
/// `A = Σ_Y Hᵀ (H Σ_Y Hᵀ + Σ_W)⁻¹`.
#[derive(Debug, Clone)]
pub struct LinearGaussianModel {
    sigma_y: DMatrix<f64>,
    h: DMatrix<f64>,
    sigma_w: DMatrix<f64>,
    a: DMatrix<f64>,
    sigma_eta: DMatrix<f64>,
    // Row-major lower Cholesky factors for sampling.
    chol_y: Vec<f64>,
    chol_w: Vec<f64>,
}

impl LinearGaussianModel {
    pub fn new(sigma_y: DMatrix<f64>, h: DMatrix<f64>, sigma_w: DMatrix<f64>) -> Result<Self> {
        let p = sigma_y.nrows();
        let n = sigma_w.nrows();
        if p == 0 || n == 0 {
            return Err(Error::invalid("dimensions must be at least 1"));
        }
        if sigma_y.ncols() != p || sigma_w.ncols() != n || h.nrows() != n || h.ncols() != p {
            return Err(Error::invalid(format!(
                "shape mismatch: Σ_Y {}x{}, H {}x{}, Σ_W {}x{}",
                sigma_y.nrows(),
                sigma_y.ncols(),
                h.nrows(),
                h.ncols(),
                sigma_w.nrows(),
                sigma_w.ncols()
            )));
        }
        if sigma_y
            .iter()
            .chain(h.iter())
            .chain(sigma_w.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::invalid("non-finite matrix entry"));
        }
        check_symmetric(&sigma_y, "Σ_Y")?;
        check_symmetric(&sigma_w, "Σ_W")?;
        let ly = cholesky(&sigma_y, "Σ_Y")?;
        let lw = cholesky(&sigma_w, "Σ_W")?;

        let hs = &h * &sigma_y;
        let s = &hs * h.transpose() + &sigma_w;
        let s_chol = cholesky(&s, "H Σ_Y Hᵀ + Σ_W")?;
        // A = Σ_Y Hᵀ S⁻¹, i.e. Aᵀ = S⁻¹ H Σ_Y.
        let a = s_chol.solve(&hs).transpose();
        let sigma_eta = &a * &s * a.transpose();
        let sigma_eta = 0.5 * (&sigma_eta + sigma_eta.transpose());

        Ok(Self {
            chol_y: row_major(&ly.l()),
            chol_w: row_major(&lw.l()),
            sigma_y,
            h,
            sigma_w,
            a,
            sigma_eta,
        })
    }

    /// `p = n = 1` with the given variances and gain.
    pub fn scalar(var_y: f64, gain: f64, var_w: f64) -> Result<Self> {
        Self::new(
            DMatrix::from_element(1, 1, var_y),
            DMatrix::from_element(1, 1, gain),
            DMatrix::from_element(1, 1, var_w),
        )
    }

    /// `Σ_Y = H = Σ_W = I_p`.
    pub fn identity(p: usize) -> Result<Self> {
        Self::new(
            DMatrix::identity(p, p),
            DMatrix::identity(p, p),
            DMatrix::identity(p, p),
        )
    }

    /// Builds from row lists, as read from a config file.
    pub fn from_rows(sigma_y: &[Vec<f64>], h: &[Vec<f64>], sigma_w: &[Vec<f64>]) -> Result<Self> {
        Self::new(
            matrix(sigma_y, "Σ_Y")?,
            matrix(h, "H")?,
            matrix(sigma_w, "Σ_W")?,
        )
    }

    pub fn obs_dim(&self) -> usize {
        self.sigma_w.nrows()
    }

    pub fn dim(&self) -> usize {
        self.sigma_y.nrows()
    }

    pub fn sigma_y(&self) -> &DMatrix<f64> {
        &self.sigma_y
    }

    pub fn channel(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn sigma_w(&self) -> &DMatrix<f64> {
        &self.sigma_w
    }

    /// `A` in `η(x) = A x`.
    pub fn regression_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// `Cov(η(X)) = A (H Σ_Y Hᵀ + Σ_W) Aᵀ`.
    pub fn eta_covariance(&self) -> &DMatrix<f64> {
        &self.sigma_eta
    }

    /// `tr(Σ_Y − A H Σ_Y)`.
    pub fn closed_form_mmse(&self) -> f64 {
        let err = &self.sigma_y - &self.a * &self.h * &self.sigma_y;
        err.trace().max(0.0)
    }

    /// Rank of `A`: `η(X)` lives in a subspace of this dimension, which is
    /// the `p` that governs the quantization rate.
    pub fn effective_dim(&self) -> usize {
        let svd = self.a.clone().svd(false, false);
        let max = svd.singular_values.max();
        let tol = max * 1e-10 * self.a.nrows().max(self.a.ncols()) as f64;
        svd.singular_values.iter().filter(|&&s| s > tol).count()
    }

    pub fn eta(&self, x: &[f64]) -> Vec<f64> {
        let (p, n) = (self.a.nrows(), self.a.ncols());
        (0..p)
            .map(|i| (0..n).map(|j| self.a[(i, j)] * x[j]).sum())
            .collect()
    }
}

impl JointModel for LinearGaussianModel {
    type Obs = Vec<f64>;

    fn target_dim(&self) -> usize {
        self.dim()
    }

    fn sample(&self, rng: &mut StreamRng) -> (Vec<f64>, Vec<f64>) {
        let (p, n) = (self.dim(), self.obs_dim());
        let y = lower_times_normal(&self.chol_y, p, rng);
        let w = lower_times_normal(&self.chol_w, n, rng);
        let x = (0..n)
            .map(|i| w[i] + (0..p).map(|j| self.h[(i, j)] * y[j]).sum::<f64>())
            .collect();
        (x, y)
    }

    fn regression(&self, x: &Vec<f64>) -> Result<Vec<f64>> {
        Ok(self.eta(x))
    }

    /// `η(X) ~ N(0, Σ_η)`. `E‖η‖²` and `E‖η‖⁴` follow from Gaussian moment
    /// identities; `E‖η‖` is closed-form when `Σ_η` is isotropic. `‖η‖` is
    /// a `√λ_max`-Lipschitz function of a standard Gaussian, so its
    /// centered log-MGF is at most `λ² λ_max / 2`, giving `v = λ_max`.
    fn known_moments(&self) -> KnownMoments {
        let s = &self.sigma_eta;
        let tr = s.trace();
        let tr_sq = (s * s).trace();
        let eig = s.clone().symmetric_eigen().eigenvalues;
        let lmax = eig.max();
        let lmin = eig.min();
        let p = s.nrows();
        let e1 = if lmax - lmin <= 1e-12 * lmax.abs().max(1e-300) {
            Some(lmax.max(0.0).sqrt() * chi_mean(p))
        } else {
            None
        };
        KnownMoments {
            e1,
            e2: Some(tr),
            e4: Some(tr * tr + 2.0 * tr_sq),
            subgaussian_v: Some(lmax),
            mmse: Some(self.closed_form_mmse()),
        }
    }
}

/// Free-function form of [`LinearGaussianModel::closed_form_mmse`].
pub fn closed_form_mmse(model: &LinearGaussianModel) -> f64 {
    model.closed_form_mmse()
}

/// `E[χ_p]`, via `E χ_{p+2} = E χ_p · (p+1)/p`.
fn chi_mean(p: usize) -> f64 {
    let mut m = if p % 2 == 1 {
        (2.0 / std::f64::consts::PI).sqrt()
    } else {
        (std::f64::consts::PI / 2.0).sqrt()
    };
    let mut q = if p % 2 == 1 { 1 } else { 2 };
    while q < p {
        m *= (q + 1) as f64 / q as f64;
        q += 2;
    }
    m
}

fn lower_times_normal(l: &[f64], dim: usize, rng: &mut StreamRng) -> Vec<f64> {
    let z: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    (0..dim)
        .map(|i| (0..=i).map(|j| l[i * dim + j] * z[j]).sum())
        .collect()
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    (0..r)
        .flat_map(|i| (0..c).map(move |j| (i, j)))
        .map(|ij| m[ij])
        .collect()
}

fn check_symmetric(m: &DMatrix<f64>, name: &str) -> Result<()> {
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::invalid(format!("{name} is not symmetric")));
    }
    Ok(())
}

fn cholesky(m: &DMatrix<f64>, name: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone())
        .ok_or_else(|| Error::LinearAlgebra(format!("{name} is not positive definite")))
}

fn matrix(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::invalid(format!(
            "{name} must be a nonempty rectangular matrix"
        )));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{stream_rng, MeanAcc};

    #[test]
    fn scalar_wiener_mmse() {
        let m = LinearGaussianModel::scalar(1.0, 1.0, 1.0).unwrap();
        assert_close!(m.closed_form_mmse(), 0.5, 1e-15);
        assert_close!(m.regression_matrix()[(0, 0)], 0.5, 1e-15);
    }

    #[test]
    fn noiseless_and_useless_limits() {
        let m = LinearGaussianModel::scalar(1.0, 1.0, 1e-12).unwrap();
        assert!(m.closed_form_mmse() <= 1e-10);
        let m = LinearGaussianModel::new(
            DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]),
            DMatrix::zeros(3, 2),
            DMatrix::identity(3, 3),
        )
        .unwrap();
        assert_close!(m.closed_form_mmse(), 3.0, 1e-12);
        assert_eq!(m.effective_dim(), 0);
    }

    #[test]
    fn rejects_indefinite_noise() {
        let r = LinearGaussianModel::scalar(1.0, 1.0, -1.0);
        assert!(matches!(r, Err(Error::LinearAlgebra(_))));
    }

    #[test]
    fn identity_model_moments() {
        let m = LinearGaussianModel::identity(2).unwrap();
        let km = m.known_moments();
        assert_close!(km.e1.unwrap(), std::f64::consts::PI.sqrt() / 2.0, 1e-14);
        assert_close!(km.e2.unwrap(), 1.0, 1e-14);
        assert_close!(km.e4.unwrap(), 2.0, 1e-14);
        assert_close!(km.subgaussian_v.unwrap(), 0.5, 1e-14);
        assert_close!(km.mmse.unwrap(), 1.0, 1e-14);
        assert_eq!(m.effective_dim(), 2);
    }

    #[test]
    fn chi_means() {
        assert_close!(chi_mean(1), (2.0 / std::f64::consts::PI).sqrt(), 1e-15);
        // E χ_3 = 2√(2/π)
        assert_close!(
            chi_mean(3),
            2.0 * (2.0 / std::f64::consts::PI).sqrt(),
            1e-15
        );
    }

    #[test]
    fn regression_matches_monte_carlo_centroids() {
        // Regress Y on X by least squares over 10^5 draws; the slope must
        // match A for a correlated 2-D model.
        let m = LinearGaussianModel::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 0.5]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 1.0]),
            DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.0, 0.6]),
        )
        .unwrap();
        let mut rng = stream_rng(17, 0);
        let mut xx = DMatrix::<f64>::zeros(2, 2);
        let mut yx = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..100_000 {
            let (x, y) = m.sample(&mut rng);
            for i in 0..2 {
                for j in 0..2 {
                    xx[(i, j)] += x[i] * x[j];
                    yx[(i, j)] += y[i] * x[j];
                }
            }
        }
        let fitted = yx * xx.try_inverse().unwrap();
        assert!((fitted - m.regression_matrix()).amax() < 0.02);
    }

    #[test]
    fn sampled_eta_second_moment() {
        let m = LinearGaussianModel::scalar(1.0, 1.0, 1.0).unwrap();
        let mut rng = stream_rng(2, 0);
        let acc: MeanAcc = (0..200_000)
            .map(|_| {
                let (x, _) = m.sample(&mut rng);
                m.eta(&x)[0].powi(2)
            })
            .collect();
        assert!((acc.mean() - 0.5).abs() <= 3.0 * acc.se());
    }
}

use quantized_mmse::bounds::{
    corollary_rhs, corollary_rhs_weak, moment_radius, thm1_rhs, thm1_rhs_gaussian,
    thm2_bound_moment, thm2_bound_subgaussian, weakened_thm2,
};
use quantized_mmse::model::{JointModel, LinearGaussianModel, ScalarChannelModel};

/// Evaluates every closed-form regret bound at unit constants.
fn main() -> quantized_mmse::Result<()> {
    let m = ScalarChannelModel::uniform_gaussian(1.0, 0.5)?;
    let (n, k) = (100, 8);
    let delta = 1.0 / k as f64;
    let e_inv_sqrt_i = m.mean_inv_sqrt_fisher()?;
    let mmse = 0.0025;

    println!("scalar, n = {n}, k = {k}");
    println!(
        "  Δ-form                 {:.4e}",
        thm1_rhs(1.0, delta, n, e_inv_sqrt_i, mmse)
    );
    println!(
        "  Δ-form, gaussian noise {:.4e}",
        thm1_rhs_gaussian(1.0, delta, n, 0.5)
    );
    println!(
        "  rate form              {:.4e}",
        corollary_rhs(k, n, e_inv_sqrt_i, mmse, 1.0)
    );
    println!(
        "  rate form, weak        {:.4e}",
        corollary_rhs_weak(k, mmse, 1.0)
    );

    let lg = LinearGaussianModel::identity(2)?;
    let km = lg.known_moments();
    let (e1, e2, e4, v) = (
        km.e1.unwrap(),
        km.e2.unwrap(),
        km.e4.unwrap(),
        km.subgaussian_v.unwrap(),
    );
    println!("\nvector, p = 2");
    println!(
        "{:>6} {:>10} {:>8} {:>10} {:>8} {:>10}",
        "k", "moment", "r", "subgauss", "r*", "weakened"
    );
    for k in [16, 64, 256, 1024, 4096] {
        let (sub, r_star) = thm2_bound_subgaussian(e1, e4, v, k, 2, 1.0, 1.0)?;
        println!(
            "{k:>6} {:>10.4e} {:>8.3} {sub:>10.4e} {r_star:>8.3} {:>10.4e}",
            thm2_bound_moment(e2, e4, k, 2, 1.0),
            moment_radius(e2, e4, k, 2),
            weakened_thm2(k as f64, 2, 1.0)?
        );
    }
    Ok(())
}

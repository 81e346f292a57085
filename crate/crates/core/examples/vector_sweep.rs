//! Covering-quantizer regret for a two-dimensional linear-Gaussian model,
//! with the subgaussian bound's constants fitted at `k = 16` and frozen.

use quantized_mmse::bounds::BoundConfig;
use quantized_mmse::experiments::{fit_loglog_slope, sweep_vector_calibrated, RPolicy};
use quantized_mmse::model::LinearGaussianModel;

fn main() -> quantized_mmse::Result<()> {
    let m = LinearGaussianModel::identity(2)?;
    let ks = [16, 32, 64, 128, 256];
    let (rows, (c1, c2)) = sweep_vector_calibrated(
        &m,
        "identity-2",
        &ks,
        100_000,
        6,
        RPolicy::Optimized,
        16,
        &BoundConfig::default(),
    )?;
    println!("c1 = {c1:.4}, c2 = {c2:.4}");
    println!(
        "{:>5} {:>7} {:>7} {:>10} {:>10} {:>10}",
        "k", "r", "ε", "regret", "overflow", "bound"
    );
    for r in &rows {
        println!(
            "{:>5} {:>7.3} {:>7.3} {:>10.3e} {:>10.3e} {:>10.3e}",
            r.k, r.radius, r.eps, r.regret, r.regret_overflow, r.bound
        );
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.k as f64, r.regret)).collect();
    println!(
        "slope {:.3} (rate k^(-2/p) = k^-1 up to log factors)",
        fit_loglog_slope(&pts)?.0
    );
    Ok(())
}

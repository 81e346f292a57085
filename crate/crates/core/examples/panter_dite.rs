//! Companding codebooks and their high-resolution distortion.
//!
//! For a density `f` on `[−A, A]` the optimal point density is proportional
//! to `f^{1/3}`, and the distortion approaches
//! `(∫ f^{1/3})³ / (12 k²)`. The uniform prior gives exactly `A² / (3k²)`.

use quantized_mmse::experiments::fit_loglog_slope;
use quantized_mmse::model::ScalarChannelModel;
use quantized_mmse::quantizer::panter_dite_1d;
use quantized_mmse::regret::distortion_of_y;

fn main() -> quantized_mmse::Result<()> {
    let cosine = ScalarChannelModel::cosine_gaussian(1.0, 0.1)?;
    let uniform = ScalarChannelModel::uniform_gaussian(1.0, 0.1)?;
    let integral: f64 = {
        let steps = 20_000;
        let h = 2.0 / steps as f64;
        (0..steps)
            .map(|i| cosine.prior_density(-1.0 + (i as f64 + 0.5) * h).cbrt() * h)
            .sum()
    };

    let mut pts = Vec::new();
    println!(
        "{:>5} {:>12} {:>12} {:>12}",
        "k", "D(cosine)", "asymptote", "D(uniform)"
    );
    for k in [4, 8, 16, 32, 64, 128] {
        let d = distortion_of_y(
            &panter_dite_1d(|y| cosine.prior_density(y), -1.0, 1.0, k)?,
            &cosine,
        )?;
        let du = distortion_of_y(
            &panter_dite_1d(|y| uniform.prior_density(y), -1.0, 1.0, k)?,
            &uniform,
        )?;
        let asym = integral.powi(3) / (12.0 * (k * k) as f64);
        println!("{k:>5} {d:>12.4e} {asym:>12.4e} {du:>12.4e}");
        pts.push((k as f64, d));
    }
    let (slope, _, _) = fit_loglog_slope(&pts)?;
    println!("log-log slope {slope:.3}, expected −2");
    Ok(())
}

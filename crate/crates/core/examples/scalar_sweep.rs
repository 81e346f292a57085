use quantized_mmse::bounds::BoundConfig;
use quantized_mmse::experiments::{calibrate_scalar, csv_string, fit_loglog_slope, Regime};
use quantized_mmse::model::ScalarChannelModel;

// A small (n, k) grid for the gaussian channel with the corollary constant
// fitted on one cell. Quantization dominates once n exceeds k².
fn main() -> quantized_mmse::Result<()> {
    let m = ScalarChannelModel::uniform_gaussian(1.0, 0.5)?;
    let mut rows = quantized_mmse::experiments::sweep_scalar(
        &m,
        "uniform-gaussian",
        &[2, 4, 8, 16],
        &[4, 100],
        50_000,
        2024,
        &BoundConfig::default(),
    )?;
    let c = calibrate_scalar(&mut rows, 100, 4)?;
    print!("{}", csv_string(&rows));
    println!("\nfitted c = {c:.4}");

    for n in [4, 100] {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.n == n && r.regime == Regime::QuantizationLimited)
            .map(|r| (r.k as f64, r.regret))
            .collect();
        if pts.len() >= 2 {
            println!(
                "n={n}: slope over quantization-limited cells {:.3}",
                fit_loglog_slope(&pts)?.0
            );
        }
    }
    Ok(())
}

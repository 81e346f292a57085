//! How quickly the posterior concentrates: Monte Carlo summaries of the
//! residual `Z_n = η − Y − (score average)` against the event radius
//! `L0 (log n / n)^{1/4}`.

use quantized_mmse::bounds::bvm_diagnostics;
use quantized_mmse::model::ScalarChannelModel;

fn main() -> quantized_mmse::Result<()> {
    for (name, m) in [
        ("gaussian", ScalarChannelModel::uniform_gaussian(1.0, 0.5)?),
        ("logistic", ScalarChannelModel::uniform_logistic(1.0, 0.3)?),
    ] {
        println!("{name}");
        println!(
            "{:>6} {:>10} {:>10} {:>10} {:>9}",
            "n", "E|Z|", "E|η−Y|", "p99", "coverage"
        );
        for n in [10, 30, 100, 300] {
            let d = bvm_diagnostics(&m, n, 20_000, 5, 1.0)?;
            println!(
                "{n:>6} {:>10.3e} {:>10.3e} {:>10.3} {:>9.4}",
                d.mean_abs_z, d.mean_abs_error, d.scaled_z_p99, d.coverage
            );
        }
    }
    Ok(())
}

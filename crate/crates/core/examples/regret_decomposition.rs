//! The two-pass engine on one codebook: cell centroids from a first batch
//! of draws, then `mmse`, `mmse_k` and the regret `E‖η − ĉ_η‖²` on a
//! fresh batch. Their difference `mmse_k − mmse − regret` should vanish up
//! to Monte Carlo error.

use quantized_mmse::model::{ScalarChannelModel, ScalarExperiment};
use quantized_mmse::quantizer::panter_dite_1d;
use quantized_mmse::regret::{estimate_with_codebook, run_two_pass};

fn main() -> quantized_mmse::Result<()> {
    let m = ScalarChannelModel::uniform_gaussian(1.0, 0.3)?;
    let e = ScalarExperiment::new(&m, 8)?;
    let samples = 200_000;

    println!(
        "{:>4} {:>10} {:>10} {:>10} {:>10}",
        "k", "mmse", "mmse_k", "regret", "residual"
    );
    for k in [2, 4, 8, 16, 32] {
        let cb = panter_dite_1d(|y| m.prior_density(y), -1.0, 1.0, k)?;
        let parts = run_two_pass(&e, |_, eta| cb.quantize(eta), cb.len(), samples, 21, None)?;
        let (res, se) = parts.residual();
        println!(
            "{k:>4} {:>10.3e} {:>10.3e} {:>10.3e} {:>+10.1e} ±{se:.1e}",
            parts.mmse.mean(),
            parts.mmse_k.mean(),
            parts.regret.mean(),
            res
        );
    }

    let cb = panter_dite_1d(|y| m.prior_density(y), -1.0, 1.0, 8)?;
    println!(
        "\n{}",
        estimate_with_codebook(&e, 8, &cb, samples, 21)?.to_json()
    );
    Ok(())
}

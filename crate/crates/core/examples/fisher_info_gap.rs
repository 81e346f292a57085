//! Fisher information of the noise families and the gap between the Monte
//! Carlo mmse and the information lower bound `E[1/I(Y)] / n`.

use quantized_mmse::bounds::info_inequality_gap;
use quantized_mmse::model::{ScalarChannelModel, ScalarExperiment};
use quantized_mmse::regret::estimate_mmse;

fn main() -> quantized_mmse::Result<()> {
    let g = ScalarChannelModel::uniform_gaussian(1.0, 0.5)?;
    let l = ScalarChannelModel::uniform_logistic(1.0, 0.3)?;
    // Location families: I = 1/σ² for gaussian noise, 1/(3s²) for logistic.
    println!(
        "I(0): gaussian {:.4}, logistic {:.4}",
        g.fisher(0.0)?,
        l.fisher(0.0)?
    );

    for (name, m) in [("gaussian", &g), ("logistic", &l)] {
        println!("\n{name}: E[1/I] = {:.4}", m.mean_inv_fisher()?);
        for n in [5, 20, 80] {
            let est = estimate_mmse(&ScalarExperiment::new(m, n)?, 100_000, 8)?;
            let gap = info_inequality_gap(m, n, est.value)?;
            println!(
                "  n={n:>3}: mmse {:.4e} ± {:.1e}, gap {gap:+.3e}",
                est.value, est.se
            );
        }
    }
    Ok(())
}

//! Posterior means `E[Y | X₁..Xₙ]` for the bundled scalar channels.

use quantized_mmse::model::ScalarChannelModel;

fn main() -> quantized_mmse::Result<()> {
    let models = [
        (
            "uniform prior, gaussian noise",
            ScalarChannelModel::uniform_gaussian(1.0, 0.5)?,
        ),
        (
            "cosine prior, gaussian noise",
            ScalarChannelModel::cosine_gaussian(1.0, 0.5)?,
        ),
        (
            "uniform prior, logistic noise",
            ScalarChannelModel::uniform_logistic(1.0, 0.3)?,
        ),
    ];
    let xs = [0.9, 1.1, 0.7, 1.4];
    for (name, m) in &models {
        print!("{name:32}");
        for n in 1..=xs.len() {
            print!(" n={n}: {:+.4}", m.posterior_mean(&xs[..n])?);
        }
        println!();
    }

    // Far outside the support the estimate saturates at the edge.
    let m = &models[0].1;
    println!("x = 25 gives {:.6}", m.posterior_mean(&[25.0])?);
    Ok(())
}

use quantized_mmse::model::ScalarChannelModel;
use quantized_mmse::quantizer::{delta, distortion_on, lloyd_max_1d, panter_dite_1d};

// Lloyd-Max codebooks for the raised-cosine prior, compared with the
// companding (Panter-Dite) start they refine.
fn main() -> quantized_mmse::Result<()> {
    let m = ScalarChannelModel::cosine_gaussian(1.0, 0.1)?;
    let f = |y: f64| m.prior_density(y);
    println!(
        "{:>4} {:>12} {:>12} {:>8}",
        "k", "D(lloyd)", "D(companding)", "Δ"
    );
    for k in [2, 4, 8, 16, 32] {
        let lloyd = lloyd_max_1d(f, -1.0, 1.0, k, 1e-10, 10_000)?;
        let pd = panter_dite_1d(f, -1.0, 1.0, k)?;
        println!(
            "{k:>4} {:>12.4e} {:>12.4e} {:>8.4}",
            distortion_on(&lloyd, f, -1.0, 1.0)?,
            distortion_on(&pd, f, -1.0, 1.0)?,
            delta(&lloyd, 1.0)?
        );
    }
    let cb = lloyd_max_1d(f, -1.0, 1.0, 4, 1e-10, 10_000)?;
    println!("\nk = 4 codebook:\n{}", cb.to_text());
    Ok(())
}

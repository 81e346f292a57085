//! Grid covering of a Euclidean ball with an overflow cell, plus a random
//! audit that every point of the ball lands within `ε` of its center.

use quantized_mmse::model::sq_dist;
use quantized_mmse::numeric::stream_rng;
use quantized_mmse::quantizer::{covering_codebook, covering_constant, sample_ball};

fn main() -> quantized_mmse::Result<()> {
    let r = 2.0;
    println!(
        "{:>2} {:>5} {:>6} {:>8} {:>10} {:>9}",
        "p", "k", "cells", "ε", "c·r·k^-1/p", "worst"
    );
    for p in 1..=3 {
        for k in [16, 64, 256, 1024] {
            let cq = covering_codebook(p, r, k)?;
            let mut rng = stream_rng(11, (p * 10_000 + k) as u64);
            let mut v = vec![0.0; p];
            let mut worst = 0.0f64;
            for _ in 0..20_000 {
                sample_ball(&mut rng, r, &mut v);
                let j = cq.quantize(&v);
                worst = worst.max(sq_dist(cq.centers().point(j), &v).sqrt());
            }
            let envelope = covering_constant(p, k) * r * (k as f64).powf(-1.0 / p as f64);
            println!(
                "{p:>2} {k:>5} {:>6} {:>8.4} {envelope:>10.4} {worst:>9.4}",
                cq.len(),
                cq.eps()
            );
        }
    }

    let cq = covering_codebook(2, r, 16)?;
    println!(
        "\npoint (5, 0) goes to cell {} of {} (overflow)",
        cq.quantize(&[5.0, 0.0]),
        cq.cells()
    );
    Ok(())
}

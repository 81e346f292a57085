//! Estimation of `Y` from a `k`-ary quantization of `X`: quantizer design on
//! the regression function `η(x) = E[Y | X = x]`, Monte Carlo estimates of
//! the MMSE regret due to quantization, and evaluators for the
//! nonasymptotic bounds that control it.
//!
//! The regret of a quantizer `q` is `E‖η(X) − E[Y | q(X)]‖²`; the best `q`
//! quantizes `η(X)` directly, which is why every design routine here works
//! in `η`-space.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[cfg(test)]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b, tol): (f64, f64, f64) = ($a, $b, $tol);
        assert!(
            (a - b).abs() <= tol,
            "{} = {a} vs {} = {b} (tol {tol})",
            stringify!($a),
            stringify!($b)
        );
    }};
}

pub mod bounds;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod model;
pub mod numeric;
pub mod quantizer;
pub mod regret;

pub use error::{Error, Result};

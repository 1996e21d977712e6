//! Shared numerical building blocks.

pub mod laplace;
pub mod quadrature;
pub mod rng;
pub mod special;

pub use laplace::{laplace_invert, EulerInversion};
pub use quadrature::{integrate, Adaptive, QuadratureRule, RuleKind};
pub use rng::RngStream;
pub use special::{bessel_i, bessel_i_scaled, ln_std_normal_cdf, std_normal_cdf, std_normal_pdf};

/// Deterministic pairwise summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean and standard error (population variance over `n`) of the samples.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n;
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / n;
    (mean, (var / n).sqrt())
}

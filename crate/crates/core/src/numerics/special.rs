//! Normal distribution functions and modified Bessel functions of order 0 and 1.

use crate::error::{Error, Result};
use libm::erfc;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal cumulative distribution function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `ln Φ(x)`, accurate far into the lower tail where `Φ` underflows.
pub fn ln_std_normal_cdf(x: f64) -> f64 {
    if x > 0.0 {
        (-std_normal_cdf(-x)).ln_1p()
    } else if x > -37.0 {
        std_normal_cdf(x).ln()
    } else {
        // asymptotic Mills-ratio expansion
        let z2 = 1.0 / (x * x);
        let mut term = 1.0;
        let mut series = 1.0;
        for k in 1..12 {
            term *= -((2 * k - 1) as f64) * z2;
            series += term;
        }
        -0.5 * x * x - (-x).ln() - LN_SQRT_2PI + series.ln()
    }
}

/// Modified Bessel function of the first kind `I_k(x)` for `k ∈ {0, 1}`.
///
/// Power series summed until a term drops below `1e-16` of the partial sum.
pub fn bessel_i(k: u32, x: f64) -> Result<f64> {
    if k > 1 {
        return Err(Error::Unsupported(format!(
            "modified Bessel order {k}; only I0 and I1 are provided"
        )));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::param("x", format!("must be finite and >= 0, got {x}")));
    }
    Ok(bessel_series(k, x))
}

fn bessel_series(k: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    // n = 0 term: (x/2)^k / k!
    let mut term = if k == 0 { 1.0 } else { half };
    let mut sum = term;
    let mut n = 0u32;
    loop {
        n += 1;
        term *= q / (n as f64 * (n + k) as f64);
        sum += term;
        if term < 1e-16 * sum || n > 10_000 {
            break;
        }
    }
    sum
}

/// Exponentially scaled Bessel function `e^{-x} I_k(x)`, finite for every `x >= 0`.
pub fn bessel_i_scaled(k: u32, x: f64) -> Result<f64> {
    if k > 1 {
        return Err(Error::Unsupported(format!(
            "modified Bessel order {k}; only I0 and I1 are provided"
        )));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::param("x", format!("must be finite and >= 0, got {x}")));
    }
    if x <= 30.0 {
        return Ok(bessel_series(k, x) * (-x).exp());
    }
    // Hankel asymptotic expansion, truncated at its smallest term.
    let mu = 4.0 * (k * k) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..200 {
        let odd = (2 * j - 1) as f64;
        let next = -term * (mu - odd * odd) / (j as f64 * 8.0 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    Ok(sum / (2.0 * std::f64::consts::PI * x).sqrt())
}

/// `ln n!` via the log-gamma function.
pub fn ln_factorial(n: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

//! Numerical inversion of Laplace transforms by Euler summation on the
//! Bromwich contour (Abate–Whitt).

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Default number of Euler terms; near the double-precision optimum.
pub const DEFAULT_ORDER: usize = 15;
/// Default agreement required between order `M` and order `M - 2`.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct EulerInversion {
    pub order: usize,
    pub tolerance: f64,
}

impl Default for EulerInversion {
    fn default() -> Self {
        EulerInversion {
            order: DEFAULT_ORDER,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

fn euler_sum<F>(transform: &F, t: f64, m: usize) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    let mf = m as f64;
    let a = mf * std::f64::consts::LN_10 / 3.0;
    let mut xi = vec![1.0; 2 * m + 1];
    xi[0] = 0.5;
    let p = 0.5f64.powi(m as i32);
    xi[2 * m] = p;
    for k in 1..m {
        xi[2 * m - k] = xi[2 * m - k + 1] + p * binomial(m, k);
    }
    let mut acc = 0.0;
    for (k, x) in xi.iter().enumerate() {
        let beta = Complex64::new(a, std::f64::consts::PI * k as f64);
        let value = transform(beta / t);
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::NonFinite(format!("Laplace transform at s = {}", beta / t)));
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * x * value.re;
    }
    Ok(10f64.powf(mf / 3.0) / t * acc)
}

impl EulerInversion {
    /// Recover `f(t)` from its transform `F(s) = ∫₀^∞ e^{-st} f(t) dt`.
    ///
    /// The transform is evaluated at complex points with positive real part.
    /// The result at `order` is compared against `order - 2`; a gap larger
    /// than the tolerance (absolute, or relative to `|f|` when that exceeds
    /// one) is reported as non-convergence.
    pub fn invert<F>(&self, transform: F, t: f64) -> Result<f64>
    where
        F: Fn(Complex64) -> Complex64,
    {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::param("t", format!("must be finite and > 0, got {t}")));
        }
        if self.order < 3 {
            return Err(Error::param("order", "Euler inversion needs order >= 3"));
        }
        let hi = euler_sum(&transform, t, self.order)?;
        let lo = euler_sum(&transform, t, self.order - 2)?;
        let gap = (hi - lo).abs();
        if gap > self.tolerance * hi.abs().max(1.0) {
            return Err(Error::LaplaceNonConvergence { t, gap });
        }
        Ok(hi)
    }
}

/// Convenience wrapper around [`EulerInversion`] with the default tolerance.
pub fn laplace_invert<F>(transform: F, t: f64, order: usize) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    EulerInversion {
        order,
        ..EulerInversion::default()
    }
    .invert(transform, t)
}

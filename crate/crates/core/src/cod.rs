//! Cause-of-death split for a Gompertz trend with compound-Poisson
//! exponential shocks: accident deaths versus natural depletion.

use crate::error::{ensure_positive, Error, Result};
use crate::numerics::quadrature::{adaptive_with_breaks, graded_toward_right, Adaptive};
use crate::numerics::special::bessel_i_scaled;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodParams {
    pub age_x: f64,
    pub b: f64,
    pub c: f64,
    /// Shock arrival rate per year.
    pub lambda: f64,
    /// Rate of the exponential shock sizes.
    pub alpha: f64,
    /// Initial vitality.
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cause {
    Accident,
    Natural,
}

/// Point mass in a death-time law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub time: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CodDensity {
    /// Continuous part of the sub-density at `t`.
    pub value: f64,
    /// The atom at the shock-free death time, reported for natural deaths.
    pub atom: Option<Atom>,
}

const QUAD_TOL: f64 = 1e-9;
const SERIES_SWITCH: f64 = 1e-3;

impl CodParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("b", self.b)?;
        if !(self.c.is_finite() && self.c > 1.0) {
            return Err(Error::param("c", format!("must be > 1, got {}", self.c)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::param("lambda", format!("must be >= 0, got {}", self.lambda)));
        }
        ensure_positive("alpha", self.alpha)?;
        ensure_positive("v", self.v)?;
        if !self.age_x.is_finite() {
            return Err(Error::param("age_x", "must be finite"));
        }
        Ok(())
    }

    fn base(&self) -> f64 {
        self.b * self.c.powf(self.age_x)
    }

    /// Remaining lifetime without shocks.
    pub fn t_star(&self) -> f64 {
        let ln_c = self.c.ln();
        (self.v * ln_c / self.base()).ln_1p() / ln_c
    }

    /// Vitality left by the trend alone at time `t`, `v − Y(t)`.
    pub fn b_star(&self, t: f64) -> f64 {
        let ln_c = self.c.ln();
        self.v - self.base() * (t * ln_c).exp_m1() / ln_c
    }

    /// `αλt` and `b*` at `t`, clamping the remaining vitality at zero.
    fn shock_terms(&self, t: f64) -> (f64, f64) {
        (self.alpha * self.lambda * t, self.b_star(t).max(0.0))
    }

    /// `e^{−λt − αb*} I₀(2√(αλt b*))`.
    fn accident_kernel(&self, t: f64) -> Result<f64> {
        let (a, bs) = self.shock_terms(t);
        let z = 2.0 * (a * bs).sqrt();
        Ok((-self.lambda * t - self.alpha * bs + z).exp() * bessel_i_scaled(0, z)?)
    }

    /// `e^{−λt − αb*} √(αλt/b*) I₁(2√(αλt b*))`, continuous as `b* → 0`.
    fn natural_kernel(&self, t: f64) -> Result<f64> {
        let (a, bs) = self.shock_terms(t);
        let z = 2.0 * (a * bs).sqrt();
        let bessel_ratio = if z < SERIES_SWITCH {
            let ab = a * bs;
            a * (1.0 + ab / 2.0 + ab * ab / 12.0)
        } else {
            (a / bs).sqrt() * bessel_i_scaled(1, z)? * z.exp()
        };
        Ok((-self.lambda * t - self.alpha * bs).exp() * bessel_ratio)
    }

    fn trend_rate(&self, t: f64) -> f64 {
        self.b * self.c.powf(self.age_x + t)
    }
}

fn integrate_to_t_star<F: FnMut(f64) -> f64>(p: &CodParams, f: F) -> Result<f64> {
    let t_star = p.t_star();
    adaptive_with_breaks(
        f,
        &graded_toward_right(0.0, t_star, 12),
        Adaptive {
            abs_tol: QUAD_TOL,
            rel_tol: 1e-12,
            max_intervals: 4_000,
        },
    )
}

fn check_q(q: f64) -> Result<()> {
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::param("q", format!("must be >= 0, got {q}")));
    }
    Ok(())
}

/// `E_v[e^{−qτ_J}; τ_J < τ_Y]`, the transform of accident deaths.
pub fn cod_laplace_accident(p: &CodParams, q: f64) -> Result<f64> {
    p.validate()?;
    check_q(q)?;
    if p.lambda == 0.0 {
        return Ok(0.0);
    }
    let mut failure = None;
    let value = integrate_to_t_star(p, |t| match p.accident_kernel(t) {
        Ok(k) => p.lambda * (-q * t).exp() * k,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    })?;
    failure.map_or(Ok(value), Err)
}

/// `E_v[e^{−qτ_Y}; τ_Y < τ_J]`, the transform of natural deaths including
/// the atom `e^{−(q+λ)t*}`.
pub fn cod_laplace_natural(p: &CodParams, q: f64) -> Result<f64> {
    p.validate()?;
    check_q(q)?;
    let t_star = p.t_star();
    let atom = (-(q + p.lambda) * t_star).exp();
    if p.lambda == 0.0 {
        return Ok(atom);
    }
    let mut failure = None;
    let value = integrate_to_t_star(p, |t| match p.natural_kernel(t) {
        Ok(k) => (-q * t).exp() * p.trend_rate(t) * k,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    })?;
    failure.map_or(Ok(value + atom), Err)
}

/// Sub-density of death at `t` from the given cause.
pub fn cod_density(p: &CodParams, cause: Cause, t: f64) -> Result<CodDensity> {
    p.validate()?;
    if !(t > 0.0) {
        return Err(Error::param("t", format!("must be > 0, got {t}")));
    }
    let t_star = p.t_star();
    let inside = t < t_star;
    match cause {
        Cause::Accident => Ok(CodDensity {
            value: if inside { p.lambda * p.accident_kernel(t)? } else { 0.0 },
            atom: None,
        }),
        Cause::Natural => Ok(CodDensity {
            value: if inside && p.lambda > 0.0 {
                p.trend_rate(t) * p.natural_kernel(t)?
            } else {
                0.0
            },
            atom: Some(Atom {
                time: t_star,
                mass: (-p.lambda * t_star).exp(),
            }),
        }),
    }
}

/// `Pr_v(τ ≤ t)` for the overall death time, both causes combined.
pub fn cod_death_cdf(p: &CodParams, t: f64) -> Result<f64> {
    p.validate()?;
    if t <= 0.0 {
        return Ok(0.0);
    }
    let t_star = p.t_star();
    if t >= t_star {
        return Ok(1.0);
    }
    if p.lambda == 0.0 {
        return Ok(0.0);
    }
    let mut failure = None;
    let mass = adaptive_with_breaks(
        |s| {
            let dens = p
                .accident_kernel(s)
                .and_then(|acc| Ok(p.lambda * acc + p.trend_rate(s) * p.natural_kernel(s)?));
            dens.unwrap_or_else(|e| {
                failure.get_or_insert(e);
                0.0
            })
        },
        &[0.0, t],
        Adaptive {
            abs_tol: QUAD_TOL,
            rel_tol: 1e-12,
            max_intervals: 4_000,
        },
    )?;
    failure.map_or(Ok(mass.min(1.0)), Err)
}

/// `(Pr(accident), Pr(natural))`, which must sum to one.
pub fn prob_cause_split(p: &CodParams) -> Result<(f64, f64)> {
    let acc = cod_laplace_accident(p, 0.0)?;
    let nat = cod_laplace_natural(p, 0.0)?;
    let total = acc + nat;
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::ProbabilityExceeded(format!(
            "cause probabilities sum to {total}, not 1"
        )));
    }
    Ok((acc, nat))
}

//! First-passage densities for diffusion-only vitality: tangent
//! approximation, a three-term Durbin series, and conversion to survival.

use crate::error::{Error, Result};
use crate::model::{step_integral, TrendSpec, VitalityModel};
use crate::numerics::quadrature::{adaptive_with_breaks, graded_toward_right, try_adaptive_with_breaks, Adaptive};
use std::f64::consts::PI;

/// Boundary `H(t, v) = v − Y(t)` for a deterministic trend.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFn {
    trend: TrendSpec,
    age_x: f64,
}

impl BoundaryFn {
    pub fn new(trend: TrendSpec, age_x: f64) -> Result<Self> {
        trend.validate()?;
        if matches!(trend, TrendSpec::FrailtyScaled { .. }) {
            return Err(Error::Unsupported("boundary needs a deterministic trend".into()));
        }
        Ok(BoundaryFn { trend, age_x })
    }

    /// Boundary of a jump-free model.
    pub fn from_model(model: &VitalityModel) -> Result<Self> {
        if !model.jump.is_absent() {
            return Err(Error::Unsupported("first-passage approximations assume no jumps".into()));
        }
        Self::new(model.trend.clone(), model.age_x)
    }

    /// `H(t, v)`.
    pub fn value(&self, t: f64, v: f64) -> f64 {
        v - self.trend.cumulative(self.age_x, t).unwrap_or(f64::NAN)
    }

    /// `∂H/∂t = −μ_x(t)`.
    pub fn slope(&self, t: f64) -> f64 {
        -self.trend.rate(self.age_x, t).unwrap_or(f64::NAN)
    }

    /// `(H(u) − H(s))/(u − s) − H_t(u)` for `s < u`, free of cancellation
    /// as `s → u`.
    pub fn chord_excess(&self, u: f64, s: f64) -> f64 {
        let width = u - s;
        if !(width > 0.0) {
            return 0.0;
        }
        match &self.trend {
            TrendSpec::ConstantRate { .. } => 0.0,
            TrendSpec::PiecewiseConstant { rates } => {
                (self.trend.rate(self.age_x, u).unwrap_or(f64::NAN) * width - step_integral(rates, s, u)) / width
            }
            TrendSpec::GompertzTrend { b, c } => {
                let ln_c = c.ln();
                let h = width * ln_c;
                b * c.powf(self.age_x + s) * tilted_expm1(h) / (ln_c * width)
            }
            TrendSpec::FrailtyScaled { .. } => f64::NAN,
        }
    }

    /// True when `Y` is convex (so `H` is concave).
    pub fn is_concave(&self) -> bool {
        matches!(self.trend, TrendSpec::GompertzTrend { .. })
    }

    pub fn is_linear(&self) -> bool {
        self.trend.is_linear()
    }
}

/// `1 + (h − 1)eʰ = Σ_{n≥2} (n − 1)hⁿ/n!`.
fn tilted_expm1(h: f64) -> f64 {
    if h.abs() > 0.05 {
        return 1.0 + (h - 1.0) * h.exp();
    }
    let mut term = h;
    let mut sum = 0.0;
    for n in 2..20 {
        term *= h / n as f64;
        sum += (n - 1) as f64 * term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn check_point(sigma: f64, v: f64, t: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", format!("must be > 0, got {sigma}")));
    }
    if !(v > 0.0) {
        return Err(Error::param("v", format!("must be > 0, got {v}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("must be > 0, got {t}")));
    }
    Ok(())
}

/// `ln` of the `N(0, s)` density at `x`.
fn ln_gauss(x: f64, s: f64) -> f64 {
    -0.5 * x * x / s - 0.5 * (2.0 * PI * s).ln()
}

/// Tangent approximation `|H − tH_t| / (σ√(2πt³)) · exp(−H²/(2σ²t))`.
pub fn tangent_density(boundary: &BoundaryFn, sigma: f64, v: f64, t: f64) -> Result<f64> {
    check_point(sigma, v, t)?;
    let h = boundary.value(t, v);
    let lead = (h - t * boundary.slope(t)).abs();
    Ok(lead / (sigma * (2.0 * PI * t.powi(3)).sqrt()) * (-h * h / (2.0 * sigma * sigma * t)).exp())
}

/// Boundary in standard Brownian units, `a(t) = H(t, v)/σ`.
struct Scaled<'a> {
    boundary: &'a BoundaryFn,
    sigma: f64,
    v: f64,
}

impl Scaled<'_> {
    fn a(&self, t: f64) -> f64 {
        self.boundary.value(t, self.v) / self.sigma
    }

    fn da(&self, t: f64) -> f64 {
        self.boundary.slope(t) / self.sigma
    }

    /// `a(s)/s − a'(s)`.
    fn lead(&self, s: f64) -> f64 {
        self.a(s) / s - self.da(s)
    }

    /// `(a(u) − a(s))/(u − s) − a'(u)` for `s < u`.
    fn chord(&self, u: f64, s: f64) -> f64 {
        self.boundary.chord_excess(u, s) / self.sigma
    }

    /// `a(u) − a(s)` without subtracting two nearly equal boundaries.
    fn rise(&self, u: f64, s: f64) -> f64 {
        (self.boundary.chord_excess(u, s) + self.boundary.slope(u)) * (u - s) / self.sigma
    }
}

const Q2_TOL: f64 = 1e-8;
const Q3_TOL: f64 = 1e-6;
const GRADING_LEVELS: usize = 40;

/// Durbin series `Σ_{j≤k} (−1)^{j−1} q_j(t)` for `k ∈ {1, 2, 3}`.
pub fn durbin_density(boundary: &BoundaryFn, sigma: f64, v: f64, t: f64, k: usize) -> Result<f64> {
    check_point(sigma, v, t)?;
    if !(1..=3).contains(&k) {
        return Err(Error::param("k", format!("must be 1, 2 or 3, got {k}")));
    }
    let sc = Scaled { boundary, sigma, v };
    let a0 = sc.a(t);
    let q1 = sc.lead(t) * ln_gauss(a0, t).exp();
    if k == 1 {
        return Ok(q1);
    }
    let breaks = graded_toward_right(0.0, t, GRADING_LEVELS);
    let q2 = adaptive_with_breaks(
        |t1| {
            if t1 >= t {
                return 0.0;
            }
            let ln_f = ln_gauss(sc.a(t1), t1) + ln_gauss(sc.rise(t, t1), t - t1);
            sc.lead(t1) * sc.chord(t, t1) * ln_f.exp()
        },
        &breaks,
        Adaptive {
            abs_tol: Q2_TOL,
            rel_tol: Q2_TOL,
            max_intervals: 4_000,
        },
    )?;
    if k == 2 {
        return Ok(q1 - q2);
    }
    let inner_opts = Adaptive {
        abs_tol: Q3_TOL * 1e-2,
        rel_tol: Q3_TOL * 1e-2,
        max_intervals: 2_000,
    };
    let q3 = try_adaptive_with_breaks(
        |t1| {
            if t1 >= t {
                return Ok(0.0);
            }
            let outer_ln = ln_gauss(sc.rise(t, t1), t - t1);
            let outer = sc.chord(t, t1);
            if outer == 0.0 || outer_ln < -745.0 {
                return Ok(0.0);
            }
            let inner = adaptive_with_breaks(
                |t2| {
                    if t2 >= t1 {
                        return 0.0;
                    }
                    let ln_f = ln_gauss(sc.a(t2), t2) + ln_gauss(sc.rise(t1, t2), t1 - t2);
                    sc.lead(t2) * sc.chord(t1, t2) * ln_f.exp()
                },
                &graded_toward_right(0.0, t1, GRADING_LEVELS),
                inner_opts,
            )?;
            Ok(outer * outer_ln.exp() * inner)
        },
        &breaks,
        Adaptive {
            abs_tol: Q3_TOL,
            rel_tol: Q3_TOL,
            max_intervals: 2_000,
        },
    )?;
    Ok(q1 - q2 + q3)
}

/// Survival implied by a density on `(0, T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensitySurvival {
    pub value: f64,
    /// True when `1 − ∫ density` fell below zero and was clamped.
    pub clamped: bool,
}

/// `max(0, 1 − ∫₀ᵀ density)`; errors once the integral exceeds `1 + 1e-3`.
pub fn density_to_survival<F>(density: F, horizon: f64) -> Result<DensitySurvival>
where
    F: FnMut(f64) -> f64,
{
    if !(horizon >= 0.0) {
        return Err(Error::param("T", format!("must be >= 0, got {horizon}")));
    }
    if horizon == 0.0 {
        return Ok(DensitySurvival {
            value: 1.0,
            clamped: false,
        });
    }
    let mut breaks = vec![0.0];
    breaks.extend((1..=64).map(|i| horizon * i as f64 / 64.0));
    let mass = adaptive_with_breaks(
        density,
        &breaks,
        Adaptive {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_intervals: 8_000,
        },
    )?;
    if mass > 1.0 + 1e-3 {
        return Err(Error::ProbabilityExceeded(format!(
            "density integrates to {mass} on (0, {horizon})"
        )));
    }
    let raw = 1.0 - mass;
    Ok(DensitySurvival {
        value: raw.max(0.0),
        clamped: raw < 0.0,
    })
}

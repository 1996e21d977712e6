//! Static vitality model `V(t) = V(0) − Y(t) − W(t) − J(t)` and its
//! closed-form survival probabilities.

use crate::distributions::{InitialVitalityDist, JumpSizeDist, MixingDist};
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::numerics::quadrature::{self, Adaptive, QuadratureRule, DEFAULT_LAGUERRE_NODES};
use crate::numerics::special::{ln_std_normal_cdf, std_normal_cdf};
use serde::{Deserialize, Serialize};

/// `∫_a^b r(s) ds` for a step function with `rates[i]` on `[i, i+1)`, the
/// last rate extended to infinity.
pub(crate) fn step_integral(rates: &[f64], a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let last = rates.len() - 1;
    let mut total = 0.0;
    let mut t = a;
    while t < b {
        let i = (t.floor() as usize).min(last);
        let end = if i == last { b } else { ((i + 1) as f64).min(b) };
        total += rates[i] * (end - t);
        t = end;
    }
    total
}

fn step_rate(rates: &[f64], t: f64) -> f64 {
    let i = (t.max(0.0).floor() as usize).min(rates.len() - 1);
    rates[i]
}

/// Deterministic depletion trend `Y(t) = ∫₀ᵗ μ_x(s) ds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum TrendSpec {
    #[serde(rename = "constant")]
    ConstantRate { rate: f64 },
    /// `rates[i]` applies on `[i, i+1)` years after time 0; the last rate
    /// continues beyond the list.
    #[serde(rename = "piecewise")]
    PiecewiseConstant { rates: Vec<f64> },
    /// `μ_x(t) = b c^{x+t}`.
    #[serde(rename = "gompertz")]
    GompertzTrend { b: f64, c: f64 },
    /// `dY = Z μ_x(t) dt` with a random factor `Z`.
    #[serde(rename = "frailty")]
    FrailtyScaled { base: Box<TrendSpec>, mix: MixingDist },
}

impl TrendSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::ConstantRate { rate } => ensure_positive("trend.rate", *rate),
            Self::PiecewiseConstant { rates } => {
                if rates.is_empty() {
                    return Err(Error::param("trend.rates", "list must be non-empty"));
                }
                rates.iter().try_for_each(|r| ensure_positive("trend.rates", *r))
            }
            Self::GompertzTrend { b, c } => {
                ensure_positive("trend.b", *b)?;
                if !(c.is_finite() && *c > 1.0) {
                    return Err(Error::param("trend.c", format!("must be > 1, got {c}")));
                }
                Ok(())
            }
            Self::FrailtyScaled { base, mix } => {
                if matches!(**base, Self::FrailtyScaled { .. }) {
                    return Err(Error::param("trend.base", "frailty scaling cannot be nested"));
                }
                base.validate()?;
                mix.validate()
            }
        }
    }

    /// Depletion rate `μ_x(t)`.
    pub fn rate(&self, age_x: f64, t: f64) -> Result<f64> {
        match self {
            Self::ConstantRate { rate } => Ok(*rate),
            Self::PiecewiseConstant { rates } => Ok(step_rate(rates, t)),
            Self::GompertzTrend { b, c } => Ok(b * c.powf(age_x + t)),
            Self::FrailtyScaled { .. } => Err(frailty_needs_mixing()),
        }
    }

    /// Cumulative depletion `∫₀ᵀ μ_x(s) ds`.
    pub fn cumulative(&self, age_x: f64, horizon: f64) -> Result<f64> {
        if !(horizon >= 0.0) {
            return Err(Error::param("T", format!("must be >= 0, got {horizon}")));
        }
        match self {
            Self::ConstantRate { rate } => Ok(rate * horizon),
            Self::PiecewiseConstant { rates } => Ok(step_integral(rates, 0.0, horizon)),
            Self::GompertzTrend { b, c } => {
                let ln_c = c.ln();
                Ok(b * c.powf(age_x) * (horizon * ln_c).exp_m1() / ln_c)
            }
            Self::FrailtyScaled { .. } => Err(frailty_needs_mixing()),
        }
    }

    /// Whether `Y` is affine in `t`.
    pub fn is_linear(&self) -> bool {
        matches!(self, Self::ConstantRate { .. })
    }
}

fn frailty_needs_mixing() -> Error {
    Error::Unsupported("a frailty-scaled trend requires mixing; use survival_static".into())
}

/// Cumulative hazard `∫₀ᵀ μ_x(s) ds` of a deterministic trend.
pub fn cumulative_hazard(trend: &TrendSpec, age_x: f64, horizon: f64) -> Result<f64> {
    trend.cumulative(age_x, horizon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum DiffusionSpec {
    #[serde(rename = "none")]
    NoDiffusion,
    /// `W(t) = σ B(t)`.
    #[serde(rename = "brownian")]
    BrownianConst { sigma: f64 },
}

impl DiffusionSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::NoDiffusion => Ok(()),
            Self::BrownianConst { sigma } => ensure_positive("diffusion.sigma", *sigma),
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            Self::NoDiffusion => 0.0,
            Self::BrownianConst { sigma } => *sigma,
        }
    }
}

/// Arrival intensity `λ(t)` of the jump process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum Intensity {
    #[serde(rename = "constant")]
    ConstantIntensity { rate: f64 },
    /// `rates[i]` applies on `[i, i+1)`; the last rate continues beyond the list.
    #[serde(rename = "piecewise")]
    PiecewiseIntensity { rates: Vec<f64> },
}

impl Intensity {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::ConstantIntensity { rate } => ensure_non_negative("jump.intensity.rate", *rate),
            Self::PiecewiseIntensity { rates } => {
                if rates.is_empty() {
                    return Err(Error::param("jump.intensity.rates", "list must be non-empty"));
                }
                rates
                    .iter()
                    .try_for_each(|r| ensure_non_negative("jump.intensity.rates", *r))
            }
        }
    }

    pub fn rate_at(&self, t: f64) -> f64 {
        match self {
            Self::ConstantIntensity { rate } => *rate,
            Self::PiecewiseIntensity { rates } => step_rate(rates, t),
        }
    }

    /// `∫_a^b λ(s) ds`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            Self::ConstantIntensity { rate } => rate * (b - a).max(0.0),
            Self::PiecewiseIntensity { rates } => step_integral(rates, a, b),
        }
    }

    /// Smallest `t ≥ a` with `∫_a^t λ = mass`; `∞` when never reached.
    pub fn inverse_integral(&self, a: f64, mass: f64) -> f64 {
        match self {
            Self::ConstantIntensity { rate } => {
                if *rate > 0.0 {
                    a + mass / rate
                } else {
                    f64::INFINITY
                }
            }
            Self::PiecewiseIntensity { rates } => {
                let last = rates.len() - 1;
                let mut t = a;
                let mut left = mass;
                loop {
                    let i = (t.floor() as usize).min(last);
                    let r = rates[i];
                    if i == last {
                        return if r > 0.0 { t + left / r } else { f64::INFINITY };
                    }
                    let end = (i + 1) as f64;
                    let seg = r * (end - t);
                    if seg >= left && r > 0.0 {
                        return t + left / r;
                    }
                    left -= seg;
                    t = end;
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::ConstantIntensity { rate } => *rate == 0.0,
            Self::PiecewiseIntensity { rates } => rates.iter().all(|r| *r == 0.0),
        }
    }
}

/// Compound Poisson jump component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpSpec {
    pub intensity: Intensity,
    pub size: JumpSizeDist,
}

impl JumpSpec {
    pub fn none() -> Self {
        JumpSpec {
            intensity: Intensity::ConstantIntensity { rate: 0.0 },
            size: JumpSizeDist::Fatal,
        }
    }

    pub fn fatal(rate: f64) -> Self {
        JumpSpec {
            intensity: Intensity::ConstantIntensity { rate },
            size: JumpSizeDist::Fatal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.intensity.validate()?;
        self.size.validate()
    }

    pub fn is_absent(&self) -> bool {
        self.intensity.is_zero()
    }
}

impl Default for JumpSpec {
    fn default() -> Self {
        JumpSpec::none()
    }
}

/// Four-component vitality model for an individual aged `age_x` at time 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VitalityModel {
    pub age_x: f64,
    pub initial: InitialVitalityDist,
    pub trend: TrendSpec,
    pub diffusion: DiffusionSpec,
    #[serde(default)]
    pub jump: JumpSpec,
}

impl VitalityModel {
    /// Pure-trend model with no diffusion and no jumps.
    pub fn pure_trend(age_x: f64, initial: InitialVitalityDist, trend: TrendSpec) -> Self {
        VitalityModel {
            age_x,
            initial,
            trend,
            diffusion: DiffusionSpec::NoDiffusion,
            jump: JumpSpec::none(),
        }
    }

    pub fn gompertz(age_x: f64, b: f64, c: f64) -> Self {
        Self::pure_trend(
            age_x,
            InitialVitalityDist::Exponential { rate: 1.0 },
            TrendSpec::GompertzTrend { b, c },
        )
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("age_x", self.age_x)?;
        self.initial.validate()?;
        self.trend.validate()?;
        self.diffusion.validate()?;
        self.jump.validate()
    }

    pub fn with_initial(&self, initial: InitialVitalityDist) -> Self {
        VitalityModel {
            initial,
            ..self.clone()
        }
    }

    pub fn conditional(&self, v: f64) -> Self {
        self.with_initial(InitialVitalityDist::Degenerate { v })
    }

    fn is_pure_trend(&self) -> bool {
        matches!(self.diffusion, DiffusionSpec::NoDiffusion) && self.jump.is_absent()
    }
}

/// `Pr(v − δt − σB(t) > 0 for all t ≤ T)` for drifted Brownian motion.
pub fn brownian_noncrossing(v: f64, drift: f64, sigma: f64, horizon: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    if horizon <= 0.0 {
        return 1.0;
    }
    let s = sigma * horizon.sqrt();
    let first = std_normal_cdf((v - drift * horizon) / s);
    let second = (2.0 * drift * v / (sigma * sigma) + ln_std_normal_cdf((-v - drift * horizon) / s)).exp();
    (first - second).clamp(0.0, 1.0)
}

/// `∫ g(v) dF₀(v)` for a bounded integrand `g`.
pub(crate) fn mix_over_initial<G>(initial: &InitialVitalityDist, mut g: G) -> Result<f64>
where
    G: FnMut(f64) -> Result<f64>,
{
    match *initial {
        InitialVitalityDist::Degenerate { v } => g(v),
        _ => {
            let lo = initial.quantile(1e-10)?;
            let hi = initial.quantile(1.0 - 1e-10)?;
            let mut breaks = vec![lo];
            // split the range so that each piece carries comparable mass
            for k in 1..16 {
                breaks.push(initial.quantile(k as f64 / 16.0)?);
            }
            breaks.push(hi);
            breaks.dedup();
            quadrature::try_adaptive_with_breaks(
                |v| Ok(g(v)? * initial.density(v)?),
                &breaks,
                Adaptive {
                    abs_tol: 1e-11,
                    rel_tol: 1e-10,
                    max_intervals: 4_000,
                },
            )
        }
    }
}

pub(crate) fn laguerre_default() -> Result<&'static QuadratureRule> {
    use std::sync::OnceLock;
    static RULE: OnceLock<std::result::Result<QuadratureRule, Error>> = OnceLock::new();
    RULE.get_or_init(|| QuadratureRule::gauss_laguerre(DEFAULT_LAGUERRE_NODES))
        .as_ref()
        .map_err(Clone::clone)
}

/// Closed-form `Pr(τ > T)`.
///
/// Supported structures:
/// * pure trend with any initial law: `Pr(V(0) > Y(T))`;
/// * frailty-scaled trend with exponential initial and Gamma factor, or a
///   degenerate initial with any factor;
/// * constant-rate trend with Brownian diffusion and fatal (or no) jumps.
///
/// Everything else yields [`Error::NoClosedForm`].
pub fn survival_static(model: &VitalityModel, horizon: f64) -> Result<f64> {
    model.validate()?;
    if !(horizon >= 0.0) {
        return Err(Error::param("T", format!("must be >= 0, got {horizon}")));
    }
    if horizon == 0.0 {
        return Ok(1.0);
    }
    if model.is_pure_trend() {
        return match &model.trend {
            TrendSpec::FrailtyScaled { base, mix } => {
                let y = base.cumulative(model.age_x, horizon)?;
                match (&model.initial, mix) {
                    (InitialVitalityDist::Exponential { rate }, MixingDist::GammaMix { .. }) => {
                        mix.laplace(rate * y)
                    }
                    (InitialVitalityDist::Degenerate { v }, _) => {
                        if y == 0.0 {
                            Ok(1.0)
                        } else {
                            mix.cdf(v / y)
                        }
                    }
                    _ => Err(Error::NoClosedForm(
                        "frailty-scaled trend needs an exponential initial with a Gamma factor, or a degenerate initial"
                            .into(),
                    )),
                }
            }
            trend => model.initial.survival(trend.cumulative(model.age_x, horizon)?),
        };
    }
    if let (TrendSpec::ConstantRate { rate }, DiffusionSpec::BrownianConst { sigma }) =
        (&model.trend, &model.diffusion)
    {
        if model.jump.is_absent() || model.jump.size.is_fatal() {
            let no_jump = (-model.jump.intensity.integral(0.0, horizon)).exp();
            let (drift, sigma) = (*rate, *sigma);
            let mixed = mix_over_initial(&model.initial, |v| {
                Ok(brownian_noncrossing(v, drift, sigma, horizon))
            })?;
            return Ok((no_jump * mixed).clamp(0.0, 1.0));
        }
    }
    Err(Error::NoClosedForm(describe(model)))
}

fn describe(model: &VitalityModel) -> String {
    let trend = match model.trend {
        TrendSpec::ConstantRate { .. } => "constant-rate",
        TrendSpec::PiecewiseConstant { .. } => "piecewise-constant",
        TrendSpec::GompertzTrend { .. } => "Gompertz",
        TrendSpec::FrailtyScaled { .. } => "frailty-scaled",
    };
    let diffusion = match model.diffusion {
        DiffusionSpec::NoDiffusion => "no diffusion",
        DiffusionSpec::BrownianConst { .. } => "Brownian diffusion",
    };
    let jump = if model.jump.is_absent() {
        "no jumps"
    } else if model.jump.size.is_fatal() {
        "fatal jumps"
    } else {
        "finite jumps"
    };
    format!("{trend} trend with {diffusion} and {jump}")
}

/// Remaining lifetime `τ(v)` under a Gompertz trend with no diffusion or jumps.
pub fn gompertz_death_time(v: f64, age_x: f64, b: f64, c: f64) -> Result<f64> {
    ensure_positive("v", v)?;
    ensure_positive("b", b)?;
    if !(c > 1.0) {
        return Err(Error::param("c", format!("must be > 1, got {c}")));
    }
    let ln_c = c.ln();
    Ok((v * ln_c / (b * c.powf(age_x))).ln_1p() / ln_c)
}

/// Description of the exponential transform `Ṽ = e^V` with death at `Ṽ ≤ 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpTransform {
    pub initial: String,
    pub threshold: f64,
}

/// Reports the law of `e^{V(0)}`; death times are unchanged by the transform.
pub fn exp_transform(model: &VitalityModel) -> ExpTransform {
    let initial = match model.initial {
        InitialVitalityDist::Exponential { rate } if rate == 1.0 => {
            "Pareto(shape=1, location=scale=1)".to_string()
        }
        InitialVitalityDist::Exponential { rate } => {
            format!("Pareto(shape={rate}, location=scale=1)")
        }
        InitialVitalityDist::GompertzDist { shape } => {
            format!("inverse Weibull (log-Gompertz), same shape {shape}, scale 1")
        }
        InitialVitalityDist::ParetoII { shape, scale } => {
            format!("log-Lomax: exp of ParetoII(shape={shape}, scale={scale})")
        }
        InitialVitalityDist::Degenerate { v } => format!("Degenerate({})", v.exp()),
    };
    ExpTransform {
        initial,
        threshold: 1.0,
    }
}

//! Life expectancy, continuous annuity and insurance values, the gap between
//! population and average-vitality life expectancy, and disability and
//! recovery probabilities.

use crate::distributions::InitialVitalityDist;
use crate::error::{ensure_positive, Error, Result};
use crate::fpmc::{simulate_jump_times, JumpTimeMethod, McConfig, McEstimate};
use crate::fpt::{durbin_density, BoundaryFn};
use crate::model::{gompertz_death_time, mix_over_initial, survival_static, DiffusionSpec, TrendSpec, VitalityModel};
use crate::numerics::quadrature::{adaptive_with_breaks, try_adaptive_with_breaks, Adaptive};
use crate::numerics::special::std_normal_cdf;
use crate::numerics::mean_and_se;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Valuation basis: a constant force of interest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricingBasis {
    pub force_of_interest: f64,
}

impl PricingBasis {
    pub fn new(force_of_interest: f64) -> Result<Self> {
        let basis = PricingBasis { force_of_interest };
        basis.validate()?;
        Ok(basis)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("force_of_interest", self.force_of_interest)
    }
}

/// `(1 − e^{−δt})/δ`.
pub fn annuity_certain(t: f64, force: f64) -> f64 {
    if t.is_infinite() {
        return 1.0 / force;
    }
    -(-force * t).exp_m1() / force
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValuationRoute {
    /// Deterministic death time of a known `V(0)`.
    DeathTime,
    /// `E g(τ) = g(0) + ∫ g'(t) S(t) dt` over a closed-form survival curve.
    SurvivalIntegral,
    /// First-passage density approximation.
    Density,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValuationOptions {
    /// Terms of the Durbin series used on the density route; 1 is the
    /// tangent approximation.
    pub density_order: usize,
}

impl Default for ValuationOptions {
    fn default() -> Self {
        ValuationOptions { density_order: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Valuation {
    pub value: f64,
    pub route: ValuationRoute,
}

/// Functionals `E g(τ)` of the remaining lifetime.
#[derive(Debug, Clone, Copy)]
enum Functional {
    Lifetime,
    Annuity(f64),
}

impl Functional {
    fn at(&self, t: f64) -> f64 {
        match *self {
            Functional::Lifetime => t,
            Functional::Annuity(d) => annuity_certain(t, d),
        }
    }

    fn derivative(&self, t: f64) -> f64 {
        match *self {
            Functional::Lifetime => 1.0,
            Functional::Annuity(d) => (-d * t).exp(),
        }
    }
}

const LONGEST_LIFE: f64 = 1.0e4;
const TAIL_SURVIVAL: f64 = 1e-14;

fn quad_opts() -> Adaptive {
    Adaptive {
        abs_tol: 1e-11,
        rel_tol: 1e-11,
        max_intervals: 8_000,
    }
}

/// Time at which a deterministic trend has used up `level` of vitality.
pub fn trend_inverse(trend: &TrendSpec, age_x: f64, level: f64) -> Result<f64> {
    if !(level >= 0.0) {
        return Err(Error::param("v", format!("must be >= 0, got {level}")));
    }
    if level == 0.0 {
        return Ok(0.0);
    }
    match trend {
        TrendSpec::GompertzTrend { b, c } => gompertz_death_time(level, age_x, *b, *c),
        TrendSpec::ConstantRate { rate } => Ok(level / rate),
        TrendSpec::PiecewiseConstant { rates } => {
            let mut used = 0.0;
            for (i, r) in rates.iter().enumerate() {
                let last = i + 1 == rates.len();
                if last || used + r >= level {
                    return Ok(i as f64 + (level - used) / r);
                }
                used += r;
            }
            unreachable!("the last band is unbounded")
        }
        TrendSpec::FrailtyScaled { .. } => Err(Error::Unsupported(
            "a frailty-scaled trend has a random death time".into(),
        )),
    }
}

fn is_pure_trend(model: &VitalityModel) -> bool {
    matches!(model.diffusion, DiffusionSpec::NoDiffusion) && model.jump.is_absent()
}

fn initial_for(model: &VitalityModel, v: Option<f64>) -> Result<InitialVitalityDist> {
    match v {
        Some(v) => {
            ensure_positive("v", v)?;
            Ok(InitialVitalityDist::Degenerate { v })
        }
        None => Ok(model.initial.clone()),
    }
}

/// Closed-form survival, extended to deterministic trends with fatal jumps.
fn closed_survival(model: &VitalityModel, t: f64) -> Result<f64> {
    let fatal_only = matches!(model.diffusion, DiffusionSpec::NoDiffusion)
        && model.jump.size.is_fatal()
        && !matches!(model.trend, TrendSpec::FrailtyScaled { .. });
    if fatal_only && !model.jump.is_absent() {
        let no_jump = (-model.jump.intensity.integral(0.0, t)).exp();
        return Ok(no_jump * model.initial.survival(model.trend.cumulative(model.age_x, t)?)?);
    }
    survival_static(model, t)
}

fn survival_horizon(model: &VitalityModel) -> Result<f64> {
    let mut h = 1.0;
    while closed_survival(model, h)? > TAIL_SURVIVAL {
        h *= 2.0;
        if h > LONGEST_LIFE {
            return Err(Error::NonFinite(format!(
                "survival stays above {TAIL_SURVIVAL} beyond {LONGEST_LIFE} years"
            )));
        }
    }
    Ok(h)
}

fn by_survival_integral(model: &VitalityModel, f: Functional) -> Result<f64> {
    let h = survival_horizon(model)?;
    let breaks: Vec<f64> = (0..=128).map(|i| h * i as f64 / 128.0).collect();
    let mut failure = None;
    let integral = adaptive_with_breaks(
        |t| match closed_survival(model, t) {
            Ok(s) => f.derivative(t) * s,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        &breaks,
        quad_opts(),
    )?;
    failure.map_or(Ok(f.at(0.0) + integral), Err)
}

fn by_density(model: &VitalityModel, v: f64, f: Functional, order: usize) -> Result<f64> {
    let boundary = BoundaryFn::from_model(model)?;
    let sigma = model.diffusion.sigma();
    // first time the boundary sits twelve standard deviations below zero
    let mut h = trend_inverse(&model.trend, model.age_x, v)?.max(1.0);
    while boundary.value(h, v) > -12.0 * sigma * h.sqrt() {
        h *= 1.5;
        if h > LONGEST_LIFE {
            return Err(Error::NonFinite("death-time density has no effective horizon".into()));
        }
    }
    let breaks: Vec<f64> = (0..=64).map(|i| h * i as f64 / 64.0).collect();
    try_adaptive_with_breaks(
        |t| Ok(f.at(t) * durbin_density(&boundary, sigma, v, t, order)?),
        &breaks,
        Adaptive {
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            max_intervals: 4_000,
        },
    )
}

fn expect(model: &VitalityModel, v: Option<f64>, f: Functional, opts: ValuationOptions) -> Result<Valuation> {
    model.validate()?;
    let initial = initial_for(model, v)?;
    let frailty = matches!(model.trend, TrendSpec::FrailtyScaled { .. });
    if let (true, InitialVitalityDist::Degenerate { v }) = (is_pure_trend(model) && !frailty, &initial) {
        return Ok(Valuation {
            value: f.at(trend_inverse(&model.trend, model.age_x, *v)?),
            route: ValuationRoute::DeathTime,
        });
    }
    let conditioned = model.with_initial(initial.clone());
    match closed_survival(&conditioned, 1.0) {
        Ok(_) => {
            return Ok(Valuation {
                value: by_survival_integral(&conditioned, f)?,
                route: ValuationRoute::SurvivalIntegral,
            })
        }
        Err(Error::NoClosedForm(_)) => {}
        Err(e) => return Err(e),
    }
    if model.jump.is_absent() && model.diffusion.sigma() > 0.0 && !frailty {
        let order = opts.density_order;
        let value = mix_over_initial(&initial, |v| by_density(model, v, f, order))?;
        return Ok(Valuation {
            value,
            route: ValuationRoute::Density,
        });
    }
    Err(Error::NoClosedForm(
        "no death-time density for models with jumps; use the Monte Carlo valuation".into(),
    ))
}

/// Expected remaining lifetime, conditional on `V(0) = v` when given.
pub fn life_expectancy(model: &VitalityModel, v: Option<f64>, opts: ValuationOptions) -> Result<Valuation> {
    expect(model, v, Functional::Lifetime, opts)
}

/// Price of a continuous whole-life annuity of 1 per year.
pub fn annuity_price(
    model: &VitalityModel,
    basis: &PricingBasis,
    v: Option<f64>,
    opts: ValuationOptions,
) -> Result<Valuation> {
    basis.validate()?;
    expect(model, v, Functional::Annuity(basis.force_of_interest), opts)
}

/// Whole-life insurance of 1 paid at death, `1 − δ ā`.
pub fn insurance_price(
    model: &VitalityModel,
    basis: &PricingBasis,
    v: Option<f64>,
    opts: ValuationOptions,
) -> Result<Valuation> {
    let a = annuity_price(model, basis, v, opts)?;
    Ok(Valuation {
        value: 1.0 - basis.force_of_interest * a.value,
        route: a.route,
    })
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub value: f64,
    pub std_error: f64,
}

impl MeanEstimate {
    fn of(xs: &[f64]) -> Self {
        let (value, std_error) = mean_and_se(xs);
        MeanEstimate { value, std_error }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulatedValuation {
    pub life_expectancy: MeanEstimate,
    pub annuity: MeanEstimate,
    pub insurance: MeanEstimate,
    /// Paths still alive at the simulation cap.
    pub censored: usize,
}

/// Steps per year for death-time simulation.
const DEATH_STEPS_PER_YEAR: f64 = 52.0;
const DEATH_TIME_CAP: f64 = 250.0;

/// One death time; a crossing inside a step is placed at the step midpoint
/// when detected by the bridge test, and by linear interpolation otherwise.
pub fn sample_death_time<R: Rng + ?Sized>(model: &VitalityModel, v: f64, cap: f64, rng: &mut R) -> Result<f64> {
    let sigma = model.diffusion.sigma();
    let jumps = simulate_jump_times(&model.jump.intensity, cap, rng, JumpTimeMethod::OrderStatistics);
    let dt = 1.0 / DEATH_STEPS_PER_YEAR;
    let mut next_jump = jumps.iter().copied().peekable();
    let mut x = v;
    let mut t = 0.0;
    let mut y_prev = 0.0;
    while t < cap {
        let grid_end = (t + dt).min(cap);
        let (end, jump_here) = match next_jump.peek() {
            Some(&s) if s <= grid_end => {
                next_jump.next();
                (s, true)
            }
            _ => (grid_end, false),
        };
        let len = end - t;
        let y = model.trend.cumulative(model.age_x, end)?;
        let shock = if sigma > 0.0 && len > 0.0 {
            sigma * len.sqrt() * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        let x_end = x - (y - y_prev) - shock;
        if x_end <= 0.0 {
            return Ok(t + len * x / (x - x_end));
        }
        if sigma > 0.0 && len > 0.0 {
            let u: f64 = rng.random();
            if u < (-2.0 * x * x_end / (sigma * sigma * len)).exp() {
                return Ok(t + 0.5 * len);
            }
        }
        x = x_end;
        if jump_here {
            x -= model.jump.size.sample(rng);
            if x <= 0.0 {
                return Ok(end);
            }
        }
        t = end;
        y_prev = y;
    }
    Ok(cap)
}

/// Life expectancy, annuity and insurance values from simulated death times.
pub fn simulated_valuation(
    model: &VitalityModel,
    basis: &PricingBasis,
    v: Option<f64>,
    cfg: &McConfig,
) -> Result<SimulatedValuation> {
    model.validate()?;
    basis.validate()?;
    cfg.validate()?;
    if matches!(model.trend, TrendSpec::FrailtyScaled { .. }) {
        return Err(Error::Unsupported("death-time simulation does not mix frailty-scaled trends".into()));
    }
    let initial = initial_for(model, v)?;
    let times = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut g = cfg.rng.substream(i as u64).generator();
            let v0 = initial.sample(&mut g);
            sample_death_time(model, v0, DEATH_TIME_CAP, &mut g)
        })
        .collect::<Result<Vec<f64>>>()?;
    let d = basis.force_of_interest;
    let annuities: Vec<f64> = times.iter().map(|t| annuity_certain(*t, d)).collect();
    let insurances: Vec<f64> = times.iter().map(|t| (-d * t).exp()).collect();
    Ok(SimulatedValuation {
        life_expectancy: MeanEstimate::of(&times),
        annuity: MeanEstimate::of(&annuities),
        insurance: MeanEstimate::of(&insurances),
        censored: times.iter().filter(|t| **t >= DEATH_TIME_CAP).count(),
    })
}

/// Population life expectancy against that of average and median vitality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeliefGap {
    pub pop_le: f64,
    pub avg_v_le: f64,
    pub median_v_le: f64,
}

/// Gompertz pure-trend model with unit-exponential initial vitality at age `x`.
pub fn belief_gap(b: f64, c: f64, x: f64) -> Result<BeliefGap> {
    let model = VitalityModel::gompertz(x, b, c);
    model.validate()?;
    let pop_le = life_expectancy(&model, None, ValuationOptions::default())?.value;
    let avg_v_le = gompertz_death_time(1.0, x, b, c)?;
    let median_v_le = gompertz_death_time(std::f64::consts::LN_2, x, b, c)?;
    debug_assert!(pop_le <= avg_v_le, "concavity of the death time in v");
    Ok(BeliefGap {
        pop_le,
        avg_v_le,
        median_v_le,
    })
}

/// Disability threshold and horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisabilityQuery {
    pub threshold: f64,
    pub horizon: f64,
    /// Law of a person-specific threshold, replacing the fixed one.
    #[serde(default)]
    pub threshold_dist: Option<InitialVitalityDist>,
}

impl DisabilityQuery {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("threshold", self.threshold)?;
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::param("horizon", format!("must be finite and >= 0, got {}", self.horizon)));
        }
        if let Some(d) = &self.threshold_dist {
            d.validate()?;
        }
        Ok(())
    }
}

/// `Pr(V(0) − Y(T) > ω | V(0) > ω)` for exponential initial vitality and a
/// deterministic trend.
pub fn healthy_stay_prob(model: &VitalityModel, q: &DisabilityQuery) -> Result<f64> {
    model.validate()?;
    q.validate()?;
    let InitialVitalityDist::Exponential { rate } = model.initial else {
        return Err(Error::Unsupported("healthy-stay probability needs an exponential initial law".into()));
    };
    if !is_pure_trend(model) || matches!(model.trend, TrendSpec::FrailtyScaled { .. }) {
        return Err(Error::Unsupported(
            "healthy-stay probability needs a deterministic trend without diffusion or jumps".into(),
        ));
    }
    let y = model.trend.cumulative(model.age_x, q.horizon)?;
    match &q.threshold_dist {
        None => Ok((-rate * y).exp()),
        Some(law) => {
            let stay = mix_over_initial(law, |w| Ok((-rate * (w + y)).exp()))?;
            let healthy = mix_over_initial(law, |w| Ok((-rate * w).exp()))?;
            Ok(stay / healthy)
        }
    }
}

/// Joint density of the running maximum and endpoint of `B(t) + (δ/σ)t` at `T`.
pub fn joint_max_endpoint_density(m: f64, w: f64, horizon: f64, delta: f64, sigma: f64) -> f64 {
    if !(w <= m && m >= 0.0 && horizon > 0.0 && sigma > 0.0) {
        return 0.0;
    }
    let drift = delta / sigma;
    let r = 2.0 * m - w;
    2.0 * r / (horizon * (2.0 * PI * horizon).sqrt())
        * (drift * w - 0.5 * drift * drift * horizon - r * r / (2.0 * horizon)).exp()
}

/// Recovery probabilities for a disabled life (`V(0) < ω`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoveryProb {
    /// `∫₀^ω Pr_v(recovered at T, alive throughout) dF₀(v)`.
    pub numerator: f64,
    /// Numerator over `F₀(ω)`: conditional on being disabled at time 0.
    pub conditional: f64,
    /// Numerator over `1 − F₀(ω)`, as printed; `None` when that mass is zero.
    pub printed: Option<f64>,
}

fn constant_rate_diffusion(model: &VitalityModel) -> Result<(f64, f64)> {
    model.validate()?;
    match (&model.trend, &model.diffusion) {
        (TrendSpec::ConstantRate { rate }, DiffusionSpec::BrownianConst { sigma }) if model.jump.is_absent() => {
            Ok((*rate, *sigma))
        }
        _ => Err(Error::Unsupported(
            "recovery needs a constant-rate trend with Brownian diffusion and no jumps".into(),
        )),
    }
}

/// `Pr(max B̂ < a, B̂(T) < b)` for drifted Brownian motion, by integrating the
/// joint density.
fn max_endpoint_prob(a: f64, b: f64, horizon: f64, delta: f64, sigma: f64) -> Result<f64> {
    let sd = horizon.sqrt();
    let drift = delta / sigma;
    let spread = 12.0 * sd + drift.abs() * horizon;
    let w_lo = (drift * horizon).min(0.0) - spread;
    let w_hi = b.min(a);
    if w_hi <= w_lo || a <= 0.0 {
        return Ok(0.0);
    }
    let inner_opts = Adaptive {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        max_intervals: 2_000,
    };
    let w_breaks: Vec<f64> = (0..=16).map(|i| w_lo + (w_hi - w_lo) * i as f64 / 16.0).collect();
    try_adaptive_with_breaks(
        |w| {
            let m_lo = w.max(0.0);
            let m_hi = a.min(m_lo + spread);
            if m_hi <= m_lo {
                return Ok(0.0);
            }
            let mid = m_lo + (m_hi - m_lo).min(4.0 * sd);
            let mut breaks = vec![m_lo, mid];
            if m_hi > mid {
                breaks.push(m_hi);
            }
            adaptive_with_breaks(
                |m| joint_max_endpoint_density(m, w, horizon, delta, sigma),
                &breaks,
                inner_opts,
            )
        },
        &w_breaks,
        Adaptive {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_intervals: 2_000,
        },
    )
}

/// Probability that a disabled life is above the threshold and alive at `T`.
pub fn recovery_prob(model: &VitalityModel, q: &DisabilityQuery) -> Result<RecoveryProb> {
    let (delta, sigma) = constant_rate_diffusion(model)?;
    q.validate()?;
    if q.threshold_dist.is_some() {
        return Err(Error::Unsupported("recovery uses a fixed threshold".into()));
    }
    let omega = q.threshold;
    let disabled = model.initial.cdf(omega)?;
    if disabled <= 0.0 {
        return Err(Error::param("threshold", "no initial mass below the threshold"));
    }
    let numerator = if q.horizon == 0.0 {
        0.0
    } else {
        let inner = |v: f64| max_endpoint_prob(v / sigma, (v - omega) / sigma, q.horizon, delta, sigma);
        match model.initial {
            InitialVitalityDist::Degenerate { v } => {
                if v < omega {
                    inner(v)?
                } else {
                    0.0
                }
            }
            _ => {
                let breaks: Vec<f64> = (0..=16).map(|i| omega * i as f64 / 16.0).collect();
                try_adaptive_with_breaks(
                    |v| Ok(inner(v)? * model.initial.density(v)?),
                    &breaks,
                    Adaptive {
                        abs_tol: 1e-11,
                        rel_tol: 1e-9,
                        max_intervals: 1_000,
                    },
                )?
            }
        }
    };
    let healthy = 1.0 - disabled;
    Ok(RecoveryProb {
        numerator,
        conditional: numerator / disabled,
        printed: (healthy > 0.0).then(|| numerator / healthy),
    })
}

/// Simulated `Pr(V(T) > ω, V > 0 on [0, T] | V(0) < ω)` with bridge killing
/// between grid points.
pub fn recovery_prob_mc(model: &VitalityModel, q: &DisabilityQuery, cfg: &McConfig) -> Result<McEstimate> {
    let (delta, sigma) = constant_rate_diffusion(model)?;
    q.validate()?;
    cfg.validate()?;
    let omega = q.threshold;
    let disabled = model.initial.cdf(omega)?;
    if disabled <= 0.0 {
        return Err(Error::param("threshold", "no initial mass below the threshold"));
    }
    if q.horizon == 0.0 {
        return Ok(McEstimate::exact(0.0));
    }
    let steps = ((q.horizon * cfg.n_time_points as f64).ceil() as usize).max(1);
    let dt = q.horizon / steps as f64;
    let path = |v0: f64, normals: &[f64], sign: f64| -> f64 {
        let mut x = v0;
        let mut weight = 1.0;
        for z in normals {
            let next = x - delta * dt - sign * sigma * dt.sqrt() * z;
            if next <= 0.0 {
                return 0.0;
            }
            weight *= -(-2.0 * x * next / (sigma * sigma * dt)).exp_m1();
            x = next;
        }
        if x > omega {
            weight
        } else {
            0.0
        }
    };
    let units = if cfg.antithetic { cfg.n_paths / 2 } else { cfg.n_paths };
    let samples = (0..units)
        .into_par_iter()
        .map(|i| {
            let stream = cfg.rng.substream(i as u64);
            let u: f64 = stream.substream(2).generator().random();
            let v0 = match model.initial {
                InitialVitalityDist::Degenerate { v } => v,
                _ => model.initial.quantile(u * disabled)?,
            };
            let mut g = stream.substream(1).generator();
            let normals: Vec<f64> = (0..steps).map(|_| g.sample(StandardNormal)).collect();
            let mut value = path(v0, &normals, 1.0);
            if cfg.antithetic {
                value = 0.5 * (value + path(v0, &normals, -1.0));
            }
            Ok(value)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(McEstimate::from_samples(&samples))
}

/// `Pr(max B̂ < a, B̂(T) < b)` in closed form, for `b ≤ a`, `a > 0`.
pub fn max_endpoint_cdf(a: f64, b: f64, horizon: f64, drift: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let b = b.min(a);
    let sd = horizon.sqrt();
    let first = std_normal_cdf((b - drift * horizon) / sd);
    let reflected = (2.0 * drift * a).exp() * std_normal_cdf((b - 2.0 * a - drift * horizon) / sd);
    (first - reflected).max(0.0)
}

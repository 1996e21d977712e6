//! Stochastic Gompertz parameters, cohort-dependent initial vitality, and
//! survival as an expectation over simulated trend paths.

use crate::distributions::{erlang_cdf, JumpSizeDist};
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::fpmc::McEstimate;
use crate::model::{laguerre_default, JumpSpec};
use crate::numerics::quadrature::{integrate, QuadratureRule};
use crate::numerics::special::std_normal_pdf;
use crate::numerics::RngStream;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Log-Brownian dynamics for the Gompertz level `b(t)` and slope `c(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicGompertzParams {
    pub b0: f64,
    pub c0: f64,
    pub mu_b: f64,
    pub mu_c: f64,
    pub sigma_b: f64,
    pub sigma_c: f64,
    pub rho: f64,
}

impl DynamicGompertzParams {
    /// Constant parameters `b(t) ≡ b0`, `c(t) ≡ c0`.
    pub fn frozen(b0: f64, c0: f64) -> Self {
        DynamicGompertzParams {
            b0,
            c0,
            mu_b: 0.0,
            mu_c: 0.0,
            sigma_b: 0.0,
            sigma_c: 0.0,
            rho: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("b0", self.b0)?;
        if !(self.c0.is_finite() && self.c0 > 1.0) {
            return Err(Error::param("c0", format!("must be > 1, got {}", self.c0)));
        }
        for (name, x) in [("mu_b", self.mu_b), ("mu_c", self.mu_c)] {
            if !x.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        ensure_non_negative("sigma_b", self.sigma_b)?;
        ensure_non_negative("sigma_c", self.sigma_c)?;
        if !(self.rho.abs() <= 1.0) {
            return Err(Error::param("rho", format!("must lie in [-1, 1], got {}", self.rho)));
        }
        Ok(())
    }

    pub fn is_deterministic(&self) -> bool {
        self.sigma_b == 0.0 && self.sigma_c == 0.0
    }
}

/// Cohort effect on the rate of the exponential initial vitality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CohortSpec {
    #[serde(rename = "none")]
    NoCohort,
    /// Rate `Γ(y)` with `dΓ/Γ = μ dy + σ dB`, `Γ(0) = 1`.
    GammaRate { mu_gamma: f64, sigma_gamma: f64, birth_year: f64 },
    /// Rate `Γ(y)·a^x` with the trend divided by `a^x`.
    AgeScaled { a: f64, mu_gamma: f64, sigma_gamma: f64, birth_year: f64 },
    /// Rate `Γ(y)^{x_c − x}`.
    PowerDecay { x_c: f64, mu_gamma: f64, sigma_gamma: f64, birth_year: f64 },
}

impl CohortSpec {
    pub fn validate(&self, age_x: f64) -> Result<()> {
        match *self {
            CohortSpec::NoCohort => Ok(()),
            CohortSpec::GammaRate {
                mu_gamma,
                sigma_gamma,
                birth_year,
            } => check_gamma(mu_gamma, sigma_gamma, birth_year),
            CohortSpec::AgeScaled {
                a,
                mu_gamma,
                sigma_gamma,
                birth_year,
            } => {
                if !(a.is_finite() && a > 1.0) {
                    return Err(Error::param("cohort.a", format!("must be > 1, got {a}")));
                }
                check_gamma(mu_gamma, sigma_gamma, birth_year)
            }
            CohortSpec::PowerDecay {
                x_c,
                mu_gamma,
                sigma_gamma,
                birth_year,
            } => {
                ensure_positive("cohort.x_c", x_c)?;
                if !(x_c > age_x) {
                    return Err(Error::param("cohort.x_c", format!("must exceed age_x = {age_x}, got {x_c}")));
                }
                check_gamma(mu_gamma, sigma_gamma, birth_year)
            }
        }
    }

    /// `(initial-vitality rate, multiplier on Y)` for one draw of `Γ(y)`.
    fn rate_and_scale(&self, age_x: f64, stream: RngStream) -> (f64, f64) {
        let draw = |mu: f64, sigma: f64, y: f64| {
            let z: f64 = if sigma > 0.0 {
                stream.generator().sample(StandardNormal)
            } else {
                0.0
            };
            ((mu - 0.5 * sigma * sigma) * y + sigma * y.abs().sqrt() * z).exp()
        };
        match *self {
            CohortSpec::NoCohort => (1.0, 1.0),
            CohortSpec::GammaRate {
                mu_gamma,
                sigma_gamma,
                birth_year,
            } => (draw(mu_gamma, sigma_gamma, birth_year), 1.0),
            CohortSpec::AgeScaled {
                a,
                mu_gamma,
                sigma_gamma,
                birth_year,
            } => {
                let ax = a.powf(age_x);
                (draw(mu_gamma, sigma_gamma, birth_year) * ax, 1.0 / ax)
            }
            CohortSpec::PowerDecay {
                x_c,
                mu_gamma,
                sigma_gamma,
                birth_year,
            } => (draw(mu_gamma, sigma_gamma, birth_year).powf(x_c - age_x), 1.0),
        }
    }
}

fn check_gamma(mu: f64, sigma: f64, y: f64) -> Result<()> {
    if !mu.is_finite() {
        return Err(Error::param("cohort.mu_gamma", "must be finite"));
    }
    ensure_non_negative("cohort.sigma_gamma", sigma)?;
    if !y.is_finite() {
        return Err(Error::param("cohort.birth_year", "must be finite"));
    }
    Ok(())
}

/// One simulated parameter path with its cumulative depletion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendPath {
    pub times: Vec<f64>,
    pub ln_b: Vec<f64>,
    pub ln_c: Vec<f64>,
    /// `∫₀ᵗ b(s) c(s)^{x+s} ds` by the trapezoid rule.
    pub y_values: Vec<f64>,
}

impl TrendPath {
    pub fn terminal(&self) -> f64 {
        *self.y_values.last().expect("paths hold at least one point")
    }
}

/// Coarsest step accepted for the trend integral.
pub const MAX_STEP: f64 = 1.0 / 12.0;

fn check_step(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt <= MAX_STEP * (1.0 + 1e-12)) {
        return Err(Error::param("dt", format!("must lie in (0, 1/12], got {dt}")));
    }
    Ok(())
}

/// Simulates `(ln b, ln c)` with exact correlated Gaussian increments on a
/// grid of step `dt` (the last step may be shorter) and integrates the hazard.
pub fn simulate_trend_path(
    params: &DynamicGompertzParams,
    age_x: f64,
    horizon: f64,
    dt: f64,
    rng: RngStream,
) -> Result<TrendPath> {
    params.validate()?;
    check_step(dt)?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::param("T", format!("must be > 0, got {horizon}")));
    }
    Ok(trend_path(params, age_x, horizon, dt, rng))
}

fn trend_path(params: &DynamicGompertzParams, age_x: f64, horizon: f64, dt: f64, rng: RngStream) -> TrendPath {
    let steps = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
    let mut g = rng.generator();
    let mut times = Vec::with_capacity(steps + 1);
    let mut ln_b = Vec::with_capacity(steps + 1);
    let mut ln_c = Vec::with_capacity(steps + 1);
    let mut y_values = Vec::with_capacity(steps + 1);
    let (mut lb, mut lc) = (params.b0.ln(), params.c0.ln());
    let hazard = |t: f64, lb: f64, lc: f64| (lb + (age_x + t) * lc).exp();
    let mut t = 0.0;
    let mut y = 0.0;
    let mut h_prev = hazard(0.0, lb, lc);
    times.push(0.0);
    ln_b.push(lb);
    ln_c.push(lc);
    y_values.push(0.0);
    let stochastic = !params.is_deterministic();
    let tail = (1.0 - params.rho * params.rho).max(0.0).sqrt();
    for i in 1..=steps {
        let next = if i == steps { horizon } else { i as f64 * dt };
        let h = next - t;
        let (z1, z2): (f64, f64) = if stochastic {
            (g.sample(StandardNormal), g.sample(StandardNormal))
        } else {
            (0.0, 0.0)
        };
        let root = h.sqrt();
        lb += params.mu_b * h + params.sigma_b * root * z1;
        lc += params.mu_c * h + params.sigma_c * root * (params.rho * z1 + tail * z2);
        let h_next = hazard(next, lb, lc);
        y += 0.5 * h * (h_prev + h_next);
        h_prev = h_next;
        t = next;
        times.push(t);
        ln_b.push(lb);
        ln_c.push(lc);
        y_values.push(y);
    }
    TrendPath {
        times,
        ln_b,
        ln_c,
        y_values,
    }
}

fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths == 0 {
        return Err(Error::param("n_paths", "must be positive"));
    }
    Ok(())
}

/// Per-path `(rate, Y(T))` pairs after applying the cohort scaling.
fn rate_and_depletion(
    params: &DynamicGompertzParams,
    cohort: &CohortSpec,
    age_x: f64,
    horizon: f64,
    dt: f64,
    stream: RngStream,
) -> (f64, f64) {
    let path = trend_path(params, age_x, horizon, dt, stream.substream(0));
    let (rate, scale) = cohort.rate_and_scale(age_x, stream.substream(1));
    (rate, scale * path.terminal())
}

fn validate_dynamic(
    params: &DynamicGompertzParams,
    cohort: &CohortSpec,
    age_x: f64,
    horizon: f64,
    n_paths: usize,
    dt: f64,
) -> Result<()> {
    params.validate()?;
    cohort.validate(age_x)?;
    check_paths(n_paths)?;
    check_step(dt)?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::param("T", format!("must be >= 0, got {horizon}")));
    }
    Ok(())
}

/// `Pr(τ > T) = E[exp(−rate·Y(T))]` over simulated trend paths and cohort draws.
pub fn survival_dynamic(
    params: &DynamicGompertzParams,
    cohort: &CohortSpec,
    age_x: f64,
    horizon: f64,
    n_paths: usize,
    dt: f64,
    rng: RngStream,
) -> Result<McEstimate> {
    validate_dynamic(params, cohort, age_x, horizon, n_paths, dt)?;
    if horizon == 0.0 {
        return Ok(McEstimate::exact(1.0));
    }
    let values: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let (rate, y) = rate_and_depletion(params, cohort, age_x, horizon, dt, rng.substream(i as u64));
            (-rate * y).exp()
        })
        .collect();
    Ok(McEstimate::from_samples(&values))
}

/// Same probability estimated by sampling `V(0) ~ Exp(rate)` on each path and
/// recording whether it exceeds `Y(T)`.
pub fn survival_dynamic_sampled(
    params: &DynamicGompertzParams,
    cohort: &CohortSpec,
    age_x: f64,
    horizon: f64,
    n_paths: usize,
    dt: f64,
    rng: RngStream,
) -> Result<McEstimate> {
    validate_dynamic(params, cohort, age_x, horizon, n_paths, dt)?;
    if horizon == 0.0 {
        return Ok(McEstimate::exact(1.0));
    }
    let values: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let stream = rng.substream(i as u64);
            let (rate, y) = rate_and_depletion(params, cohort, age_x, horizon, dt, stream);
            let u: f64 = stream.substream(2).generator().random();
            let v0 = -(1.0 - u).ln() / rate;
            if v0 > y {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(McEstimate::from_samples(&values))
}

/// Nodes of the standard-normal expectation used by the log-normal layer.
const LOGNORMAL_NODES: usize = 64;
const LOGNORMAL_SPAN: f64 = 12.0;

/// Survival under a log-normal fit to the simulated first two moments of `Y(T)`.
pub fn lognormal_approx_survival(
    params: &DynamicGompertzParams,
    age_x: f64,
    horizon: f64,
    n_moment_paths: usize,
    rng: RngStream,
) -> Result<f64> {
    validate_dynamic(params, &CohortSpec::NoCohort, age_x, horizon, n_moment_paths, MAX_STEP)?;
    if horizon == 0.0 {
        return Ok(1.0);
    }
    let dt = 1.0 / 360.0;
    if params.is_deterministic() {
        return Ok((-trend_path(params, age_x, horizon, dt, rng).terminal()).exp());
    }
    let ys: Vec<f64> = (0..n_moment_paths)
        .into_par_iter()
        .map(|i| trend_path(params, age_x, horizon, dt, rng.substream(i as u64)).terminal())
        .collect();
    let (mean, se) = crate::numerics::mean_and_se(&ys);
    let var = se * se * n_moment_paths as f64;
    if !(var > 0.0) || !(mean > 0.0) {
        return Err(Error::NonFinite(format!(
            "estimated variance of Y(T) is {var}; a log-normal fit needs a positive variance"
        )));
    }
    let s2 = (var / (mean * mean)).ln_1p();
    let m = mean.ln() - 0.5 * s2;
    let s = s2.sqrt();
    let rule = QuadratureRule::gauss_legendre(LOGNORMAL_NODES, -LOGNORMAL_SPAN, LOGNORMAL_SPAN)?;
    integrate(&rule, |z| std_normal_pdf(z) * (-(m + s * z).exp()).exp())
}

/// Survival with jumps and no diffusion, `V(0) ~ Exp(1)`.
///
/// Fatal jumps multiply the jump-free estimate by `e^{−Λ(T)}`; exponential
/// sizes multiply it by `∫₀^∞ e^{−u} Pr(J(T) ≤ u) du`, with the Poisson count
/// conditioned out through Erlang distribution functions.
pub fn survival_dynamic_with_jumps(
    params: &DynamicGompertzParams,
    age_x: f64,
    horizon: f64,
    jump: &JumpSpec,
    n_paths: usize,
    dt: f64,
    rng: RngStream,
) -> Result<McEstimate> {
    jump.validate()?;
    let base = survival_dynamic(params, &CohortSpec::NoCohort, age_x, horizon, n_paths, dt, rng)?;
    if jump.is_absent() || horizon == 0.0 {
        return Ok(base);
    }
    let mass = jump.intensity.integral(0.0, horizon);
    let factor = match jump.size {
        JumpSizeDist::Fatal => (-mass).exp(),
        JumpSizeDist::ExponentialJump { rate } => {
            let rule = laguerre_default()?;
            integrate(rule, |u| compound_poisson_cdf(mass, rate, u))?
        }
        _ => {
            return Err(Error::Unsupported(
                "dynamic survival with jumps supports fatal or exponential sizes".into(),
            ))
        }
    };
    Ok(McEstimate {
        value: (base.value * factor).clamp(0.0, 1.0),
        std_error: base.std_error * factor,
        n_effective: base.n_effective,
    })
}

/// `Pr(J ≤ u)` for a compound Poisson sum with mean count `mass` and
/// exponential sizes of the given rate.
fn compound_poisson_cdf(mass: f64, rate: f64, u: f64) -> f64 {
    if u < 0.0 {
        return 0.0;
    }
    let mut weight = (-mass).exp();
    let mut total = weight;
    let mut n = 0u64;
    let mut tail = 1.0 - weight;
    while tail > 1e-17 && n < 10_000 {
        n += 1;
        weight *= mass / n as f64;
        tail -= weight;
        total += weight * erlang_cdf(n, rate, u);
        if weight < 1e-300 && n as f64 > mass {
            break;
        }
    }
    total.clamp(0.0, 1.0)
}

/// Gompertz pair produced by a factor-model reparameterization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GompertzPair {
    pub b: f64,
    pub c: f64,
}

impl GompertzPair {
    /// `c ≤ 1` gives a hazard that does not increase with age.
    pub fn is_degenerate(&self) -> bool {
        self.c <= 1.0
    }
}

/// `b = exp(κ₁ − κ₂ x̄)`, `c = exp(κ₂)`.
pub fn cbd_reparameterization(kappa1: f64, kappa2: f64, x_bar: f64) -> GompertzPair {
    GompertzPair {
        b: (kappa1 - kappa2 * x_bar).exp(),
        c: kappa2.exp(),
    }
}

/// Inverse of [`cbd_reparameterization`]: `(κ₁, κ₂)`.
pub fn cbd_factors(pair: GompertzPair, x_bar: f64) -> (f64, f64) {
    let kappa2 = pair.c.ln();
    (pair.b.ln() + kappa2 * x_bar, kappa2)
}

/// Cohort-extended map returning `(pair, Γ = e^γ)`.
pub fn m6_reparameterization(kappa1: f64, kappa2: f64, gamma: f64, x_bar: f64) -> (GompertzPair, f64) {
    (cbd_reparameterization(kappa1, kappa2, x_bar), gamma.exp())
}

/// Inverse of [`m6_reparameterization`]: `(κ₁, κ₂, γ)`.
pub fn m6_factors(pair: GompertzPair, cohort_rate: f64, x_bar: f64) -> (f64, f64, f64) {
    let (k1, k2) = cbd_factors(pair, x_bar);
    (k1, k2, cohort_rate.ln())
}

//! Optimal investment and consumption with log utility when the planning
//! horizon ends at the first passage of a drifted Brownian vitality.

use crate::error::{ensure_positive, Error, Result};
use crate::model::TrendSpec;
use crate::numerics::mean_and_se;
use crate::numerics::quadrature::{adaptive, try_adaptive_with_breaks, Adaptive};
use crate::numerics::rng::RngStream;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Black–Scholes market with a time-preference rate and bequest weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketParams {
    pub r: f64,
    /// Market price of risk.
    pub theta: f64,
    pub sigma_s: f64,
    /// Time preference.
    pub beta: f64,
    /// Weight on the log-utility of wealth left at death.
    #[serde(default)]
    pub bequest: f64,
}

impl MarketParams {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("r", self.r), ("theta", self.theta)] {
            if !x.is_finite() {
                return Err(Error::param(name, format!("must be finite, got {x}")));
            }
        }
        ensure_positive("sigma_s", self.sigma_s)?;
        ensure_positive("beta", self.beta)?;
        if !(self.bequest >= 0.0 && self.bequest.is_finite()) {
            return Err(Error::param("bequest", format!("must be finite and >= 0, got {}", self.bequest)));
        }
        Ok(())
    }

    /// `r + θ²/2`, the growth term of log wealth under the optimal weight.
    fn log_growth(&self) -> f64 {
        self.r + 0.5 * self.theta * self.theta
    }
}

/// `dV = −δ dt + σ_V dB_V`, `V(0) = v0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VitalitySDE {
    pub delta: f64,
    #[serde(default)]
    pub sigma_v: f64,
    pub v0: f64,
}

impl VitalitySDE {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("delta", self.delta)?;
        if !(self.sigma_v >= 0.0 && self.sigma_v.is_finite()) {
            return Err(Error::param("sigma_v", format!("must be finite and >= 0, got {}", self.sigma_v)));
        }
        ensure_positive("v0", self.v0)
    }
}

/// Decay rate `k₁ < 0` of the consumption factor in vitality.
pub fn decay_rate(beta: f64, sde: &VitalitySDE) -> f64 {
    let (d, s2) = (sde.delta, sde.sigma_v * sde.sigma_v);
    if s2 == 0.0 {
        return -beta / d;
    }
    // rationalised root, stable as σ_V → 0
    -2.0 * beta / (d + (d * d + 2.0 * s2 * beta).sqrt())
}

/// Wealth-to-consumption ratio `f(v)`; optimal consumption is `a / f(v)`.
pub fn consumption_factor(v: f64, market: &MarketParams, sde: &VitalitySDE) -> Result<f64> {
    if !(v >= 0.0) {
        return Err(Error::param("v", format!("must be >= 0, got {v}")));
    }
    Ok(factor(v, market, decay_rate(market.beta, sde)))
}

fn factor(v: f64, market: &MarketParams, k1: f64) -> f64 {
    market.bequest * (k1 * v).exp() - (k1 * v).exp_m1() / market.beta
}

/// `f'(v)`.
pub fn consumption_factor_slope(v: f64, market: &MarketParams, sde: &VitalitySDE) -> f64 {
    let k1 = decay_rate(market.beta, sde);
    (market.bequest - 1.0 / market.beta) * k1 * (k1 * v).exp()
}

/// Risky weight and consumption rate at wealth `a` and vitality `v`.
pub fn optimal_policy(a: f64, v: f64, market: &MarketParams, sde: &VitalitySDE) -> Result<(f64, f64)> {
    ensure_positive("a", a)?;
    ensure_positive("v", v)?;
    Ok((market.theta / market.sigma_s, a / consumption_factor(v, market, sde)?))
}

/// Comparison problem without vitality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MertonHorizon {
    Infinite,
    /// Deterministic force of mortality `μ_{x+t}` given by the trend rate.
    WithMortality {
        trend: TrendSpec,
        age_x: f64,
        /// Planning horizon; may be infinite.
        horizon: f64,
        /// Weight on wealth at death.
        bequest: f64,
        /// Weight on wealth at the horizon.
        terminal: f64,
    },
}

/// Log-utility value `J(t, a) = F(t) ln a + G(t)`.
#[derive(Debug, Clone)]
pub struct MertonReference {
    market: MarketParams,
    horizon: MertonHorizon,
}

/// Infinite-horizon constant `G`.
pub fn merton_constant(market: &MarketParams) -> f64 {
    let b = market.beta;
    ((market.log_growth() - b) / b + b.ln()) / b
}

pub fn merton_reference(market: &MarketParams, horizon: MertonHorizon) -> Result<MertonReference> {
    market.validate()?;
    if let MertonHorizon::WithMortality { trend, age_x, horizon, bequest, terminal } = &horizon {
        trend.validate()?;
        if matches!(trend, TrendSpec::FrailtyScaled { .. }) {
            return Err(Error::Unsupported("the mortality reference needs a deterministic force".into()));
        }
        if !(*age_x >= 0.0) {
            return Err(Error::param("age_x", format!("must be >= 0, got {age_x}")));
        }
        if !(*horizon > 0.0) {
            return Err(Error::param("horizon", format!("must be > 0, got {horizon}")));
        }
        for (name, w) in [("bequest", *bequest), ("terminal", *terminal)] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {w}")));
            }
        }
    }
    Ok(MertonReference { market: *market, horizon })
}

/// Discount horizon beyond which `e^{−βs}` is below 1e-17.
const DISCOUNT_SPAN: f64 = 40.0;

impl MertonReference {
    fn window(&self, t: f64, horizon: f64) -> (f64, bool) {
        let cut = t + DISCOUNT_SPAN / self.market.beta;
        if horizon <= cut {
            (horizon, true)
        } else {
            (cut, false)
        }
    }

    fn opts() -> Adaptive {
        Adaptive {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 4_000,
        }
    }

    /// Wealth-to-consumption ratio at time `t`.
    pub fn f(&self, t: f64) -> Result<f64> {
        let beta = self.market.beta;
        match &self.horizon {
            MertonHorizon::Infinite => Ok(1.0 / beta),
            MertonHorizon::WithMortality { trend, age_x, horizon, bequest, terminal } => {
                if t >= *horizon {
                    return Ok(*terminal);
                }
                let y0 = trend.cumulative(*age_x, t)?;
                let discount = |s: f64| -> Result<f64> {
                    Ok((-(beta * (s - t)) - (trend.cumulative(*age_x, s)? - y0)).exp())
                };
                let (end, reaches) = self.window(t, *horizon);
                let breaks = panel_breaks(t, end);
                let flow = try_adaptive_with_breaks(
                    |s| Ok(discount(s)? * (1.0 + bequest * trend.rate(*age_x, s)?)),
                    &breaks,
                    Self::opts(),
                )?;
                let at_end = if reaches { terminal * discount(end)? } else { 0.0 };
                Ok(flow + at_end)
            }
        }
    }

    /// Additive constant `G(t)` of the value function.
    pub fn g(&self, t: f64) -> Result<f64> {
        let beta = self.market.beta;
        let growth = self.market.log_growth();
        match &self.horizon {
            MertonHorizon::Infinite => Ok(merton_constant(&self.market)),
            MertonHorizon::WithMortality { trend, age_x, horizon, .. } => {
                if t >= *horizon {
                    return Ok(0.0);
                }
                let y0 = trend.cumulative(*age_x, t)?;
                let (end, _) = self.window(t, *horizon);
                try_adaptive_with_breaks(
                    |s| {
                        let weight = (-(beta * (s - t)) - (trend.cumulative(*age_x, s)? - y0)).exp();
                        if weight < 1e-200 {
                            return Ok(0.0);
                        }
                        let f = self.f(s)?;
                        Ok(weight * (f * growth - 1.0 - f.ln()))
                    },
                    &panel_breaks(t, end),
                    Adaptive {
                        abs_tol: 1e-10,
                        rel_tol: 1e-10,
                        max_intervals: 2_000,
                    },
                )
            }
        }
    }
}

fn panel_breaks(a: f64, b: f64) -> Vec<f64> {
    let n = ((b - a).ceil() as usize).clamp(1, 400);
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// Vitality-dependent part `g(v)` of the value function `f(v) ln a + g(v)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueFunction {
    pub v: Vec<f64>,
    pub g: Vec<f64>,
    /// `g` is non-decreasing along the grid.
    pub monotone: bool,
}

/// Default right end of the vitality grid.
pub const DEFAULT_V_MAX: f64 = 40.0;

/// Source term of the `g` equation: `f (r + θ²/2) − 1 − ln f`.
fn g_source(v: f64, market: &MarketParams, k1: f64) -> f64 {
    let f = factor(v, market, k1);
    f * market.log_growth() - 1.0 - f.ln()
}

/// Solves `σ_V²/2 g'' − δ g' − β g + f (r + θ²/2) − 1 − ln f = 0` with
/// `g(0) = 0` and `g(v_max) = G` on the given grid; without diffusion the
/// equation is first order and only `g(0) = 0` is imposed.
pub fn value_function_g(v_grid: &[f64], market: &MarketParams, sde: &VitalitySDE) -> Result<ValueFunction> {
    market.validate()?;
    sde.validate()?;
    if v_grid.len() < 3 {
        return Err(Error::param("v_grid", "needs at least three points"));
    }
    if !(v_grid[0] > 0.0 && v_grid[0] <= 1e-3) {
        return Err(Error::param("v_grid", format!("must start in (0, 1e-3], got {}", v_grid[0])));
    }
    if v_grid.windows(2).any(|w| !(w[1] > w[0])) || !v_grid.iter().all(|v| v.is_finite()) {
        return Err(Error::param("v_grid", "must be finite and strictly increasing"));
    }
    let k1 = decay_rate(market.beta, sde);
    let g = if sde.sigma_v == 0.0 {
        march_first_order(v_grid, market, sde.delta, k1)?
    } else {
        solve_two_point(v_grid, market, sde, k1)?
    };
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("value function".into()));
    }
    let monotone = g.windows(2).all(|w| w[1] >= w[0]);
    Ok(ValueFunction { v: v_grid.to_vec(), g, monotone })
}

/// `g(v) = e^{−βh/δ} g(u) + ∫_u^v e^{−β(v−s)/δ} S(s)/δ ds` cell by cell.
fn march_first_order(grid: &[f64], market: &MarketParams, delta: f64, k1: f64) -> Result<Vec<f64>> {
    let rate = market.beta / delta;
    let cell = |u: f64, v: f64| -> Result<f64> {
        adaptive(
            |s| (-rate * (v - s)).exp() * g_source(s, market, k1) / delta,
            u,
            v,
            Adaptive {
                abs_tol: 1e-14,
                rel_tol: 1e-13,
                max_intervals: 200,
            },
        )
    };
    let mut g = Vec::with_capacity(grid.len());
    let mut prev = (0.0, 0.0);
    for &v in grid {
        let value = (-rate * (v - prev.0)).exp() * prev.1 + cell(prev.0, v)?;
        g.push(value);
        prev = (v, value);
    }
    Ok(g)
}

fn solve_two_point(grid: &[f64], market: &MarketParams, sde: &VitalitySDE, k1: f64) -> Result<Vec<f64>> {
    let half_var = 0.5 * sde.sigma_v * sde.sigma_v;
    let n = grid.len() - 1; // unknowns at grid[0..n]; grid[n] carries the right boundary
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let left = if i == 0 { 0.0 } else { grid[i - 1] };
        let (hl, hr) = (grid[i] - left, grid[i + 1] - grid[i]);
        // three-point second and first derivatives on a non-uniform stencil
        let d2 = [2.0 / (hl * (hl + hr)), -2.0 / (hl * hr), 2.0 / (hr * (hl + hr))];
        let d1 = [-hr / (hl * (hl + hr)), (hr - hl) / (hl * hr), hl / (hr * (hl + hr))];
        let coef: Vec<f64> = (0..3).map(|j| half_var * d2[j] - sde.delta * d1[j]).collect();
        lower[i] = coef[0];
        diag[i] = coef[1] - market.beta;
        upper[i] = coef[2];
        rhs[i] = -g_source(grid[i], market, k1);
    }
    // g(0) = 0 removes lower[0]; the right boundary value moves to the rhs
    rhs[n - 1] -= upper[n - 1] * merton_constant(market);
    upper[n - 1] = 0.0;
    let mut g = thomas(&lower, &diag, &upper, &rhs)?;
    g.push(merton_constant(market));
    Ok(g)
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let m = diag[i] - if i > 0 { lower[i] * c[i - 1] } else { 0.0 };
        if m.abs() < 1e-300 || !m.is_finite() {
            return Err(Error::SingularSystem(format!("zero pivot at row {i}")));
        }
        c[i] = upper[i] / m;
        d[i] = (rhs[i] - if i > 0 { lower[i] * d[i - 1] } else { 0.0 }) / m;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Residual of the discrete `g` equation at the interior nodes.
pub fn value_function_residual(vf: &ValueFunction, market: &MarketParams, sde: &VitalitySDE) -> Vec<f64> {
    let k1 = decay_rate(market.beta, sde);
    let half_var = 0.5 * sde.sigma_v * sde.sigma_v;
    let node = |i: usize| if i == 0 { (0.0, 0.0) } else { (vf.v[i - 1], vf.g[i - 1]) };
    (0..vf.v.len() - 1)
        .map(|i| {
            let ((vl, gl), (vc, gc), (vr, gr)) = (node(i), (vf.v[i], vf.g[i]), (vf.v[i + 1], vf.g[i + 1]));
            let (hl, hr) = (vc - vl, vr - vc);
            let second = 2.0 * (gl / (hl * (hl + hr)) - gc / (hl * hr) + gr / (hr * (hl + hr)));
            let first = -hr / (hl * (hl + hr)) * gl + (hr - hl) / (hl * hr) * gc + hl / (hr * (hl + hr)) * gr;
            half_var * second - sde.delta * first - market.beta * gc + g_source(vc, market, k1)
        })
        .collect()
}

/// Consumption rule used in simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConsumptionPolicy {
    Optimal,
    /// Optimal consumption multiplied by `factor`.
    Scaled { factor: f64 },
}

impl ConsumptionPolicy {
    fn multiplier(&self) -> f64 {
        match *self {
            ConsumptionPolicy::Optimal => 1.0,
            ConsumptionPolicy::Scaled { factor } => factor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("factor", self.multiplier())
    }
}

/// One simulated life.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifecyclePath {
    pub times: Vec<f64>,
    pub assets: Vec<f64>,
    pub consumption: Vec<f64>,
    pub vitality: Vec<f64>,
    /// Death time, `None` if alive at the cap.
    pub tau: Option<f64>,
    /// Wealth reached zero before death.
    pub bankrupt: bool,
    /// Discounted log-utility of consumption plus the discounted bequest.
    pub utility: f64,
}

/// Largest admissible step.
pub const MAX_LIFECYCLE_DT: f64 = 1.0 / 252.0;
/// Simulation stops at this age of the path if vitality has not run out.
pub const LIFECYCLE_CAP: f64 = 500.0;

/// Simulates wealth and vitality on a grid of step `dt`.
///
/// Log wealth is advanced by Euler–Maruyama with the consumption rate averaged
/// over the step ends, which keeps wealth positive; vitality is absorbed at
/// zero with the crossing time interpolated inside the step.
pub fn simulate_lifecycle<R: Rng + ?Sized>(
    a0: f64,
    market: &MarketParams,
    sde: &VitalitySDE,
    policy: ConsumptionPolicy,
    dt: f64,
    rng: &mut R,
) -> Result<LifecyclePath> {
    run_lifecycle(a0, market, sde, policy, dt, rng, true)
}

fn check_inputs(a0: f64, market: &MarketParams, sde: &VitalitySDE, policy: ConsumptionPolicy, dt: f64) -> Result<()> {
    ensure_positive("a0", a0)?;
    market.validate()?;
    sde.validate()?;
    policy.validate()?;
    if !(dt > 0.0 && dt <= MAX_LIFECYCLE_DT) {
        return Err(Error::param("dt", format!("must be in (0, 1/252], got {dt}")));
    }
    Ok(())
}

fn run_lifecycle<R: Rng + ?Sized>(
    a0: f64,
    market: &MarketParams,
    sde: &VitalitySDE,
    policy: ConsumptionPolicy,
    dt: f64,
    rng: &mut R,
    record: bool,
) -> Result<LifecyclePath> {
    check_inputs(a0, market, sde, policy, dt)?;
    let k1 = decay_rate(market.beta, sde);
    let weight = market.theta / market.sigma_s;
    let drift = market.r + weight * market.theta * market.sigma_s - 0.5 * (weight * market.sigma_s).powi(2);
    let vol = weight * market.sigma_s;
    let kappa = policy.multiplier();
    let rate_at = |v: f64| kappa / factor(v.max(0.0), market, k1);

    let mut path = LifecyclePath {
        times: vec![0.0],
        assets: vec![a0],
        consumption: vec![a0 * rate_at(sde.v0)],
        vitality: vec![sde.v0],
        tau: None,
        bankrupt: false,
        utility: 0.0,
    };
    let (mut t, mut a, mut v) = (0.0, a0, sde.v0);
    let mut utility = 0.0;
    let sqrt_dt = dt.sqrt();
    while t < LIFECYCLE_CAP {
        let zs: f64 = rng.sample(StandardNormal);
        let zv: f64 = if sde.sigma_v > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
        let v_next = v - sde.delta * dt + sde.sigma_v * sqrt_dt * zv;
        // fraction of the step lived
        let (frac, dies) = if v_next <= 0.0 { (v / (v - v_next), true) } else { (1.0, false) };
        let h = frac * dt;
        let v_end = if dies { 0.0 } else { v_next };
        let c0 = rate_at(v);
        let c1 = rate_at(v_end);
        // consumption can become unbounded as f → 0 at death
        let mean_rate = if c1.is_finite() { 0.5 * (c0 + c1) } else { c0 };
        let log_growth = (drift - mean_rate) * h + vol * frac.sqrt() * sqrt_dt * zs;
        let discount = (-market.beta * t).exp();
        if a > 0.0 {
            utility += discount * h * (a * c0).ln();
        } else {
            utility = f64::NEG_INFINITY;
        }
        a *= log_growth.exp();
        if !(a > 0.0) {
            a = 0.0;
            path.bankrupt = true;
        }
        t += h;
        v = v_end;
        if record {
            path.times.push(t);
            path.assets.push(a);
            path.consumption.push(if dies { f64::NAN } else { a * rate_at(v) });
            path.vitality.push(v);
        }
        if dies {
            path.tau = Some(t);
            if market.bequest > 0.0 {
                utility += market.bequest * (-market.beta * t).exp() * a.ln();
            }
            break;
        }
    }
    if !record {
        path.times = vec![t];
        path.assets = vec![a];
        path.vitality = vec![v];
        path.consumption.clear();
    }
    path.utility = utility;
    Ok(path)
}

/// Lifetime utilities from independent paths, path `i` on substream `i`.
pub fn simulate_utilities(
    a0: f64,
    market: &MarketParams,
    sde: &VitalitySDE,
    policy: ConsumptionPolicy,
    dt: f64,
    n_paths: usize,
    rng: &RngStream,
) -> Result<Vec<f64>> {
    check_inputs(a0, market, sde, policy, dt)?;
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut g = rng.substream(i as u64).generator();
            Ok(run_lifecycle(a0, market, sde, policy, dt, &mut g, false)?.utility)
        })
        .collect()
}

/// Mean and standard error of simulated lifetime utility.
pub fn expected_utility(
    a0: f64,
    market: &MarketParams,
    sde: &VitalitySDE,
    policy: ConsumptionPolicy,
    dt: f64,
    n_paths: usize,
    rng: &RngStream,
) -> Result<(f64, f64)> {
    Ok(mean_and_se(&simulate_utilities(a0, market, sde, policy, dt, n_paths, rng)?))
}

/// Value `f(v) ln a + g(v)` interpolated linearly in `v` on a solved grid.
pub fn value_at(vf: &ValueFunction, a: f64, v: f64, market: &MarketParams, sde: &VitalitySDE) -> Result<f64> {
    ensure_positive("a", a)?;
    let g = if v <= vf.v[0] {
        vf.g[0] * v / vf.v[0]
    } else if v >= *vf.v.last().expect("non-empty grid") {
        *vf.g.last().expect("non-empty grid")
    } else {
        let j = vf.v.partition_point(|x| *x <= v);
        let w = (v - vf.v[j - 1]) / (vf.v[j] - vf.v[j - 1]);
        vf.g[j - 1] * (1.0 - w) + vf.g[j] * w
    };
    Ok(consumption_factor(v, market, sde)? * a.ln() + g)
}

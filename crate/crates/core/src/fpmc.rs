//! Monte Carlo survival for jump-diffusion vitality with Brownian-bridge
//! non-crossing corrections between grid points.

use crate::distributions::InitialVitalityDist;
use crate::error::{Error, Result};
use crate::model::{laguerre_default, DiffusionSpec, Intensity, TrendSpec, VitalityModel};
use crate::numerics::{mean_and_se, RngStream};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How arrival times are placed once the jump count is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpTimeMethod {
    /// Each arrival drawn on `(previous arrival, T)` from the normalized
    /// intensity, as a truncated inter-arrival scheme.
    Sequential,
    /// Sorted iid draws with density `λ(s)/Λ(T)`: the exact conditional law.
    #[default]
    OrderStatistics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_paths: usize,
    /// Grid points per year of horizon.
    pub n_time_points: usize,
    pub rng: RngStream,
    pub antithetic: bool,
    pub jump_method: JumpTimeMethod,
}

/// Default grid density: monthly.
pub const DEFAULT_POINTS_PER_YEAR: usize = 12;

impl McConfig {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        McConfig {
            n_paths,
            n_time_points: DEFAULT_POINTS_PER_YEAR,
            rng: RngStream::new(seed, 0),
            antithetic: false,
            jump_method: JumpTimeMethod::OrderStatistics,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 100 {
            return Err(Error::param("n_paths", format!("must be >= 100, got {}", self.n_paths)));
        }
        if self.n_time_points < 1 {
            return Err(Error::param("n_time_points", "must be >= 1"));
        }
        Ok(())
    }

    fn units(&self) -> usize {
        if self.antithetic {
            self.n_paths / 2
        } else {
            self.n_paths
        }
    }

    fn with_stream(&self, rng: RngStream) -> Self {
        McConfig { rng, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_effective: usize,
}

impl McEstimate {
    pub fn exact(value: f64) -> Self {
        McEstimate {
            value,
            std_error: 0.0,
            n_effective: 0,
        }
    }

    pub(crate) fn from_samples(xs: &[f64]) -> Self {
        let (mean, se) = mean_and_se(xs);
        McEstimate {
            value: mean.clamp(0.0, 1.0),
            std_error: se,
            n_effective: xs.len(),
        }
    }
}

/// `Pr(B(t) < a t + b, t ≤ s | B(s) = x) = 1 − exp(−2b(as + b − x)/s)`,
/// or 0 when the start or end point is not strictly below the line.
pub fn linear_noncrossing_prob(a: f64, b: f64, s: f64, x: f64) -> f64 {
    let end_gap = a * s + b - x;
    if b <= 0.0 || end_gap <= 0.0 {
        return 0.0;
    }
    -(-2.0 * b * end_gap / s).exp_m1()
}

/// Bridge factor between consecutive skeleton points with gaps `g0`, `g1`
/// to the boundary (standard Brownian units), clamped to `[0, 1]`.
fn bridge_factor(g0: f64, g1: f64, dt: f64) -> f64 {
    let x = 2.0 * g0 * g1 / dt;
    if x > 40.0 {
        // 1 − e^{−40} already rounds to 1
        return 1.0;
    }
    (-(-x).exp_m1()).clamp(0.0, 1.0)
}

/// Poisson count; inversion with one uniform for moderate means, so counts
/// are monotone in the mean under a shared stream.
fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < 30.0 {
        let u: f64 = rng.random();
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u > cdf && k < 1_000 {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        k
    } else {
        Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
    }
}

/// Arrival times of the jump process on `(0, T)`, increasing.
pub fn simulate_jump_times<R: Rng + ?Sized>(
    intensity: &Intensity,
    horizon: f64,
    rng: &mut R,
    method: JumpTimeMethod,
) -> Vec<f64> {
    let total = intensity.integral(0.0, horizon);
    let k = sample_poisson(total, rng);
    if k == 0 {
        return Vec::new();
    }
    let mut times = Vec::with_capacity(k as usize);
    match method {
        JumpTimeMethod::OrderStatistics => {
            for _ in 0..k {
                let u: f64 = rng.random();
                times.push(intensity.inverse_integral(0.0, u * total).min(horizon));
            }
            times.sort_by(f64::total_cmp);
        }
        JumpTimeMethod::Sequential => {
            let mut last = 0.0;
            for _ in 0..k {
                let u: f64 = rng.random();
                let left = intensity.integral(last, horizon);
                let t = intensity.inverse_integral(last, u * left).min(horizon);
                times.push(t);
                last = t;
            }
        }
    }
    times
}

/// Generator whose output bits are optionally complemented, turning each
/// uniform `u` into `1 − u` up to one ulp.
struct Mirrored<R> {
    inner: R,
    flip: bool,
}

impl<R: RngCore> RngCore for Mirrored<R> {
    fn next_u32(&mut self) -> u32 {
        let x = self.inner.next_u32();
        if self.flip {
            !x
        } else {
            x
        }
    }

    fn next_u64(&mut self) -> u64 {
        let x = self.inner.next_u64();
        if self.flip {
            !x
        } else {
            x
        }
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst);
        if self.flip {
            dst.iter_mut().for_each(|b| *b = !*b);
        }
    }
}

struct PathEngine<'a> {
    model: &'a VitalityModel,
    sigma: f64,
    horizon: f64,
    grid: Vec<f64>,
    grid_trend: Vec<f64>,
    method: JumpTimeMethod,
}

impl<'a> PathEngine<'a> {
    fn new(model: &'a VitalityModel, horizon: f64, steps: usize, method: JumpTimeMethod) -> Result<Self> {
        let sigma = match model.diffusion {
            DiffusionSpec::BrownianConst { sigma } => sigma,
            DiffusionSpec::NoDiffusion => {
                return Err(Error::Unsupported(
                    "Monte Carlo needs sigma > 0; deterministic models go through survival_static".into(),
                ))
            }
        };
        if matches!(model.trend, TrendSpec::FrailtyScaled { .. }) {
            return Err(Error::Unsupported("Monte Carlo does not mix frailty-scaled trends".into()));
        }
        let grid: Vec<f64> = (0..=steps).map(|i| horizon * i as f64 / steps as f64).collect();
        let grid_trend = grid
            .iter()
            .map(|t| model.trend.cumulative(model.age_x, *t))
            .collect::<Result<Vec<_>>>()?;
        Ok(PathEngine {
            model,
            sigma,
            horizon,
            grid,
            grid_trend,
            method,
        })
    }

    /// One bridge-corrected path value `Q₁`; `sign = −1` mirrors the Brownian
    /// draws and complements the uniforms behind the jump draws.
    fn path(&self, v: f64, stream: RngStream, sign: f64) -> Result<f64> {
        let mut jump_rng = Mirrored {
            inner: stream.substream(0).generator(),
            flip: sign < 0.0,
        };
        let mut normal_rng = stream.substream(1).generator();
        let jumps = &self.model.jump;
        let (times, sizes) = if jumps.is_absent() {
            (Vec::new(), Vec::new())
        } else {
            let times = simulate_jump_times(&jumps.intensity, self.horizon, &mut jump_rng, self.method);
            if jumps.size.is_fatal() && !times.is_empty() {
                return Ok(0.0);
            }
            let sizes: Vec<f64> = times.iter().map(|_| jumps.size.sample(&mut jump_rng)).collect();
            (times, sizes)
        };
        let inv_sigma = 1.0 / self.sigma;
        let mut q = 1.0;
        let mut y_prev = 0.0;
        let mut gap_prev = v * inv_sigma;
        let mut t_prev = 0.0;
        let mut jump_sum = 0.0;
        let mut next_jump = 0;
        let mut gi = 1;
        while gi < self.grid.len() || next_jump < times.len() {
            let grid_t = if gi < self.grid.len() { self.grid[gi] } else { f64::INFINITY };
            let jump_t = if next_jump < times.len() { times[next_jump] } else { f64::INFINITY };
            let (u, trend) = if jump_t < grid_t {
                (jump_t, self.model.trend.cumulative(self.model.age_x, jump_t)?)
            } else {
                (grid_t, self.grid_trend[gi])
            };
            if jump_t >= grid_t {
                gi += 1;
            }
            // jumps strictly before u enter b⁻; jumps at u enter only b⁺
            let minus_sum = jump_sum;
            while next_jump < times.len() && times[next_jump] <= u {
                jump_sum += sizes[next_jump];
                next_jump += 1;
            }
            let dt = u - t_prev;
            if dt <= 0.0 {
                // coincident point: only the post-jump boundary changes
                let b_plus = (v - trend - jump_sum) * inv_sigma;
                if y_prev >= b_plus {
                    return Ok(0.0);
                }
                gap_prev = b_plus - y_prev;
                continue;
            }
            let z: f64 = normal_rng.sample(StandardNormal);
            let y = y_prev + sign * dt.sqrt() * z;
            let base = (v - trend) * inv_sigma;
            let b_plus = base - jump_sum * inv_sigma;
            let b_minus = base - minus_sum * inv_sigma;
            if y >= b_plus {
                return Ok(0.0);
            }
            q *= bridge_factor(gap_prev, b_minus - y, dt);
            if q == 0.0 {
                return Ok(0.0);
            }
            gap_prev = b_plus - y;
            y_prev = y;
            t_prev = u;
        }
        Ok(q)
    }

    fn estimate_sampled<F>(&self, cfg: &McConfig, initial_value: F) -> Result<McEstimate>
    where
        F: Fn(RngStream) -> f64 + Sync,
    {
        let units = cfg.units();
        let values = (0..units)
            .into_par_iter()
            .map(|i| {
                let stream = cfg.rng.substream(i as u64);
                let v = initial_value(stream.substream(2));
                if cfg.antithetic {
                    Ok(0.5 * (self.path(v, stream, 1.0)? + self.path(v, stream, -1.0)?))
                } else {
                    self.path(v, stream, 1.0)
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(McEstimate::from_samples(&values))
    }
}

fn grid_steps(horizon: f64, per_year: usize) -> usize {
    ((horizon * per_year as f64).ceil() as usize).max(1)
}

/// `Pr(τ > T | V(0) = v)` by the bridge-corrected Monte Carlo scheme.
pub fn mc_survival(model: &VitalityModel, v: f64, horizon: f64, cfg: &McConfig) -> Result<McEstimate> {
    model.validate()?;
    cfg.validate()?;
    if !(v > 0.0) {
        return Err(Error::param("v", format!("must be > 0, got {v}")));
    }
    if !(horizon >= 0.0) {
        return Err(Error::param("T", format!("must be >= 0, got {horizon}")));
    }
    let engine = PathEngine::new(model, horizon.max(f64::MIN_POSITIVE), grid_steps(horizon, cfg.n_time_points), cfg.jump_method)?;
    if horizon == 0.0 {
        return Ok(McEstimate::exact(1.0));
    }
    engine.estimate_sampled(cfg, |_| v)
}

/// `Pr(τ > T)` with the initial vitality integrated out.
///
/// Exponential initial laws use Gauss–Laguerre mixing with an independent
/// stream per node; other laws sample `V(0)` on each path.
pub fn survival_unconditional(model: &VitalityModel, horizon: f64, cfg: &McConfig) -> Result<McEstimate> {
    model.validate()?;
    cfg.validate()?;
    if horizon == 0.0 {
        return Ok(McEstimate::exact(1.0));
    }
    match model.initial {
        InitialVitalityDist::Degenerate { v } => mc_survival(model, v, horizon, cfg),
        InitialVitalityDist::Exponential { rate } => {
            let rule = laguerre_default()?;
            let mut value = 0.0;
            let mut var = 0.0;
            let mut n_eff = 0;
            for (j, (u, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
                let node_cfg = cfg.with_stream(cfg.rng.substream(1_000_000 + j as u64));
                let est = mc_survival(model, u / rate, horizon, &node_cfg)?;
                value += w * est.value;
                var += w * w * est.std_error * est.std_error;
                n_eff += est.n_effective;
            }
            Ok(McEstimate {
                value: value.clamp(0.0, 1.0),
                std_error: var.sqrt(),
                n_effective: n_eff,
            })
        }
        ref initial => {
            let engine = PathEngine::new(model, horizon, grid_steps(horizon, cfg.n_time_points), cfg.jump_method)?;
            engine.estimate_sampled(cfg, |s| initial.sample(&mut s.generator()))
        }
    }
}

/// Integer-step skeleton for the piecewise-linear trend with fatal jumps.
struct UnitSteps {
    sigma: f64,
    trend: Vec<f64>,
    no_jump: Vec<f64>,
}

impl UnitSteps {
    fn new(model: &VitalityModel, k_max: usize) -> Result<Self> {
        model.validate()?;
        if !(model.jump.is_absent() || model.jump.size.is_fatal()) {
            return Err(Error::Unsupported("piecewise survival needs fatal (or no) jumps".into()));
        }
        if matches!(model.trend, TrendSpec::FrailtyScaled { .. }) {
            return Err(Error::Unsupported("piecewise survival does not mix frailty-scaled trends".into()));
        }
        let sigma = model.diffusion.sigma();
        let trend = (0..=k_max)
            .map(|i| model.trend.cumulative(model.age_x, i as f64))
            .collect::<Result<Vec<_>>>()?;
        let no_jump = (0..=k_max)
            .map(|i| (-model.jump.intensity.integral(0.0, i as f64)).exp())
            .collect();
        Ok(UnitSteps { sigma, trend, no_jump })
    }

    /// Survival products for `k = 0..=k_max` along one Brownian path at each `v`.
    fn accumulate(&self, vs: &[f64], weights: &[f64], normals: &[f64], out: &mut [f64]) {
        for (v, w) in vs.iter().zip(weights) {
            if self.sigma == 0.0 {
                for (k, o) in out.iter_mut().enumerate() {
                    if *v > self.trend[k] || k == 0 {
                        *o += w * self.no_jump[k];
                    }
                }
                continue;
            }
            let inv = 1.0 / self.sigma;
            let mut q = 1.0;
            let mut b_prev = 0.0;
            let mut gap_prev = v * inv;
            out[0] += w;
            for k in 1..out.len() {
                if q == 0.0 {
                    break;
                }
                let b = b_prev + normals[k - 1];
                let gap = (v - self.trend[k]) * inv - b;
                if gap <= 0.0 {
                    q = 0.0;
                } else {
                    q *= bridge_factor(gap_prev, gap, 1.0);
                }
                out[k] += w * q * self.no_jump[k];
                gap_prev = gap;
                b_prev = b;
            }
        }
    }
}

impl UnitSteps {
    /// Survival for `k = 0..=k_max` along one path with `V(0) ~ Exp(rate)`
    /// integrated out: given the running maximum `M` of the lost vitality,
    /// `V(0) − M` is again `Exp(rate)`, so one draw `u` of it suffices.
    fn accumulate_exponential(&self, rate: f64, u: f64, normals: &[f64], out: &mut [f64]) {
        let inv = 1.0 / self.sigma;
        let mut lost = Vec::with_capacity(out.len());
        lost.push(0.0);
        let mut b = 0.0;
        for k in 1..out.len() {
            b += normals[k - 1];
            lost.push(self.trend[k] + self.sigma * b);
        }
        // every gap is at least u, so a large u makes each bridge factor exactly 1
        let clear = 2.0 * (u * inv).powi(2) > 40.001;
        let mut running_max: f64 = 0.0;
        out[0] += 1.0;
        for k in 1..out.len() {
            running_max = running_max.max(lost[k]);
            let v = running_max + u;
            let mut q = (-rate * running_max).exp() * self.no_jump[k];
            if clear {
                out[k] += q;
                continue;
            }
            for j in 1..=k {
                q *= bridge_factor((v - lost[j - 1]) * inv, (v - lost[j]) * inv, 1.0);
                if q == 0.0 {
                    break;
                }
            }
            out[k] += q;
        }
    }
}

/// `ₖp_x(v)` for the piecewise-linear trend with fatal jumps.
pub fn piecewise_survival_fatal(model: &VitalityModel, v: f64, k: usize, cfg: &McConfig) -> Result<McEstimate> {
    Ok(piecewise_survival_curve(model, Some(v), k, cfg)?[k])
}

/// `ₖp_x` for every `k = 0..=k_max` from one set of Brownian paths.
///
/// With `v = None` the initial law is integrated out. An exponential law is
/// integrated analytically above the running maximum of each path; other
/// laws contribute one sampled `V(0)` per path.
pub fn piecewise_survival_curve(
    model: &VitalityModel,
    v: Option<f64>,
    k_max: usize,
    cfg: &McConfig,
) -> Result<Vec<McEstimate>> {
    cfg.validate()?;
    let steps = UnitSteps::new(model, k_max)?;
    if steps.sigma == 0.0 && v.is_none() {
        return steps
            .trend
            .iter()
            .zip(&steps.no_jump)
            .map(|(y, nj)| Ok(McEstimate::exact(model.initial.survival(*y)? * nj)))
            .collect();
    }
    let (nodes, weights): (Vec<f64>, Vec<f64>) = match (v, &model.initial) {
        (Some(v), _) => {
            if !(v > 0.0) {
                return Err(Error::param("v", format!("must be > 0, got {v}")));
            }
            (vec![v], vec![1.0])
        }
        (None, InitialVitalityDist::Degenerate { v }) => (vec![*v], vec![1.0]),
        (None, _) => (Vec::new(), Vec::new()),
    };
    let exp_rate = match (v, &model.initial) {
        (None, InitialVitalityDist::Exponential { rate }) => Some(*rate),
        _ => None,
    };
    let sampled = nodes.is_empty();
    let deterministic = steps.sigma == 0.0;
    let units = if deterministic && !sampled { 1 } else { cfg.units() };
    let rows: Vec<Vec<f64>> = (0..units)
        .into_par_iter()
        .map(|i| {
            let stream = cfg.rng.substream(i as u64);
            let mut g = stream.substream(1).generator();
            let normals: Vec<f64> = (0..k_max).map(|_| g.sample(StandardNormal)).collect();
            let mut out = vec![0.0; k_max + 1];
            if let Some(rate) = exp_rate {
                let u = model.initial.sample(&mut stream.substream(2).generator());
                steps.accumulate_exponential(rate, u, &normals, &mut out);
                if cfg.antithetic {
                    let flipped: Vec<f64> = normals.iter().map(|z| -z).collect();
                    let mut mirror = vec![0.0; k_max + 1];
                    steps.accumulate_exponential(rate, u, &flipped, &mut mirror);
                    for (o, m) in out.iter_mut().zip(&mirror) {
                        *o = 0.5 * (*o + m);
                    }
                }
                return out;
            }
            let (vs, ws) = if sampled {
                (vec![model.initial.sample(&mut stream.substream(2).generator())], vec![1.0])
            } else {
                (nodes.clone(), weights.clone())
            };
            steps.accumulate(&vs, &ws, &normals, &mut out);
            if cfg.antithetic && !deterministic {
                let flipped: Vec<f64> = normals.iter().map(|z| -z).collect();
                let mut mirror = vec![0.0; k_max + 1];
                steps.accumulate(&vs, &ws, &flipped, &mut mirror);
                for (o, m) in out.iter_mut().zip(&mirror) {
                    *o = 0.5 * (*o + m);
                }
            }
            out
        })
        .collect();
    let mut result = Vec::with_capacity(k_max + 1);
    let mut column = vec![0.0; rows.len()];
    for k in 0..=k_max {
        for (c, row) in column.iter_mut().zip(&rows) {
            *c = row[k];
        }
        let mut est = McEstimate::from_samples(&column);
        if k == 0 {
            est = McEstimate::exact(1.0);
        }
        result.push(est);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::JumpSpec;

    #[test]
    fn noncrossing_examples() {
        assert_eq!(linear_noncrossing_prob(0.3, 0.0, 1.0, -1.0), 0.0);
        assert_eq!(linear_noncrossing_prob(0.5, 1.0, 2.0, 2.0), 0.0);
        let p = linear_noncrossing_prob(0.0, 1.0, 1.0, 0.0);
        assert!((p - (1.0 - (-2f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn zero_intensity_gives_no_jumps() {
        let mut rng = RngStream::new(5, 0).generator();
        let i = Intensity::ConstantIntensity { rate: 0.0 };
        for _ in 0..100 {
            assert!(simulate_jump_times(&i, 10.0, &mut rng, JumpTimeMethod::OrderStatistics).is_empty());
        }
    }

    #[test]
    fn jump_counts_have_poisson_mean() {
        let mut rng = RngStream::new(6, 0).generator();
        let i = Intensity::ConstantIntensity { rate: 2.0 };
        let n = 100_000;
        let total: usize = (0..n)
            .map(|_| simulate_jump_times(&i, 5.0, &mut rng, JumpTimeMethod::OrderStatistics).len())
            .sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 10.0).abs() < 0.03, "mean = {mean}");
    }

    #[test]
    fn poisson_inversion_is_monotone_in_mean() {
        for seed in 0..200 {
            let a = sample_poisson(0.4, &mut RngStream::new(seed, 0).generator());
            let b = sample_poisson(1.3, &mut RngStream::new(seed, 0).generator());
            assert!(a <= b);
        }
    }

    #[test]
    fn far_boundary_survives() {
        let m = VitalityModel {
            diffusion: DiffusionSpec::BrownianConst { sigma: 0.3 },
            ..VitalityModel::gompertz(60.0, 0.0001744, 1.082)
        };
        let est = mc_survival(&m, 50.0, 1.0, &McConfig::new(2_000, 1)).unwrap();
        assert!(est.value >= 0.999);
        assert!(est.std_error <= 0.5 / (est.n_effective as f64).sqrt());
    }

    #[test]
    fn rejects_deterministic_models() {
        let m = VitalityModel::gompertz(60.0, 0.0001744, 1.082);
        assert!(mc_survival(&m, 1.0, 1.0, &McConfig::new(1_000, 1)).is_err());
        let mut cfg = McConfig::new(10, 1);
        cfg.n_paths = 10;
        let m2 = VitalityModel {
            diffusion: DiffusionSpec::BrownianConst { sigma: 0.3 },
            ..m
        };
        assert!(mc_survival(&m2, 1.0, 1.0, &cfg).is_err());
    }

    #[test]
    fn piecewise_zero_steps_is_one() {
        let m = VitalityModel {
            diffusion: DiffusionSpec::BrownianConst { sigma: 0.01 },
            jump: JumpSpec::fatal(0.01),
            ..VitalityModel::gompertz(60.0, 0.0001744, 1.082)
        };
        let e = piecewise_survival_fatal(&m, 1.0, 0, &McConfig::new(1_000, 2)).unwrap();
        assert_eq!(e.value, 1.0);
        let nonfatal = VitalityModel {
            jump: JumpSpec {
                intensity: Intensity::ConstantIntensity { rate: 0.1 },
                size: crate::distributions::JumpSizeDist::ExponentialJump { rate: 1.0 },
            },
            ..m
        };
        assert!(piecewise_survival_fatal(&nonfatal, 1.0, 3, &McConfig::new(1_000, 2)).is_err());
    }

    #[test]
    fn deterministic_paths_are_reproducible() {
        let m = VitalityModel {
            diffusion: DiffusionSpec::BrownianConst { sigma: 0.3 },
            jump: JumpSpec::fatal(0.05),
            ..VitalityModel::pure_trend(
                0.0,
                InitialVitalityDist::Exponential { rate: 1.0 },
                TrendSpec::ConstantRate { rate: 0.5 },
            )
        };
        let cfg = McConfig::new(500, 77);
        let a = mc_survival(&m, 1.0, 2.0, &cfg).unwrap();
        let b = mc_survival(&m, 1.0, 2.0, &cfg).unwrap();
        assert_eq!(a, b);
    }
}

//! Maximum-likelihood fitting of the Gompertz vitality model to cohort deaths.

use super::data::CohortData;
use super::likelihood::{log_likelihood, model_survival_curve, LikelihoodOptions, SurvivalRoute};
use super::simplex::{nelder_mead, SimplexOptions};
use crate::distributions::{InitialVitalityDist, JumpSizeDist};
use crate::error::{Error, Result};
use crate::fpmc::McConfig;
use crate::model::{DiffusionSpec, Intensity, JumpSpec, TrendSpec, VitalityModel};
use crate::numerics::RngStream;
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Which of `b`, `c`, `σ` the optimiser may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamMask {
    pub b: bool,
    pub c: bool,
    pub sigma: bool,
}

impl ParamMask {
    pub const GOMPERTZ: ParamMask = ParamMask {
        b: true,
        c: true,
        sigma: false,
    };
    pub const ALL: ParamMask = ParamMask {
        b: true,
        c: true,
        sigma: true,
    };

    fn count(&self) -> usize {
        self.b as usize + self.c as usize + self.sigma as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub starts: usize,
    pub simplex: SimplexOptions,
    /// Stream and path count used for every simulated likelihood evaluation.
    pub mc: McConfig,
    pub likelihood: LikelihoodOptions,
    /// Seeds the perturbed starting points.
    pub seed: u64,
    pub std_errors: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            starts: 5,
            simplex: SimplexOptions::default(),
            mc: McConfig::new(10_000, 0),
            likelihood: LikelihoodOptions::default(),
            seed: 0,
            std_errors: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub params: BTreeMap<String, f64>,
    /// Maximised log-likelihood including the multinomial constant.
    pub loglik: f64,
    pub loglik_constant: f64,
    pub n_iterations: usize,
    pub converged: bool,
    pub std_errors: Option<BTreeMap<String, f64>>,
    /// Set when the optimum sits at the edge of the admissible region, or
    /// when `c − 1` (or a free `σ`) is within two standard errors of zero.
    pub at_boundary: bool,
    /// Set when some observed cell had vanishing model probability.
    pub floored: bool,
    pub model: VitalityModel,
}

/// Admissible box in transformed coordinates `(ln b, ln(c − 1), ln σ)`.
const BOX: [(f64, f64); 3] = [(-40.0, 0.0), (-25.0, 1.0), (-25.0, 1.0)];
const BOUNDARY_MARGIN: f64 = 0.5;
/// `c − 1` or `σ` closer to zero than this many standard errors counts as boundary.
const BOUNDARY_SE: f64 = 2.0;
const SIGMA_START: f64 = 0.01;
const START_SPREAD: f64 = 0.25;
const HESSIAN_STEP: f64 = 1e-3;

/// Maps free coordinates to and from a Gompertz vitality model.
struct Coordinates {
    template: VitalityModel,
    mask: ParamMask,
    /// Index into `BOX` of each free coordinate.
    axes: Vec<usize>,
}

impl Coordinates {
    fn new(template: &VitalityModel, mask: ParamMask) -> Result<Self> {
        if !matches!(template.trend, TrendSpec::GompertzTrend { .. }) {
            return Err(Error::Unsupported("fitting needs a Gompertz trend".into()));
        }
        if mask.count() == 0 {
            return Err(Error::param("mask", "no free parameters"));
        }
        let mut template = template.clone();
        if mask.sigma && template.diffusion.sigma() == 0.0 {
            template.diffusion = DiffusionSpec::BrownianConst { sigma: SIGMA_START };
        }
        template.validate()?;
        let axes = [mask.b, mask.c, mask.sigma]
            .iter()
            .enumerate()
            .filter(|(_, on)| **on)
            .map(|(i, _)| i)
            .collect();
        Ok(Coordinates { template, mask, axes })
    }

    fn natural(&self) -> [f64; 3] {
        let TrendSpec::GompertzTrend { b, c } = self.template.trend else {
            unreachable!("checked in new")
        };
        [b, c, self.template.diffusion.sigma()]
    }

    fn start(&self) -> Vec<f64> {
        let [b, c, s] = self.natural();
        let all = [b.ln(), (c - 1.0).ln(), s.ln()];
        self.axes.iter().map(|&i| all[i].clamp(BOX[i].0, BOX[i].1)).collect()
    }

    fn inside(&self, x: &[f64]) -> bool {
        self.axes.iter().zip(x).all(|(&i, v)| v.is_finite() && *v >= BOX[i].0 && *v <= BOX[i].1)
    }

    fn near_edge(&self, x: &[f64]) -> bool {
        self.axes
            .iter()
            .zip(x)
            .any(|(&i, v)| *v - BOX[i].0 < BOUNDARY_MARGIN || BOX[i].1 - *v < BOUNDARY_MARGIN)
    }

    fn values(&self, x: &[f64]) -> [f64; 3] {
        let mut nat = self.natural();
        for (&i, v) in self.axes.iter().zip(x) {
            nat[i] = match i {
                1 => 1.0 + v.exp(),
                _ => v.exp(),
            };
        }
        nat
    }

    fn model(&self, x: &[f64]) -> VitalityModel {
        let [b, c, sigma] = self.values(x);
        let mut m = self.template.clone();
        m.trend = TrendSpec::GompertzTrend { b, c };
        if sigma > 0.0 {
            m.diffusion = DiffusionSpec::BrownianConst { sigma };
        }
        m
    }

    fn named(&self, x: &[f64]) -> BTreeMap<String, f64> {
        let [b, c, sigma] = self.values(x);
        let mut out = BTreeMap::from([("b".to_string(), b), ("c".to_string(), c)]);
        if self.mask.sigma || sigma > 0.0 {
            out.insert("sigma".to_string(), sigma);
        }
        out
    }

    /// Delta-method standard errors from a covariance in free coordinates.
    fn std_errors(&self, x: &[f64], cov: &[Vec<f64>]) -> BTreeMap<String, f64> {
        let nat = self.values(x);
        self.axes
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let scale = if i == 1 { nat[1] - 1.0 } else { nat[i] };
                let name = ["b", "c", "sigma"][i].to_string();
                (name, scale * cov[k][k].sqrt())
            })
            .collect()
    }
}

/// Inverse of a small symmetric positive-definite matrix, or `None`.
fn spd_inverse(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut inv = vec![vec![0.0; n]; n];
    for col in 0..n {
        let mut y = vec![0.0; n];
        for i in 0..n {
            let rhs = if i == col { 1.0 } else { 0.0 };
            y[i] = (rhs - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
        }
        for i in (0..n).rev() {
            inv[i][col] = (y[i] - (i + 1..n).map(|k| l[k][i] * inv[k][col]).sum::<f64>()) / l[i][i];
        }
    }
    Some(inv)
}

fn hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let shifted = |di: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for (i, d) in di {
            y[*i] += d;
        }
        f(&y)
    };
    let f0 = f(x);
    let mut hm = vec![vec![0.0; n]; n];
    for i in 0..n {
        hm[i][i] = (shifted(&[(i, h)]) - 2.0 * f0 + shifted(&[(i, -h)])) / (h * h);
        for j in 0..i {
            let v = (shifted(&[(i, h), (j, h)]) - shifted(&[(i, h), (j, -h)]) - shifted(&[(i, -h), (j, h)])
                + shifted(&[(i, -h), (j, -h)]))
                / (4.0 * h * h);
            hm[i][j] = v;
            hm[j][i] = v;
        }
    }
    hm
}

/// Maximum-likelihood estimates of the masked parameters of `template`.
///
/// `fixed_intensity`, when given, replaces the template's jump component with
/// fatal jumps at that intensity.
pub fn fit_mle(
    template: &VitalityModel,
    mask: ParamMask,
    data: &CohortData,
    fixed_intensity: Option<&Intensity>,
    opts: &FitOptions,
) -> Result<FitResult> {
    data.validate()?;
    if opts.starts == 0 {
        return Err(Error::param("starts", "must be >= 1"));
    }
    let mut template = template.clone();
    template.age_x = data.age_x as f64;
    if let Some(intensity) = fixed_intensity {
        template.jump = JumpSpec {
            intensity: intensity.clone(),
            size: JumpSizeDist::Fatal,
        };
    }
    let coords = Coordinates::new(&template, mask)?;
    let route = SurvivalRoute::for_model(&coords.template, opts.mc);
    if let SurvivalRoute::PiecewiseMonteCarlo(cfg) = &route {
        cfg.validate()?;
    }
    let lik = opts.likelihood;
    let objective = |x: &[f64]| -> f64 {
        if !coords.inside(x) {
            return f64::INFINITY;
        }
        log_likelihood(&coords.model(x), data, &route, lik).map_or(f64::INFINITY, |ll| -ll.kernel)
    };
    let base = coords.start();
    let starts: Vec<Vec<f64>> = (0..opts.starts)
        .map(|j| {
            if j == 0 {
                return base.clone();
            }
            let mut g = RngStream::new(opts.seed, 0).substream(j as u64).generator();
            base.iter()
                .zip(&coords.axes)
                .map(|(v, &i)| {
                    let z: f64 = g.sample(StandardNormal);
                    (v + START_SPREAD * z).clamp(BOX[i].0, BOX[i].1)
                })
                .collect()
        })
        .collect();
    let runs: Vec<_> = starts
        .par_iter()
        .map(|s| nelder_mead(objective, s, opts.simplex))
        .collect();
    let best = runs
        .iter()
        .min_by(|a, b| a.f.total_cmp(&b.f))
        .expect("at least one start");
    if !best.f.is_finite() {
        return Err(Error::NonFinite("log-likelihood at every start".into()));
    }
    let model = coords.model(&best.x);
    let ll = log_likelihood(&model, data, &route, lik)?;
    let near_edge = coords.near_edge(&best.x);
    let std_errors = if near_edge {
        None
    } else {
        spd_inverse(&hessian(&objective, &best.x, HESSIAN_STEP))
            .map(|cov| coords.std_errors(&best.x, &cov))
            .filter(|m| m.values().all(|v| v.is_finite()))
    };
    let params = coords.named(&best.x);
    let indistinct = |name: &str, floor: f64| match (&std_errors, params.get(name)) {
        (Some(se), Some(v)) => se.get(name).is_some_and(|s| v - floor < BOUNDARY_SE * s),
        _ => false,
    };
    let at_boundary = near_edge || indistinct("c", 1.0) || (mask.sigma && indistinct("sigma", 0.0));
    Ok(FitResult {
        params,
        loglik: ll.value,
        loglik_constant: ll.constant,
        n_iterations: best.iterations,
        converged: best.converged,
        std_errors: std_errors.filter(|_| opts.std_errors),
        at_boundary,
        floored: ll.floored,
        model,
    })
}

/// Log-hazard least squares on crude death rates, used as a starting point.
fn gompertz_start(data: &CohortData) -> (f64, f64) {
    let mut alive = data.exposure as f64;
    let mut pts = Vec::new();
    for (t, d) in data.deaths.iter().enumerate() {
        let q = *d as f64 / alive;
        if *d > 0 && q < 1.0 {
            pts.push((data.age_x as f64 + t as f64 + 0.5, (-(-q).ln_1p()).ln()));
        }
        alive -= *d as f64;
    }
    if pts.len() < 2 {
        return (1e-4, 1.08);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = (sxy / sxx).max(1e-3);
    let b = (my - slope * mx).exp();
    (b.clamp(1e-17, 0.5), slope.exp())
}

/// Fits the pure Gompertz law `S(t) = exp(−b c^x (c^t − 1)/ln c)` by closed form.
pub fn fit_gompertz_law(data: &CohortData, opts: &FitOptions) -> Result<FitResult> {
    data.validate()?;
    let (b, c) = gompertz_start(data);
    let template = VitalityModel::gompertz(data.age_x as f64, b, c);
    fit_mle(&template, ParamMask::GOMPERTZ, data, None, opts)
}

/// Synthetic deaths: sequential binomial draws along `survival[t] = Pr(τ > t)`.
pub fn simulate_cohort<R: Rng + ?Sized>(
    survival: &[f64],
    age_x: u32,
    exposure: u64,
    rng: &mut R,
) -> Result<CohortData> {
    if survival.len() < 2 {
        return Err(Error::param("survival", "need at least two points"));
    }
    let mut alive = exposure;
    let mut deaths = Vec::with_capacity(survival.len() - 1);
    for w in survival.windows(2) {
        let p = if w[0] > 0.0 { (1.0 - w[1] / w[0]).clamp(0.0, 1.0) } else { 1.0 };
        let d = Binomial::new(alive, p)
            .map_err(|e| Error::param("survival", e.to_string()))?
            .sample(rng);
        deaths.push(d);
        alive -= d;
    }
    CohortData::new(age_x, exposure, deaths)
}

/// Synthetic cohort from `model` followed for `years` years.
pub fn simulate_model_cohort<R: Rng + ?Sized>(
    model: &VitalityModel,
    exposure: u64,
    years: usize,
    route: &SurvivalRoute,
    rng: &mut R,
) -> Result<CohortData> {
    let survival = model_survival_curve(model, years, route)?;
    let age = model.age_x;
    if age.fract() != 0.0 {
        return Err(Error::param("age_x", "must be a whole number of years"));
    }
    simulate_cohort(&survival, age as u32, exposure, rng)
}

/// Exponential initial vitality with unit mean, the fitting default.
pub fn unit_exponential() -> InitialVitalityDist {
    InitialVitalityDist::Exponential { rate: 1.0 }
}

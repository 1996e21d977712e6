//! Multinomial log-likelihood of cohort death counts.

use super::data::CohortData;
use crate::error::{Error, Result};
use crate::fpmc::{piecewise_survival_curve, McConfig};
use crate::model::{survival_static, DiffusionSpec, VitalityModel};
use crate::numerics::special::ln_factorial;
use serde::{Deserialize, Serialize};

/// Smallest cell probability passed to `ln`.
pub const CELL_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodOptions {
    /// Adds a final cell for lives still alive after the last observed age,
    /// with probability `Pr(τ > T_max + 1)`.
    pub censor_survivors: bool,
}

impl Default for LikelihoodOptions {
    fn default() -> Self {
        LikelihoodOptions { censor_survivors: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLikelihood {
    /// `kernel + constant`.
    pub value: f64,
    /// Parameter-dependent part `Σ D ln(cell)` (plus the survivor cell).
    pub kernel: f64,
    /// Multinomial coefficient `ln E! − Σ ln D!` (and `− ln S!` when censoring).
    pub constant: f64,
    /// Set when an observed cell had probability below [`CELL_FLOOR`].
    pub floored: bool,
}

/// How the model survival curve `Pr(τ > t)`, `t = 0..=T_max+1`, is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurvivalRoute {
    /// Closed forms; fails for models without one.
    ClosedForm,
    /// Unit-step Brownian skeleton with fatal jumps under a fixed stream.
    PiecewiseMonteCarlo(McConfig),
}

impl SurvivalRoute {
    /// Closed form for pure-trend models, simulation otherwise.
    pub fn for_model(model: &VitalityModel, cfg: McConfig) -> Self {
        let diffusion_free = matches!(model.diffusion, DiffusionSpec::NoDiffusion) || model.diffusion.sigma() == 0.0;
        if diffusion_free && model.jump.is_absent() {
            SurvivalRoute::ClosedForm
        } else {
            SurvivalRoute::PiecewiseMonteCarlo(cfg)
        }
    }
}

/// `Pr(τ > t)` for `t = 0, 1, …, k_max`.
pub fn model_survival_curve(model: &VitalityModel, k_max: usize, route: &SurvivalRoute) -> Result<Vec<f64>> {
    match route {
        SurvivalRoute::ClosedForm => (0..=k_max).map(|t| survival_static(model, t as f64)).collect(),
        SurvivalRoute::PiecewiseMonteCarlo(cfg) => {
            Ok(piecewise_survival_curve(model, None, k_max, cfg)?.iter().map(|e| e.value).collect())
        }
    }
}

/// Death-cell probabilities `S(t) − S(t+1)` and the survivor mass `S(last)`.
pub fn cell_probabilities(survival: &[f64]) -> (Vec<f64>, f64) {
    let cells = survival.windows(2).map(|w| w[0] - w[1]).collect();
    (cells, survival.last().copied().unwrap_or(1.0))
}

/// Multinomial constant `ln E! − Σ ln D!`, less `ln S!` when survivors form a cell.
pub fn multinomial_constant(data: &CohortData, censor_survivors: bool) -> f64 {
    let mut c = ln_factorial(data.exposure) - data.deaths.iter().map(|d| ln_factorial(*d)).sum::<f64>();
    if censor_survivors {
        c -= ln_factorial(data.survivors());
    }
    c
}

/// Log-likelihood given `survival[t] = Pr(τ > t)` for `t = 0..=T_max+1`.
pub fn log_likelihood_from_survival(
    survival: &[f64],
    data: &CohortData,
    opts: LikelihoodOptions,
) -> Result<LogLikelihood> {
    data.validate()?;
    let need = data.deaths.len() + 1;
    if survival.len() != need {
        return Err(Error::param(
            "survival",
            format!("need {need} values for t = 0..={}, got {}", need - 1, survival.len()),
        ));
    }
    for (t, s) in survival.iter().enumerate() {
        if !(s.is_finite() && (0.0..=1.0).contains(s)) {
            return Err(Error::param("survival", format!("value {s} at t = {t} is not a probability")));
        }
    }
    if let Some(t) = survival.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::NonMonotoneSurvival { t: t + 1 });
    }
    let (cells, tail) = cell_probabilities(survival);
    let mut floored = false;
    let mut term = |count: u64, p: f64| {
        if count == 0 {
            return 0.0;
        }
        if p < CELL_FLOOR {
            floored = true;
        }
        count as f64 * p.max(CELL_FLOOR).ln()
    };
    let mut kernel: f64 = data.deaths.iter().zip(&cells).map(|(d, p)| term(*d, *p)).sum();
    if opts.censor_survivors {
        kernel += term(data.survivors(), tail);
    }
    let constant = multinomial_constant(data, opts.censor_survivors);
    Ok(LogLikelihood {
        value: kernel + constant,
        kernel,
        constant,
        floored,
    })
}

/// Log-likelihood of `data` under `model`.
pub fn log_likelihood(
    model: &VitalityModel,
    data: &CohortData,
    route: &SurvivalRoute,
    opts: LikelihoodOptions,
) -> Result<LogLikelihood> {
    if model.age_x != data.age_x as f64 {
        return Err(Error::param(
            "age_x",
            format!("model starts at {} but the data start at {}", model.age_x, data.age_x),
        ));
    }
    let survival = model_survival_curve(model, data.deaths.len(), route)?;
    log_likelihood_from_survival(&survival, data, opts)
}

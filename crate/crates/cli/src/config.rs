//! Run configuration: a TOML document with one section per subcommand and a
//! shared `[model]` section whose components carry explicit `kind` tags.

use crate::CliError;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use vitalkit::actuarial::DisabilityQuery;
use vitalkit::cod::CodParams;
use vitalkit::lifecycle::{ConsumptionPolicy, MarketParams, VitalitySDE, MAX_LIFECYCLE_DT};
use vitalkit::{Error, InitialVitalityDist, VitalityModel};

/// Explicit points or an arithmetic range `start, start + step, …, end`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Points(Vec<f64>),
    Range { start: f64, end: f64, step: f64 },
}

const MAX_GRID_POINTS: usize = 1_000_000;

impl Grid {
    pub fn points(&self, path: &str) -> Result<Vec<f64>, CliError> {
        let pts = match self {
            Grid::Points(p) => p.clone(),
            Grid::Range { start, end, step } => {
                if !(start.is_finite() && end.is_finite() && *end >= *start) {
                    return Err(CliError::config(path, "range needs finite start <= end"));
                }
                if !(*step > 0.0 && step.is_finite()) {
                    return Err(CliError::config(format!("{path}.step"), "must be > 0"));
                }
                let n = ((end - start) / step + 1e-9).floor();
                if n >= MAX_GRID_POINTS as f64 {
                    return Err(CliError::config(path, format!("more than {MAX_GRID_POINTS} points")));
                }
                (0..=n as usize).map(|i| start + i as f64 * step).collect()
            }
        };
        if pts.is_empty() {
            return Err(CliError::config(path, "grid is empty"));
        }
        if pts.iter().any(|t| !t.is_finite()) {
            return Err(CliError::config(path, "grid values must be finite"));
        }
        Ok(pts)
    }

    fn non_negative(&self, path: &str) -> Result<Vec<f64>, CliError> {
        let pts = self.points(path)?;
        if pts.iter().any(|t| *t < 0.0) {
            return Err(CliError::config(path, "grid values must be >= 0"));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SurviveMethod {
    #[default]
    Auto,
    ClosedForm,
    MonteCarlo,
    Laplace,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurviveSection {
    pub horizons: Grid,
    /// Condition on this initial vitality.
    pub v: Option<f64>,
    #[serde(default)]
    pub method: SurviveMethod,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default = "default_points_per_year")]
    pub points_per_year: usize,
    #[serde(default)]
    pub antithetic: bool,
}

fn default_paths() -> usize {
    10_000
}

fn default_points_per_year() -> usize {
    vitalkit::fpmc::DEFAULT_POINTS_PER_YEAR
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        MonteCarloSection {
            n_paths: default_paths(),
            points_per_year: default_points_per_year(),
            antithetic: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FreeParam {
    B,
    C,
    Sigma,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    /// Cohort CSV, relative to the config file.
    pub data: PathBuf,
    /// Accident-rate table used to fix the jump intensity.
    pub accidents: Option<PathBuf>,
    #[serde(default = "default_free")]
    pub free: Vec<FreeParam>,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default = "yes")]
    pub censor_survivors: bool,
    #[serde(default = "yes")]
    pub std_errors: bool,
}

fn default_free() -> Vec<FreeParam> {
    vec![FreeParam::B, FreeParam::C]
}

fn default_starts() -> usize {
    5
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PriceMethod {
    #[default]
    Auto,
    Simulate,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceSection {
    pub force_of_interest: f64,
    pub v: Option<f64>,
    #[serde(default = "default_density_order")]
    pub density_order: usize,
    #[serde(default)]
    pub method: PriceMethod,
}

fn default_density_order() -> usize {
    vitalkit::actuarial::ValuationOptions::default().density_order
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodSection {
    pub age_x: f64,
    pub b: f64,
    pub c: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub v: f64,
    /// Times at which to report sub-densities and the death-time cdf.
    pub times: Option<Grid>,
}

impl CodSection {
    pub fn params(&self) -> CodParams {
        CodParams {
            age_x: self.age_x,
            b: self.b,
            c: self.c,
            lambda: self.lambda,
            alpha: self.alpha,
            v: self.v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifecycleSection {
    pub market: MarketParams,
    pub vitality: VitalitySDE,
    #[serde(default = "default_wealth")]
    pub a0: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Vitality levels of the policy table; the solver adds 1e-3 below them if needed.
    pub v_grid: Option<Grid>,
    #[serde(default = "default_policy")]
    pub policy: ConsumptionPolicy,
    /// Number of simulated lives written to `paths_file`.
    #[serde(default)]
    pub paths: usize,
    pub paths_file: Option<PathBuf>,
}

fn default_wealth() -> f64 {
    100.0
}

fn default_dt() -> f64 {
    MAX_LIFECYCLE_DT
}

fn default_policy() -> ConsumptionPolicy {
    ConsumptionPolicy::Optimal
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisabilityKind {
    HealthyStay,
    Recovery,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisabilitySection {
    pub kind: DisabilityKind,
    pub threshold: f64,
    pub horizons: Grid,
    pub threshold_dist: Option<InitialVitalityDist>,
    /// Simulated paths for the recovery cross-check; 0 skips it.
    #[serde(default)]
    pub mc_paths: usize,
}

impl DisabilitySection {
    pub fn query(&self, horizon: f64) -> DisabilityQuery {
        DisabilityQuery {
            threshold: self.threshold,
            horizon,
            threshold_dist: self.threshold_dist.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<VitalityModel>,
    #[serde(default)]
    pub monte_carlo: MonteCarloSection,
    pub survive: Option<SurviveSection>,
    pub fit: Option<FitSection>,
    pub price: Option<PriceSection>,
    pub cod: Option<CodSection>,
    pub lifecycle: Option<LifecycleSection>,
    pub disability: Option<DisabilitySection>,
    /// Directory that relative data paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Prefixes a core validation error with the config path of the component.
pub fn at(path: &str, e: Error) -> CliError {
    match e {
        Error::InvalidParameter { name, reason } => {
            let last = path.rsplit('.').next().unwrap_or(path);
            let name = name.strip_prefix(&format!("{last}.")).unwrap_or(&name);
            CliError::config(format!("{path}.{name}"), reason)
        }
        other if other.is_validation() => CliError::config(path, other.to_string()),
        other => CliError::Core(other),
    }
}

fn check_model(m: &VitalityModel) -> Result<(), CliError> {
    if !(m.age_x >= 0.0 && m.age_x.is_finite()) {
        return Err(CliError::config("model.age_x", "must be finite and >= 0"));
    }
    m.initial.validate().map_err(|e| at("model.initial", e))?;
    m.trend.validate().map_err(|e| at("model.trend", e))?;
    m.diffusion.validate().map_err(|e| at("model.diffusion", e))?;
    m.jump.validate().map_err(|e| at("model.jump", e))
}

fn positive(path: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(CliError::config(path, format!("must be finite and > 0, got {x}")))
    }
}

impl RunConfig {
    /// Parses and validates configuration text.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let de = toml::Deserializer::parse(text).map_err(|e| CliError::config("config", e.to_string()))?;
        let mut cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(if path == "." { "config".into() } else { path }, e.into_inner().to_string())
        })?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("--config", format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Checks every section against the invariants of its types.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(m) = &self.model {
            check_model(m)?;
        }
        let mc = &self.monte_carlo;
        if mc.n_paths < 100 {
            return Err(CliError::config("monte_carlo.n_paths", "must be >= 100"));
        }
        if mc.points_per_year == 0 {
            return Err(CliError::config("monte_carlo.points_per_year", "must be >= 1"));
        }
        if let Some(s) = &self.survive {
            s.horizons.non_negative("survive.horizons")?;
            if let Some(v) = s.v {
                positive("survive.v", v)?;
            }
            if s.method == SurviveMethod::Laplace && s.v.is_none() {
                return Err(CliError::config("survive.v", "the laplace method needs a conditioning vitality"));
            }
        }
        if let Some(f) = &self.fit {
            if f.free.is_empty() {
                return Err(CliError::config("fit.free", "needs at least one parameter"));
            }
            if f.starts == 0 {
                return Err(CliError::config("fit.starts", "must be >= 1"));
            }
            for (key, p) in [("fit.data", Some(&f.data)), ("fit.accidents", f.accidents.as_ref())] {
                if let Some(p) = p {
                    if !self.resolve(p).is_file() {
                        return Err(CliError::config(key, format!("no such file: {}", p.display())));
                    }
                }
            }
        }
        if let Some(p) = &self.price {
            positive("price.force_of_interest", p.force_of_interest)?;
            if let Some(v) = p.v {
                positive("price.v", v)?;
            }
            if p.density_order == 0 {
                return Err(CliError::config("price.density_order", "must be >= 1"));
            }
        }
        if let Some(c) = &self.cod {
            c.params().validate().map_err(|e| at("cod", e))?;
            if let Some(t) = &c.times {
                if t.non_negative("cod.times")?.contains(&0.0) {
                    return Err(CliError::config("cod.times", "times must be > 0"));
                }
            }
        }
        if let Some(l) = &self.lifecycle {
            l.market.validate().map_err(|e| at("lifecycle.market", e))?;
            l.vitality.validate().map_err(|e| at("lifecycle.vitality", e))?;
            l.policy.validate().map_err(|e| at("lifecycle.policy", e))?;
            positive("lifecycle.a0", l.a0)?;
            if !(l.dt > 0.0 && l.dt <= MAX_LIFECYCLE_DT) {
                return Err(CliError::config("lifecycle.dt", "must be in (0, 1/252]"));
            }
            if let Some(g) = &l.v_grid {
                g.points("lifecycle.v_grid")?;
            }
            if l.paths > 0 && l.paths_file.is_none() {
                return Err(CliError::config("lifecycle.paths_file", "required when paths > 0"));
            }
        }
        if let Some(d) = &self.disability {
            positive("disability.threshold", d.threshold)?;
            d.horizons.non_negative("disability.horizons")?;
            if let Some(law) = &d.threshold_dist {
                law.validate().map_err(|e| at("disability.threshold_dist", e))?;
            }
            if d.mc_paths > 0 && d.mc_paths < 100 {
                return Err(CliError::config("disability.mc_paths", "must be 0 or >= 100"));
            }
        }
        Ok(())
    }

    pub fn require_model(&self) -> Result<&VitalityModel, CliError> {
        self.model.as_ref().ok_or_else(|| CliError::config("model", "section is required for this command"))
    }
}

/// Returns the section or a missing-section error.
pub fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    s.as_ref().ok_or_else(|| CliError::config(name, "section is required for this command"))
}

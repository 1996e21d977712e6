//! Vitality-based mortality modelling: survival probabilities, first-passage
//! approximations, cause-of-death splits, estimation, pricing and lifecycle
//! consumption.

pub mod actuarial;
pub mod cod;
pub mod distributions;
pub mod dynamic;
pub mod estimation;
pub mod fpmc;
pub mod fpt;
pub mod lifecycle;
mod error;
pub mod model;
pub mod numerics;
pub mod snlp;

pub use distributions::{InitialVitalityDist, JumpSizeDist, MixingDist};
pub use error::{Error, Result};
pub use model::{
    cumulative_hazard, exp_transform, gompertz_death_time, survival_static, DiffusionSpec, Intensity, JumpSpec,
    TrendSpec, VitalityModel,
};
pub use snlp::{snlp_laplace_tau, survival_snlp};

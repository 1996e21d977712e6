//! Cohort data, multinomial likelihood and maximum-likelihood fitting.

pub mod data;
pub mod fit;
pub mod likelihood;
pub mod simplex;

pub use data::{
    calibrate_jump_intensity, cohort_to_csv, load_accident_csv, load_cohort_csv, parse_accident_csv,
    parse_cohort_csv, AccidentBand, AccidentRateTable, CohortData,
};
pub use fit::{fit_gompertz_law, fit_mle, simulate_cohort, simulate_model_cohort, FitOptions, FitResult, ParamMask};
pub use likelihood::{
    cell_probabilities, log_likelihood, log_likelihood_from_survival, model_survival_curve, LikelihoodOptions,
    LogLikelihood, SurvivalRoute,
};
pub use simplex::{nelder_mead, SimplexOptions, SimplexResult};

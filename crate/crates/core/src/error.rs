use thiserror::Error;

/// Errors produced by model construction and numerical evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("no closed form for this model: {0}")]
    NoClosedForm(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("adaptive quadrature did not converge on [{a}, {b}] (estimate {estimate}, error {error})")]
    QuadratureNonConvergence {
        a: f64,
        b: f64,
        estimate: f64,
        error: f64,
    },

    #[error("Laplace inversion did not converge at t = {t}: orders disagree by {gap}")]
    LaplaceNonConvergence { t: f64, gap: f64 },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("survival input is not non-increasing at t = {t}")]
    NonMonotoneSurvival { t: usize },

    #[error("probability budget exceeded: {0}")]
    ProbabilityExceeded(String),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("line {line}: {message}")]
    Data { line: u64, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::Unsupported(_)
                | Error::NoClosedForm(_)
                | Error::Data { .. }
                | Error::Io(_)
                | Error::NonMonotoneSurvival { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and > 0, got {value}")))
    }
}

pub(crate) fn ensure_non_negative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and >= 0, got {value}")))
    }
}

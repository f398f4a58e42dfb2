use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rate {name} = {value}: rates must be finite and strictly positive")]
    InvalidRate { name: &'static str, value: f64 },

    #[error("site index {site} out of range for {n} sites")]
    SiteOutOfRange { site: usize, n: usize },

    #[error("configuration must have at least one site")]
    EmptyConfiguration,

    #[error("operation not supported under the {0} boundary")]
    UnsupportedBoundary(&'static str),

    #[error("not ergodic at these parameters: {0}")]
    NotErgodic(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown engine '{0}'")]
    UnknownEngine(String),

    #[error("stationary solve did not converge: residual {residual:e} after {iterations} refinements")]
    NonConvergence { residual: f64, iterations: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidRate { .. } => "invalid_rate",
            Error::SiteOutOfRange { .. } => "site_out_of_range",
            Error::EmptyConfiguration => "empty_configuration",
            Error::UnsupportedBoundary(_) => "unsupported_boundary",
            Error::NotErgodic(_) => "not_ergodic",
            Error::Precondition(_) => "precondition",
            Error::Parse(_) => "parse",
            Error::UnknownEngine(_) => "unknown_engine",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

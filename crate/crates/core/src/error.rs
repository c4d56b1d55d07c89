use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unsupported schedule shape: {0}")]
    UnsupportedShape(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("fit failed after {iterations} iterations (rms residual {rms:.3e})")]
    FitFailure {
        iterations: usize,
        rms: f64,
        residuals: Vec<f64>,
    },

    #[error("input set spans rank {rank}, {required} required")]
    RankDeficient { rank: usize, required: usize },

    #[error("missing measurement settings: {}", .0.join(", "))]
    MissingSettings(Vec<String>),

    #[error("degenerate fringe: {0}")]
    DegenerateFringe(String),
}

impl Error {
    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Domain(_) => "domain",
            Error::Argument(_) => "argument",
            Error::UnsupportedShape(_) => "unsupported_shape",
            Error::NotApplicable(_) => "not_applicable",
            Error::InvalidState(_) => "invalid_state",
            Error::FitFailure { .. } => "fit_failure",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::MissingSettings(_) => "missing_settings",
            Error::DegenerateFringe(_) => "degenerate_fringe",
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("environment is terminal; call reset before stepping")]
    TerminalStep,

    #[error("action {action} is outside the action set of size {count}")]
    InvalidAction { action: usize, count: usize },

    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("invalid MDP: {0}")]
    InvalidMdp(String),

    #[error("invalid observation: {0}")]
    InvalidObservation(String),

    #[error("observations are not comparable: {0}")]
    DimensionMismatch(String),

    #[error("degenerate density model: recoding probability {rho_prime} does not exceed probability {rho}")]
    DegenerateModel { rho: f64, rho_prime: f64 },

    #[error("enumeration budget of {budget} trajectory nodes exceeded")]
    EnumerationBudget { budget: usize },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{0}")]
    Runtime(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// True for errors caused by user-supplied configuration.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::InvalidSpec(_))
    }
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid weights: {0}")]
    Weights(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("distribution is not normalized: {0}")]
    Normalization(String),
    #[error("distribution is signalling: {0}")]
    Signalling(String),
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("enumeration cap exceeded: {needed} > {cap}")]
    CapExceeded { needed: u128, cap: u128 },
    #[error("locality is not monotone in eta: local at {local}, nonlocal at {nonlocal}")]
    NonMonotone { local: String, nonlocal: String },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable tag, used by the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Scenario(_) => "scenario",
            Error::Dimension(_) => "dimension",
            Error::Index(_) => "index",
            Error::Parse(_) => "parse",
            Error::Weights(_) => "weights",
            Error::Range(_) => "range",
            Error::Precondition(_) => "precondition",
            Error::Normalization(_) => "normalization",
            Error::Signalling(_) => "signalling",
            Error::Infeasible => "infeasible",
            Error::Unbounded => "unbounded",
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::NonMonotone { .. } => "non_monotone",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

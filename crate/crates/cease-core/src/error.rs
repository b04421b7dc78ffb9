use thiserror::Error;

/// Errors raised by the sensing stack.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition (non-unit axis, non-PSD
    /// covariance, probability outside [0,1], ...).
    #[error("contract violation: {0}")]
    Contract(String),
    /// A belief evolution was asked to run without an observation flag for
    /// one of its tracked obstacles.
    #[error("missing observation flag for SCE {0}")]
    MissingFlag(String),
    /// A scenario file failed to parse or validate.
    #[error("scenario: {0}")]
    Scenario(String),
    /// A simulation query fell outside the scenario's time range.
    #[error("time {t} s outside scenario range [0, {duration} s]")]
    TimeOutOfRange { t: f64, duration: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}

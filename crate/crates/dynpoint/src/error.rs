use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("empty point set")]
    EmptySet,
    #[error("out-of-order path query: t = {t} but path already sampled at {t_last}")]
    OutOfOrderQuery { t: f64, t_last: f64 },
    #[error("time {t} outside [0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("the fast-regime expression is singular at lag 0")]
    SingularLag,
    #[error("need at least {need} replicates, got {got}")]
    InsufficientReplicates { need: usize, got: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

use thiserror::Error;

/// Failure modes of the library, grouped the way the CLI reports them.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("budget exceeded: {what} needs about {estimate:.3e} units, budget is {budget:.3e}")]
    Budget {
        what: String,
        estimate: f64,
        budget: f64,
    },
    #[error("configuration is not permutation-wise: {0}")]
    NotPermutationWise(String),
    #[error("marked configuration is not authorized: {0}")]
    Unauthorized(String),
    #[error("spatial component is not simple: {0}")]
    NotSimple(String),
    #[error("successor walk did not close: {0}")]
    InfiniteCycle(String),
    #[error("degenerate conditional kernel: {0}")]
    Degenerate(String),
    #[error("retry cap of {cap} exceeded: {hint}")]
    RetryCap { cap: usize, hint: String },
    #[error("NaN encountered in {0}")]
    NaN(String),
}

/// Coarse classification used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Budget,
    Structural,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Input(_) | Error::Config(_) => ErrorKind::Config,
            Error::Budget { .. } => ErrorKind::Budget,
            _ => ErrorKind::Structural,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Error::Input(_) => "input",
            Error::Config(_) => "config",
            Error::Budget { .. } => "budget",
            Error::NotPermutationWise(_) => "not_permutation_wise",
            Error::Unauthorized(_) => "unauthorized",
            Error::NotSimple(_) => "not_simple",
            Error::InfiniteCycle(_) => "infinite_cycle",
            Error::Degenerate(_) => "degenerate",
            Error::RetryCap { .. } => "retry_cap",
            Error::NaN(_) => "nan",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Input(format!("{what} has non-finite coordinates")))
    }
}

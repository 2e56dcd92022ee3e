use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no root of g on the parabola in [{lo}, {hi}]")]
    NoRootInWindow { lo: f64, hi: f64 },
    #[error("interior term (1/r)h is unbounded at r = {0:e}")]
    UnboundedInteriorTerm(f64),
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    TooManySteps { t: f64 },
    #[error("section {0} not reached")]
    SectionNotReached(String),
    #[error("bracket failure: {0}")]
    BracketFailure(String),
    #[error("no half cycle at lambda = {0:e}")]
    NoCycle(f64),
    #[error("nullcline root lost at x = {0}")]
    RootLost(f64),
    #[error("unclassifiable orbit: {0}")]
    Unclassifiable(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Config and precondition problems are the caller's fault; everything
    /// else is a numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidParams(_) | Error::Precondition(_) | Error::Domain(_)
        )
    }
}

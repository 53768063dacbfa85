use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {value} is outside {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("derivative diverges at x = {at}")]
    InfiniteDerivative { at: f64 },

    #[error("unresolved touchpoint near x = {x}: min |f(x) - x| = {residual:e}")]
    UnresolvedTouchpoint { x: f64, residual: f64 },

    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },

    #[error("precision loss at x = {x}: perturbation underflowed after {iterations} steps")]
    PrecisionLoss { x: f64, iterations: usize },

    #[error("all derivatives of order 2..={max_order} vanish at q = {q}")]
    DerivativeOrderNotFound { q: f64, max_order: usize },

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("only {accepted} conditioned samples accepted (need {required})")]
    InsufficientConditionedSamples { accepted: usize, required: usize },

    #[error("node budget of {budget} exceeded")]
    BudgetExceeded { budget: u64 },

    #[error("x = {x} is not a fixed point of f (|f(x) - x| = {residual:e})")]
    NotAFixedPoint { x: f64, residual: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain {
            value: x,
            domain: "[0, 1]",
        })
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("invalid update family: {0}")]
    InvalidFamily(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A closure or experiment needed more room than its budget allows.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("regions were built with different growth parameters")]
    ParamsMismatch,

    #[error(
        "percolation fraction never crosses 1/2 on [0, 1] (f(0) = {at_zero}, f(1) = {at_one})"
    )]
    DegenerateBracket { at_zero: f64, at_one: f64 },

    #[error("droplet enumeration did not stabilise for w = {width} up to grid {grid}")]
    RefinementNotConverged { width: u32, grid: usize },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

impl Error {
    /// True for errors caused by resource guards rather than bad input.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::BudgetExceeded(_) | Error::RefinementNotConverged { .. }
        )
    }
}

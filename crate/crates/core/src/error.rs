use alloc::string::String;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid input: {0}")]
    Input(String),
    /// Matrix or vector shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// Training produced a non-finite or exploding loss.
    #[error("training diverged at iteration {iteration} (loss {loss})")]
    Diverged { iteration: usize, loss: f64 },
    /// A theoretical learning-rate interval is empty.
    #[error("infeasible learning-rate range: lower bound {lo} exceeds upper bound {hi}")]
    InfeasibleRange { lo: f64, hi: f64 },
    /// No window of the reference trajectory satisfies the variance rule.
    #[error("target not derivable: {0}")]
    NotDerivable(String),
    /// The transport solver failed to reach optimality.
    #[error("transport solver failed: {0}")]
    Solver(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! input_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Input(alloc::format!($($arg)*))
    };
}

macro_rules! dim_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Dimension(alloc::format!($($arg)*))
    };
}

pub(crate) use dim_err;
pub(crate) use input_err;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or out-of-range user input.
    #[error("invalid input: {0}")]
    Input(String),

    /// An enumeration or summation would exceed its configured budget.
    #[error("resource budget exceeded: {what} needs {needed} but the budget is {budget}")]
    Resource {
        what: &'static str,
        needed: f64,
        budget: f64,
    },

    #[error("unsupported kernel form: {0}")]
    UnsupportedForm(String),

    /// Repeated roots or otherwise degenerate closed-form input.
    #[error("degenerate kernel: {0}")]
    Degenerate(String),

    /// A transition matrix with more than one recurrent class.
    #[error("stationary vector is not unique; recurrent classes: {classes:?}")]
    Ambiguous { classes: Vec<Vec<usize>> },

    #[error("invariant violated: {0}")]
    Invariant(String),

    /// The level set for `alpha` is empty.
    #[error("empty fiber: alpha = {alpha} lies outside the spectrum domain [{lo}, {hi}]")]
    EmptyFiber { alpha: f64, lo: f64, hi: f64 },

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

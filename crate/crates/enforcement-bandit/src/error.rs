use thiserror::Error;

/// Errors produced by the solvers and the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// Model primitives violate an invariant (e.g. a rate is not positive or
    /// the maintained assumption `lambda * x > c` fails).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A function argument lies outside its mathematical domain.
    #[error("domain violation: {0}")]
    Domain(String),

    /// A bracketed root find was requested but the bracket does not straddle
    /// a sign change.  Usually indicates a regime misclassification.
    #[error("no sign change in bracket [{lo}, {hi}] for {what}: f(lo)={f_lo}, f(hi)={f_hi}")]
    Bracket {
        what: String,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    /// Adaptive ODE integration could not continue (step-size underflow near
    /// a singular point); `reached` is the last abscissa attained.
    #[error("ODE integration failed near p = {reached}: {reason}")]
    Integration { reached: f64, reason: String },

    /// Any other numerical failure (NaN, divergence, exhausted iterations).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

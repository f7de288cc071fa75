//! Error type shared by all modules.

/// Errors reported by the analytic and simulation routines.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter violates a structural invariant (signs, ordering, ranges).
    #[error("invalid parameter: {0}")]
    Param(String),

    /// An iterative method ran out of budget before reaching its tolerance.
    #[error("no convergence: {0}")]
    Convergence(String),

    /// Root bracketing failed even after bounded expansion.
    #[error("no sign change over [{lo:e}, {hi:e}] after bracket expansion")]
    NoSignChange { lo: f64, hi: f64 },

    /// The queue recursion has no stationary regime for this arrival rate.
    #[error(
        "unstable queue: arrival {arrival} bits/frame >= mean service {mean_service} bits/frame"
    )]
    Unstable { arrival: f64, mean_service: f64 },

    /// Too few tail samples to estimate a decay rate.
    #[error("insufficient tail samples: {0}")]
    InsufficientTail(String),
}

pub type Result<T> = std::result::Result<T, Error>;

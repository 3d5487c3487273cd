//! Error type shared by all modules.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes of generators, numerics, optimizers and experiments.
#[derive(Debug, Error)]
pub enum Error {
    /// Requested dimensions do not fit the platform index type or are empty.
    #[error("size error: {0}")]
    Size(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature ran out of refinements before meeting its tolerance.
    #[error("quadrature did not reach tolerance {tol:e}: best estimate {estimate:e}, error estimate {error:e}")]
    Accuracy {
        /// Best available value of the integral.
        estimate: f64,
        /// Difference between the last two refinements.
        error: f64,
        /// Requested tolerance.
        tol: f64,
    },

    /// A linear-algebra kernel failed (eigensolver, factorization).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// An optimizer produced a squared gradient norm above the divergence threshold.
    #[error("iteration diverged at step {step}")]
    Divergence {
        /// Index of the first offending iterate.
        step: usize,
        /// Squared gradient norms recorded up to and including `step`.
        prefix: Vec<f64>,
    },

    /// A predicted curve never fell to the requested level within the search horizon.
    #[error("curve did not reach {eps:e} within {k_max} steps (last value {last:e})")]
    Bound {
        /// Target level.
        eps: f64,
        /// Search horizon.
        k_max: usize,
        /// Curve value at `k_max`.
        last: f64,
    },

    /// Invalid or inconsistent experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    /// An experiment could not produce a result.
    #[error("experiment error: {0}")]
    Experiment(String),

    /// Filesystem failure while writing outputs.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// CSV serialization failure.
    #[error(transparent)]
    Csv(#[from] csv::Error),

    /// JSON (de)serialization failure.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    ///
    /// `2` for configuration problems, `3` for numerical failures, `4` for
    /// experiment and I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::Size(_) | Error::Domain(_) => 2,
            Error::Accuracy { .. }
            | Error::Numeric(_)
            | Error::Divergence { .. }
            | Error::Bound { .. } => 3,
            Error::Experiment(_) | Error::Io(_) | Error::Csv(_) => 4,
        }
    }
}

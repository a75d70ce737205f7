//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, KgError>;

#[derive(Debug, Error)]
pub enum KgError {
    /// Dimension or degree mismatch in algebra or field operations.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A metric failed the positivity check.
    /// Reports the worst node and its smallest eigenvalue.
    #[error("metric not positive definite at node {node}: min eigenvalue {min_eig:.6e}")]
    NotPositive { node: usize, min_eig: f64 },

    /// A Poisson right-hand side violates the solvability condition.
    #[error("poisson rhs has nonzero mean: {mean:.3e} (tolerance {tol:.1e})")]
    NonzeroMean { mean: f64, tol: f64 },

    /// An iterative solver ran out of iterations.
    #[error("solver did not converge after {iters} iterations; residual history {history:?}")]
    NoConvergence { iters: usize, history: Vec<f64> },

    /// Eigensolver stagnation, with the Ritz value history.
    #[error("eigensolver stagnated after {iters} iterations; ritz history {history:?}")]
    EigenStagnation { iters: usize, history: Vec<f64> },

    /// A normalization precondition failed (for example nonzero mean input
    /// to a character pairing).
    #[error("normalization violated: {0}")]
    Normalization(String),

    /// A vector field failed the holomorphy acceptance threshold.
    #[error("gradient field not holomorphic: residual {residual:.3e} exceeds {tol:.1e}")]
    NotHolomorphic { residual: f64, tol: f64 },

    /// Flow step rejection limit reached.
    #[error("flow: {0} consecutive positivity rejections; step size {1:.3e}")]
    FlowStuck(usize, f64),

    /// Rank-revealing decomposition could not separate a null space.
    #[error("ill-conditioned null space; singular values {0:?}")]
    RankRevealing(Vec<f64>),

    /// A criticality precondition failed (extremal decomposition).
    #[error("not a critical point: {0}")]
    NotCritical(String),

    /// I/O and container format errors.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed field container or sidecar.
    #[error("container format: {0}")]
    Format(String),

    /// Configuration file diagnostics, with line information.
    #[error("config:{line}: {msg}")]
    Config { line: usize, msg: String },
}

impl KgError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        KgError::InvalidInput(msg.into())
    }
}

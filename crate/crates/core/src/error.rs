use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A protected-zone request violates the box of its kind.
    #[error("infeasible {kind} zone: {constraint}")]
    InfeasibleZone { kind: &'static str, constraint: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// The distribution has no support, e.g. the whole Eve region is protected.
    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    /// Adaptive quadrature stopped before reaching the requested tolerance.
    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} > tolerance {tolerance:e}")]
    Quadrature { estimate: f64, error: f64, tolerance: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

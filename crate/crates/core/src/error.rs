use thiserror::Error;

/// Error type shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} outside chart '{chart}' domain")]
    Domain { chart: String, point: Vec<f64> },
    #[error("degenerate parametrization: singular value ratio {ratio:e} below threshold")]
    Degenerate { ratio: f64 },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("missing capability: {0}")]
    Capability(String),
    #[error("coefficient error: {0}")]
    Coefficient(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("projector failed to converge at {0:?}")]
    Projector(Vec<f64>),
    #[error("right-hand side is not mean-zero: |sum| = {sum:e}, norm = {norm:e}")]
    NotMeanZero { sum: f64, norm: f64 },
    #[error("coefficient c is not weakly divergence-free: residual {residual:e} > {threshold:e}")]
    NotDivergenceFree { residual: f64, threshold: f64 },
    #[error("well-posedness conditions violated: {0}")]
    ConditionsViolated(String),
    #[error("{method} did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("{method} breakdown at iteration {iteration}")]
    Breakdown { method: &'static str, iteration: usize },
    #[error("norm matrix is not positive definite")]
    Indefinite,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier '{name}' at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("manufactured data disagrees with finite-difference oracle: relative error {0:e}")]
    Manufacturing(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

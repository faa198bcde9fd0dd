use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input {0}")]
    NonFinite(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The kernel operator is not bounded between 0 and the identity.
    #[error("Macchi condition violated: spectrum [{min:.3e}, {max:.6}] leaves [0, 1]")]
    MacchiViolation { min: f64, max: f64 },

    #[error("symmetric eigensolver failed to converge on a {0}x{0} matrix")]
    Eigensolver(usize),

    /// Sequential projection sampling ran out of mass before placing all points.
    #[error("projection basis lost rank at step {step} of {rank} (residual mass {residual:.3e})")]
    RankLoss {
        step: usize,
        rank: usize,
        residual: f64,
    },

    #[error("insufficient decay: {0}")]
    InsufficientDecay(String),

    #[error("no interior points left after removing a margin of {0} sites")]
    EmptyInterior(i64),

    #[error("window too short: {0}")]
    WindowTooShort(String),

    #[error("sequence span exhausted: {0}")]
    SpanExhausted(String),

    #[error("quadrature did not reach tolerance: {0}")]
    Quadrature(String),

    #[error("unsupported transform: {0}")]
    UnsupportedTransform(String),

    #[error("malformed configuration file: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

/// Errors raised by curve construction, descent and the analytic samplers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ElasticaError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("cusp at vertex {vertex}: turning angle {angle} is too close to pi")]
    CuspDetected { vertex: usize, angle: f64 },

    #[error("total turning {total} is not within tolerance of a multiple of 2*pi")]
    NonIntegralTurning { total: f64 },

    #[error("whitney index changed from {expected} to {found} at iteration {iteration}")]
    IndexBroken {
        expected: i64,
        found: i64,
        iteration: u64,
    },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("pendulum amplitude {0} outside (0, pi)")]
    AmplitudeOutOfRange(f64),

    #[error("closure functional does not change sign on [{lo}, {hi}]")]
    RootNotBracketed { lo: f64, hi: f64 },

    #[error("tangent bridge construction failed: {0}")]
    TangencyNotFound(String),

    #[error("{field}: {message}")]
    Parse { field: String, message: String },

    #[error("contradictory fit: curvature is uniform but whitney index is 0")]
    ContradictoryFit,
}

pub type Result<T, E = ElasticaError> = std::result::Result<T, E>;

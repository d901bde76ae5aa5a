use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowerError {
    #[error("power must be finite, got {0}")]
    NotFinite(f64),
    #[error("power must be nonnegative, got {0}")]
    Negative(f64),
    #[error("power must be strictly positive, got {0}")]
    NotPositive(f64),
    #[error("battery level {level} exceeds capacity {capacity}")]
    AboveCapacity { level: f64, capacity: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("adaptive quadrature did not converge: estimate {estimate}, error bound {error} after {intervals} intervals")]
    NotConverged {
        estimate: f64,
        error: f64,
        intervals: usize,
    },
    #[error("integrand returned a non-finite value at {0}")]
    NonFinite(f64),
    #[error("invalid quadrature domain: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LambdaError {
    #[error("target average power must be positive and finite, got {0}")]
    InvalidTarget(f64),
    #[error("target {target} is not above the circuit power {p_circuit}; the transmitter cannot operate")]
    BelowCircuitFloor { target: f64, p_circuit: f64 },
    #[error("threshold bracket [{lo}, {hi}] does not straddle target {target} (E at ends: {e_lo}, {e_hi})")]
    Bracket {
        target: f64,
        lo: f64,
        hi: f64,
        e_lo: f64,
        e_hi: f64,
    },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid parameter `{name}`: {reason}")]
    Invalid { name: &'static str, reason: String },
    #[error("topology mismatch: {0}")]
    Topology(String),
    #[error(transparent)]
    Power(#[from] PowerError),
}

impl ConfigError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Self::Invalid {
            name,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("expected {expected} entries, got {got}")]
pub struct LengthMismatch {
    pub expected: usize,
    pub got: usize,
}

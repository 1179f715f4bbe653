use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("depth {requested} exceeds terminating stream (maximal depth {max})")]
    DepthExceeded { requested: usize, max: usize },

    #[error("value {0} is outside the open unit interval")]
    OutsideUnitInterval(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("coefficient {0} does not fit in 64 bits")]
    CoefficientOverflow(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("inadmissible: gcd({q_m1}, {modulus}) = {gcd}, expected 1")]
    Inadmissible {
        q_m1: String,
        modulus: String,
        gcd: String,
    },

    #[error("construction failed at step l = {step}: {reason}")]
    Construction { step: usize, reason: String },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("index {index} out of range {lo}..={hi}")]
    IndexOutOfRange { index: u64, lo: u64, hi: u64 },

    #[error("truncation unstable for N <= {n_max} at depth {depth}; retry with depth >= {suggested}")]
    Unstable {
        n_max: usize,
        depth: usize,
        suggested: usize,
    },
}

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid distribution ({what}): sums to {sum}")]
    InvalidDistribution { what: String, sum: f64 },

    #[error("negative entry in {what}: {value}")]
    NegativeEntry { what: String, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("discriminator class is empty")]
    EmptyClass,

    #[error("discriminator member {index} exceeds bound {delta}: |{value}|")]
    MemberOutOfBounds {
        index: usize,
        value: f64,
        delta: f64,
    },

    #[error("demonstrations are empty")]
    EmptyDemonstrations,

    #[error("demonstration index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("exact Rademacher enumeration capped at m = {max}, got m = {got}")]
    RademacherCapacity { max: usize, got: usize },

    #[error("metric table violates {0}")]
    InvalidMetric(String),

    #[error("linear program infeasible: {0}")]
    LpInfeasible(String),

    #[error("linear program unbounded")]
    LpUnbounded,

    #[error("linear program solution failed the residual audit: {0}")]
    LpNumerical(String),

    #[error("linear program did not converge after {0} pivots")]
    LpIterationLimit(usize),

    #[error("reward is not in the affine span of the discriminator class")]
    SpanInfeasible,

    #[error("non-finite gradient at step {step} (component {component})")]
    NonFiniteGradient { step: usize, component: usize },

    #[error("bound {0} needs inputs this entry point does not carry")]
    UnsupportedBound(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

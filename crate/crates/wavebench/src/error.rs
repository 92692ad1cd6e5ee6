use thiserror::Error;

/// Errors shared across the library surface.
#[derive(Debug, Error)]
pub enum WavebenchError {
    #[error("invalid parameter `{field}`: {message}")]
    InvalidParameter { field: &'static str, message: String },

    #[error("degenerate space gap s = {0} (must be > 0)")]
    DegenerateGap(f64),

    #[error("no finite equilibrium gap: v = {v} >= v0 = {v0}")]
    NoEquilibrium { v: f64, v0: f64 },

    #[error("transfer function denominator is singular at omega = {0}")]
    SingularDenominator(f64),

    #[error("trajectory timestamps are not uniformly spaced at index {index}: dt = {observed}, expected {expected}")]
    NonUniformTimestamps {
        index: usize,
        observed: f64,
        expected: f64,
    },

    #[error("unknown vehicle class `{0}`")]
    UnknownClass(String),

    #[error("fit requires at least {required} samples, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("empty measurement window in trajectory log")]
    EmptyMeasurementWindow,

    #[error("time-space field has insufficient structure (variance ~ 0)")]
    InsufficientStructure,

    #[error("time-space field needs at least {required} time bins, got {got}")]
    TooFewTimeBins { required: usize, got: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, WavebenchError>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {point:?} lies outside the ground space {space}")]
    OutsideSpace { point: Vec<f64>, space: String },

    #[error("ground-space metric returned {0}, expected a value in [0, 1]")]
    MetricOutOfRange(f64),

    #[error("atomic intensity measures are not supported")]
    AtomicIntensity,

    #[error("cost matrix is empty")]
    EmptyMatrix,

    #[error("cost matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("cost entry {value} at ({row}, {col}) is not a finite value in [0, 1]")]
    CostOutOfRange { row: usize, col: usize, value: f64 },

    #[error("brute-force oracle limited to {cap} points, got {size}")]
    SizeCap { size: usize, cap: usize },

    #[error("sample counts differ: {p} vs {q}")]
    UnequalSamples { p: usize, q: usize },

    #[error("rejection sampler refused: acceptance probability {acceptance:e} is below {threshold:e}")]
    RejectionTooRare { acceptance: f64, threshold: f64 },

    #[error("{flagged} of {replicas} coupled replicas hit the event cap of {cap}")]
    CouplingTruncated { flagged: usize, replicas: usize, cap: u64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

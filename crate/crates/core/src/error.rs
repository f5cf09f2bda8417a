use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("transition delta {0} is not one of -1, 0, +1")]
    InvalidDelta(i8),

    #[error("coefficient {0} is not an attainable multiple of 0.5 in [0, 20]")]
    InvalidCoefficient(f64),

    #[error("crosstalk class {0} is outside 0..=39")]
    ClassOutOfRange(u8),

    #[error("switch threshold {0} is outside 0..=39")]
    ThresholdOutOfRange(u32),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid layout: {0}")]
    Layout(String),

    #[error("position ({row}, {col}) is not a protected victim")]
    NotAVictim { row: usize, col: usize },

    #[error("{what} width mismatch: expected {expected}, got {actual}")]
    WidthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("pattern has a steady victim; no retention decision applies")]
    SteadyVictim,

    #[error("trace line {line}: {reason}")]
    TraceParse { line: usize, reason: String },

    #[error("binary trace truncated: {len} bytes is not a multiple of the {record}-byte record")]
    TraceTruncated { len: usize, record: usize },

    #[error("binary trace record {record} has nonzero bits above width {width}")]
    TracePadding { record: usize, width: usize },

    #[error("decoder output differs from the encoded word at cycle {cycle}")]
    DecoderMismatch { cycle: u64 },

    #[error("baseline mean delay is zero; normalized delay is undefined")]
    ZeroBaseline,

    #[error("reports are not comparable: {0}")]
    Incomparable(String),

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors that indicate a broken internal invariant rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::DecoderMismatch { .. })
    }
}

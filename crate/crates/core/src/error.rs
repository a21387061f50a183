use crate::modem::ModScheme;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("bit count {len} is not a multiple of {bits_per_symbol} bits per symbol")]
    LengthNotDivisible { len: usize, bits_per_symbol: usize },

    #[error("symbol index {index} out of range for order {order}")]
    IndexOutOfRange { index: usize, order: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("magnitude factor {value} at symbol {index} is below the inversion floor")]
    DegenerateFactor { index: usize, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("message is empty")]
    EmptyMessage,

    #[error("payload of {bits} bits exceeds frame capacity of {capacity} bits")]
    PayloadTooLarge { bits: usize, capacity: usize },

    #[error("empty input block")]
    EmptyInput,

    #[error("{0} is not a PSK scheme")]
    NotPsk(ModScheme),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("no frame detected (peak {peak:.3} below threshold {threshold:.3})")]
    NoFrame { peak: f64, threshold: f64 },

    #[error("training set has no blocks for class {0}")]
    MissingClass(ModScheme),

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }
}

use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("sample rate must be positive")]
    InvalidSampleRate,
    #[error("non-finite sample at index {index}")]
    NonFiniteSample { index: usize },
    #[error("signal is empty")]
    EmptySignal,
    #[error("sample rate mismatch: {left} Hz vs {right} Hz")]
    RateMismatch { left: u32, right: u32 },
    #[error("length mismatch: {left} vs {right} samples")]
    LengthMismatch { left: usize, right: usize },
    #[error("requested range [{start}, {end}) exceeds signal length {len}")]
    OutOfRange { start: usize, end: usize, len: usize },
    #[error("frequency {freq} Hz is not below the Nyquist frequency {nyquist} Hz")]
    Aliasing { freq: f64, nyquist: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("spectrogram needs {required} bytes, over the {budget} byte budget; use the streaming path")]
    MemoryBudget { required: u128, budget: u128 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("signals of length {len} are too short for filter length {filter_length}")]
    SignalTooShort { len: usize, filter_length: usize },
    #[error("target index {index} out of range for {count} sources")]
    InvalidTargetIndex { index: usize, count: usize },
    #[error("Gram matrix of delayed sources is singular even after regularization")]
    SingularGram,
    #[error("report has no rows")]
    EmptyReport,
    #[error("window size {window_size}: {source}")]
    Window { window_size: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True when the error comes from numerical breakdown rather than bad input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::SingularGram => true,
            Error::Window { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

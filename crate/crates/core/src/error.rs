use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("length mismatch: {modes} modes but {acceptance} acceptance values")]
    LengthMismatch { modes: usize, acceptance: usize },

    #[error("degenerate selection: no collected weight")]
    DegenerateSelection,

    #[error("visibility undefined for an all-zero series")]
    UndefinedVisibility,

    #[error("probability undefined: zero normalization counts")]
    UndefinedProbability,

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn out_of_range(name: &'static str, value: f64, range: &'static str) -> Self {
        Error::OutOfRange { name, value, range }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("data point variant does not match the {family} loss")]
    VariantMismatch { family: &'static str },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dataset mixes labeled and symbol points")]
    MixedDataset,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step size violates the {method} precondition: {detail}")]
    StepSize { method: String, detail: String },

    #[error("no bound available for {method} in the {setting} setting")]
    NoBound { method: String, setting: &'static str },

    #[error("row {0} has zero norm")]
    ZeroRow(usize),

    #[error("design row {row} has norm {norm} > 1; normalize rows first")]
    UnnormalizedDesign { row: usize, norm: f64 },

    #[error("index {index} out of range for a sample of size {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("value at t = {t} is not strictly positive ({value})")]
    NonPositive { t: usize, value: f64 },

    #[error("parameter out of range: {0}")]
    Range(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error("config hash mismatch: expected {expected}, found {found}")]
    HashMismatch { expected: String, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad input rather than a failure while running.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Json(_) | Error::Csv(_))
    }
}

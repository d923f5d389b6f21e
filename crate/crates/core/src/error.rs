use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{kind} index {index} out of range (have {len})")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        len: usize,
    },

    #[error("not enough samples: {0}")]
    InsufficientSamples(String),

    #[error(
        "horizon {horizon} is shorter than the exploration schedule ({required} rounds); \
         raise the horizon or allow truncated exploration"
    )]
    HorizonTooSmall { horizon: u64, required: u64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("ratings file format error at line {line}: {message}")]
    RatingsFormat { line: u64, message: String },

    #[error(
        "cannot build a panel of {reviewers} reviewers sharing {movies} movies; \
         best achievable intersection is {best}"
    )]
    InfeasiblePanel {
        reviewers: usize,
        movies: usize,
        best: usize,
    },

    #[error("unknown concentration check `{0}`")]
    UnknownLemma(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag, used by the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInstance(_) => "invalid_instance",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::InsufficientSamples(_) => "insufficient_samples",
            Error::HorizonTooSmall { .. } => "horizon_too_small",
            Error::Config(_) => "config",
            Error::RatingsFormat { .. } => "ratings_format",
            Error::InfeasiblePanel { .. } => "infeasible_panel",
            Error::UnknownLemma(_) => "unknown_lemma",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_index(kind: &'static str, index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { kind, index, len })
    }
}

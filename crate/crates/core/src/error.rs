use thiserror::Error;

/// Broad failure category, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input data or file contents.
    Data,
    /// A solver or numerical routine could not produce a valid result.
    Numerical,
    /// The caller passed an invalid parameter.
    Usage,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("non-numeric value at row {row}, column {column}: `{value}`")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("protected group {0} is empty")]
    EmptyGroup(u8),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "anchor pairs are not strictly cyclically monotone: cycle {cycle:?} has mean {mean:e}"
    )]
    NotCyclicallyMonotone { cycle: Vec<usize>, mean: f64 },

    #[error("negative cycle {0:?} under the reduced costs")]
    NegativeCycle(Vec<usize>),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("value out of the exact integer range: {0}")]
    Overflow(String),

    #[error("disparate impact is undefined: the privileged group has no favorable outcomes")]
    UndefinedDisparateImpact,

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::MissingColumn(_)
            | Error::NonNumeric { .. }
            | Error::InvalidData(_)
            | Error::EmptyGroup(_)
            | Error::ModelFormat(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => ErrorKind::Data,
            Error::InvalidArgument(_) => ErrorKind::Usage,
            Error::NotCyclicallyMonotone { .. }
            | Error::NegativeCycle(_)
            | Error::NonFinite(_)
            | Error::Overflow(_)
            | Error::UndefinedDisparateImpact => ErrorKind::Numerical,
            Error::Fold { source, .. } => source.kind(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

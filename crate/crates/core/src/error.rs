use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Partition of a train/validation/test split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    Train,
    Validation,
    Test,
}

impl std::fmt::Display for Partition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Partition::Train => "train",
            Partition::Validation => "validation",
            Partition::Test => "test",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("class {class} has no samples (AUROC needs at least one positive and one negative)")]
    EmptyClass { class: usize },

    #[error("invalid batch: {0}")]
    InvalidBatch(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("cannot build batches: {0}")]
    Infeasible(String),

    #[error("shape mismatch: expected {expected} columns, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("weights became non-finite at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },

    #[error("{partition} partition would receive no samples of class {class}")]
    TooSmall { class: usize, partition: Partition },

    #[error("both samples are constant and equal; t statistic undefined")]
    DegenerateVariance,

    #[error("need at least {needed} values, got {got}")]
    NotEnoughValues { needed: usize, got: usize },

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("row {row}, column `{col}`: missing or non-numeric value")]
    NonNumericCell { row: usize, col: String },

    #[error("row {row}: missing label")]
    MissingLabel { row: usize },

    #[error("file has no data rows")]
    EmptyFile,

    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{pointer}: {message}")]
    Config { pointer: String, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by malformed input or configuration rather
    /// than by a failure during a run.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::MissingColumn(_)
                | Error::NonNumericCell { .. }
                | Error::MissingLabel { .. }
                | Error::EmptyFile
                | Error::Csv(_)
                | Error::InvalidParams(_)
        )
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("column {column} has zero standard deviation")]
    DegenerateColumn { column: usize },

    #[error("singular design (condition estimate {condition:e}); offending columns: {columns:?}")]
    SingularDesign { condition: f64, columns: Vec<usize> },

    #[error("bootstrap replicate {replicate} produced a singular design twice")]
    BootstrapAborted { replicate: usize },
}

impl Error {
    /// True for failures caused by the numbers themselves rather than by how
    /// the caller set things up.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularDesign { .. }
                | Error::BootstrapAborted { .. }
                | Error::DegenerateColumn { .. }
                | Error::DegenerateSample(_)
        )
    }
}

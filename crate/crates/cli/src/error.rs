use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] linhsic::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit status: 2 for input or configuration problems, 3 for
    /// numerical failures such as a singular design.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }

    /// Stable machine-readable tag, printed alongside the message.
    pub fn code(&self) -> &'static str {
        use linhsic::Error as E;
        match self {
            CliError::Input(_) => "input",
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Csv(_) => "csv",
            CliError::Json(_) => "json",
            CliError::Core(e) => match e {
                E::DimensionMismatch { .. } => "dimension_mismatch",
                E::Config(_) => "config",
                E::Input(_) => "input",
                E::DegenerateSample(_) => "degenerate_sample",
                E::NonFinite { .. } => "non_finite",
                E::DegenerateColumn { .. } => "degenerate_column",
                E::SingularDesign { .. } => "singular_design",
                E::BootstrapAborted { .. } => "bootstrap_aborted",
            },
        }
    }
}

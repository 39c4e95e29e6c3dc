use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("parse error at row {row}, column `{column}`: {detail}")]
    Parse { row: usize, column: String, detail: String },
    #[error("duplicate key `{key}` at row {row}")]
    DuplicateKey { key: String, row: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] riskfair_core::Error),
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    /// 1 usage, 2 data/schema/configuration/IO, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Core(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

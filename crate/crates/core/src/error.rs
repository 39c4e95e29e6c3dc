use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension { context: &'static str, expected: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("stratification error: class {0} has no instances")]
    Stratification(u8),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("empty group: {0}")]
    EmptyGroup(String),

    #[error("undefined metric {metric}: {reason}")]
    UndefinedMetric { metric: &'static str, reason: String },

    #[error("numeric failure at iteration {iteration}: {detail}")]
    NumericFailure { iteration: usize, detail: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension { context, expected, got }
    }

    /// True for failures of the numerical optimizer rather than of the input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NumericFailure { .. })
    }
}

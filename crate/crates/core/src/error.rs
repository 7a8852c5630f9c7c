use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// The variants double as the CLI's error classes: `Resource` maps to exit
/// code 2, everything else to exit code 1.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two values of different primitive kinds were compared.
    #[error("invalid comparison: {0}")]
    InvalidComparison(String),

    /// A schema (or a metric definition) is malformed.
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    /// Input data does not fit the expected shape.
    #[error("data error at {path}: {message}")]
    Data { path: String, message: String },

    /// A configuration value is out of range or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// A precondition of a numeric routine does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An exact solver exceeded its node budget.
    #[error("resource limit exceeded: branch-and-bound node limit {limit} reached")]
    Resource { limit: u64 },
}

impl Error {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn data(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Data {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable class name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidComparison(_) => "invalid_comparison",
            Error::Schema { .. } => "schema",
            Error::Data { .. } => "data",
            Error::Config(_) => "config",
            Error::Precondition(_) => "precondition",
            Error::Resource { .. } => "resource",
        }
    }

    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

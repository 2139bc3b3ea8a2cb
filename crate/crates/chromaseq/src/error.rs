use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid hex color {input:?}: {reason}")]
    HexParse { input: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Dataset/CSV-level problems: missing headers, empty inputs, bad records.
    #[error("{0}")]
    Data(String),

    #[error("shape mismatch in {context}: expected {expected:?}, got {got:?}")]
    Shape {
        context: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    /// NaN or infinity detected at a layer boundary or in an update.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{0}")]
    Checkpoint(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for numeric failures (divergence, NaN gradients), as opposed to
    /// data or configuration problems.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

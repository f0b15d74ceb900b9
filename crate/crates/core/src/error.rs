use std::path::PathBuf;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A scalar input fell outside its admissible interval.
    #[error("{what} {value} is outside [{min}, {max}]")]
    Range {
        what: &'static str,
        value: String,
        min: String,
        max: String,
    },

    /// An argument violated an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Non-finite values or degenerate geometry.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Experiment configuration that cannot be executed.
    #[error("configuration error: {0}")]
    Config(String),

    /// Structural problem in an input file.
    #[error("format error at line {line}: {message}")]
    Format { line: u64, message: String },

    /// Well-formed file carrying invalid values.
    #[error("data error at row {row}{}: {message}", column.as_ref().map(|c| format!(", column {c}")).unwrap_or_default())]
    Data {
        row: u64,
        column: Option<String>,
        message: String,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

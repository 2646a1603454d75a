use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn in_file(self, path: impl Into<String>) -> Error {
        Error::InFile {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, past any file context.
    pub fn root(&self) -> &Error {
        match self {
            Error::InFile { source, .. } => source.root(),
            other => other,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed CSV input. `row` is 1-based and excludes the header.
    #[error("load error at row {row}: {message}")]
    Load { row: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("type error at row {row}, column {column}: cannot read {value:?} as a number")]
    Type {
        row: usize,
        column: String,
        value: String,
    },

    #[error("hierarchy error: {0}")]
    Hierarchy(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("unknown leaf {value:?} in hierarchy for {attribute}")]
    UnknownLeaf { attribute: String, value: String },

    #[error("unknown level {level:?} in hierarchy for {attribute}")]
    Level { attribute: String, level: String },

    #[error("task error: {0}")]
    Task(String),

    #[error("emit error: {0}")]
    Emit(String),

    #[error("SQL generation error: {0}")]
    Generation(String),

    #[error("syntax error at byte {offset}: expected one of {}", .expected.join(", "))]
    Syntax {
        offset: usize,
        expected: Vec<String>,
    },

    #[error("unsupported SQL feature: {0}")]
    Unsupported(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("SQL type error: {0}")]
    SqlType(String),

    /// An error raised while reading a particular input file.
    #[error("{path}: {source}")]
    InFile { path: String, source: Box<Error> },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

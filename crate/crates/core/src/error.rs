use std::path::PathBuf;

/// Errors produced by the corpus, network, training and inference routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("label {0} is outside 0..=25")]
    LabelOutOfRange(usize),

    #[error("glyph '{label}' stroke {stroke} is degenerate: all control points coincide")]
    DegenerateStroke { label: char, stroke: usize },

    #[error("invalid glyph template: {0}")]
    InvalidTemplate(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("line {line}, field {field}: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),

    #[error("corpus contains no samples")]
    EmptyCorpus,

    #[error("segment range is empty")]
    EmptyRange,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            field: field.into(),
            message: message.into(),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: field `{field}`: {message}")]
    Validation {
        line: usize,
        field: &'static str,
        message: String,
    },

    #[error("line {line}: frame index {frame} does not follow {previous}")]
    Sequencing {
        line: usize,
        frame: u64,
        previous: u64,
    },

    #[error("flow raster: {0}")]
    Raster(String),

    #[error("degenerate bounding box: {0}")]
    DegenerateBox(String),

    #[error("bucket scheme: {0}")]
    Scheme(String),

    #[error("line {line}: {message}")]
    Dimension { line: usize, message: String },

    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },

    #[error("insufficient data for {pair}: need at least {needed} per class, have {adverb} and {antonym}")]
    InsufficientData {
        pair: String,
        needed: usize,
        adverb: usize,
        antonym: usize,
    },

    #[error("cannot balance: class `{0}` has no samples")]
    EmptyClass(String),

    #[error("svm: {0}")]
    Svm(String),

    #[error("feature length {got} does not match model dimension {expected}")]
    FeatureLength { expected: usize, got: usize },

    #[error("no votes to aggregate for clip `{0}`")]
    EmptyVotes(String),

    #[error("missing summary vectors for: {}", .0.join(", "))]
    MissingSummaries(Vec<String>),

    #[error("missing model files: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingModels(Vec<PathBuf>),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Attach a file path to an error raised while reading that file.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        match self {
            e @ (Error::Io { .. } | Error::InFile { .. }) => e,
            other => Error::InFile {
                path: path.into(),
                source: Box::new(other),
            },
        }
    }
}

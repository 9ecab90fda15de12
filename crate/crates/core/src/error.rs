use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("cannot generalize {value:?} of attribute {attribute}{}: {reason}", row_suffix(.row))]
    Value {
        attribute: String,
        row: Option<usize>,
        value: String,
        reason: String,
    },

    #[error("place {value:?} of attribute {attribute} has no entry in the {table} table")]
    PlaceLookup {
        attribute: String,
        value: String,
        table: &'static str,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate accuracy: worst and optimal nodes share height {0}")]
    DegenerateAccuracy(u32),

    #[error("no feasible node found")]
    NoSolution,

    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn row_suffix(row: &Option<usize>) -> String {
    row.map(|r| format!(" (row {r})")).unwrap_or_default()
}

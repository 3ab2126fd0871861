use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("{}: column `{column}` not found in header (available: {available})", path.display())]
    MissingColumn {
        path: PathBuf,
        column: String,
        available: String,
    },

    #[error("{}: no valid rows after cleaning ({report})", path.display())]
    NoValidRows { path: PathBuf, report: String },

    #[error("{}: timestamp {timestamp} is not on the hour; sub-hourly data is not supported", path.display())]
    SubHourly { path: PathBuf, timestamp: String },

    #[error("csv error in {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("series have no common timestamps: {coverage}")]
    EmptyIntersection { coverage: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value {value} lies outside bin range [{origin}, {max_edge}] ({what})")]
    OutOfRange {
        what: &'static str,
        value: f64,
        origin: f64,
        max_edge: f64,
    },

    #[error(
        "ergodicity check failed: {0}; increase min_count or the bin width so that the \
         nonempty cells form a single connected component"
    )]
    Ergodicity(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}

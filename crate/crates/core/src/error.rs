use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path} contains no data rows")]
    EmptyFile { path: PathBuf },

    #[error("row {row} has {found} columns, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column {column}: cannot parse {value:?} as a finite number")]
    BadCell {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("column {0:?} not found in header")]
    UnknownColumn(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("k = {k} exceeds the number of points m = {m}")]
    TooManyClusters { k: usize, m: usize },

    #[error("cluster id {id} out of range for k = {k}")]
    InvalidClusterId { id: usize, k: usize },

    #[error("log_gamma is undefined for x = {0}")]
    LogGammaDomain(f64),

    #[error("silhouette is undefined for k < 2 (got k = {0})")]
    SilhouetteUndefined(usize),

    #[error("gap statistic undefined at k = {k}: within-cluster dispersion is zero")]
    DegenerateGap { k: usize },

    #[error("curve needs at least 3 points, got {0}")]
    CurveTooShort(usize),

    #[error("curve is constant; no knee exists")]
    ConstantCurve,

    #[error("sweep is missing the {0} metric")]
    MissingMetric(&'static str),

    #[error("mean density at k = {0} is not finite")]
    NonFiniteDensity(usize),
}

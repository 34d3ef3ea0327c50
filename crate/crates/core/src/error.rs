use std::path::PathBuf;

/// Errors surfaced by the estimation, planning and evaluation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input violated a documented precondition (shape, range, id).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("training error: {0}")]
    Training(String),

    /// Too few calibration samples for the listed classes.
    #[error("calibration error: classes {classes:?} have fewer than 2 samples")]
    Calibration { classes: Vec<usize> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

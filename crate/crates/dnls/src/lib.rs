//! File formats, parallel scans, acceptance suites and the `dnls` command line
//! on top of `dnls-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod cli;
pub mod formats;
pub mod parallel;
pub mod suites;

pub use dnls_core as core;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] dnls_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("format error at row {row}: {message}")]
    Format { row: usize, message: String },
    #[error("usage: {0}")]
    Usage(String),
}

impl Error {
    /// Exit status: 2 for usage errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            _ => 1,
        }
    }
}

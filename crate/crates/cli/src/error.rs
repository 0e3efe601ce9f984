use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

use thermoface_core::cov::CovError;
use thermoface_core::dne::DneError;
use thermoface_core::imaging::ImagingError;
use thermoface_core::klt::TrackError;
use thermoface_core::lpq::LpqError;
use thermoface_core::roi::RoiError;
use thermoface_core::spd::SpdError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid manifest: {0}")]
    ManifestInvalid(String),
    #[error("{failed} of {total} records failed")]
    TooManyRecordFailures { failed: usize, total: usize },
    #[error("output directory {path:?} is not writable: {source}")]
    OutputDirNotWritable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("{path:?}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("I/O error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    Roi(#[from] RoiError),
    #[error(transparent)]
    Spd(#[from] SpdError),
    #[error(transparent)]
    Cov(#[from] CovError),
    #[error(transparent)]
    Dne(#[from] DneError),
    #[error(transparent)]
    Lpq(#[from] LpqError),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable kind.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::ManifestInvalid(_) => "manifest_invalid",
            CliError::TooManyRecordFailures { .. } => "too_many_record_failures",
            CliError::OutputDirNotWritable { .. } => "output_dir_not_writable",
            CliError::Precondition(_) => "precondition",
            CliError::Parse { .. } => "parse",
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
            CliError::Imaging(_) => "imaging",
            CliError::Track(_) => "tracking",
            CliError::Roi(_) => "roi",
            CliError::Spd(_) => "spd",
            CliError::Cov(_) => "covariance",
            CliError::Dne(_) => "dne",
            CliError::Lpq(_) => "lpq",
            CliError::Json(_) => "json",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Payload<'a> {
            error: &'a str,
            message: String,
        }
        serde_json::to_string(&Payload {
            error: self.kind(),
            message: self.to_string(),
        })
        .unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", self.kind()))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

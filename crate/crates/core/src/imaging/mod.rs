//! Frame and landmark ingestion, pixel sampling, gradients and shared types.

mod frame;
mod grid;
mod landmarks;
mod manifest;
mod pgm;

use thiserror::Error;

pub use frame::{BitDepth, ThermalFrame};
pub use grid::{gradient, Grid, Point2, Rect};
pub use landmarks::{load_landmarks, parse_landmarks, LandmarkSet, LANDMARK_COUNT};
pub use manifest::{load_manifest, parse_manifest, EmotionLabel, SubjectRecord};
pub use pgm::{decode_pgm, encode_pbm, encode_pgm, load_frame, save_frame};

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported maxval {0} (expected 255 or 65535)")]
    UnsupportedMaxval(u32),
    #[error("truncated raster: expected {expected} samples, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("intensity {value} outside [0, {max}]")]
    IntensityOutOfRange { value: f64, max: u32 },
    #[error("grid must have non-zero dimensions")]
    EmptyGrid,
    #[error("expected {expected} values, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("sample position ({x}, {y}) outside the frame")]
    OutOfBounds { x: f64, y: f64 },
    #[error("rectangle {0:?} outside the frame")]
    RectOutOfBounds(Rect),
    #[error("frame {width}x{height} too small for gradients (need at least 3x3)")]
    FrameTooSmall { width: usize, height: usize },
    #[error("expected 68 landmark rows, found {found}")]
    WrongRowCount { found: usize },
    #[error("landmark index {0} appears more than once")]
    DuplicateIndex(usize),
    #[error("line {line}: non-numeric coordinate {value:?}")]
    NonNumericCoordinate { line: usize, value: String },
    #[error("line {line}: expected `index,x,y`")]
    MalformedRow { line: usize },
    #[error("line {line}: landmark index {index} outside 1..=68")]
    LandmarkIndexOutOfRange { line: usize, index: usize },
    #[error("landmark {index} lies outside the frame")]
    LandmarkOutOfFrame { index: usize },
    #[error("unknown emotion label {0:?}")]
    UnknownEmotion(String),
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

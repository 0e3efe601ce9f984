//! Inverse-compositional KLT tracking with a translation warp, Shi-Tomasi
//! feature detection, and least-squares similarity alignment of a sequence
//! onto a reference frame.
//!
//! For the translation model `w(x; p) = x + p` the Jacobian `∂T/∂p` is the
//! template gradient, the Gauss-Newton Hessian `H = Σ JᵀJ` is computed once
//! when a feature is registered, and each iteration solves
//! `δp = H⁻¹ Σ Jᵀ [I(x + p) − T(x)]` followed by the inverse-compositional
//! update `p ← p − δp`.

mod align;
mod detect;
mod pyramid;
mod track;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{ImagingError, Point2};

pub use align::{align_to_reference, align_tracks, warp_frame, Similarity};
pub use detect::{detect_features, min_eigen_response};
pub use pyramid::{build_pyramid, downsample, smooth_binomial};
pub use track::{precompute_template, track_sequence, track_step, window_residual, TemplatePatch};

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("invalid tracker configuration: {0}")]
    InvalidConfig(String),
    #[error("max_count must be at least 1")]
    InvalidMaxCount,
    #[error("region of interest lies outside the frame")]
    RoiOutOfBounds,
    #[error("no trackable features found")]
    NoFeaturesFound,
    #[error("template window around ({x}, {y}) leaves the frame")]
    WindowOutOfBounds { x: f64, y: f64 },
    #[error("template Hessian is singular or ill-conditioned")]
    SingularHessian,
    #[error("tracking needs at least two frames")]
    EmptySequence,
    #[error("no seed produced an invertible template")]
    AllSeedsSingular,
    #[error("frame {index} has size {found:?}, expected {expected:?}")]
    FrameSizeMismatch {
        index: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("need at least two tracked correspondences, found {0}")]
    TooFewCorrespondences(usize),
    #[error("point lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("correspondences are all coincident")]
    DegenerateConfiguration,
    #[error("similarity scale must be positive and finite, got {0}")]
    NonPositiveScale(f64),
    #[error("similarity transform has non-finite parameters")]
    NonFiniteTransform,
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

/// Tuning for detection and tracking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Patch half-size; the window is `(2·window_half + 1)²` pixels.
    pub window_half: usize,
    pub max_iterations: usize,
    /// Convergence threshold on `‖δp‖` in pixels.
    pub epsilon: f64,
    pub pyramid_levels: usize,
    /// Detection threshold as a fraction of the strongest corner response.
    pub min_eigen_quality: f64,
    /// A point is lost when its RMS window error exceeds this fraction of
    /// the frame's dynamic range.
    pub reject_fraction: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            window_half: 7,
            max_iterations: 30,
            epsilon: 0.01,
            pyramid_levels: 3,
            min_eigen_quality: 0.01,
            reject_fraction: 0.05,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), TrackError> {
        let bad = |m: &str| Err(TrackError::InvalidConfig(m.to_string()));
        if self.window_half < 2 {
            return bad("window_half must be at least 2");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.pyramid_levels < 1 {
            return bad("pyramid_levels must be at least 1");
        }
        if self.max_iterations < 1 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.min_eigen_quality > 0.0 && self.min_eigen_quality <= 1.0) {
            return bad("min_eigen_quality must lie in (0, 1]");
        }
        if !(self.reject_fraction > 0.0) {
            return bad("reject_fraction must be positive");
        }
        Ok(())
    }

    pub fn window_side(&self) -> usize {
        2 * self.window_half + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackStatus {
    Tracked,
    Lost,
}

/// A feature registered at `origin` in the reference frame and displaced by
/// the translation `p` in the current frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub id: usize,
    pub origin: Point2,
    pub p: Vector2<f64>,
    pub status: TrackStatus,
    /// Mean squared window error per pixel at the final `p`.
    pub residual: f64,
}

impl TrackPoint {
    pub fn seed(id: usize, origin: Point2) -> Self {
        Self {
            id,
            origin,
            p: Vector2::zeros(),
            status: TrackStatus::Tracked,
            residual: 0.0,
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.origin.x + self.p.x, self.origin.y + self.p.y)
    }

    pub fn is_tracked(&self) -> bool {
        self.status == TrackStatus::Tracked
    }
}

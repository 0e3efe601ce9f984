use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::imaging::{Grid, Point2, ThermalFrame};

use super::{TrackError, TrackPoint};

/// `q = scale · R(rotation) · p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub scale: f64,
    /// Radians, counter-clockwise in x-right/y-down pixel coordinates.
    pub rotation: f64,
    pub translation: Vector2<f64>,
}

impl Default for Similarity {
    fn default() -> Self {
        Self::identity()
    }
}

impl Similarity {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: 0.0,
            translation: Vector2::zeros(),
        }
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Self {
            translation: Vector2::new(dx, dy),
            ..Self::identity()
        }
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        let (s, c) = self.rotation.sin_cos();
        Point2::new(
            self.scale * (c * p.x - s * p.y) + self.translation.x,
            self.scale * (s * p.x + c * p.y) + self.translation.y,
        )
    }

    pub fn apply_inverse(&self, q: Point2) -> Point2 {
        let (s, c) = self.rotation.sin_cos();
        let (x, y) = (q.x - self.translation.x, q.y - self.translation.y);
        Point2::new((c * x + s * y) / self.scale, (-s * x + c * y) / self.scale)
    }

    fn is_finite(&self) -> bool {
        self.scale.is_finite()
            && self.rotation.is_finite()
            && self.translation.x.is_finite()
            && self.translation.y.is_finite()
    }
}

/// Least-squares similarity taking `current` points onto `reference` points.
///
/// Closed form in complex notation: with centred coordinates `z` (current)
/// and `w` (reference), `a = Σ w·z̄ / Σ |z|²` gives scale `|a|` and rotation
/// `arg a`; the translation maps the current centroid onto the reference one.
pub fn align_to_reference(reference: &[Point2], current: &[Point2]) -> Result<Similarity, TrackError> {
    if reference.len() != current.len() {
        return Err(TrackError::LengthMismatch(reference.len(), current.len()));
    }
    let n = reference.len();
    if n < 2 {
        return Err(TrackError::TooFewCorrespondences(n));
    }
    let centroid = |pts: &[Point2]| {
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.x, b + p.y));
        Point2::new(sx / n as f64, sy / n as f64)
    };
    let (rc, cc) = (centroid(reference), centroid(current));

    let (mut re, mut im, mut norm) = (0.0, 0.0, 0.0);
    for (r, c) in reference.iter().zip(current) {
        let (wx, wy) = (r.x - rc.x, r.y - rc.y);
        let (zx, zy) = (c.x - cc.x, c.y - cc.y);
        // w · conj(z)
        re += wx * zx + wy * zy;
        im += wy * zx - wx * zy;
        norm += zx * zx + zy * zy;
    }
    let spread = current.iter().map(|p| p.x.abs().max(p.y.abs())).fold(1.0, f64::max);
    if norm <= (1e-12 * spread).powi(2) * n as f64 {
        return Err(TrackError::DegenerateConfiguration);
    }
    let (a_re, a_im) = (re / norm, im / norm);
    let scale = a_re.hypot(a_im);
    if !(scale > 0.0) {
        return Err(TrackError::DegenerateConfiguration);
    }
    let rotation = a_im.atan2(a_re);
    let translation = Vector2::new(rc.x - (a_re * cc.x - a_im * cc.y), rc.y - (a_im * cc.x + a_re * cc.y));
    let t = Similarity {
        scale,
        rotation,
        translation,
    };
    if !t.is_finite() {
        return Err(TrackError::NonFiniteTransform);
    }
    Ok(t)
}

/// Pairs points by position in the two lists, keeping only those tracked in
/// both, and fits the similarity taking current positions onto reference
/// positions.
pub fn align_tracks(reference: &[TrackPoint], current: &[TrackPoint]) -> Result<Similarity, TrackError> {
    if reference.len() != current.len() {
        return Err(TrackError::LengthMismatch(reference.len(), current.len()));
    }
    let (r, c): (Vec<Point2>, Vec<Point2>) = reference
        .iter()
        .zip(current)
        .filter(|(a, b)| a.is_tracked() && b.is_tracked())
        .map(|(a, b)| (a.position(), b.position()))
        .unzip();
    align_to_reference(&r, &c)
}

/// Resamples `frame` into the reference coordinate system: each output
/// pixel `q` takes the bilinear source value at `transform⁻¹(q)`, or 0 when
/// that lies outside the source.
pub fn warp_frame(frame: &ThermalFrame, transform: &Similarity) -> Result<ThermalFrame, TrackError> {
    if !transform.is_finite() {
        return Err(TrackError::NonFiniteTransform);
    }
    if !(transform.scale > 0.0) {
        return Err(TrackError::NonPositiveScale(transform.scale));
    }
    let src = frame.grid();
    let (w, h) = (src.width(), src.height());
    let (max_x, max_y) = ((w - 1) as f64, (h - 1) as f64);
    const SLACK: f64 = 1e-9;
    let out = Grid::from_fn(w, h, |c, r| {
        let p = transform.apply_inverse(Point2::new(c as f64, r as f64));
        if p.x < -SLACK || p.y < -SLACK || p.x > max_x + SLACK || p.y > max_y + SLACK {
            0.0
        } else {
            src.sample_clamped(p.x, p.y)
        }
    });
    Ok(ThermalFrame::from_grid_clamped(out, frame.bit_depth()))
}

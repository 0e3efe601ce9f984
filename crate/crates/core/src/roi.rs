//! Facial regions of interest defined as closed paths over the 68 landmarks,
//! rasterized with an even-odd pixel-centre test and resampled to a fixed
//! patch size.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{Grid, LandmarkSet, Point2, Rect, ThermalFrame, LANDMARK_COUNT};

#[derive(Debug, Error)]
pub enum RoiError {
    #[error("region {name:?}: {reason}")]
    InvalidSpec { name: String, reason: String },
    #[error("unknown builtin region {0:?}")]
    UnknownRegion(String),
    #[error("polygon area {0} is below one square pixel")]
    DegeneratePolygon(f64),
    #[error("polygon does not cover any pixel centre of the frame")]
    EmptyIntersection,
}

pub const DEFAULT_TARGET_SIZE: (usize, usize) = (32, 32);

/// A named region: a closed landmark path (1-based, first index repeated
/// last) and the patch size it is normalized to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoiSpec {
    pub name: String,
    pub vertex_path: Vec<usize>,
    #[serde(default = "default_target_size")]
    pub target_size: (usize, usize),
}

fn default_target_size() -> (usize, usize) {
    DEFAULT_TARGET_SIZE
}

impl RoiSpec {
    pub fn new(name: &str, vertex_path: &[usize], target_size: (usize, usize)) -> Result<Self, RoiError> {
        let spec = Self {
            name: name.to_string(),
            vertex_path: vertex_path.to_vec(),
            target_size,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), RoiError> {
        let fail = |reason: &str| {
            Err(RoiError::InvalidSpec {
                name: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        if self.name.is_empty() {
            return fail("empty name");
        }
        if self.vertex_path.len() < 4 {
            return fail("path needs at least three vertices plus the closing repeat");
        }
        if self.vertex_path.first() != self.vertex_path.last() {
            return fail("path must end on its first index");
        }
        if self.vertex_path.iter().any(|i| !(1..=LANDMARK_COUNT).contains(i)) {
            return fail("landmark indices must lie in 1..=68");
        }
        if self.target_size.0 == 0 || self.target_size.1 == 0 {
            return fail("target size must be non-zero");
        }
        Ok(())
    }

    /// The path with the closing vertex dropped.
    pub fn vertices(&self) -> &[usize] {
        &self.vertex_path[..self.vertex_path.len() - 1]
    }

    /// `"a -> b -> ... -> a"`.
    pub fn path_string(&self) -> String {
        self.vertex_path
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(" -> ")
    }
}

/// Left cheek, right cheek and nose.
pub fn builtin_specs() -> Vec<RoiSpec> {
    let mk = |name: &str, path: &[usize]| RoiSpec {
        name: name.to_string(),
        vertex_path: path.to_vec(),
        target_size: DEFAULT_TARGET_SIZE,
    };
    vec![
        mk("left_cheek", &[2, 37, 42, 41, 40, 32, 50, 49, 6, 5, 4, 3, 2]),
        mk("right_cheek", &[16, 46, 47, 48, 43, 36, 64, 65, 12, 13, 14, 15, 16]),
        mk("nose", &[40, 28, 43, 36, 35, 34, 33, 32, 40]),
    ]
}

pub fn builtin_spec(name: &str) -> Result<RoiSpec, RoiError> {
    builtin_specs()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| RoiError::UnknownRegion(name.to_string()))
}

/// Shoelace area (absolute value).
pub fn polygon_area(polygon: &[Point2]) -> f64 {
    let n = polygon.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (polygon[i], polygon[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum();
    0.5 * twice.abs()
}

/// Landmark coordinates in path order, closing vertex dropped.
pub fn polygon_from_landmarks(spec: &RoiSpec, landmarks: &LandmarkSet) -> Result<Vec<Point2>, RoiError> {
    spec.validate()?;
    let poly: Vec<Point2> = spec.vertices().iter().map(|&i| landmarks.point(i)).collect();
    let area = polygon_area(&poly);
    if !(area >= 1.0) {
        return Err(RoiError::DegeneratePolygon(area));
    }
    Ok(poly)
}

fn on_segment(p: Point2, a: Point2, b: Point2) -> bool {
    let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    cross == 0.0 && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Even-odd containment; points exactly on an edge count as inside.
pub fn point_in_polygon(p: Point2, polygon: &[Point2]) -> bool {
    let n = polygon.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[(i + 1) % n]);
        if on_segment(p, a, b) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Pixel mask over a bounding box in frame coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoiMask {
    pub bbox: Rect,
    /// Row-major over `bbox`.
    pub mask: Vec<bool>,
}

impl RoiMask {
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> bool {
        self.mask[row * self.bbox.width + col]
    }

    /// Whether frame pixel `(col, row)` is selected.
    pub fn contains(&self, col: usize, row: usize) -> bool {
        self.bbox.contains(col, row) && self.get(col - self.bbox.x, row - self.bbox.y)
    }

    /// Mean of the frame values under the mask.
    pub fn mean_of(&self, grid: &Grid) -> f64 {
        let mut sum = 0.0;
        for r in 0..self.bbox.height {
            for c in 0..self.bbox.width {
                if self.get(c, r) {
                    sum += grid.get(self.bbox.x + c, self.bbox.y + r);
                }
            }
        }
        sum / self.count() as f64
    }
}

/// Selects every frame pixel whose centre passes [`point_in_polygon`].
/// The bounding box is the polygon's extent clipped to the frame.
pub fn rasterize_mask(polygon: &[Point2], frame: &ThermalFrame) -> Result<RoiMask, RoiError> {
    let area = polygon_area(polygon);
    if polygon.len() < 3 || !(area >= 1.0) {
        return Err(RoiError::DegeneratePolygon(area));
    }
    let (w, h) = (frame.width() as f64, frame.height() as f64);
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in polygon {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let (cx0, cy0) = (x0.ceil().max(0.0), y0.ceil().max(0.0));
    let (cx1, cy1) = (x1.floor().min(w - 1.0), y1.floor().min(h - 1.0));
    if cx0 > cx1 || cy0 > cy1 {
        return Err(RoiError::EmptyIntersection);
    }
    let bbox = Rect::new(
        cx0 as usize,
        cy0 as usize,
        (cx1 - cx0) as usize + 1,
        (cy1 - cy0) as usize + 1,
    );
    let mut mask = Vec::with_capacity(bbox.area());
    for r in 0..bbox.height {
        for c in 0..bbox.width {
            let p = Point2::new((bbox.x + c) as f64, (bbox.y + r) as f64);
            mask.push(point_in_polygon(p, polygon));
        }
    }
    let out = RoiMask { bbox, mask };
    if out.count() == 0 {
        return Err(RoiError::EmptyIntersection);
    }
    Ok(out)
}

/// A region cropped from a frame and resampled to its target size.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiPatch {
    pub name: String,
    pub mask: RoiMask,
    /// `target_size` grid; zero where the resampled mask is unset.
    pub patch: Grid,
}

impl RoiPatch {
    pub fn bbox(&self) -> Rect {
        self.mask.bbox
    }
}

/// Crops the region, discards pixels outside the mask, and resizes to the
/// spec's target size.
///
/// Each output pixel maps linearly onto the bounding box (corner-aligned).
/// It is set when the nearest source pixel is in the mask, in which case its
/// value is the bilinear blend renormalized over in-mask neighbours only, so
/// regions never bleed in zeros from outside the mask.
pub fn extract_patch(frame: &ThermalFrame, spec: &RoiSpec, landmarks: &LandmarkSet) -> Result<RoiPatch, RoiError> {
    let polygon = polygon_from_landmarks(spec, landmarks)?;
    let mask = rasterize_mask(&polygon, frame)?;
    let patch = resample_masked(frame.grid(), &mask, spec.target_size);
    Ok(RoiPatch {
        name: spec.name.clone(),
        mask,
        patch,
    })
}

fn resample_masked(grid: &Grid, mask: &RoiMask, (tw, th): (usize, usize)) -> Grid {
    let bbox = mask.bbox;
    let axis = |i: usize, target: usize, source: usize| -> f64 {
        if target == 1 || source == 1 {
            (source as f64 - 1.0) / 2.0
        } else {
            i as f64 * (source - 1) as f64 / (target - 1) as f64
        }
    };
    Grid::from_fn(tw, th, |u, v| {
        let x = axis(u, tw, bbox.width);
        let y = axis(v, th, bbox.height);
        let (nx, ny) = (x.round() as usize, y.round() as usize);
        if !mask.get(nx, ny) {
            return 0.0;
        }
        let (x0, y0) = (x.floor() as usize, y.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(bbox.width - 1), (y0 + 1).min(bbox.height - 1));
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        let taps = [
            (x0, y0, (1.0 - fx) * (1.0 - fy)),
            (x1, y0, fx * (1.0 - fy)),
            (x0, y1, (1.0 - fx) * fy),
            (x1, y1, fx * fy),
        ];
        let (mut acc, mut wsum) = (0.0, 0.0);
        for (c, r, wt) in taps {
            if wt > 0.0 && mask.get(c, r) {
                acc += wt * grid.get(bbox.x + c, bbox.y + r);
                wsum += wt;
            }
        }
        acc / wsum
    })
}

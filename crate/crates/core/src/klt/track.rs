use nalgebra::{Matrix2, Vector2};

use crate::imaging::{gradient, Grid, Point2, ThermalFrame};

use super::pyramid::build_pyramid;
use super::{TrackError, TrackPoint, TrackStatus, TrackerConfig};

/// Largest accepted Hessian condition number.
const MAX_CONDITION: f64 = 1e12;

/// A registered feature: template intensities, per-pixel Jacobian of the
/// translation warp, and the Gauss-Newton Hessian, all computed once.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplatePatch {
    id: usize,
    center: Point2,
    half: usize,
    jacobian: Vec<Vector2<f64>>,
    hessian: Matrix2<f64>,
    hessian_inv: Matrix2<f64>,
    template_values: Vec<f64>,
}

impl TemplatePatch {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn with_id(mut self, id: usize) -> Self {
        self.id = id;
        self
    }

    pub fn center(&self) -> Point2 {
        self.center
    }

    pub fn half(&self) -> usize {
        self.half
    }

    /// Window gradients, row-major over the `(2·half + 1)²` window.
    pub fn jacobian(&self) -> &[Vector2<f64>] {
        &self.jacobian
    }

    pub fn hessian(&self) -> &Matrix2<f64> {
        &self.hessian
    }

    pub fn template_values(&self) -> &[f64] {
        &self.template_values
    }

    /// `Σ JᵀJ` recomputed from the stored Jacobian.
    pub fn hessian_from_jacobian(&self) -> Matrix2<f64> {
        self.jacobian
            .iter()
            .fold(Matrix2::zeros(), |acc, j| acc + j * j.transpose())
    }

    fn offsets(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = self.half as isize;
        (-h..=h).flat_map(move |dy| (-h..=h).map(move |dx| (dx as f64, dy as f64)))
    }
}

fn window_fits(grid: &Grid, center: Point2, half: usize) -> bool {
    let h = half as f64;
    center.x.is_finite()
        && center.y.is_finite()
        && grid.in_bounds(center.x - h, center.y - h)
        && grid.in_bounds(center.x + h, center.y + h)
}

fn template_from_gradients(
    grid: &Grid,
    gx: &Grid,
    gy: &Grid,
    center: Point2,
    half: usize,
) -> Result<TemplatePatch, TrackError> {
    if !window_fits(grid, center, half) {
        return Err(TrackError::WindowOutOfBounds {
            x: center.x,
            y: center.y,
        });
    }
    let side = 2 * half + 1;
    let mut jacobian = Vec::with_capacity(side * side);
    let mut template_values = Vec::with_capacity(side * side);
    let h = half as isize;
    for dy in -h..=h {
        for dx in -h..=h {
            let (x, y) = (center.x + dx as f64, center.y + dy as f64);
            template_values.push(grid.sample_clamped(x, y));
            jacobian.push(Vector2::new(gx.sample_clamped(x, y), gy.sample_clamped(x, y)));
        }
    }
    let hessian = jacobian
        .iter()
        .fold(Matrix2::zeros(), |acc: Matrix2<f64>, j| acc + j * j.transpose());

    let (a, b, d) = (hessian[(0, 0)], hessian[(0, 1)], hessian[(1, 1)]);
    let mean = 0.5 * (a + d);
    let dev = (0.5 * (a - d)).hypot(b);
    let (lmin, lmax) = (mean - dev, mean + dev);
    if !(lmax > 0.0) || !(lmin > 0.0) || lmax / lmin > MAX_CONDITION {
        return Err(TrackError::SingularHessian);
    }
    let hessian_inv = hessian.try_inverse().ok_or(TrackError::SingularHessian)?;
    Ok(TemplatePatch {
        id: 0,
        center,
        half,
        jacobian,
        hessian,
        hessian_inv,
        template_values,
    })
}

/// Registers a feature at `center`: samples the template window and
/// precomputes its Jacobian and Hessian.
pub fn precompute_template(
    frame: &ThermalFrame,
    center: Point2,
    config: &TrackerConfig,
) -> Result<TemplatePatch, TrackError> {
    config.validate()?;
    let (gx, gy) = gradient(frame.grid())?;
    template_from_gradients(frame.grid(), &gx, &gy, center, config.window_half)
}

/// Mean squared error `Σ [I(x + c + p) − T(x)]² / |W|`, or `None` if the
/// displaced window leaves the frame.
pub fn window_residual(template: &TemplatePatch, next: &Grid, p: Vector2<f64>) -> Option<f64> {
    let c = Point2::new(template.center.x + p.x, template.center.y + p.y);
    if !window_fits(next, c, template.half) {
        return None;
    }
    let sse: f64 = template
        .offsets()
        .zip(&template.template_values)
        .map(|((dx, dy), t)| {
            let e = next.sample_clamped(c.x + dx, c.y + dy) - t;
            e * e
        })
        .sum();
    Some(sse / template.template_values.len() as f64)
}

fn dynamic_range(grid: &Grid) -> f64 {
    let (lo, hi) = grid.min_max();
    hi - lo
}

fn lost(template: &TemplatePatch, p: Vector2<f64>, residual: f64) -> TrackPoint {
    TrackPoint {
        id: template.id,
        origin: template.center,
        p,
        status: TrackStatus::Lost,
        residual,
    }
}

pub(crate) fn track_on_grid(
    template: &TemplatePatch,
    next: &Grid,
    p_init: Vector2<f64>,
    config: &TrackerConfig,
    range: f64,
) -> TrackPoint {
    let mut p = p_init;
    if !p.x.is_finite() || !p.y.is_finite() {
        return lost(template, p, f64::INFINITY);
    }
    let n = template.template_values.len() as f64;
    for _ in 0..config.max_iterations {
        let c = Point2::new(template.center.x + p.x, template.center.y + p.y);
        if !window_fits(next, c, template.half) {
            return lost(template, p, f64::INFINITY);
        }
        let mut b = Vector2::zeros();
        for (((dx, dy), t), j) in template
            .offsets()
            .zip(&template.template_values)
            .zip(&template.jacobian)
        {
            let e = next.sample_clamped(c.x + dx, c.y + dy) - t;
            b += j * e;
        }
        let delta = template.hessian_inv * b;
        p -= delta;
        if !p.x.is_finite() || !p.y.is_finite() {
            return lost(template, p, f64::INFINITY);
        }
        if delta.norm() < config.epsilon {
            break;
        }
    }
    let Some(residual) = window_residual(template, next, p) else {
        return lost(template, p, f64::INFINITY);
    };
    let scale = if range > 0.0 { range } else { 1.0 };
    let status = if residual.sqrt() > config.reject_fraction * scale {
        TrackStatus::Lost
    } else {
        TrackStatus::Tracked
    };
    debug_assert!(residual >= 0.0 && n > 0.0);
    TrackPoint {
        id: template.id,
        origin: template.center,
        p,
        status,
        residual,
    }
}

/// One single-level inverse-compositional solve of `next` against `template`
/// starting from `p_init`. Failure to track is reported through the
/// returned status rather than as an error.
pub fn track_step(
    template: &TemplatePatch,
    next: &ThermalFrame,
    p_init: Vector2<f64>,
    config: &TrackerConfig,
) -> TrackPoint {
    let range = dynamic_range(next.grid());
    track_on_grid(template, next.grid(), p_init, config, range)
}

/// Tracks every seed from `frames[0]` through the sequence.
///
/// Templates are registered once on the first frame at every pyramid level.
/// Each later frame is solved coarse-to-fine starting from the previous
/// frame's displacement, so `p` is always cumulative with respect to the
/// first frame. Lost points stay lost. The returned outer vector has one
/// entry per frame, the first holding the seeds themselves.
pub fn track_sequence(
    frames: &[ThermalFrame],
    seeds: &[TrackPoint],
    config: &TrackerConfig,
) -> Result<Vec<Vec<TrackPoint>>, TrackError> {
    config.validate()?;
    if frames.len() < 2 {
        return Err(TrackError::EmptySequence);
    }
    let expected = (frames[0].width(), frames[0].height());
    for (index, f) in frames.iter().enumerate() {
        if (f.width(), f.height()) != expected {
            return Err(TrackError::FrameSizeMismatch {
                index,
                expected,
                found: (f.width(), f.height()),
            });
        }
    }

    let half = config.window_half;
    let min_side = (2 * half + 1).max(3);
    let ref_pyramid = build_pyramid(frames[0].grid(), config.pyramid_levels, min_side);
    let levels = ref_pyramid.len();
    let ref_gradients = ref_pyramid.iter().map(gradient).collect::<Result<Vec<_>, _>>()?;

    // templates[seed][level]; level 0 must exist for a seed to be live
    let templates: Vec<Option<Vec<Option<TemplatePatch>>>> = seeds
        .iter()
        .map(|seed| {
            let per_level: Vec<Option<TemplatePatch>> = (0..levels)
                .map(|l| {
                    let s = (1u32 << l) as f64;
                    let c = Point2::new(seed.origin.x / s, seed.origin.y / s);
                    let (gx, gy) = &ref_gradients[l];
                    template_from_gradients(&ref_pyramid[l], gx, gy, c, half)
                        .ok()
                        .map(|t| t.with_id(seed.id))
                })
                .collect();
            per_level[0].is_some().then_some(per_level)
        })
        .collect();
    if templates.iter().all(Option::is_none) {
        return Err(TrackError::AllSeedsSingular);
    }

    let initial: Vec<TrackPoint> = seeds
        .iter()
        .zip(&templates)
        .map(|(seed, t)| TrackPoint {
            p: Vector2::zeros(),
            residual: 0.0,
            status: if t.is_some() {
                TrackStatus::Tracked
            } else {
                TrackStatus::Lost
            },
            ..*seed
        })
        .collect();

    let mut out = Vec::with_capacity(frames.len());
    out.push(initial);
    for frame in &frames[1..] {
        let pyramid = build_pyramid(frame.grid(), levels, min_side);
        let ranges: Vec<f64> = pyramid.iter().map(dynamic_range).collect();
        let prev = out.last().expect("non-empty");
        let next: Vec<TrackPoint> = prev
            .iter()
            .zip(&templates)
            .map(|(prev_pt, tmpl)| {
                let Some(tmpl) = tmpl else { return *prev_pt };
                if !prev_pt.is_tracked() {
                    return *prev_pt;
                }
                track_pyramid(tmpl, &pyramid, &ranges, prev_pt.p, config)
            })
            .collect();
        out.push(next);
    }
    Ok(out)
}

fn track_pyramid(
    templates: &[Option<TemplatePatch>],
    pyramid: &[Grid],
    ranges: &[f64],
    guess: Vector2<f64>,
    config: &TrackerConfig,
) -> TrackPoint {
    let levels = templates.len().min(pyramid.len());
    let mut refined: Option<Vector2<f64>> = None;
    for l in (1..levels).rev() {
        let s = (1u32 << l) as f64;
        let init = refined.map(|p| p * 2.0).unwrap_or(guess / s);
        refined = match &templates[l] {
            Some(t) => {
                let r = track_on_grid(t, &pyramid[l], init, config, ranges[l]);
                // a failed coarse level just hands its starting point down
                Some(if r.is_tracked() { r.p } else { init })
            }
            None => Some(init),
        };
    }
    let init = refined.map(|p| p * 2.0).unwrap_or(guess);
    let base = templates[0].as_ref().expect("level 0 template checked");
    track_on_grid(base, &pyramid[0], init, config, ranges[0])
}

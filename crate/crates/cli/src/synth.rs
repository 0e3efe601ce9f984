//! Deterministic synthetic thermal faces and the Gaussian classification
//! task.
//!
//! Every subject shares one analytic face template (warm ellipse, cool eyes,
//! warm nose tip and mouth, faint vascular texture) and differs only by an
//! integer placement, an integer base temperature and a small per-record
//! emotion amplitude jitter. Emotions add constant offsets inside the cheek
//! and nose polygons with a cosine feather outside them. Sequence frames
//! translate the face by whole pixels so alignment can be checked exactly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use thermoface_core::dne::LabeledDataset;
use thermoface_core::imaging::{
    encode_pgm, BitDepth, EmotionLabel, Grid, LandmarkSet, Point2, SubjectRecord, ThermalFrame,
};
use thermoface_core::roi::{builtin_spec, point_in_polygon, polygon_from_landmarks};

use crate::error::{CliError, Result};

pub const FACE_SEMI_X: f64 = 38.0;
pub const FACE_SEMI_Y: f64 = 48.0;
const FACE_CONTRAST: f64 = 150.0;
const MAX_PLACEMENT: i32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionOffsets {
    pub left_cheek: f64,
    pub right_cheek: f64,
    pub nose: f64,
}

impl RegionOffsets {
    pub const fn new(left_cheek: f64, right_cheek: f64, nose: f64) -> Self {
        Self {
            left_cheek,
            right_cheek,
            nose,
        }
    }

    fn scaled(self, s: f64) -> Self {
        Self::new(self.left_cheek * s, self.right_cheek * s, self.nose * s)
    }
}

/// Region offsets per emotion; emotions not listed get no offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmotionProfile(pub BTreeMap<EmotionLabel, RegionOffsets>);

impl Default for EmotionProfile {
    fn default() -> Self {
        use EmotionLabel::*;
        Self(BTreeMap::from([
            (Happiness, RegionOffsets::new(30.0, 30.0, 0.0)),
            (Disgust, RegionOffsets::new(0.0, 0.0, -30.0)),
            (Fear, RegionOffsets::new(-25.0, -25.0, -15.0)),
            (Surprise, RegionOffsets::new(15.0, 15.0, 30.0)),
            (Anger, RegionOffsets::new(25.0, 25.0, 25.0)),
            (Sadness, RegionOffsets::new(-30.0, -30.0, 10.0)),
        ]))
    }
}

impl EmotionProfile {
    pub fn offsets(&self, label: EmotionLabel) -> RegionOffsets {
        self.0.get(&label).copied().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub seed: u64,
    pub n_subjects: usize,
    /// Frames per record: the reference frame plus translated followers.
    pub frames_per_subject: usize,
    pub width: usize,
    pub height: usize,
    /// Standard deviation of i.i.d. pixel noise; 0 renders noise-free frames.
    pub noise_sigma: f64,
    /// Relative uniform jitter of each record's emotion amplitude.
    pub amplitude_jitter: f64,
    /// Width in pixels of the cosine falloff outside each region.
    pub feather: f64,
    pub profile: EmotionProfile,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            seed: 42,
            n_subjects: 4,
            frames_per_subject: 3,
            width: 128,
            height: 128,
            noise_sigma: 0.0,
            amplitude_jitter: 0.02,
            feather: 4.0,
            profile: EmotionProfile::default(),
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects < 2 {
            return Err(CliError::Precondition(format!(
                "at least 2 subjects are required, got {}",
                self.n_subjects
            )));
        }
        if self.frames_per_subject < 1 {
            return Err(CliError::Precondition("frames_per_subject must be at least 1".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(CliError::Precondition(
                "noise_sigma must be finite and non-negative".into(),
            ));
        }
        if !(0.0..0.5).contains(&self.amplitude_jitter) {
            return Err(CliError::Precondition("amplitude_jitter must lie in [0, 0.5)".into()));
        }
        if !(self.feather > 0.0) {
            return Err(CliError::Precondition("feather must be positive".into()));
        }
        let (sx, sy) = self.max_sequence_shift();
        let margin = 4.0;
        let need_x = 2.0 * (FACE_SEMI_X + margin + MAX_PLACEMENT as f64) + sx as f64;
        let need_y = 2.0 * (FACE_SEMI_Y + margin + MAX_PLACEMENT as f64) + sy as f64;
        if (self.width as f64) < need_x || (self.height as f64) < need_y {
            return Err(CliError::Precondition(format!(
                "frame {}x{} cannot hold the face and its motion (needs {}x{})",
                self.width,
                self.height,
                need_x.ceil(),
                need_y.ceil()
            )));
        }
        Ok(())
    }

    fn max_sequence_shift(&self) -> (i32, i32) {
        sequence_shift(self.frames_per_subject.saturating_sub(1))
    }
}

/// Whole-pixel translation of sequence frame `k` relative to the reference.
pub fn sequence_shift(k: usize) -> (i32, i32) {
    (k as i32, k as i32 / 2)
}

/// The 68-point template in face coordinates (origin at the face centre).
/// Coordinates are multiples of 1/8 px.
pub fn template_landmarks() -> Vec<Point2> {
    let (a, b) = (FACE_SEMI_X, FACE_SEMI_Y);
    let mut pts = Vec::with_capacity(68);
    let q = |v: f64| (v * 8.0).round() / 8.0;
    let mut push = |x: f64, y: f64| pts.push(Point2::new(q(x), q(y)));
    // jaw 1..17 from the left temple round the chin to the right temple
    for i in 0..17 {
        let t = -0.1 * std::f64::consts::PI + i as f64 / 16.0 * 1.2 * std::f64::consts::PI;
        push(-0.92 * a * t.cos(), 0.92 * b * t.sin());
    }
    // brows 18..27
    for i in 0..5 {
        let u = i as f64 / 4.0;
        push(
            -a * (0.75 - 0.55 * u),
            -b * (0.42 + 0.06 * (std::f64::consts::PI * u).sin()),
        );
    }
    for i in 0..5 {
        let u = i as f64 / 4.0;
        push(
            a * (0.2 + 0.55 * u),
            -b * (0.42 + 0.06 * (std::f64::consts::PI * u).sin()),
        );
    }
    // nose bridge 28..31
    for i in 0..4 {
        push(0.0, -b * (0.3 - 0.12 * i as f64));
    }
    // nostrils 32..36
    for i in 0..5 {
        let u = i as f64 - 2.0;
        push(a * 0.1 * u, b * (0.15 + 0.02 * (2.0 - u.abs())));
    }
    // eyes 37..42 (left) and 43..48 (right): corner, two upper, corner, two lower
    for cx in [-0.42 * a, 0.42 * a] {
        let cy = -0.27 * b;
        let (hw, hh) = (0.16 * a, 0.05 * b);
        let xs = [-1.0, -0.35, 0.35, 1.0, 0.35, -0.35];
        let ys = [0.0, -1.0, -1.0, 0.0, 1.0, 1.0];
        for k in 0..6 {
            push(cx + hw * xs[k], cy + hh * ys[k]);
        }
    }
    // outer lip 49..60: left corner, upper lip to right corner, lower lip back
    let (mx, my) = (0.0, 0.45 * b);
    let (mw, mh) = (0.36 * a, 0.08 * b);
    for k in 0..12 {
        let t = std::f64::consts::PI - k as f64 * std::f64::consts::PI / 6.0;
        push(mx + mw * t.cos(), my - mh * t.sin());
    }
    // inner lip 61..68
    for k in 0..8 {
        let t = std::f64::consts::PI - k as f64 * std::f64::consts::PI / 4.0;
        push(mx + 0.7 * mw * t.cos(), my - 0.4 * mh * t.sin());
    }
    pts
}

fn gauss(x: f64, y: f64, cx: f64, cy: f64, sx: f64, sy: f64) -> f64 {
    (-((x - cx).powi(2) / (2.0 * sx * sx) + (y - cy).powi(2) / (2.0 * sy * sy))).exp()
}

/// Emotion-free face intensity above the base temperature, in face
/// coordinates.
pub fn face_field(x: f64, y: f64) -> f64 {
    let (a, b) = (FACE_SEMI_X, FACE_SEMI_Y);
    let rho = ((x / a).powi(2) + (y / b).powi(2)).sqrt();
    let d = (1.0 - rho) * 0.5 * (a + b);
    let skin = 0.5 * (1.0 + (d / 1.5).tanh());
    let detail = -40.0 * gauss(x, y, -0.42 * a, -0.27 * b, 5.0, 3.0)
        - 40.0 * gauss(x, y, 0.42 * a, -0.27 * b, 5.0, 3.0)
        + 25.0 * gauss(x, y, 0.0, 0.08 * b, 5.0, 5.0)
        + 20.0 * gauss(x, y, 0.0, 0.45 * b, 10.0, 3.0)
        + 8.0 * (0.35 * x + 0.2 * y).sin() * (0.3 * y - 0.15 * x).cos();
    skin * (FACE_CONTRAST + detail)
}

fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let (vx, vy) = (b.x - a.x, b.y - a.y);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 {
        (((p.x - a.x) * vx + (p.y - a.y) * vy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.distance(Point2::new(a.x + t * vx, a.y + t * vy))
}

/// 1 inside the polygon, cosine falloff to 0 over `feather` pixels outside.
pub fn feathered_weight(p: Point2, polygon: &[Point2], feather: f64) -> f64 {
    if point_in_polygon(p, polygon) {
        return 1.0;
    }
    let n = polygon.len();
    let d = (0..n)
        .map(|i| segment_distance(p, polygon[i], polygon[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min);
    if d >= feather {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * d / feather).cos())
    }
}

/// Region polygons of the template in face coordinates.
#[derive(Debug, Clone)]
pub struct FaceRegions {
    left_cheek: Vec<Point2>,
    right_cheek: Vec<Point2>,
    nose: Vec<Point2>,
}

impl FaceRegions {
    pub fn from_template() -> Self {
        let lm = LandmarkSet::from_points(template_landmarks()).expect("template has 68 finite points");
        let poly = |name: &str| {
            polygon_from_landmarks(&builtin_spec(name).expect("builtin region"), &lm)
                .expect("template regions are valid")
        };
        Self {
            left_cheek: poly("left_cheek"),
            right_cheek: poly("right_cheek"),
            nose: poly("nose"),
        }
    }

    pub fn offset_at(&self, p: Point2, offsets: &RegionOffsets, feather: f64) -> f64 {
        let mut v = 0.0;
        for (poly, o) in [
            (&self.left_cheek, offsets.left_cheek),
            (&self.right_cheek, offsets.right_cheek),
            (&self.nose, offsets.nose),
        ] {
            if o != 0.0 {
                v += o * feathered_weight(p, poly, feather);
            }
        }
        v
    }
}

/// Per-subject rendering parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubjectTraits {
    /// Integer face centre in the reference frame.
    pub center: (i32, i32),
    pub base: f64,
}

/// Renders one frame with the face centre at `center + shift`.
pub fn render_frame(
    params: &SynthParams,
    regions: &FaceRegions,
    traits: &SubjectTraits,
    offsets: Option<&RegionOffsets>,
    shift: (i32, i32),
    noise: Option<&mut ChaCha8Rng>,
) -> ThermalFrame {
    let cx = (traits.center.0 + shift.0) as f64;
    let cy = (traits.center.1 + shift.1) as f64;
    let normal = Normal::new(0.0, params.noise_sigma).expect("validated sigma");
    let mut noise = noise.filter(|_| params.noise_sigma > 0.0);
    let g = Grid::from_fn(params.width, params.height, |c, r| {
        let p = Point2::new(c as f64 - cx, r as f64 - cy);
        let mut v = traits.base + face_field(p.x, p.y);
        if let Some(o) = offsets {
            v += regions.offset_at(p, o, params.feather);
        }
        if let Some(rng) = noise.as_mut() {
            v += normal.sample(*rng);
        }
        v
    });
    let quantized = g.map(|v| v.round());
    ThermalFrame::from_grid_clamped(quantized, BitDepth::Sixteen)
}

pub fn subject_landmarks(traits: &SubjectTraits) -> LandmarkSet {
    let (cx, cy) = (traits.center.0 as f64, traits.center.1 as f64);
    LandmarkSet::from_points(
        template_landmarks()
            .into_iter()
            .map(|p| Point2::new(p.x + cx, p.y + cy))
            .collect(),
    )
    .expect("68 template points")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub manifest: PathBuf,
    pub entries: Vec<SubjectRecord>,
    pub subjects: Vec<SubjectTraits>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::OutputDirNotWritable {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Draws subject traits and per-record amplitudes from the seed.
pub fn draw_subjects(params: &SynthParams, rng: &mut ChaCha8Rng) -> Vec<(SubjectTraits, [f64; 6])> {
    (0..params.n_subjects)
        .map(|_| {
            let dx = rng.random_range(-MAX_PLACEMENT..=MAX_PLACEMENT);
            let dy = rng.random_range(-MAX_PLACEMENT..=MAX_PLACEMENT);
            let (sx, sy) = params.max_sequence_shift();
            let center = (
                (params.width as i32 - sx) / 2 + dx,
                (params.height as i32 - sy) / 2 + dy,
            );
            let base = 1000.0 + rng.random_range(-50i32..=50) as f64;
            let mut amps = [1.0; 6];
            for a in &mut amps {
                if params.amplitude_jitter > 0.0 {
                    *a = 1.0 + rng.random_range(-params.amplitude_jitter..=params.amplitude_jitter);
                }
            }
            (SubjectTraits { center, base }, amps)
        })
        .collect()
}

/// Writes `subject_XX/<emotion>/frame_KKK.pgm`, `landmarks.csv` and a
/// top-level `manifest.json`. Identical parameters give identical bytes.
pub fn synth_generate(params: &SynthParams, out_dir: &Path) -> Result<SynthOutput> {
    params.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::OutputDirNotWritable {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let subjects = draw_subjects(params, &mut rng);
    let regions = FaceRegions::from_template();
    let mut entries = Vec::new();
    for (s, (traits, amps)) in subjects.iter().enumerate() {
        let subject_id = format!("subject_{:02}", s + 1);
        let landmarks = subject_landmarks(traits);
        for label in EmotionLabel::ALL {
            let rel_dir = PathBuf::from(&subject_id).join(label.as_str());
            let dir = out_dir.join(&rel_dir);
            std::fs::create_dir_all(&dir).map_err(|e| CliError::OutputDirNotWritable {
                path: dir.clone(),
                source: e,
            })?;
            let offsets = params.profile.offsets(label).scaled(amps[label.index()]);
            let mut noise_rng = ChaCha8Rng::seed_from_u64(params.seed ^ ((s as u64 + 1) << 32) ^ label.index() as u64);
            let mut frames = Vec::new();
            for k in 0..params.frames_per_subject {
                let frame = render_frame(
                    params,
                    &regions,
                    traits,
                    Some(&offsets),
                    sequence_shift(k),
                    Some(&mut noise_rng),
                );
                let name = format!("frame_{k:03}.pgm");
                write_file(&dir.join(&name), &encode_pgm(&frame))?;
                frames.push(rel_dir.join(name));
            }
            write_file(&dir.join("landmarks.csv"), landmarks.to_csv().as_bytes())?;
            entries.push(SubjectRecord {
                subject_id: subject_id.clone(),
                emotion: label,
                frame: frames[0].clone(),
                landmarks: rel_dir.join("landmarks.csv"),
                sequence: frames[1..].to_vec(),
            });
        }
    }
    let manifest = out_dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&entries)?;
    text.push('\n');
    write_file(&manifest, text.as_bytes())?;
    Ok(SynthOutput {
        manifest,
        entries,
        subjects: subjects.into_iter().map(|(t, _)| t).collect(),
    })
}

/// Three-class Gaussian task: class `c` has mean `separation · e_c` and unit
/// isotropic covariance in `dim` dimensions. Returns independent training
/// and test draws of `per_class` samples per class.
pub fn gaussian_task(
    seed: u64,
    dim: usize,
    per_class: usize,
    separation: f64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if dim < 3 || per_class == 0 {
        return Err(CliError::Precondition(
            "gaussian task needs dim >= 3 and per_class >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let n = 3 * per_class;
        let labels: Vec<usize> = (0..n).map(|j| j / per_class).collect();
        let x = DMatrix::from_fn(dim, n, |i, j| {
            let mean = if i == labels[j] { separation } else { 0.0 };
            mean + rng.sample::<f64, _>(StandardNormal)
        });
        LabeledDataset::new(x, labels)
    };
    let train = draw(&mut rng)?;
    let test = draw(&mut rng)?;
    Ok((train, test))
}

//! Covariance signatures over fiducial-point neighbourhoods and
//! least-distance emotion matching.
//!
//! The "spectrum" of a landmark is its vectorized `w×w` intensity window, so
//! a face gives 68 observations of an `L = w²` dimensional vector and its
//! signature is their `L×L` sample covariance.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{EmotionLabel, LandmarkSet, ThermalFrame, LANDMARK_COUNT};
use crate::spd::{Measure, SpdError, SpdMatrix, DEFAULT_RIDGE};

#[derive(Debug, Error)]
pub enum CovError {
    #[error("invalid FPS configuration: {0}")]
    InvalidConfig(String),
    #[error("window of landmark {index} at ({x}, {y}) overhangs the frame beyond the clamp allowance")]
    WindowOutOfBounds { index: usize, x: f64, y: f64 },
    #[error("spectra must have {expected} rows and {columns} columns, found {rows}x{found}")]
    SpectraShape {
        expected: usize,
        columns: usize,
        rows: usize,
        found: usize,
    },
    #[error("spectra contain a non-finite entry")]
    NonFinite,
    #[error("gallery is empty")]
    EmptyGallery,
    #[error("at least two distinct labels are required")]
    SingleClass,
    #[error("leave-one-subject-out needs at least two subjects, found {0}")]
    TooFewSubjects(usize),
    #[error("{labels} labels but {distances} distances")]
    LengthMismatch { labels: usize, distances: usize },
    #[error(transparent)]
    Spd(#[from] SpdError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FpsConfig {
    /// Odd window side `w`.
    pub window: usize,
    /// Relative ridge added to every covariance.
    pub ridge: f64,
    pub measure: Measure,
}

impl Default for FpsConfig {
    fn default() -> Self {
        Self {
            window: 7,
            ridge: DEFAULT_RIDGE,
            measure: Measure::Jkld,
        }
    }
}

impl FpsConfig {
    pub fn validate(&self) -> Result<(), CovError> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(CovError::InvalidConfig(format!(
                "window must be odd and at least 3, got {}",
                self.window
            )));
        }
        if !(self.ridge.is_finite() && self.ridge > 0.0) {
            return Err(CovError::InvalidConfig(format!(
                "ridge must be positive, got {}",
                self.ridge
            )));
        }
        Ok(())
    }

    /// Spectrum length `L = w²`.
    pub fn spectrum_len(&self) -> usize {
        self.window * self.window
    }
}

/// 68 × L matrix; row `i` is landmark `i + 1`'s window in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct FiducialSpectra {
    rows: DMatrix<f64>,
}

impl FiducialSpectra {
    pub fn from_matrix(rows: DMatrix<f64>, window: usize) -> Result<Self, CovError> {
        let columns = window * window;
        if rows.nrows() != LANDMARK_COUNT || rows.ncols() != columns {
            return Err(CovError::SpectraShape {
                expected: LANDMARK_COUNT,
                columns,
                rows: rows.nrows(),
                found: rows.ncols(),
            });
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(CovError::NonFinite);
        }
        Ok(Self { rows })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn spectrum_len(&self) -> usize {
        self.rows.ncols()
    }
}

/// Samples the `w×w` window around every landmark. Window samples falling
/// outside the frame are clamped to the border; a landmark that is itself
/// outside the frame is an error.
pub fn build_fps(
    frame: &ThermalFrame,
    landmarks: &LandmarkSet,
    config: &FpsConfig,
) -> Result<FiducialSpectra, CovError> {
    config.validate()?;
    let grid = frame.grid();
    let half = (config.window / 2) as isize;
    let mut rows = DMatrix::zeros(LANDMARK_COUNT, config.spectrum_len());
    for (i, p) in landmarks.points().iter().enumerate() {
        if !grid.in_bounds(p.x, p.y) {
            return Err(CovError::WindowOutOfBounds {
                index: i + 1,
                x: p.x,
                y: p.y,
            });
        }
        let mut k = 0;
        for dy in -half..=half {
            for dx in -half..=half {
                rows[(i, k)] = grid.sample_clamped(p.x + dx as f64, p.y + dy as f64);
                k += 1;
            }
        }
    }
    FiducialSpectra::from_matrix(rows, config.window)
}

/// Unbiased sample covariance of the rows of `observations`, exactly
/// symmetric.
pub fn sample_covariance(observations: &DMatrix<f64>) -> DMatrix<f64> {
    let n = observations.nrows();
    let l = observations.ncols();
    let mean = observations.row_mean();
    let mut centred = observations.clone();
    for mut row in centred.row_iter_mut() {
        row -= &mean;
    }
    let denom = (n.max(2) - 1) as f64;
    let mut cov = centred.transpose() * &centred / denom;
    for i in 0..l {
        for j in 0..i {
            let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpsCovariance {
    pub cov: SpdMatrix,
    /// Every spectrum was identical, so the covariance is pure ridge.
    pub degenerate: bool,
}

/// Sample covariance of the spectra plus `ε·I`, `ε = ridge · trace / L`
/// (or `ridge` itself when the scatter is zero).
pub fn covariance_of_fps(fps: &FiducialSpectra, config: &FpsConfig) -> Result<FpsCovariance, CovError> {
    config.validate()?;
    let m = fps.matrix();
    let first = m.row(0);
    let degenerate = m.row_iter().all(|r| r == first);
    let mut cov = sample_covariance(m);
    let l = cov.nrows();
    let trace = cov.trace();
    let eps = if trace > 0.0 {
        config.ridge * trace / l as f64
    } else {
        config.ridge
    };
    for i in 0..l {
        cov[(i, i)] += eps;
    }
    let cov = SpdMatrix::with_ridge_repair(cov, config.ridge)?;
    Ok(FpsCovariance { cov, degenerate })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSignature {
    pub cov: SpdMatrix,
    pub label: EmotionLabel,
    pub subject_id: String,
}

impl CovarianceSignature {
    pub fn new(cov: SpdMatrix, label: EmotionLabel, subject_id: impl Into<String>) -> Self {
        Self {
            cov,
            label,
            subject_id: subject_id.into(),
        }
    }
}

/// Index of the smallest distance, skipping `exclude`. Ties resolve to the
/// earliest entry.
pub fn argmin_distance(distances: &[f64], exclude: Option<usize>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &d) in distances.iter().enumerate() {
        if Some(i) == exclude || d.is_nan() {
            continue;
        }
        if best.is_none_or(|b| d < distances[b]) {
            best = Some(i);
        }
    }
    best
}

/// The least-distance decision rule over a labelled distance row.
pub fn predict_from_distances(
    labels: &[EmotionLabel],
    distances: &[f64],
    exclude: Option<usize>,
) -> Result<EmotionLabel, CovError> {
    if labels.len() != distances.len() {
        return Err(CovError::LengthMismatch {
            labels: labels.len(),
            distances: distances.len(),
        });
    }
    argmin_distance(distances, exclude)
        .map(|i| labels[i])
        .ok_or(CovError::EmptyGallery)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult {
    pub predicted: EmotionLabel,
    /// Gallery index of the nearest entry.
    pub nearest: usize,
    pub distances: Vec<f64>,
}

pub fn match_probe(
    probe: &CovarianceSignature,
    gallery: &[CovarianceSignature],
    config: &FpsConfig,
) -> Result<MatchResult, CovError> {
    if gallery.is_empty() {
        return Err(CovError::EmptyGallery);
    }
    let distances = gallery
        .iter()
        .map(|g| config.measure.distance(&probe.cov, &g.cov))
        .collect::<Result<Vec<_>, _>>()?;
    let nearest = argmin_distance(&distances, None).ok_or(CovError::EmptyGallery)?;
    Ok(MatchResult {
        predicted: gallery[nearest].label,
        nearest,
        distances,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfusionMode {
    /// Mean inter-class distances, zero diagonal.
    Distance,
    /// Classification counts, rows true and columns predicted.
    Count,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub mode: ConfusionMode,
    pub labels: Vec<EmotionLabel>,
    pub entries: Vec<Vec<f64>>,
}

impl ConfusionMatrix {
    pub fn zeros(mode: ConfusionMode, labels: Vec<EmotionLabel>) -> Self {
        let n = labels.len();
        Self {
            mode,
            labels,
            entries: vec![vec![0.0; n]; n],
        }
    }

    pub fn position(&self, label: EmotionLabel) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn get(&self, row: EmotionLabel, col: EmotionLabel) -> Option<f64> {
        Some(self.entries[self.position(row)?][self.position(col)?])
    }

    /// Adds one count at (truth, predicted).
    pub fn record(&mut self, truth: EmotionLabel, predicted: EmotionLabel) {
        let (r, c) = (
            self.position(truth).expect("label in confusion matrix"),
            self.position(predicted).expect("label in confusion matrix"),
        );
        self.entries[r][c] += 1.0;
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().flatten().sum()
    }

    pub fn correct(&self) -> f64 {
        (0..self.labels.len()).map(|i| self.entries[i][i]).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.labels.len();
        (0..n).all(|i| (0..n).all(|j| self.entries[i][j] == self.entries[j][i]))
    }

    /// Correct / predicted-as-label; 0 when nothing was predicted as it.
    pub fn precision(&self, label: EmotionLabel) -> f64 {
        let Some(c) = self.position(label) else { return 0.0 };
        let col: f64 = self.entries.iter().map(|row| row[c]).sum();
        if col > 0.0 {
            self.entries[c][c] / col
        } else {
            0.0
        }
    }

    /// Correct / truly-label; 0 for an absent class.
    pub fn recall(&self, label: EmotionLabel) -> f64 {
        let Some(r) = self.position(label) else { return 0.0 };
        let row: f64 = self.entries[r].iter().sum();
        if row > 0.0 {
            self.entries[r][r] / row
        } else {
            0.0
        }
    }

    /// Header row of labels, then one row per label.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label");
        for l in &self.labels {
            out.push(',');
            out.push_str(l.as_str());
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.entries) {
            out.push_str(l.as_str());
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

fn present_labels<'a>(labels: impl Iterator<Item = &'a EmotionLabel>) -> Vec<EmotionLabel> {
    labels.copied().collect::<BTreeSet<_>>().into_iter().collect()
}

/// Mean pairwise distance between the signatures of each pair of classes,
/// diagonal 0, mirrored so it is exactly symmetric.
pub fn class_distance_matrix(gallery: &[CovarianceSignature], config: &FpsConfig) -> Result<ConfusionMatrix, CovError> {
    let labels = present_labels(gallery.iter().map(|g| &g.label));
    if labels.len() < 2 {
        return Err(CovError::SingleClass);
    }
    let mut out = ConfusionMatrix::zeros(ConfusionMode::Distance, labels.clone());
    for a in 0..labels.len() {
        for b in a + 1..labels.len() {
            let (mut sum, mut count) = (0.0, 0usize);
            for x in gallery.iter().filter(|g| g.label == labels[a]) {
                for y in gallery.iter().filter(|g| g.label == labels[b]) {
                    sum += config.measure.distance(&x.cov, &y.cov)?;
                    count += 1;
                }
            }
            let mean = sum / count as f64;
            out.entries[a][b] = mean;
            out.entries[b][a] = mean;
        }
    }
    Ok(out)
}

/// One held-out subject: indices of its signatures and of everyone else's.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LosoFold {
    pub subject_id: String,
    pub probes: Vec<usize>,
    pub gallery: Vec<usize>,
}

/// Folds in order of each subject's first appearance.
pub fn loso_folds(signatures: &[CovarianceSignature]) -> Result<Vec<LosoFold>, CovError> {
    let mut subjects: Vec<&str> = Vec::new();
    for s in signatures {
        if !subjects.contains(&s.subject_id.as_str()) {
            subjects.push(&s.subject_id);
        }
    }
    if subjects.len() < 2 {
        return Err(CovError::TooFewSubjects(subjects.len()));
    }
    Ok(subjects
        .into_iter()
        .map(|subject| {
            let (probes, gallery): (Vec<usize>, Vec<usize>) =
                (0..signatures.len()).partition(|&i| signatures[i].subject_id == subject);
            LosoFold {
                subject_id: subject.to_string(),
                probes,
                gallery,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LosoPrediction {
    pub index: usize,
    pub subject_id: String,
    pub truth: EmotionLabel,
    pub predicted: EmotionLabel,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LosoResult {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    /// In signature order.
    pub predictions: Vec<LosoPrediction>,
}

/// Leave-one-subject-out matching: every signature is matched against the
/// signatures of all other subjects.
pub fn loso_evaluate(signatures: &[CovarianceSignature], config: &FpsConfig) -> Result<LosoResult, CovError> {
    let folds = loso_folds(signatures)?;
    let labels = present_labels(signatures.iter().map(|s| &s.label));
    let mut confusion = ConfusionMatrix::zeros(ConfusionMode::Count, labels);
    let mut predictions = Vec::with_capacity(signatures.len());
    for fold in &folds {
        let gallery: Vec<CovarianceSignature> = fold.gallery.iter().map(|&i| signatures[i].clone()).collect();
        for &i in &fold.probes {
            let probe = &signatures[i];
            let m = match_probe(probe, &gallery, config)?;
            confusion.record(probe.label, m.predicted);
            predictions.push(LosoPrediction {
                index: i,
                subject_id: probe.subject_id.clone(),
                truth: probe.label,
                predicted: m.predicted,
                distance: m.distances[m.nearest],
            });
        }
    }
    predictions.sort_by_key(|p| p.index);
    let accuracy = confusion.correct() / confusion.total();
    Ok(LosoResult {
        accuracy,
        confusion,
        predictions,
    })
}

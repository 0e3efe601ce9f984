//! The end-to-end batch run: track-align, extract-roi, covariance
//! signatures and optional LPQ features, then leave-one-subject-out
//! evaluation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use thermoface_core::cov::{
    build_fps, covariance_of_fps, loso_evaluate, ConfusionMatrix, CovarianceSignature, LosoPrediction,
};
use thermoface_core::dne::{dne_fit, embed, nn_accuracy, pca_fit, LabeledDataset};
use thermoface_core::imaging::{
    load_frame, load_landmarks, load_manifest, EmotionLabel, Grid, ImagingError, LandmarkSet, SubjectRecord,
    ThermalFrame,
};
use thermoface_core::klt::{align_tracks, detect_features, track_sequence, warp_frame, TrackerConfig};
use thermoface_core::lpq::lpq_histogram;
use thermoface_core::roi::{extract_patch, RoiSpec};
use thermoface_core::spd::Measure;

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};

/// Loads a manifest, mapping every manifest problem to `ManifestInvalid`.
pub fn read_manifest(path: &Path) -> Result<Vec<SubjectRecord>> {
    load_manifest(path).map_err(|e| match e {
        ImagingError::InvalidManifest(m) => CliError::ManifestInvalid(m),
        ImagingError::Io { path, source } => CliError::io(path, source),
        other => CliError::ManifestInvalid(other.to_string()),
    })
}

/// A reference frame with its sequence registered onto it and averaged.
#[derive(Debug, Clone)]
pub struct AlignedRecord {
    pub frame: ThermalFrame,
    pub landmarks: LandmarkSet,
    pub frames_used: usize,
    /// Mean tracked feature count over the followers (0 without a sequence).
    pub tracked_features: f64,
}

/// Registers every follower frame onto the reference with KLT tracks and a
/// similarity fit, then averages the registered frames.
pub fn align_sequence(
    reference: ThermalFrame,
    followers: Vec<ThermalFrame>,
    tracker: &TrackerConfig,
    max_features: usize,
) -> Result<(ThermalFrame, f64)> {
    if followers.is_empty() {
        return Ok((reference, 0.0));
    }
    let seeds = detect_features(&reference, None, tracker, max_features)?;
    let mut frames = Vec::with_capacity(followers.len() + 1);
    frames.push(reference);
    frames.extend(followers);
    let tracks = track_sequence(&frames, &seeds, tracker)?;
    let (w, h) = (frames[0].width(), frames[0].height());
    let mut sum = frames[0].grid().data().to_vec();
    let mut tracked = 0usize;
    for k in 1..frames.len() {
        tracked += tracks[k].iter().filter(|t| t.is_tracked()).count();
        let transform = align_tracks(&tracks[0], &tracks[k])?;
        let warped = warp_frame(&frames[k], &transform)?;
        for (s, v) in sum.iter_mut().zip(warped.grid().data()) {
            *s += v;
        }
    }
    let n = frames.len() as f64;
    let mean = Grid::new(w, h, sum.into_iter().map(|v| v / n).collect())?;
    let depth = frames[0].bit_depth();
    Ok((
        ThermalFrame::from_grid_clamped(mean, depth),
        tracked as f64 / (frames.len() - 1) as f64,
    ))
}

pub fn load_and_align(record: &SubjectRecord, config: &PipelineConfig) -> Result<AlignedRecord> {
    let reference = load_frame(&record.frame)?;
    let landmarks = load_landmarks(&record.landmarks)?;
    landmarks.check_within(&reference)?;
    let followers = record
        .sequence
        .iter()
        .map(load_frame)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let frames_used = followers.len() + 1;
    let (frame, tracked_features) = align_sequence(reference, followers, &config.tracker, config.max_features)?;
    Ok(AlignedRecord {
        frame,
        landmarks,
        frames_used,
        tracked_features,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordSummary {
    pub index: usize,
    pub subject_id: String,
    pub emotion: EmotionLabel,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub frames_used: usize,
    pub tracked_features: f64,
    /// Mean aligned intensity inside each region mask.
    pub region_means: BTreeMap<String, f64>,
    pub degenerate_covariance: bool,
}

#[derive(Debug, Clone)]
struct Processed {
    signature: CovarianceSignature,
    lpq: Option<Vec<f64>>,
    summary: RecordSummary,
}

/// Per-stage wall time accumulated over records, in milliseconds.
type StageTimes = BTreeMap<&'static str, f64>;

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn process_record(
    index: usize,
    record: &SubjectRecord,
    config: &PipelineConfig,
    specs: &[RoiSpec],
) -> (Result<Processed>, StageTimes) {
    let mut times = StageTimes::new();
    let result = (|| {
        let t = Instant::now();
        let aligned = load_and_align(record, config)?;
        times.insert("track_align", ms(t));

        let t = Instant::now();
        let mut region_means = BTreeMap::new();
        let mut lpq = config.dne.enabled.then(Vec::new);
        for spec in specs {
            let patch = extract_patch(&aligned.frame, spec, &aligned.landmarks)?;
            region_means.insert(spec.name.clone(), patch.mask.mean_of(aligned.frame.grid()));
            if let Some(features) = lpq.as_mut() {
                features.extend_from_slice(lpq_histogram(&patch.patch, &config.lpq)?.bins());
            }
        }
        times.insert("extract_roi", ms(t));

        let t = Instant::now();
        let fps = build_fps(&aligned.frame, &aligned.landmarks, &config.fps)?;
        let cov = covariance_of_fps(&fps, &config.fps)?;
        times.insert("signature", ms(t));

        Ok(Processed {
            signature: CovarianceSignature::new(cov.cov, record.emotion, record.subject_id.clone()),
            lpq,
            summary: RecordSummary {
                index,
                subject_id: record.subject_id.clone(),
                emotion: record.emotion,
                ok: true,
                error: None,
                frames_used: aligned.frames_used,
                tracked_features: aligned.tracked_features,
                region_means,
                degenerate_covariance: cov.degenerate,
            },
        })
    })();
    (result, times)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassStats {
    pub label: EmotionLabel,
    pub precision: f64,
    pub recall: f64,
    pub support: usize,
}

/// Leave-one-subject-out 1-NN on LPQ-on-ROI features in a DNE embedding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DneReport {
    pub k: usize,
    /// Output dimension per fold (the fold's negative-eigenvalue count unless
    /// forced).
    pub dims: Vec<usize>,
    pub accuracy: f64,
    pub raw_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub measure: Measure,
    pub accuracy: f64,
    pub per_class: Vec<ClassStats>,
    pub confusion: ConfusionMatrix,
    pub predictions: Vec<LosoPrediction>,
    pub processed: usize,
    pub failed: usize,
    pub records: Vec<RecordSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dne: Option<DneReport>,
    pub timing: BTreeMap<String, f64>,
    pub config_echo: PipelineConfig,
}

fn dne_loso(features: &[Vec<f64>], signatures: &[CovarianceSignature], config: &PipelineConfig) -> Result<DneReport> {
    let n = features[0].len();
    let labels: Vec<usize> = signatures.iter().map(|s| s.label.index()).collect();
    let mut subjects: Vec<&str> = Vec::new();
    for s in signatures {
        if !subjects.contains(&s.subject_id.as_str()) {
            subjects.push(&s.subject_id);
        }
    }
    let mut dims = Vec::new();
    let (mut correct, mut raw_correct, mut total) = (0.0, 0.0, 0.0);
    for subject in subjects {
        let (test, train): (Vec<usize>, Vec<usize>) =
            (0..features.len()).partition(|&i| signatures[i].subject_id == subject);
        let gather = |idx: &[usize]| DMatrix::from_fn(n, idx.len(), |r, c| features[idx[c]][r]);
        let (xtr, xte) = (gather(&train), gather(&test));
        let ltr: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
        let lte: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
        // PCA to at most (training size - 1) dimensions keeps the scatter
        // eigenproblem small when histograms outnumber samples.
        let pdim = n.min(train.len().saturating_sub(1)).max(1);
        let pca = pca_fit(&xtr, pdim)?;
        let mean = xtr.column_mean();
        let centre = |x: &DMatrix<f64>| {
            let mut c = x.clone();
            for mut col in c.column_iter_mut() {
                col -= &mean;
            }
            pca.transpose() * c
        };
        let (ptr, pte) = (centre(&xtr), centre(&xte));
        let model = dne_fit(
            &LabeledDataset::new(ptr.clone(), ltr.clone())?,
            config.dne.k,
            config.dne.d,
        )?;
        dims.push(model.output_dim());
        let w = test.len() as f64;
        correct += w * nn_accuracy(&embed(&model, &ptr)?, &ltr, &embed(&model, &pte)?, &lte)?;
        raw_correct += w * nn_accuracy(&xtr, &ltr, &xte, &lte)?;
        total += w;
    }
    Ok(DneReport {
        k: config.dne.k,
        dims,
        accuracy: correct / total,
        raw_accuracy: raw_correct / total,
    })
}

/// Signatures (and LPQ features when enabled) of the records that
/// processed successfully, in manifest order.
#[derive(Debug, Clone)]
pub struct RecordBatch {
    pub signatures: Vec<CovarianceSignature>,
    pub lpq: Vec<Vec<f64>>,
    pub summaries: Vec<RecordSummary>,
    pub failed: usize,
    pub timing: BTreeMap<String, f64>,
}

/// Track-align, extract-roi and signature stages over every record, in
/// parallel. Failed records are logged and skipped unless more than half
/// fail.
pub fn process_records(config: &PipelineConfig, records: &[SubjectRecord]) -> Result<RecordBatch> {
    config.validate()?;
    if records.is_empty() {
        return Err(CliError::ManifestInvalid("manifest has no records".into()));
    }
    let specs = config.roi_specs()?;
    let outcomes: Vec<(Result<Processed>, StageTimes)> = records
        .par_iter()
        .enumerate()
        .map(|(i, r)| process_record(i, r, config, &specs))
        .collect();

    let mut batch = RecordBatch {
        signatures: Vec::new(),
        lpq: Vec::new(),
        summaries: Vec::new(),
        failed: 0,
        timing: BTreeMap::new(),
    };
    for (i, (outcome, times)) in outcomes.into_iter().enumerate() {
        for (stage, t) in times {
            *batch.timing.entry(stage.to_string()).or_default() += t;
        }
        match outcome {
            Ok(p) => {
                batch.signatures.push(p.signature);
                batch.lpq.extend(p.lpq);
                batch.summaries.push(p.summary);
            }
            Err(e) => {
                log::warn!("record {i} ({}) failed: {e}", records[i].subject_id);
                batch.failed += 1;
                batch.summaries.push(RecordSummary {
                    index: i,
                    subject_id: records[i].subject_id.clone(),
                    emotion: records[i].emotion,
                    ok: false,
                    error: Some(e.to_string()),
                    frames_used: 0,
                    tracked_features: 0.0,
                    region_means: BTreeMap::new(),
                    degenerate_covariance: false,
                });
            }
        }
    }
    if 2 * batch.failed > records.len() {
        return Err(CliError::TooManyRecordFailures {
            failed: batch.failed,
            total: records.len(),
        });
    }
    Ok(batch)
}

pub fn class_stats(confusion: &ConfusionMatrix, signatures: &[CovarianceSignature]) -> Vec<ClassStats> {
    confusion
        .labels
        .iter()
        .map(|&label| ClassStats {
            label,
            precision: confusion.precision(label),
            recall: confusion.recall(label),
            support: signatures.iter().filter(|s| s.label == label).count(),
        })
        .collect()
}

/// Runs every stage over the manifest records and evaluates leave one
/// subject out.
pub fn run_pipeline(config: &PipelineConfig, records: &[SubjectRecord]) -> Result<RunReport> {
    let start = Instant::now();
    let RecordBatch {
        signatures,
        lpq,
        summaries,
        failed,
        mut timing,
    } = process_records(config, records)?;

    let t = Instant::now();
    let loso = loso_evaluate(&signatures, &config.fps)?;
    timing.insert("evaluate".into(), ms(t));

    let dne = if config.dne.enabled {
        let t = Instant::now();
        let report = dne_loso(&lpq, &signatures, config)?;
        timing.insert("dne".into(), ms(t));
        Some(report)
    } else {
        None
    };

    let per_class = class_stats(&loso.confusion, &signatures);
    timing.insert("total".into(), ms(start));

    Ok(RunReport {
        measure: config.fps.measure,
        accuracy: loso.accuracy,
        per_class,
        confusion: loso.confusion,
        predictions: loso.predictions,
        processed: signatures.len(),
        failed,
        records: summaries,
        dne,
        timing,
        config_echo: config.clone(),
    })
}

/// Writes `report.json` and `confusion.csv` into `dir`.
pub fn write_report(report: &RunReport, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::OutputDirNotWritable {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let json_path = dir.join("report.json");
    let csv_path = dir.join("confusion.csv");
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(&json_path, text).map_err(|e| CliError::OutputDirNotWritable {
        path: json_path.clone(),
        source: e,
    })?;
    std::fs::write(&csv_path, report.confusion.to_csv()).map_err(|e| CliError::OutputDirNotWritable {
        path: csv_path.clone(),
        source: e,
    })?;
    Ok((json_path, csv_path))
}

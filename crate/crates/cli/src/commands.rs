//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use thermoface_core::cov::{loso_evaluate, match_probe, ConfusionMatrix, ConfusionMode};
use thermoface_core::dne::{dne_fit, embed, loo_nn_accuracy, nn_accuracy, pca_fit, LabeledDataset};
use thermoface_core::imaging::{encode_pbm, encode_pgm, load_frame, load_landmarks, Rect, ThermalFrame};
use thermoface_core::klt::{align_tracks, detect_features, track_sequence, warp_frame, TrackPoint};
use thermoface_core::lpq::lpq_histogram;
use thermoface_core::roi::{builtin_spec, extract_patch, RoiSpec};
use thermoface_core::spd::Measure;

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::io::{model_to_json, read_feature_csv, read_model, Labels};
use crate::pipeline::{class_stats, process_records, read_manifest, run_pipeline, write_report};
use crate::synth::{synth_generate, SynthParams};

#[derive(Debug, Parser)]
#[command(name = "thermoface", version, about = "Thermal facial emotion analysis pipeline")]
pub struct Cli {
    /// Pipeline configuration JSON; unknown keys are rejected.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for synthetic generation (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for record-level parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatchMode {
    Loso,
    Probe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Pca,
    None,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track features through a frame sequence and register every frame
    /// onto the reference.
    TrackAlign {
        /// Glob selecting the frames; matches are sorted by path.
        #[arg(long)]
        frames: String,
        /// Index of the reference frame among the sorted matches.
        #[arg(long = "ref", default_value_t = 0)]
        reference: usize,
        /// Detection region `x,y,w,h` in the reference frame.
        #[arg(long, value_parser = parse_bbox)]
        bbox: Option<Rect>,
        #[arg(long)]
        max_features: Option<usize>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Crop, mask and resize landmark regions of one frame.
    ExtractRoi {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        landmarks: PathBuf,
        /// Comma-separated builtin region names.
        #[arg(long, value_delimiter = ',')]
        regions: Vec<String>,
        /// JSON file holding one custom region spec or an array of them.
        #[arg(long)]
        spec_file: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Covariance-signature matching over a manifest.
    CovMatch {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        measure: Option<Measure>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long, value_enum, default_value_t = MatchMode::Loso)]
        mode: MatchMode,
        /// Probe manifests matched against the whole gallery (probe mode).
        #[arg(long, num_args = 1..)]
        probe: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a DNE projection from labelled feature vectors.
    DneTrain {
        /// CSV matrix, one sample per row.
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        model_out: PathBuf,
    },
    /// 1-NN accuracy in a fitted DNE space.
    DneEval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Training samples for the 1-NN gallery; without them the
        /// evaluation is leave-one-out over `--features`.
        #[arg(long, requires = "train_labels")]
        train_features: Option<PathBuf>,
        #[arg(long, requires = "train_features")]
        train_labels: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Baseline::None)]
        baseline: Baseline,
        #[arg(long)]
        report: PathBuf,
    },
    /// 256-bin LPQ histogram of a patch.
    Lpq {
        #[arg(long)]
        patch: PathBuf,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic thermal face dataset and its manifest.
    SynthGen {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 4)]
        subjects: usize,
        #[arg(long, default_value_t = 3)]
        frames: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// JSON file with full generator parameters; flags above are ignored
        /// when given, except `--seed`.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// The full pipeline over a manifest.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn parse_bbox(s: &str) -> std::result::Result<Rect, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| format!("bbox must be x,y,w,h: {e}"))?;
    match parts[..] {
        [x, y, w, h] if w > 0 && h > 0 => Ok(Rect::new(x, y, w, h)),
        _ => Err("bbox must be four non-negative integers x,y,w,h with w, h > 0".into()),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::OutputDirNotWritable {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::OutputDirNotWritable {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, text)
}

fn track_align(
    config: &PipelineConfig,
    pattern: &str,
    reference: usize,
    bbox: Option<Rect>,
    max_features: Option<usize>,
    out_dir: &Path,
) -> Result<serde_json::Value> {
    let mut paths: Vec<PathBuf> = glob::glob(pattern)
        .map_err(|e| CliError::Usage(format!("bad glob {pattern:?}: {e}")))?
        .filter_map(|p| p.ok())
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    if paths.len() < 2 {
        return Err(CliError::Precondition(format!(
            "{pattern:?} matched {} frame(s); at least 2 are needed",
            paths.len()
        )));
    }
    if reference >= paths.len() {
        return Err(CliError::Usage(format!(
            "--ref {reference} is out of range for {} frames",
            paths.len()
        )));
    }
    let frames = paths
        .iter()
        .map(load_frame)
        .collect::<std::result::Result<Vec<ThermalFrame>, _>>()?;
    let seeds = detect_features(
        &frames[reference],
        bbox,
        &config.tracker,
        max_features.unwrap_or(config.max_features),
    )?;
    // Track forwards and backwards from the reference so every frame is
    // reached by a chain of neighbouring frames.
    let mut tracks: Vec<Option<Vec<TrackPoint>>> = vec![None; frames.len()];
    tracks[reference] = Some(seeds.clone());
    let forward: Vec<usize> = (reference..frames.len()).collect();
    let backward: Vec<usize> = (0..=reference).rev().collect();
    for order in [forward, backward] {
        if order.len() < 2 {
            continue;
        }
        let seq: Vec<ThermalFrame> = order.iter().map(|&i| frames[i].clone()).collect();
        for (pos, t) in track_sequence(&seq, &seeds, &config.tracker)?.into_iter().enumerate() {
            tracks[order[pos]] = Some(t);
        }
    }

    create_dir(out_dir)?;
    let mut csv = String::from("frame,point_id,x,y,status,residual\n");
    let mut outputs = Vec::new();
    for (i, path) in paths.iter().enumerate() {
        let t = tracks[i].as_ref().expect("every frame is tracked");
        for p in t {
            let q = p.position();
            let status = match p.status {
                thermoface_core::klt::TrackStatus::Tracked => "tracked",
                thermoface_core::klt::TrackStatus::Lost => "lost",
            };
            csv.push_str(&format!("{i},{},{},{},{status},{}\n", p.id, q.x, q.y, p.residual));
        }
        let transform = align_tracks(&seeds, t)?;
        let aligned = warp_frame(&frames[i], &transform)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("frame_{i}"));
        let out = out_dir.join(format!("{i:03}_{stem}_aligned.pgm"));
        write(&out, encode_pgm(&aligned))?;
        outputs.push(json!({
            "frame": path,
            "aligned": out,
            "scale": transform.scale,
            "rotation": transform.rotation,
            "translation": [transform.translation.x, transform.translation.y],
            "tracked": t.iter().filter(|p| p.is_tracked()).count(),
        }));
    }
    let tracks_path = out_dir.join("tracks.csv");
    write(&tracks_path, csv)?;
    Ok(json!({ "features": seeds.len(), "tracks": tracks_path, "frames": outputs }))
}

fn read_spec_file(path: &Path) -> Result<Vec<RoiSpec>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    #[derive(serde::Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(RoiSpec),
        Many(Vec<RoiSpec>),
    }
    let specs = match serde_json::from_str::<OneOrMany>(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: format!("not a region spec or list of specs: {e}"),
    })? {
        OneOrMany::One(s) => vec![s],
        OneOrMany::Many(v) => v,
    };
    for s in &specs {
        s.validate()?;
    }
    Ok(specs)
}

fn extract_roi(
    config: &PipelineConfig,
    frame: &Path,
    landmarks: &Path,
    regions: &[String],
    spec_file: Option<&Path>,
    out_dir: &Path,
) -> Result<serde_json::Value> {
    let frame = load_frame(frame)?;
    let landmarks = load_landmarks(landmarks)?;
    landmarks.check_within(&frame)?;
    let mut specs: Vec<RoiSpec> = regions
        .iter()
        .map(|r| builtin_spec(r.trim()))
        .collect::<std::result::Result<_, _>>()?;
    if let Some(p) = spec_file {
        specs.extend(read_spec_file(p)?);
    }
    if specs.is_empty() {
        specs = config.roi_specs()?;
    }
    create_dir(out_dir)?;
    let mut out = Vec::new();
    for spec in &specs {
        let patch = extract_patch(&frame, spec, &landmarks)?;
        let patch_frame = ThermalFrame::from_grid_clamped(patch.patch.clone(), frame.bit_depth());
        let patch_path = out_dir.join(format!("{}.pgm", spec.name));
        let mask_path = out_dir.join(format!("{}_mask.pbm", spec.name));
        write(&patch_path, encode_pgm(&patch_frame))?;
        let b = patch.bbox();
        write(&mask_path, encode_pbm(b.width, b.height, &patch.mask.mask))?;
        out.push(json!({
            "name": spec.name,
            "path": spec.path_string(),
            "bbox": [b.x, b.y, b.width, b.height],
            "mask_pixels": patch.mask.count(),
            "mean": patch.mask.mean_of(frame.grid()),
            "patch": patch_path,
            "mask": mask_path,
        }));
    }
    Ok(json!({ "regions": out }))
}

#[derive(Serialize)]
struct ProbeMatch {
    subject_id: String,
    truth: thermoface_core::imaging::EmotionLabel,
    predicted: thermoface_core::imaging::EmotionLabel,
    nearest_subject: String,
    distance: f64,
}

fn cov_match(
    mut config: PipelineConfig,
    manifest: &Path,
    measure: Option<Measure>,
    window: Option<usize>,
    mode: MatchMode,
    probes: &[PathBuf],
    out: &Path,
) -> Result<serde_json::Value> {
    if let Some(m) = measure {
        config.fps.measure = m;
    }
    if let Some(w) = window {
        config.fps.window = w;
    }
    config.dne.enabled = false;
    config.validate()?;
    let records = read_manifest(manifest)?;
    let gallery = process_records(&config, &records)?;
    let csv_path = out.with_extension("csv");
    let report = match mode {
        MatchMode::Loso => {
            if !probes.is_empty() {
                return Err(CliError::Usage("--probe is only used with --mode probe".into()));
            }
            let loso = loso_evaluate(&gallery.signatures, &config.fps)?;
            write(&csv_path, loso.confusion.to_csv())?;
            json!({
                "mode": "loso",
                "measure": config.fps.measure,
                "window": config.fps.window,
                "accuracy": loso.accuracy,
                "per_class": class_stats(&loso.confusion, &gallery.signatures),
                "confusion": loso.confusion,
                "predictions": loso.predictions,
                "failed": gallery.failed,
            })
        }
        MatchMode::Probe => {
            if probes.is_empty() {
                return Err(CliError::Usage(
                    "--mode probe needs at least one --probe manifest".into(),
                ));
            }
            let mut probe_records = Vec::new();
            for p in probes {
                probe_records.extend(read_manifest(p)?);
            }
            let batch = process_records(&config, &probe_records)?;
            let labels = {
                let mut l: Vec<_> = gallery
                    .signatures
                    .iter()
                    .chain(&batch.signatures)
                    .map(|s| s.label)
                    .collect();
                l.sort();
                l.dedup();
                l
            };
            let mut confusion = ConfusionMatrix::zeros(ConfusionMode::Count, labels);
            let mut matches = Vec::new();
            for probe in &batch.signatures {
                let m = match_probe(probe, &gallery.signatures, &config.fps)?;
                confusion.record(probe.label, m.predicted);
                matches.push(ProbeMatch {
                    subject_id: probe.subject_id.clone(),
                    truth: probe.label,
                    predicted: m.predicted,
                    nearest_subject: gallery.signatures[m.nearest].subject_id.clone(),
                    distance: m.distances[m.nearest],
                });
            }
            write(&csv_path, confusion.to_csv())?;
            json!({
                "mode": "probe",
                "measure": config.fps.measure,
                "window": config.fps.window,
                "accuracy": confusion.correct() / confusion.total(),
                "per_class": class_stats(&confusion, &batch.signatures),
                "confusion": confusion,
                "predictions": matches,
                "failed": gallery.failed + batch.failed,
            })
        }
    };
    write_json(out, &report)?;
    Ok(json!({ "accuracy": report["accuracy"], "report": out, "confusion": csv_path }))
}

fn dne_train(
    config: &PipelineConfig,
    features: &Path,
    labels: &Path,
    k: Option<usize>,
    d: Option<usize>,
    model_out: &Path,
) -> Result<serde_json::Value> {
    let x = read_feature_csv(features)?;
    let labels = Labels::read(labels)?;
    let dataset = LabeledDataset::new(x, labels.ids.clone())?;
    let model = dne_fit(&dataset, k.unwrap_or(config.dne.k), d.or(config.dne.d))?;
    write(model_out, model_to_json(&model, &labels.names)?)?;
    Ok(json!({
        "model": model_out,
        "n": model.input_dim(),
        "d": model.output_dim(),
        "k": model.k,
        "training_objective": model.training_objective,
        "non_negative": model.non_negative,
    }))
}

fn dne_eval(
    model: &Path,
    features: &Path,
    labels: &Path,
    train: Option<(&Path, &Path)>,
    baseline: Baseline,
    report: &Path,
) -> Result<serde_json::Value> {
    let (model, names) = read_model(model)?;
    let x = read_feature_csv(features)?;
    let y = Labels::read(labels)?;
    if y.ids.len() != x.ncols() {
        return Err(CliError::Precondition(format!(
            "{} labels for {} samples",
            y.ids.len(),
            x.ncols()
        )));
    }
    let y_ids = y.aligned_to(&names);
    let d = model.output_dim();
    let value = match train {
        None => {
            let accuracy = loo_nn_accuracy(&embed(&model, &x)?, &y_ids)?;
            let raw = loo_nn_accuracy(&x, &y_ids)?;
            let pca = match baseline {
                Baseline::Pca => {
                    let p = pca_fit(&x, d.min(x.nrows()).min(x.ncols()))?;
                    Some(loo_nn_accuracy(&(p.transpose() * &x), &y_ids)?)
                }
                Baseline::None => None,
            };
            json!({
                "protocol": "leave_one_out",
                "samples": x.ncols(),
                "d": d,
                "accuracy": accuracy,
                "raw_accuracy": raw,
                "pca_accuracy": pca,
            })
        }
        Some((tf, tl)) => {
            let xt = read_feature_csv(tf)?;
            let yt = Labels::read(tl)?;
            let yt_ids = yt.aligned_to(&names);
            let accuracy = nn_accuracy(&embed(&model, &xt)?, &yt_ids, &embed(&model, &x)?, &y_ids)?;
            let raw = nn_accuracy(&xt, &yt_ids, &x, &y_ids)?;
            let pca = match baseline {
                Baseline::Pca => {
                    let p = pca_fit(&xt, d.min(xt.nrows()).min(xt.ncols()))?;
                    let pt = p.transpose();
                    Some(nn_accuracy(&(&pt * &xt), &yt_ids, &(&pt * &x), &y_ids)?)
                }
                Baseline::None => None,
            };
            json!({
                "protocol": "train_test",
                "samples": x.ncols(),
                "train_samples": xt.ncols(),
                "d": d,
                "accuracy": accuracy,
                "raw_accuracy": raw,
                "pca_accuracy": pca,
            })
        }
    };
    write_json(report, &value)?;
    Ok(value)
}

fn lpq(config: &PipelineConfig, patch: &Path, window: Option<usize>, out: &Path) -> Result<serde_json::Value> {
    let mut cfg = config.lpq;
    if let Some(w) = window {
        cfg.window = w;
    }
    cfg.validate()?;
    let frame = load_frame(patch)?;
    let hist = lpq_histogram(frame.grid(), &cfg)?;
    write(out, hist.to_csv())?;
    Ok(json!({ "out": out, "bins": hist.bins().len(), "window": cfg.window }))
}

fn synth_gen(
    seed: u64,
    out_dir: &Path,
    subjects: usize,
    frames: usize,
    noise: f64,
    params: Option<&Path>,
) -> Result<serde_json::Value> {
    let mut p = match params {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str::<SynthParams>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => SynthParams {
            n_subjects: subjects,
            frames_per_subject: frames,
            noise_sigma: noise,
            ..SynthParams::default()
        },
    };
    p.seed = seed;
    let out = synth_generate(&p, out_dir)?;
    Ok(json!({ "manifest": out.manifest, "records": out.entries.len(), "seed": seed }))
}

fn run(config: &PipelineConfig, manifest: &Path, out_dir: Option<&Path>) -> Result<serde_json::Value> {
    let records = read_manifest(manifest)?;
    let report = run_pipeline(config, &records)?;
    let dir = out_dir.unwrap_or(&config.output_dir);
    let (json_path, csv_path) = write_report(&report, dir)?;
    Ok(json!({
        "accuracy": report.accuracy,
        "processed": report.processed,
        "failed": report.failed,
        "report": json_path,
        "confusion": csv_path,
    }))
}

fn resolve_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

/// Executes a parsed command and returns its JSON summary.
pub fn execute(cli: &Cli) -> Result<serde_json::Value> {
    let config = resolve_config(cli)?;
    match &cli.command {
        Command::TrackAlign {
            frames,
            reference,
            bbox,
            max_features,
            out_dir,
        } => track_align(&config, frames, *reference, *bbox, *max_features, out_dir),
        Command::ExtractRoi {
            frame,
            landmarks,
            regions,
            spec_file,
            out_dir,
        } => extract_roi(&config, frame, landmarks, regions, spec_file.as_deref(), out_dir),
        Command::CovMatch {
            manifest,
            measure,
            window,
            mode,
            probe,
            out,
        } => cov_match(config, manifest, *measure, *window, *mode, probe, out),
        Command::DneTrain {
            features,
            labels,
            k,
            d,
            model_out,
        } => dne_train(&config, features, labels, *k, *d, model_out),
        Command::DneEval {
            model,
            features,
            labels,
            train_features,
            train_labels,
            baseline,
            report,
        } => {
            let train = train_features.as_deref().zip(train_labels.as_deref());
            dne_eval(model, features, labels, train, *baseline, report)
        }
        Command::Lpq { patch, window, out } => lpq(&config, patch, *window, out),
        Command::SynthGen {
            out_dir,
            subjects,
            frames,
            noise,
            params,
        } => synth_gen(config.seed, out_dir, *subjects, *frames, *noise, params.as_deref()),
        Command::Run { manifest, out_dir } => run(&config, manifest, out_dir.as_deref()),
    }
}

fn run_with_threads(cli: &Cli) -> Result<serde_json::Value> {
    match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(|| execute(cli)),
        None => execute(cli),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
/// Success prints a JSON summary on stdout; failures print a JSON error
/// object on stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = CliError::Usage(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    let level = if cli.verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Error
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
    match run_with_threads(&cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn bbox_parsing() {
        assert_eq!(parse_bbox("1,2,3,4").unwrap(), Rect::new(1, 2, 3, 4));
        assert!(parse_bbox("1,2,3").is_err());
        assert!(parse_bbox("1,2,0,4").is_err());
        assert!(parse_bbox("a,2,3,4").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(main_with_args(["thermoface", "no-such-command"]), 2);
        assert_eq!(main_with_args(["thermoface", "lpq", "--window", "7"]), 2);
    }

    #[test]
    fn global_flags_after_subcommand() {
        let cli = Cli::try_parse_from([
            "thermoface",
            "run",
            "--manifest",
            "m.json",
            "--seed",
            "9",
            "--threads",
            "2",
        ])
        .unwrap();
        assert_eq!(cli.seed, Some(9));
        assert_eq!(cli.threads, Some(2));
    }
}

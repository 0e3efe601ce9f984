use thermoface_cli::config::PipelineConfig;
use thermoface_cli::pipeline::{read_manifest, run_pipeline};
use thermoface_cli::synth::{synth_generate, RegionOffsets, SynthParams};
use thermoface_core::imaging::EmotionLabel;

#[test]
fn synthetic_run_separates_emotions() {
    let dir = tempfile::tempdir().unwrap();
    let out = synth_generate(&SynthParams::default(), dir.path()).unwrap();
    let records = read_manifest(&out.manifest).unwrap();
    let report = run_pipeline(&PipelineConfig::default(), &records).unwrap();
    assert!(report.accuracy >= 0.9, "accuracy {}", report.accuracy);
    assert_eq!(report.confusion.total() as usize, report.processed);
    assert_eq!(report.records.len(), records.len());
    for r in &report.records {
        assert!(r.ok);
        assert_eq!(r.frames_used, 3);
        assert!(r.tracked_features > 0.0);
    }
}

#[test]
fn happiness_warms_cheeks_after_alignment() {
    let dir = tempfile::tempdir().unwrap();
    let mut params = SynthParams {
        amplitude_jitter: 0.0,
        ..SynthParams::default()
    };
    // disgust becomes a neutral baseline
    params.profile.0.insert(EmotionLabel::Disgust, RegionOffsets::default());
    let out = synth_generate(&params, dir.path()).unwrap();
    let records = read_manifest(&out.manifest).unwrap();
    let report = run_pipeline(&PipelineConfig::default(), &records).unwrap();
    let mean = |emotion: &str, region: &str| {
        let v: Vec<f64> = report
            .records
            .iter()
            .filter(|r| r.emotion.as_str() == emotion)
            .map(|r| r.region_means[region])
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    for region in ["left_cheek", "right_cheek"] {
        let warmer = mean("happiness", region) - mean("disgust", region);
        assert!((warmer - 30.0).abs() <= 1.0, "{region}: {warmer}");
    }
}

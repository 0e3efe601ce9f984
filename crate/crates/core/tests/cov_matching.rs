use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thermoface_core::cov::{class_distance_matrix, loso_evaluate, loso_folds, CovarianceSignature, FpsConfig};
use thermoface_core::imaging::EmotionLabel;
use thermoface_core::spd::{dist_airm, Measure, SpdMatrix};

fn separated_dataset(rng: &mut ChaCha8Rng, subjects: usize) -> Vec<CovarianceSignature> {
    let mut out = Vec::new();
    for s in 0..subjects {
        for (c, label) in EmotionLabel::ALL.into_iter().enumerate() {
            let mut diag = vec![1.0; 6];
            diag[c] = 3f64.exp();
            let centre = SpdMatrix::from_diagonal(&diag).unwrap();
            let g =
                DMatrix::identity(6, 6) + DMatrix::from_fn(6, 6, |_, _| 0.005 * rng.sample::<f64, _>(StandardNormal));
            out.push(CovarianceSignature::new(
                centre.congruence(&g).unwrap(),
                label,
                format!("subject{s}"),
            ));
        }
    }
    out
}

#[test]
fn constructed_separation_gives_perfect_loso() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sigs = separated_dataset(&mut rng, 3);
    let (mut intra, mut inter) = (0.0f64, f64::INFINITY);
    for a in &sigs {
        for b in &sigs {
            let d = dist_airm(&a.cov, &b.cov).unwrap();
            if a.label == b.label {
                intra = intra.max(d);
            } else {
                inter = inter.min(d);
            }
        }
    }
    assert!(inter >= 10.0 * intra, "inter {inter} intra {intra}");
    for measure in Measure::ALL {
        let cfg = FpsConfig {
            measure,
            ..Default::default()
        };
        let r = loso_evaluate(&sigs, &cfg).unwrap();
        assert_eq!(r.accuracy, 1.0, "{measure}");
        assert_eq!(r.confusion.total(), sigs.len() as f64);
    }
}

#[test]
fn distance_matrix_is_exactly_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sigs = separated_dataset(&mut rng, 2);
    for measure in Measure::ALL {
        let m = class_distance_matrix(
            &sigs,
            &FpsConfig {
                measure,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(m.is_symmetric());
        assert!((0..6).all(|i| m.entries[i][i] == 0.0));
    }
}

#[test]
fn loso_gallery_excludes_held_out_subject() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sigs = separated_dataset(&mut rng, 4);
    let folds = loso_folds(&sigs).unwrap();
    assert_eq!(folds.len(), 4);
    for f in folds {
        assert_eq!(f.probes.len(), 6);
        assert!(f.gallery.iter().all(|&i| sigs[i].subject_id != f.subject_id));
    }
    let r = loso_evaluate(&sigs, &FpsConfig::default()).unwrap();
    for p in &r.predictions {
        assert_eq!(p.truth, sigs[p.index].label);
    }
}

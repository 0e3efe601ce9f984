use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thermoface_core::dne::{build_adjacency, degree_matrix, dne_fit, objective_phi, trace_objective, LabeledDataset};

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn orthonormal(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
    gaussian(rng, n, n).qr().q().columns(0, d).into_owned()
}

#[test]
fn pairwise_sum_equals_trace_form_on_100_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        let n = rng.random_range(2..8);
        let count = rng.random_range(6..30);
        let classes = rng.random_range(1..4);
        let x = gaussian(&mut rng, n, count) * rng.random_range(0.1..10.0);
        let labels: Vec<usize> = (0..count).map(|_| rng.random_range(0..classes)).collect();
        let ds = LabeledDataset::new(x, labels).unwrap();
        let k = rng.random_range(1..count.min(8));
        let f = build_adjacency(&ds, k).unwrap();
        let d = rng.random_range(1..=n);
        let p = orthonormal(&mut rng, n, d);
        let pair = objective_phi(&ds, &f, &p).unwrap();
        let trace = trace_objective(&ds, &f, &p).unwrap();
        assert!(
            (pair - trace).abs() <= 1e-8 * pair.abs().max(1e-12),
            "{pair} vs {trace}"
        );
    }
}

#[test]
fn fitted_projection_is_orthonormal_and_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut fitted = 0;
    while fitted < 100 {
        let n = rng.random_range(3..8);
        let count = rng.random_range(10..40);
        let x = gaussian(&mut rng, n, count);
        let labels: Vec<usize> = (0..count).map(|_| rng.random_range(0..3)).collect();
        let ds = LabeledDataset::new(x, labels).unwrap();
        let k = rng.random_range(1..6);
        let Ok(model) = dne_fit(&ds, k, None) else { continue };
        fitted += 1;
        let d = model.output_dim();
        let ptp = model.p.transpose() * &model.p;
        assert!((ptp - DMatrix::identity(d, d)).amax() <= 1e-10);
        assert!(model.eigenvalues.iter().all(|&v| v < 0.0));
        assert!(model.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let f = build_adjacency(&ds, k).unwrap();
        let phi = objective_phi(&ds, &f, &model.p).unwrap();
        for _ in 0..100 {
            let q = orthonormal(&mut rng, n, d);
            assert!(phi <= objective_phi(&ds, &f, &q).unwrap() + 1e-8);
        }
    }
}

#[test]
fn interleaved_classes_in_five_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let x = DMatrix::from_fn(5, 40, |i, j| {
        let class = (j % 2) as f64;
        let base: f64 = rng.sample(StandardNormal);
        if i == 0 {
            base * 0.3 + 2.0 * class - 1.0
        } else {
            base * 2.0
        }
    });
    let labels: Vec<usize> = (0..40).map(|j| j % 2).collect();
    let ds = LabeledDataset::new(x, labels).unwrap();
    let model = dne_fit(&ds, 3, None).unwrap();
    let f = build_adjacency(&ds, 3).unwrap();
    let phi = objective_phi(&ds, &f, &model.p).unwrap();
    assert!((phi - model.training_objective).abs() <= 1e-9 * phi.abs().max(1.0));
    for _ in 0..100 {
        let q = orthonormal(&mut rng, 5, model.output_dim());
        assert!(phi <= objective_phi(&ds, &f, &q).unwrap() + 1e-8);
    }
}

#[test]
fn single_class_laplacian_never_negative() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..50 {
        let count = rng.random_range(3..25);
        let ds = LabeledDataset::new(gaussian(&mut rng, 3, count), vec![0; count]).unwrap();
        let f = build_adjacency(&ds, rng.random_range(1..count)).unwrap();
        let l = degree_matrix(&f) - f.to_matrix();
        assert!(l.symmetric_eigenvalues().min() >= -1e-10);
    }
}

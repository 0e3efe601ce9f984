//! Discriminant neighborhood embedding.
//!
//! A k-NN graph over labelled samples gets `+1` edges between same-class
//! neighbours and `-1` edges between different-class neighbours. The
//! projection minimizing `Σ F_ij ‖Pᵀxᵢ − Pᵀxⱼ‖²` under `PᵀP = I` is spanned by
//! the eigenvectors of `X(S − F)Xᵀ` with negative eigenvalues.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DneError {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("k = {k} outside 1..={max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("d = {d} outside 1..={max}")]
    DOutOfRange { d: usize, max: usize },
    #[error("no negative eigenvalues: the graph has no discriminant directions")]
    NoDiscriminantDirections,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("input dimension {found} does not match model dimension {expected}")]
    DimMismatch { expected: usize, found: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
}

/// Samples are the columns of `x` (n × N).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    x: DMatrix<f64>,
    labels: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(x: DMatrix<f64>, labels: Vec<usize>) -> Result<Self, DneError> {
        if x.ncols() < 2 {
            return Err(DneError::InvalidDataset(format!(
                "need at least 2 samples, got {}",
                x.ncols()
            )));
        }
        if x.nrows() == 0 {
            return Err(DneError::InvalidDataset("ambient dimension is 0".into()));
        }
        if labels.len() != x.ncols() {
            return Err(DneError::InvalidDataset(format!(
                "{} labels for {} samples",
                labels.len(),
                x.ncols()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(DneError::InvalidDataset("non-finite entry".into()));
        }
        Ok(Self { x, labels })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Ambient dimension n.
    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    /// Sample count N.
    pub fn len(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.x.ncols() == 0
    }

    pub fn class_count(&self) -> usize {
        let mut l = self.labels.clone();
        l.sort_unstable();
        l.dedup();
        l.len()
    }
}

fn sq_dist(x: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    x.column(i)
        .iter()
        .zip(x.column(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// The `k` nearest other samples of every sample (0-based column indices),
/// nearest first. Equal distances resolve to the lower index.
pub fn knn_sets(x: &DMatrix<f64>, k: usize) -> Result<Vec<Vec<usize>>, DneError> {
    let n = x.ncols();
    if k == 0 || k + 1 > n {
        return Err(DneError::KOutOfRange {
            k,
            max: n.saturating_sub(1),
        });
    }
    Ok((0..n)
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (sq_dist(x, i, j), j)).collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect())
}

/// Signed k-NN adjacency with entries in {-1, 0, +1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyF {
    size: usize,
    entries: Vec<i8>,
    k: usize,
}

impl AdjacencyF {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.entries[i * self.size + j]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |i, j| self.get(i, j) as f64)
    }
}

pub fn build_adjacency(dataset: &LabeledDataset, k: usize) -> Result<AdjacencyF, DneError> {
    let knn = knn_sets(dataset.x(), k)?;
    let n = dataset.len();
    let labels = dataset.labels();
    let mut entries = vec![0i8; n * n];
    for (i, neigh) in knn.iter().enumerate() {
        for &j in neigh {
            let v = if labels[i] == labels[j] { 1 } else { -1 };
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    Ok(AdjacencyF { size: n, entries, k })
}

/// Diagonal of column sums of `F`.
pub fn degree_matrix(f: &AdjacencyF) -> DMatrix<f64> {
    let n = f.size();
    let sums: Vec<f64> = (0..n).map(|i| (0..n).map(|j| f.get(j, i) as f64).sum()).collect();
    DMatrix::from_diagonal(&DVector::from_vec(sums))
}

/// `X (S − F) Xᵀ`, symmetrized.
pub fn scatter_matrix(dataset: &LabeledDataset, f: &AdjacencyF) -> Result<DMatrix<f64>, DneError> {
    if f.size() != dataset.len() {
        return Err(DneError::ShapeMismatch(format!(
            "adjacency is {0}x{0}, dataset has {1} samples",
            f.size(),
            dataset.len()
        )));
    }
    let l = degree_matrix(f) - f.to_matrix();
    let m = dataset.x() * l * dataset.x().transpose();
    Ok((&m + m.transpose()) * 0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DneModel {
    /// n × d, orthonormal columns.
    pub p: DMatrix<f64>,
    /// Eigenvalues belonging to the columns of `p`, ascending.
    pub eigenvalues: Vec<f64>,
    pub k: usize,
    /// φ(P) on the training set.
    pub training_objective: f64,
    /// How many selected eigenvalues are not below the negativity threshold
    /// (non-zero only when `d` was forced past the negative count).
    pub non_negative: usize,
}

impl DneModel {
    pub fn input_dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.p.ncols()
    }
}

/// Sorted eigenpairs (ascending, ties by original position) with each
/// eigenvector's largest-magnitude entry made positive.
fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = eig.eigenvectors.select_columns(&order);
    for mut col in vectors.column_iter_mut() {
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
    (values, vectors)
}

/// Negativity threshold `τ = 1e-10 · ‖M‖_F`.
pub fn negativity_threshold(m: &DMatrix<f64>) -> f64 {
    1e-10 * m.norm()
}

/// Fits the projection. With `d = None` every eigenvalue below `-τ` is kept;
/// a forced `d` takes the `d` smallest eigenvalues regardless of sign.
pub fn dne_fit(dataset: &LabeledDataset, k: usize, d: Option<usize>) -> Result<DneModel, DneError> {
    let f = build_adjacency(dataset, k)?;
    let m = scatter_matrix(dataset, &f)?;
    let tau = negativity_threshold(&m);
    let (values, vectors) = sorted_eigen(m);
    let negative = values.iter().filter(|&&v| v < -tau).count();
    let n = dataset.dim();
    let d = match d {
        Some(d) if d == 0 || d > n => return Err(DneError::DOutOfRange { d, max: n }),
        Some(d) => d,
        None if negative == 0 => return Err(DneError::NoDiscriminantDirections),
        None => negative,
    };
    let p = vectors.columns(0, d).into_owned();
    let training_objective = objective_phi(dataset, &f, &p)?;
    Ok(DneModel {
        p,
        eigenvalues: values[..d].to_vec(),
        k,
        training_objective,
        non_negative: d.saturating_sub(negative),
    })
}

fn check_projection(dataset: &LabeledDataset, f: &AdjacencyF, p: &DMatrix<f64>) -> Result<(), DneError> {
    if p.ncols() == 0 || p.nrows() != dataset.dim() {
        return Err(DneError::ShapeMismatch(format!(
            "projection is {}x{}, expected {}xd with d ≥ 1",
            p.nrows(),
            p.ncols(),
            dataset.dim()
        )));
    }
    if f.size() != dataset.len() {
        return Err(DneError::ShapeMismatch(format!(
            "adjacency covers {} samples, dataset has {}",
            f.size(),
            dataset.len()
        )));
    }
    Ok(())
}

/// `Σ_ij ‖Pᵀxᵢ − Pᵀxⱼ‖² F_ij`, evaluated pairwise.
pub fn objective_phi(dataset: &LabeledDataset, f: &AdjacencyF, p: &DMatrix<f64>) -> Result<f64, DneError> {
    check_projection(dataset, f, p)?;
    let y = p.transpose() * dataset.x();
    let n = dataset.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let w = f.get(i, j);
            if w != 0 {
                total += w as f64 * sq_dist(&y, i, j);
            }
        }
    }
    Ok(total)
}

/// `2 · tr(Pᵀ X (S − F) Xᵀ P)`.
pub fn trace_objective(dataset: &LabeledDataset, f: &AdjacencyF, p: &DMatrix<f64>) -> Result<f64, DneError> {
    check_projection(dataset, f, p)?;
    let m = scatter_matrix(dataset, f)?;
    Ok(2.0 * (p.transpose() * m * p).trace())
}

/// `Pᵀ X` for an n × m input.
pub fn embed(model: &DneModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>, DneError> {
    if x.nrows() != model.input_dim() {
        return Err(DneError::DimMismatch {
            expected: model.input_dim(),
            found: x.nrows(),
        });
    }
    Ok(model.p.transpose() * x)
}

pub fn embed_vector(model: &DneModel, x: &DVector<f64>) -> Result<DVector<f64>, DneError> {
    if x.len() != model.input_dim() {
        return Err(DneError::DimMismatch {
            expected: model.input_dim(),
            found: x.len(),
        });
    }
    Ok(model.p.transpose() * x)
}

/// Label of the nearest training column; ties go to the lower index.
pub fn nn_classify(train: &DMatrix<f64>, labels: &[usize], query: &DVector<f64>) -> Result<usize, DneError> {
    if train.ncols() == 0 || labels.is_empty() {
        return Err(DneError::EmptyTrainingSet);
    }
    if labels.len() != train.ncols() {
        return Err(DneError::ShapeMismatch(format!(
            "{} labels for {} training columns",
            labels.len(),
            train.ncols()
        )));
    }
    if query.len() != train.nrows() {
        return Err(DneError::DimMismatch {
            expected: train.nrows(),
            found: query.len(),
        });
    }
    let mut best = (f64::INFINITY, 0);
    for (j, col) in train.column_iter().enumerate() {
        let d: f64 = col.iter().zip(query.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.0 {
            best = (d, j);
        }
    }
    Ok(labels[best.1])
}

/// Fraction of `test` columns whose nearest `train` column shares its label.
pub fn nn_accuracy(
    train: &DMatrix<f64>,
    train_labels: &[usize],
    test: &DMatrix<f64>,
    test_labels: &[usize],
) -> Result<f64, DneError> {
    if test.ncols() != test_labels.len() || test.ncols() == 0 {
        return Err(DneError::ShapeMismatch(format!(
            "{} labels for {} test columns",
            test_labels.len(),
            test.ncols()
        )));
    }
    let mut correct = 0usize;
    for (col, &truth) in test.column_iter().zip(test_labels) {
        if nn_classify(train, train_labels, &col.into_owned())? == truth {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.ncols() as f64)
}

/// Leave-one-out 1-NN accuracy over the columns of `x`.
pub fn loo_nn_accuracy(x: &DMatrix<f64>, labels: &[usize]) -> Result<f64, DneError> {
    let n = x.ncols();
    if n < 2 {
        return Err(DneError::EmptyTrainingSet);
    }
    let mut correct = 0usize;
    for i in 0..n {
        let mut best = (f64::INFINITY, 0);
        for j in (0..n).filter(|&j| j != i) {
            let d = sq_dist(x, i, j);
            if d < best.0 {
                best = (d, j);
            }
        }
        if labels[best.1] == labels[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / n as f64)
}

/// Top-`d` principal axes of the mean-centred samples, by descending
/// variance.
pub fn pca_fit(x: &DMatrix<f64>, d: usize) -> Result<DMatrix<f64>, DneError> {
    let (n, count) = (x.nrows(), x.ncols());
    let max = n.min(count);
    if d == 0 || d > max {
        return Err(DneError::DOutOfRange { d, max });
    }
    let mean = x.column_mean();
    let mut centred = x.clone();
    for mut col in centred.column_iter_mut() {
        col -= &mean;
    }
    let cov = &centred * centred.transpose() / (count.max(2) - 1) as f64;
    let cov = (&cov + cov.transpose()) * 0.5;
    let (_, vectors) = sorted_eigen(-cov);
    Ok(vectors.columns(0, d).into_owned())
}

/// Neighbourhood composition of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    /// Every neighbour shares its class.
    Inner,
    /// No neighbour shares its class.
    Insular,
    Marginal,
}

pub fn point_kinds(dataset: &LabeledDataset, k: usize) -> Result<Vec<PointKind>, DneError> {
    let knn = knn_sets(dataset.x(), k)?;
    let labels = dataset.labels();
    Ok(knn
        .iter()
        .enumerate()
        .map(|(i, neigh)| {
            let same = neigh.iter().filter(|&&j| labels[j] == labels[i]).count();
            match same {
                s if s == neigh.len() => PointKind::Inner,
                0 => PointKind::Insular,
                _ => PointKind::Marginal,
            }
        })
        .collect())
}

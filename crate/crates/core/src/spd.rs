//! Symmetric positive-definite matrices and the covariance similarity
//! measures used for matching: Cholesky, affine-invariant Riemannian,
//! log-Euclidean, Jeffrey's KL and Jensen-Bregman log-det.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpdError {
    #[error("matrix is empty")]
    Empty,
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite (min eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("unknown measure {0:?}")]
    UnknownMeasure(String),
}

pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
pub const MAX_CONDITION: f64 = 1e12;
pub const DEFAULT_RIDGE: f64 = 1e-6;

/// A validated symmetric positive-definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    values: DMatrix<f64>,
    repaired: bool,
}

fn check_shape_and_symmetry(m: &DMatrix<f64>) -> Result<DMatrix<f64>, SpdError> {
    if m.is_empty() {
        return Err(SpdError::Empty);
    }
    if !m.is_square() {
        return Err(SpdError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SpdError::NonFinite);
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOLERANCE * scale {
        return Err(SpdError::NotSymmetric(asym));
    }
    Ok((m + m.transpose()) * 0.5)
}

fn spectrum(m: &DMatrix<f64>) -> DVector<f64> {
    SymmetricEigen::new(m.clone()).eigenvalues
}

impl SpdMatrix {
    /// Strict constructor: symmetric to 1e-10 relative and strictly
    /// positive spectrum. The stored matrix is exactly symmetrized.
    pub fn new(values: DMatrix<f64>) -> Result<Self, SpdError> {
        let values = check_shape_and_symmetry(&values)?;
        let min = spectrum(&values).min();
        if !(min > 0.0) {
            return Err(SpdError::NotPositiveDefinite(min));
        }
        Ok(Self {
            values,
            repaired: false,
        })
    }

    /// Adds `ε·I` with `ε = ridge · trace / dim` when the smallest eigenvalue
    /// is not positive or the condition number exceeds 1e12. A matrix with
    /// non-positive trace gets the absolute `ε = ridge` instead.
    pub fn with_ridge_repair(values: DMatrix<f64>, ridge: f64) -> Result<Self, SpdError> {
        let mut values = check_shape_and_symmetry(&values)?;
        let eig = spectrum(&values);
        let (min, max) = (eig.min(), eig.max());
        let needs_repair = !(min > 0.0) || max / min > MAX_CONDITION;
        if !needs_repair {
            return Ok(Self {
                values,
                repaired: false,
            });
        }
        let dim = values.nrows() as f64;
        let trace = values.trace();
        let eps = if trace > 0.0 { ridge * trace / dim } else { ridge };
        for i in 0..values.nrows() {
            values[(i, i)] += eps;
        }
        let min = spectrum(&values).min();
        if !(min > 0.0) {
            return Err(SpdError::NotPositiveDefinite(min));
        }
        Ok(Self { values, repaired: true })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            values: DMatrix::identity(dim, dim),
            repaired: false,
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self, SpdError> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    /// True when construction had to add a ridge.
    pub fn repaired(&self) -> bool {
        self.repaired
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        spectrum(&self.values)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, SpdError> {
        Self::new(&self.values * factor)
    }

    pub fn inverse(&self) -> Result<Self, SpdError> {
        let inv = spectral_map(self, |l| 1.0 / l)?;
        Self::new(inv)
    }

    /// `A · X · Aᵀ`.
    pub fn congruence(&self, a: &DMatrix<f64>) -> Result<Self, SpdError> {
        Self::new(a * &self.values * a.transpose())
    }
}

fn spectral_map(x: &SpdMatrix, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>, SpdError> {
    let eig = SymmetricEigen::new(x.values.clone());
    let min = eig.eigenvalues.min();
    if !(min > 0.0) {
        return Err(SpdError::NotPositiveDefinite(min));
    }
    let mapped = eig.eigenvalues.map(f);
    let u = &eig.eigenvectors;
    let m = u * DMatrix::from_diagonal(&mapped) * u.transpose();
    Ok((&m + m.transpose()) * 0.5)
}

/// Lower-triangular `L` with positive diagonal and `X = L·Lᵀ`.
pub fn cholesky_factor(x: &SpdMatrix) -> Result<DMatrix<f64>, SpdError> {
    Cholesky::new(x.values.clone())
        .map(|c| c.l())
        .ok_or_else(|| SpdError::NotPositiveDefinite(spectrum(&x.values).min()))
}

/// Principal logarithm `U·log(Λ)·Uᵀ`.
pub fn matrix_log(x: &SpdMatrix) -> Result<DMatrix<f64>, SpdError> {
    spectral_map(x, f64::ln)
}

/// `X^{-1/2}`.
pub fn inv_sqrt(x: &SpdMatrix) -> Result<SpdMatrix, SpdError> {
    SpdMatrix::new(spectral_map(x, |l| 1.0 / l.sqrt())?)
}

fn same_dim(x: &SpdMatrix, y: &SpdMatrix) -> Result<(), SpdError> {
    if x.dim() != y.dim() {
        return Err(SpdError::DimMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    Ok(())
}

fn log_det(x: &DMatrix<f64>) -> Result<f64, SpdError> {
    let chol = Cholesky::new(x.clone()).ok_or_else(|| SpdError::NotPositiveDefinite(spectrum(x).min()))?;
    Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Eigenvalues of `Lx⁻¹ Y Lx⁻ᵀ`, the spectrum of `X⁻¹Y`.
fn relative_spectrum(x: &SpdMatrix, y: &SpdMatrix) -> Result<DVector<f64>, SpdError> {
    let chol = Cholesky::new(x.values.clone()).ok_or_else(|| SpdError::NotPositiveDefinite(x.eigenvalues().min()))?;
    let l = chol.l();
    let a = l
        .solve_lower_triangular(&y.values)
        .ok_or(SpdError::NotPositiveDefinite(0.0))?;
    let m = l
        .solve_lower_triangular(&a.transpose())
        .ok_or(SpdError::NotPositiveDefinite(0.0))?;
    let m = (&m + m.transpose()) * 0.5;
    let mu = spectrum(&m);
    let min = mu.min();
    if !(min > 0.0) {
        return Err(SpdError::NotPositiveDefinite(min));
    }
    Ok(mu)
}

/// `‖chol(X) − chol(Y)‖_F`.
pub fn dist_chol(x: &SpdMatrix, y: &SpdMatrix) -> Result<f64, SpdError> {
    same_dim(x, y)?;
    if x.values == y.values {
        return Ok(0.0);
    }
    Ok((cholesky_factor(x)? - cholesky_factor(y)?).norm())
}

/// `‖log(X^{-1/2} Y X^{-1/2})‖_F`.
pub fn dist_airm(x: &SpdMatrix, y: &SpdMatrix) -> Result<f64, SpdError> {
    same_dim(x, y)?;
    if x.values == y.values {
        return Ok(0.0);
    }
    let w = inv_sqrt(x)?;
    let m = w.values() * &y.values * w.values();
    let m = (&m + m.transpose()) * 0.5;
    let mu = spectrum(&m);
    let min = mu.min();
    if !(min > 0.0) {
        return Err(SpdError::NotPositiveDefinite(min));
    }
    Ok(mu.iter().map(|v| v.ln().powi(2)).sum::<f64>().sqrt())
}

/// `‖log X − log Y‖_F`.
pub fn dist_lerm(x: &SpdMatrix, y: &SpdMatrix) -> Result<f64, SpdError> {
    same_dim(x, y)?;
    if x.values == y.values {
        return Ok(0.0);
    }
    Ok((matrix_log(x)? - matrix_log(y)?).norm())
}

/// Square root of `½·tr(X⁻¹Y + Y⁻¹X − 2I)`.
///
/// With `μ` the spectrum of `X⁻¹Y` the trace is `Σ (μ − 1)² / μ`, which
/// stays non-negative and exact near `X = Y`.
pub fn dist_jkld(x: &SpdMatrix, y: &SpdMatrix) -> Result<f64, SpdError> {
    same_dim(x, y)?;
    if x.values == y.values {
        return Ok(0.0);
    }
    let mu = relative_spectrum(x, y)?;
    let d2 = 0.5 * mu.iter().map(|m| (m - 1.0).powi(2) / m).sum::<f64>();
    Ok(d2.max(0.0).sqrt())
}

/// `log|(X+Y)/2| − ½·log|XY|`, from Cholesky log-determinants.
pub fn dist_jbld(x: &SpdMatrix, y: &SpdMatrix) -> Result<f64, SpdError> {
    same_dim(x, y)?;
    if x.values == y.values {
        return Ok(0.0);
    }
    let mid = (&x.values + &y.values) * 0.5;
    let v = log_det(&mid)? - 0.5 * (log_det(&x.values)? + log_det(&y.values)?);
    Ok(v.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Chol,
    Airm,
    Lerm,
    #[default]
    Jkld,
    Jbld,
}

impl Measure {
    pub const ALL: [Measure; 5] = [
        Measure::Chol,
        Measure::Airm,
        Measure::Lerm,
        Measure::Jkld,
        Measure::Jbld,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Chol => "chol",
            Measure::Airm => "airm",
            Measure::Lerm => "lerm",
            Measure::Jkld => "jkld",
            Measure::Jbld => "jbld",
        }
    }

    pub fn distance(self, x: &SpdMatrix, y: &SpdMatrix) -> Result<f64, SpdError> {
        match self {
            Measure::Chol => dist_chol(x, y),
            Measure::Airm => dist_airm(x, y),
            Measure::Lerm => dist_lerm(x, y),
            Measure::Jkld => dist_jkld(x, y),
            Measure::Jbld => dist_jbld(x, y),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = SpdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Measure::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| SpdError::UnknownMeasure(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, data.len() / rows, data)
    }

    fn spd(rows: usize, data: &[f64]) -> SpdMatrix {
        SpdMatrix::new(m(rows, data)).unwrap()
    }

    /// Taylor series with scaling and squaring; independent of any
    /// eigendecomposition.
    fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
        let norm = a.norm();
        let k = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as i32
        } else {
            0
        };
        let s = a / 2f64.powi(k);
        let n = a.nrows();
        let mut term = DMatrix::identity(n, n);
        let mut sum = term.clone();
        for i in 1..30 {
            term = &term * &s / i as f64;
            sum += &term;
        }
        for _ in 0..k {
            sum = &sum * &sum;
        }
        sum
    }

    fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    fn random_spd(seed: &[f64]) -> SpdMatrix {
        let a = DMatrix::from_column_slice(5, 5, seed);
        SpdMatrix::new(&a * a.transpose() + DMatrix::identity(5, 5) * 0.5).unwrap()
    }

    #[test]
    fn strict_constructor_checks() {
        assert!(matches!(SpdMatrix::new(DMatrix::zeros(0, 0)), Err(SpdError::Empty)));
        assert!(matches!(
            SpdMatrix::new(DMatrix::zeros(2, 3)),
            Err(SpdError::NotSquare { rows: 2, cols: 3 })
        ));
        assert!(matches!(
            SpdMatrix::new(m(2, &[2.0, 1.0, 0.0, 2.0])),
            Err(SpdError::NotSymmetric(_))
        ));
        assert!(matches!(
            SpdMatrix::new(m(2, &[1.0, 2.0, 2.0, 1.0])),
            Err(SpdError::NotPositiveDefinite(_))
        ));
        assert!(matches!(SpdMatrix::new(m(1, &[f64::NAN])), Err(SpdError::NonFinite)));
    }

    #[test]
    fn ridge_repair_policy() {
        let ok = SpdMatrix::with_ridge_repair(m(2, &[2.0, 0.0, 0.0, 1.0]), DEFAULT_RIDGE).unwrap();
        assert!(!ok.repaired());
        let r = SpdMatrix::with_ridge_repair(m(2, &[2.0, 0.0, 0.0, 0.0]), DEFAULT_RIDGE).unwrap();
        assert!(r.repaired());
        // ε = 1e-6 · trace / dim = 1e-6
        assert_eq!(r.values()[(1, 1)], 1e-6);
        assert_eq!(r.values()[(0, 0)], 2.0 + 1e-6);
        let z = SpdMatrix::with_ridge_repair(DMatrix::zeros(3, 3), DEFAULT_RIDGE).unwrap();
        assert_eq!(z.values(), &(DMatrix::identity(3, 3) * 1e-6));
        let ill = SpdMatrix::with_ridge_repair(m(2, &[1.0, 0.0, 0.0, 1e-14]), DEFAULT_RIDGE).unwrap();
        assert!(ill.repaired());
        assert!(matches!(
            SpdMatrix::with_ridge_repair(m(2, &[1.0, 0.0, 0.0, -5.0]), DEFAULT_RIDGE),
            Err(SpdError::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn cholesky_examples() {
        assert_eq!(
            cholesky_factor(&SpdMatrix::identity(3)).unwrap(),
            DMatrix::identity(3, 3)
        );
        assert_eq!(cholesky_factor(&spd(1, &[9.0])).unwrap()[(0, 0)], 9f64.sqrt());
    }

    #[test]
    fn log_examples() {
        assert_eq!(matrix_log(&SpdMatrix::identity(4)).unwrap(), DMatrix::zeros(4, 4));
        let e = std::f64::consts::E;
        let l = matrix_log(&SpdMatrix::from_diagonal(&[e, e * e]).unwrap()).unwrap();
        assert!((l[(0, 0)] - e.ln()).abs() < 1e-12);
        assert!((l[(1, 1)] - (e * e).ln()).abs() < 1e-12);
        assert!(l[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn inv_sqrt_examples() {
        assert!(
            rel(
                inv_sqrt(&SpdMatrix::identity(3)).unwrap().values(),
                &DMatrix::identity(3, 3)
            ) < 1e-15
        );
        assert!((inv_sqrt(&spd(1, &[4.0])).unwrap().values()[(0, 0)] - 1.0 / 4f64.sqrt()).abs() < 1e-15);
        let r = inv_sqrt(&SpdMatrix::from_diagonal(&[4.0, 9.0]).unwrap()).unwrap();
        assert!((r.values()[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((r.values()[(1, 1)] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_distance_oracles() {
        let (x4, x2, x1) = (spd(1, &[4.0]), spd(1, &[2.0]), spd(1, &[1.0]));
        let i2 = SpdMatrix::identity(2);
        let four_i2 = SpdMatrix::from_diagonal(&[4.0, 4.0]).unwrap();
        assert!((dist_chol(&four_i2, &i2).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!((dist_airm(&x4, &x1).unwrap() - (0.25f64).ln().abs()).abs() < 1e-12);
        assert!((dist_lerm(&x4, &x1).unwrap() - 4f64.ln()).abs() < 1e-12);
        let d2: f64 = 0.5 * (0.5 + 2.0 - 2.0);
        assert!((dist_jkld(&x2, &x1).unwrap() - d2.sqrt()).abs() < 1e-12);
        let jb = 1.5f64.ln() - 0.5 * 2f64.ln();
        assert!((dist_jbld(&x2, &x1).unwrap() - jb).abs() < 1e-12);
        let two_i2 = SpdMatrix::from_diagonal(&[2.0, 2.0]).unwrap();
        assert!((dist_jbld(&two_i2, &i2).unwrap() - 2.0 * jb).abs() < 1e-12);
    }

    #[test]
    fn dim_mismatch() {
        let (a, b) = (SpdMatrix::identity(2), SpdMatrix::identity(3));
        for measure in Measure::ALL {
            assert!(matches!(
                measure.distance(&a, &b),
                Err(SpdError::DimMismatch { left: 2, right: 3 })
            ));
        }
    }

    #[test]
    fn measure_parsing() {
        assert_eq!("JKLD".parse::<Measure>().unwrap(), Measure::Jkld);
        assert_eq!(Measure::default(), Measure::Jkld);
        assert!("stein".parse::<Measure>().is_err());
        assert_eq!(serde_json::to_string(&Measure::Airm).unwrap(), "\"airm\"");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn cholesky_reconstructs(seed in prop::collection::vec(-2.0f64..2.0, 25)) {
            let x = random_spd(&seed);
            let l = cholesky_factor(&x).unwrap();
            prop_assert!(rel(&(&l * l.transpose()), x.values()) < 1e-9);
            for i in 0..5 {
                prop_assert!(l[(i, i)] > 0.0);
                for j in i + 1..5 {
                    prop_assert_eq!(l[(i, j)], 0.0);
                }
            }
        }

        #[test]
        fn log_exponentiates_back(seed in prop::collection::vec(-2.0f64..2.0, 25)) {
            let x = random_spd(&seed);
            let l = matrix_log(&x).unwrap();
            prop_assert!(rel(&expm(&l), x.values()) < 1e-8);
            let li = matrix_log(&x.inverse().unwrap()).unwrap();
            prop_assert!((&li + &l).norm() <= 1e-8 * l.norm().max(1.0));
        }

        #[test]
        fn inv_sqrt_whitens(seed in prop::collection::vec(-2.0f64..2.0, 25)) {
            let x = random_spd(&seed);
            let w = inv_sqrt(&x).unwrap();
            let prod = w.values() * x.values() * w.values();
            prop_assert!((prod - DMatrix::identity(5, 5)).amax() < 1e-8);
        }

        #[test]
        fn measures_symmetric_and_non_negative(
            a in prop::collection::vec(-2.0f64..2.0, 25),
            b in prop::collection::vec(-2.0f64..2.0, 25),
        ) {
            let (x, y) = (random_spd(&a), random_spd(&b));
            for measure in Measure::ALL {
                let d1 = measure.distance(&x, &y).unwrap();
                let d2 = measure.distance(&y, &x).unwrap();
                prop_assert!(d1 >= 0.0);
                prop_assert!((d1 - d2).abs() <= 1e-9 * d1.max(1.0), "{} {} {}", measure, d1, d2);
                prop_assert_eq!(measure.distance(&x, &x).unwrap(), 0.0);
            }
        }

        #[test]
        fn airm_affine_invariance(
            a in prop::collection::vec(-2.0f64..2.0, 25),
            b in prop::collection::vec(-2.0f64..2.0, 25),
            t in prop::collection::vec(-1.0f64..1.0, 25),
        ) {
            let (x, y) = (random_spd(&a), random_spd(&b));
            let g = DMatrix::from_column_slice(5, 5, &t) + DMatrix::identity(5, 5) * 3.0;
            let d = dist_airm(&x, &y).unwrap();
            let dg = dist_airm(&x.congruence(&g).unwrap(), &y.congruence(&g).unwrap()).unwrap();
            prop_assert!((d - dg).abs() < 1e-6);
        }

        #[test]
        fn lerm_inversion_invariance(
            a in prop::collection::vec(-2.0f64..2.0, 25),
            b in prop::collection::vec(-2.0f64..2.0, 25),
        ) {
            let (x, y) = (random_spd(&a), random_spd(&b));
            let d = dist_lerm(&x, &y).unwrap();
            let di = dist_lerm(&x.inverse().unwrap(), &y.inverse().unwrap()).unwrap();
            prop_assert!((d - di).abs() < 1e-8);
        }

        #[test]
        fn airm_equals_lerm_when_commuting(
            dx in prop::collection::vec(0.1f64..10.0, 5),
            dy in prop::collection::vec(0.1f64..10.0, 5),
            q in prop::collection::vec(-1.0f64..1.0, 25),
        ) {
            let u = DMatrix::from_column_slice(5, 5, &q).qr().q();
            let x = SpdMatrix::from_diagonal(&dx).unwrap().congruence(&u).unwrap();
            let y = SpdMatrix::from_diagonal(&dy).unwrap().congruence(&u).unwrap();
            let airm = dist_airm(&x, &y).unwrap();
            let lerm = dist_lerm(&x, &y).unwrap();
            prop_assert!((airm - lerm).abs() < 1e-8);
            let oracle = dx.iter().zip(&dy).map(|(a, b)| (a / b).ln().powi(2)).sum::<f64>().sqrt();
            prop_assert!((lerm - oracle).abs() < 1e-8);
        }
    }
}

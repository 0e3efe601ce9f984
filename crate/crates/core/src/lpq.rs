//! Local phase quantization: signs of a local Fourier transform at four low
//! frequencies, packed into 8-bit codes and histogrammed into 256 bins.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::Grid;

pub const LPQ_BINS: usize = 256;

/// Components smaller than this fraction of the summed term magnitudes are
/// round-off and reported as exact zero.
pub const ZERO_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpqError {
    #[error("invalid LPQ configuration: {0}")]
    InvalidConfig(String),
    #[error("patch {width}x{height} is smaller than the {window}x{window} window")]
    PatchTooSmall { width: usize, height: usize, window: usize },
    #[error("coefficient at pixel {0} is not finite")]
    NonFiniteCoefficient(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Clamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LpqConfig {
    pub window: usize,
    /// Lowest non-zero frequency `a`; `1 / window` when absent.
    pub freq: Option<f64>,
    pub boundary: Boundary,
}

impl Default for LpqConfig {
    fn default() -> Self {
        Self::with_window(7)
    }
}

impl LpqConfig {
    pub fn with_window(window: usize) -> Self {
        Self {
            window,
            freq: None,
            boundary: Boundary::Clamp,
        }
    }

    pub fn frequency(&self) -> f64 {
        self.freq.unwrap_or(1.0 / self.window as f64)
    }

    pub fn validate(&self) -> Result<(), LpqError> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(LpqError::InvalidConfig(format!(
                "window must be odd and at least 3, got {}",
                self.window
            )));
        }
        let a = self.frequency();
        if !(a.is_finite() && a > 0.0) {
            return Err(LpqError::InvalidConfig(format!("frequency must be positive, got {a}")));
        }
        Ok(())
    }

    /// `u₁ = (a,0)`, `u₂ = (0,a)`, `u₃ = (a,a)`, `u₄ = (a,−a)` as (x, y).
    pub fn frequencies(&self) -> [(f64, f64); 4] {
        let a = self.frequency();
        [(a, 0.0), (0.0, a), (a, a), (a, -a)]
    }
}

/// Per-pixel local transform `Σ_y f(x−y)·exp(−j2π uᵀy)` over the window,
/// for the four frequencies, in row-major pixel order.
///
/// The sum is evaluated as `Σ_y (f(x−y) − f(x))·e(y) + f(x)·Σ_y e(y)`; the
/// last term vanishes for `a = 1/M`, so constant offsets cancel before any
/// rounding. Samples outside the patch are clamped to the border.
pub fn stft_coefficients(patch: &Grid, config: &LpqConfig) -> Result<Vec<[Complex64; 4]>, LpqError> {
    config.validate()?;
    let m = config.window;
    let (w, h) = (patch.width(), patch.height());
    if w < m || h < m {
        return Err(LpqError::PatchTooSmall {
            width: w,
            height: h,
            window: m,
        });
    }
    let r = (m / 2) as isize;
    let offsets: Vec<(isize, isize)> = (-r..=r).flat_map(|dy| (-r..=r).map(move |dx| (dx, dy))).collect();
    let kernels: Vec<Vec<Complex64>> = config
        .frequencies()
        .iter()
        .map(|&(ux, uy)| {
            offsets
                .iter()
                .map(|&(dx, dy)| {
                    Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (ux * dx as f64 + uy * dy as f64))
                })
                .collect()
        })
        .collect();
    let dc: Vec<Option<Complex64>> = kernels
        .iter()
        .map(|k| {
            let s: Complex64 = k.iter().sum();
            (s.norm() > ZERO_TOLERANCE * k.len() as f64).then_some(s)
        })
        .collect();

    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut out = Vec::with_capacity(w * h);
    let mut diffs = vec![0.0; offsets.len()];
    for row in 0..h {
        for col in 0..w {
            let centre = patch.get(col, row);
            for (d, &(dx, dy)) in diffs.iter_mut().zip(&offsets) {
                let c = clamp(col as isize - dx, w);
                let rr = clamp(row as isize - dy, h);
                *d = patch.get(c, rr) - centre;
            }
            let mut coeffs = [Complex64::new(0.0, 0.0); 4];
            for (f, kernel) in kernels.iter().enumerate() {
                let (mut re, mut im, mut re_mag, mut im_mag) = (0.0, 0.0, 0.0, 0.0);
                for (&d, e) in diffs.iter().zip(kernel) {
                    re += d * e.re;
                    im += d * e.im;
                    re_mag += (d * e.re).abs();
                    im_mag += (d * e.im).abs();
                }
                if let Some(s) = dc[f] {
                    re += centre * s.re;
                    im += centre * s.im;
                    re_mag += (centre * s.re).abs();
                    im_mag += (centre * s.im).abs();
                }
                let snap = |v: f64, mag: f64| if v.abs() <= ZERO_TOLERANCE * mag { 0.0 } else { v };
                coeffs[f] = Complex64::new(snap(re, re_mag), snap(im, im_mag));
            }
            out.push(coeffs);
        }
    }
    Ok(out)
}

/// Bit `b` is set when component `b` of `[Re u₁, Im u₁, Re u₂, Im u₂,
/// Re u₃, Im u₃, Re u₄, Im u₄]` is `≥ 0`, least-significant bit first.
pub fn quantize_code(coeffs: &[Complex64; 4]) -> Option<u8> {
    let mut code = 0u8;
    for (f, c) in coeffs.iter().enumerate() {
        if !(c.re.is_finite() && c.im.is_finite()) {
            return None;
        }
        if c.re >= 0.0 {
            code |= 1 << (2 * f);
        }
        if c.im >= 0.0 {
            code |= 1 << (2 * f + 1);
        }
    }
    Some(code)
}

pub fn quantize_codes(coeffs: &[[Complex64; 4]]) -> Result<Vec<u8>, LpqError> {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| quantize_code(c).ok_or(LpqError::NonFiniteCoefficient(i)))
        .collect()
}

pub fn lpq_codes(patch: &Grid, config: &LpqConfig) -> Result<Vec<u8>, LpqError> {
    quantize_codes(&stft_coefficients(patch, config)?)
}

/// Normalized 256-bin code histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpqHistogram {
    bins: Vec<f64>,
}

impl LpqHistogram {
    pub fn from_codes(codes: &[u8]) -> Self {
        let mut counts = [0usize; LPQ_BINS];
        for &c in codes {
            counts[c as usize] += 1;
        }
        let total = codes.len().max(1) as f64;
        Self {
            bins: counts.iter().map(|&c| c as f64 / total).collect(),
        }
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn into_bins(self) -> Vec<f64> {
        self.bins
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.bins.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        out.push('\n');
        out
    }
}

pub fn lpq_histogram(patch: &Grid, config: &LpqConfig) -> Result<LpqHistogram, LpqError> {
    Ok(LpqHistogram::from_codes(&lpq_codes(patch, config)?))
}

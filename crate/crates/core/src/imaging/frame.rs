use serde::{Deserialize, Serialize};

use super::{gradient, Grid, ImagingError};

/// Sample depth of a thermal frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn bits(self) -> u32 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    /// Largest representable intensity, `2^bits - 1`.
    pub fn max_value(self) -> u32 {
        match self {
            BitDepth::Eight => 255,
            BitDepth::Sixteen => 65535,
        }
    }

    pub fn from_maxval(maxval: u32) -> Option<Self> {
        match maxval {
            255 => Some(BitDepth::Eight),
            65535 => Some(BitDepth::Sixteen),
            _ => None,
        }
    }
}

/// Single-channel thermal image. Intensities are promoted to `f64` at
/// construction and always lie in `[0, 2^bit_depth - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalFrame {
    grid: Grid,
    bit_depth: BitDepth,
}

impl ThermalFrame {
    /// Builds a frame from raw integer samples in row-major order.
    pub fn from_samples(
        width: usize,
        height: usize,
        bit_depth: BitDepth,
        samples: &[u16],
    ) -> Result<Self, ImagingError> {
        let max = bit_depth.max_value();
        if let Some(&bad) = samples.iter().find(|&&s| s as u32 > max) {
            return Err(ImagingError::IntensityOutOfRange { value: bad as f64, max });
        }
        let grid = Grid::new(width, height, samples.iter().map(|&s| s as f64).collect())?;
        Ok(Self { grid, bit_depth })
    }

    /// Wraps a real-valued grid, checking every value against the depth range.
    pub fn from_grid(grid: Grid, bit_depth: BitDepth) -> Result<Self, ImagingError> {
        let max = bit_depth.max_value();
        if let Some(&bad) = grid
            .data()
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > max as f64)
        {
            return Err(ImagingError::IntensityOutOfRange { value: bad, max });
        }
        Ok(Self { grid, bit_depth })
    }

    /// Like [`ThermalFrame::from_grid`] but clamps values into range first.
    pub fn from_grid_clamped(grid: Grid, bit_depth: BitDepth) -> Self {
        let max = bit_depth.max_value() as f64;
        let grid = grid.map(|v| if v.is_finite() { v.clamp(0.0, max) } else { 0.0 });
        Self { grid, bit_depth }
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    pub fn bit_depth(&self) -> BitDepth {
        self.bit_depth
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn into_grid(self) -> Grid {
        self.grid
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.grid.get(col, row)
    }

    pub fn sample_bilinear(&self, x: f64, y: f64) -> Result<f64, ImagingError> {
        self.grid.sample_bilinear(x, y)
    }

    pub fn gradient(&self) -> Result<(Grid, Grid), ImagingError> {
        gradient(&self.grid)
    }

    /// Intensities rounded to the nearest representable integer sample.
    pub fn to_samples(&self) -> Vec<u16> {
        let max = self.bit_depth.max_value() as f64;
        self.grid
            .data()
            .iter()
            .map(|&v| v.round().clamp(0.0, max) as u16)
            .collect()
    }
}

impl AsRef<Grid> for ThermalFrame {
    fn as_ref(&self) -> &Grid {
        &self.grid
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_samples_above_depth() {
        let err = ThermalFrame::from_samples(2, 1, BitDepth::Eight, &[10, 256]).unwrap_err();
        assert!(matches!(err, ImagingError::IntensityOutOfRange { max: 255, .. }));
    }

    #[test]
    fn rejects_wrong_sample_count() {
        let err = ThermalFrame::from_samples(2, 2, BitDepth::Sixteen, &[1, 2, 3]).unwrap_err();
        assert!(matches!(err, ImagingError::SizeMismatch { expected: 4, found: 3 }));
    }

    #[test]
    fn clamped_construction_limits_range() {
        let g = Grid::new(3, 1, vec![-4.0, 12.6, 300.0]).unwrap();
        let f = ThermalFrame::from_grid_clamped(g, BitDepth::Eight);
        assert_eq!(f.to_samples(), vec![0, 13, 255]);
    }
}

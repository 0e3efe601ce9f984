use serde::{Deserialize, Serialize};

use super::ImagingError;

/// Sub-pixel position in image coordinates: origin top-left, `x` rightward,
/// `y` downward, pixel `(i, j)` centered at `(i as f64, j as f64)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// Axis-aligned pixel rectangle, inclusive of `x..x+width` columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub const fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Self { x, y, width, height }
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn contains(&self, col: usize, row: usize) -> bool {
        col >= self.x && col < self.x + self.width && row >= self.y && row < self.y + self.height
    }

    /// True when the rectangle lies entirely inside a `width` × `height` image.
    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.width > 0 && self.height > 0 && self.x + self.width <= width && self.y + self.height <= height
    }
}

/// Row-major grid of real values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::EmptyGrid);
        }
        if data.len() != width * height {
            return Err(ImagingError::SizeMismatch {
                expected: width * height,
                found: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be non-zero");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds a grid by evaluating `f(col, row)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be non-zero");
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(col, row));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, col: usize, row: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// True when `(x, y)` lies inside `[0, width-1] × [0, height-1]`.
    #[inline]
    pub fn in_bounds(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x <= (self.width - 1) as f64 && y <= (self.height - 1) as f64
    }

    /// Bilinear interpolation of the four pixels enclosing `(x, y)`.
    ///
    /// Integer coordinates return the stored pixel exactly.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> Result<f64, ImagingError> {
        if !self.in_bounds(x, y) {
            return Err(ImagingError::OutOfBounds { x, y });
        }
        Ok(self.interpolate(x, y))
    }

    /// Bilinear sample with the query clamped into the grid.
    pub fn sample_clamped(&self, x: f64, y: f64) -> f64 {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        self.interpolate(x, y)
    }

    #[inline]
    fn interpolate(&self, x: f64, y: f64) -> f64 {
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);

        let top = if fx == 0.0 {
            self.get(x0, y0)
        } else {
            self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx
        };
        if fy == 0.0 {
            return top;
        }
        let bottom = if fx == 0.0 {
            self.get(x0, y1)
        } else {
            self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx
        };
        top * (1.0 - fy) + bottom * fy
    }

    /// Copies the pixels covered by `rect`.
    pub fn crop(&self, rect: Rect) -> Result<Grid, ImagingError> {
        if !rect.fits_in(self.width, self.height) {
            return Err(ImagingError::RectOutOfBounds(rect));
        }
        Ok(Grid::from_fn(rect.width, rect.height, |c, r| {
            self.get(rect.x + c, rect.y + r)
        }))
    }
}

impl AsRef<Grid> for Grid {
    fn as_ref(&self) -> &Grid {
        self
    }
}

/// Spatial gradient `(∂I/∂x, ∂I/∂y)`.
///
/// Central differences in the interior and one-sided differences on the
/// border rows and columns.
pub fn gradient(grid: &Grid) -> Result<(Grid, Grid), ImagingError> {
    let (w, h) = (grid.width(), grid.height());
    if w < 3 || h < 3 {
        return Err(ImagingError::FrameTooSmall { width: w, height: h });
    }
    let gx = Grid::from_fn(w, h, |c, r| {
        if c == 0 {
            grid.get(1, r) - grid.get(0, r)
        } else if c == w - 1 {
            grid.get(w - 1, r) - grid.get(w - 2, r)
        } else {
            (grid.get(c + 1, r) - grid.get(c - 1, r)) * 0.5
        }
    });
    let gy = Grid::from_fn(w, h, |c, r| {
        if r == 0 {
            grid.get(c, 1) - grid.get(c, 0)
        } else if r == h - 1 {
            grid.get(c, h - 1) - grid.get(c, h - 2)
        } else {
            (grid.get(c, r + 1) - grid.get(c, r - 1)) * 0.5
        }
    });
    Ok((gx, gy))
}

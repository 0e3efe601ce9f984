use crate::imaging::Grid;

const BINOMIAL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

/// Separable 5-tap binomial blur with clamped borders.
pub fn smooth_binomial(grid: &Grid) -> Grid {
    let (w, h) = (grid.width(), grid.height());
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let horizontal = Grid::from_fn(w, h, |c, r| {
        BINOMIAL
            .iter()
            .enumerate()
            .map(|(k, wt)| wt * grid.get(clamp(c as isize + k as isize - 2, w), r))
            .sum()
    });
    Grid::from_fn(w, h, |c, r| {
        BINOMIAL
            .iter()
            .enumerate()
            .map(|(k, wt)| wt * horizontal.get(c, clamp(r as isize + k as isize - 2, h)))
            .sum()
    })
}

/// Keeps every second pixel; level pixel `i` sits at `2i` in the parent.
pub fn downsample(grid: &Grid) -> Grid {
    let w = grid.width().div_ceil(2);
    let h = grid.height().div_ceil(2);
    Grid::from_fn(w, h, |c, r| grid.get(2 * c, 2 * r))
}

/// Gaussian pyramid, finest level first. Stops early once a level would be
/// smaller than `min_side` in either dimension.
pub fn build_pyramid(grid: &Grid, levels: usize, min_side: usize) -> Vec<Grid> {
    let mut out = vec![grid.clone()];
    while out.len() < levels {
        let last = out.last().expect("non-empty");
        if last.width().div_ceil(2) < min_side || last.height().div_ceil(2) < min_side {
            break;
        }
        out.push(downsample(&smooth_binomial(last)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothing_preserves_constants() {
        let g = Grid::filled(7, 5, 3.5);
        assert_eq!(smooth_binomial(&g), g);
    }

    #[test]
    fn pyramid_halves_dimensions() {
        let g = Grid::from_fn(64, 40, |c, r| (c + r) as f64);
        let p = build_pyramid(&g, 3, 5);
        assert_eq!(p.len(), 3);
        assert_eq!((p[1].width(), p[1].height()), (32, 20));
        assert_eq!((p[2].width(), p[2].height()), (16, 10));
        // linear ramps survive blur away from the border
        assert!((p[1].get(10, 5) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn pyramid_stops_at_min_side() {
        let g = Grid::filled(20, 20, 1.0);
        assert_eq!(build_pyramid(&g, 5, 8).len(), 2);
    }
}

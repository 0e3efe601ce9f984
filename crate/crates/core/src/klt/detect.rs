use crate::imaging::{gradient, Grid, Point2, Rect, ThermalFrame};

use super::{TrackError, TrackPoint, TrackerConfig};

/// Smaller eigenvalue of the structure tensor summed over the
/// `(2·half + 1)²` window centred on every pixel. Pixels whose window would
/// leave the grid get `None`.
pub fn min_eigen_response(gx: &Grid, gy: &Grid, half: usize) -> Vec<Option<f64>> {
    let (w, h) = (gx.width(), gx.height());
    let mut out = vec![None; w * h];
    if w < 2 * half + 1 || h < 2 * half + 1 {
        return out;
    }
    for r in half..h - half {
        for c in half..w - half {
            let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
            for wr in r - half..=r + half {
                for wc in c - half..=c + half {
                    let (ix, iy) = (gx.get(wc, wr), gy.get(wc, wr));
                    sxx += ix * ix;
                    sxy += ix * iy;
                    syy += iy * iy;
                }
            }
            let mean = 0.5 * (sxx + syy);
            let dev = (0.5 * (sxx - syy)).hypot(sxy);
            out[r * w + c] = Some((mean - dev).max(0.0));
        }
    }
    out
}

/// Shi-Tomasi detection: ranks pixels by the minimum structure-tensor
/// eigenvalue, keeps those above `min_eigen_quality × best`, and greedily
/// suppresses anything within `window_half` pixels of a stronger pick.
/// Equal responses are ordered by (row, column).
pub fn detect_features(
    frame: &ThermalFrame,
    roi: Option<Rect>,
    config: &TrackerConfig,
    max_count: usize,
) -> Result<Vec<TrackPoint>, TrackError> {
    config.validate()?;
    if max_count == 0 {
        return Err(TrackError::InvalidMaxCount);
    }
    let (w, h) = (frame.width(), frame.height());
    let roi = roi.unwrap_or(Rect::new(0, 0, w, h));
    if !roi.fits_in(w, h) {
        return Err(TrackError::RoiOutOfBounds);
    }
    let (gx, gy) = gradient(frame.grid())?;
    let half = config.window_half;
    let response = min_eigen_response(&gx, &gy, half);

    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for r in roi.y..roi.y + roi.height {
        for c in roi.x..roi.x + roi.width {
            if let Some(v) = response[r * w + c] {
                candidates.push((v, r, c));
            }
        }
    }
    let best = candidates.iter().map(|c| c.0).fold(0.0, f64::max);
    if best <= 1e-9 {
        return Err(TrackError::NoFeaturesFound);
    }
    let threshold = config.min_eigen_quality * best;
    candidates.retain(|c| c.0 >= threshold);
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let radius = half as f64;
    let mut picked: Vec<Point2> = Vec::new();
    for &(_, r, c) in &candidates {
        let p = Point2::new(c as f64, r as f64);
        if picked.iter().all(|q| q.distance(p) > radius) {
            picked.push(p);
            if picked.len() == max_count {
                break;
            }
        }
    }
    Ok(picked
        .into_iter()
        .enumerate()
        .map(|(id, p)| TrackPoint::seed(id, p))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::BitDepth;

    fn square_frame() -> ThermalFrame {
        let g = Grid::from_fn(24, 24, |c, r| {
            if (10..13).contains(&c) && (10..13).contains(&r) {
                255.0
            } else {
                0.0
            }
        });
        ThermalFrame::from_grid(g, BitDepth::Eight).unwrap()
    }

    /// Exhaustive scan computing the structure tensor from scratch at every
    /// admissible centre; independent of `min_eigen_response`.
    fn brute_force_best(frame: &ThermalFrame, half: usize) -> (usize, usize) {
        let g = frame.grid();
        let (w, h) = (g.width(), g.height());
        let dx = |c: usize, r: usize| {
            if c == 0 {
                g.get(1, r) - g.get(0, r)
            } else if c == w - 1 {
                g.get(c, r) - g.get(c - 1, r)
            } else {
                (g.get(c + 1, r) - g.get(c - 1, r)) / 2.0
            }
        };
        let dy = |c: usize, r: usize| {
            if r == 0 {
                g.get(c, 1) - g.get(c, 0)
            } else if r == h - 1 {
                g.get(c, r) - g.get(c, r - 1)
            } else {
                (g.get(c, r + 1) - g.get(c, r - 1)) / 2.0
            }
        };
        let mut best = (f64::MIN, 0, 0);
        for r in half..h - half {
            for c in half..w - half {
                let (mut a, mut b, mut d) = (0.0, 0.0, 0.0);
                for y in r - half..=r + half {
                    for x in c - half..=c + half {
                        a += dx(x, y) * dx(x, y);
                        b += dx(x, y) * dy(x, y);
                        d += dy(x, y) * dy(x, y);
                    }
                }
                let tr = a + d;
                let det = a * d - b * b;
                let lmin = tr / 2.0 - ((tr * tr / 4.0) - det).max(0.0).sqrt();
                if lmin > best.0 + 1e-9 {
                    best = (lmin, r, c);
                }
            }
        }
        (best.1, best.2)
    }

    #[test]
    fn constant_frame_has_no_features() {
        let f = ThermalFrame::from_samples(20, 20, BitDepth::Eight, &[77; 400]).unwrap();
        assert!(matches!(
            detect_features(&f, None, &TrackerConfig::default(), 10),
            Err(TrackError::NoFeaturesFound)
        ));
    }

    #[test]
    fn strongest_feature_sits_on_square_corner() {
        let frame = square_frame();
        let cfg = TrackerConfig {
            window_half: 3,
            ..Default::default()
        };
        let (r, c) = brute_force_best(&frame, 3);
        // the oracle lands on the corner pixel of the 10..=12 square
        assert_eq!((r, c), (10, 10));
        let feats = detect_features(&frame, None, &cfg, 4).unwrap();
        let top = feats[0].origin;
        assert_eq!((top.y as usize, top.x as usize), (r, c));
        let corners = [(9.5, 9.5), (12.5, 9.5), (9.5, 12.5), (12.5, 12.5)];
        assert!(corners.iter().any(|&(x, y)| top.distance(Point2::new(x, y)) <= 1.0));
    }

    #[test]
    fn max_count_caps_output() {
        let frame = square_frame();
        let cfg = TrackerConfig {
            window_half: 3,
            ..Default::default()
        };
        let feats = detect_features(&frame, None, &cfg, 1).unwrap();
        assert_eq!(feats.len(), 1);
        assert!(matches!(
            detect_features(&frame, None, &cfg, 0),
            Err(TrackError::InvalidMaxCount)
        ));
    }

    #[test]
    fn picks_respect_suppression_radius() {
        let frame = square_frame();
        let cfg = TrackerConfig {
            window_half: 3,
            ..Default::default()
        };
        let feats = detect_features(&frame, None, &cfg, 50).unwrap();
        for (i, a) in feats.iter().enumerate() {
            for b in &feats[i + 1..] {
                assert!(a.origin.distance(b.origin) > 3.0);
            }
        }
    }

    #[test]
    fn roi_limits_candidates() {
        let frame = square_frame();
        let cfg = TrackerConfig {
            window_half: 3,
            ..Default::default()
        };
        let roi = Rect::new(11, 11, 6, 6);
        let feats = detect_features(&frame, Some(roi), &cfg, 10).unwrap();
        assert!(feats
            .iter()
            .all(|f| roi.contains(f.origin.x as usize, f.origin.y as usize)));
        assert!(matches!(
            detect_features(&frame, Some(Rect::new(20, 20, 10, 10)), &cfg, 10),
            Err(TrackError::RoiOutOfBounds)
        ));
    }
}

use std::fs;
use std::path::Path;

use super::{ImagingError, Point2, ThermalFrame};

pub const LANDMARK_COUNT: usize = 68;

/// The 68-point facial annotation. Indices are 1-based throughout the public
/// API so region vertex paths can be written exactly as annotated.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: Vec<Point2>,
}

impl LandmarkSet {
    pub fn from_points(points: Vec<Point2>) -> Result<Self, ImagingError> {
        if points.len() != LANDMARK_COUNT {
            return Err(ImagingError::WrongRowCount { found: points.len() });
        }
        if let Some(i) = points.iter().position(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(ImagingError::NonNumericCoordinate {
                line: i + 1,
                value: format!("{:?}", points[i]),
            });
        }
        Ok(Self { points })
    }

    /// Landmark `index` (1-based).
    ///
    /// # Panics
    /// If `index` is outside `1..=68`.
    pub fn point(&self, index: usize) -> Point2 {
        assert!(
            (1..=LANDMARK_COUNT).contains(&index),
            "landmark index {index} outside 1..=68"
        );
        self.points[index - 1]
    }

    /// Points in index order (element 0 is landmark 1).
    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            points: self.points.iter().map(|p| Point2::new(p.x + dx, p.y + dy)).collect(),
        }
    }

    /// Fails with the first landmark that falls outside the frame.
    pub fn check_within(&self, frame: &ThermalFrame) -> Result<(), ImagingError> {
        match self.points.iter().position(|p| !frame.grid().in_bounds(p.x, p.y)) {
            Some(i) => Err(ImagingError::LandmarkOutOfFrame { index: i + 1 }),
            None => Ok(()),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,x,y\n");
        for (i, p) in self.points.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, p.x, p.y));
        }
        out
    }
}

/// Parses `index,x,y` rows. A first row whose first token is not numeric is
/// treated as a header.
pub fn parse_landmarks(text: &str) -> Result<LandmarkSet, ImagingError> {
    let mut slots: Vec<Option<Point2>> = vec![None; LANDMARK_COUNT];
    let mut rows = 0usize;
    let mut first = true;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if first {
            first = false;
            if fields[0].parse::<f64>().is_err() {
                continue;
            }
        }
        let line_no = lineno + 1;
        if fields.len() != 3 {
            return Err(ImagingError::MalformedRow { line: line_no });
        }
        let index: usize = fields[0]
            .parse()
            .map_err(|_| ImagingError::MalformedRow { line: line_no })?;
        let coord = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ImagingError::NonNumericCoordinate {
                    line: line_no,
                    value: s.to_string(),
                })
        };
        let (x, y) = (coord(fields[1])?, coord(fields[2])?);
        rows += 1;
        if !(1..=LANDMARK_COUNT).contains(&index) {
            return Err(ImagingError::LandmarkIndexOutOfRange { line: line_no, index });
        }
        if slots[index - 1].replace(Point2::new(x, y)).is_some() {
            return Err(ImagingError::DuplicateIndex(index));
        }
    }
    if rows != LANDMARK_COUNT {
        return Err(ImagingError::WrongRowCount { found: rows });
    }
    // 68 rows, all in range, none duplicated: every slot is filled
    LandmarkSet::from_points(slots.into_iter().map(|p| p.expect("slot filled")).collect())
}

pub fn load_landmarks(path: impl AsRef<Path>) -> Result<LandmarkSet, ImagingError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| ImagingError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_landmarks(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(n: usize) -> String {
        (1..=n).map(|i| format!("{i},{}.5,{}\n", i, 2 * i)).collect()
    }

    #[test]
    fn parses_valid_rows_with_header() {
        let text = format!("index,x,y\n{}", rows(68));
        let set = parse_landmarks(&text).unwrap();
        assert_eq!(set.point(1), Point2::new(1.5, 2.0));
        assert_eq!(set.point(68), Point2::new(68.5, 136.0));
    }

    #[test]
    fn rows_may_arrive_out_of_order() {
        let mut lines: Vec<String> = rows(68).lines().map(String::from).collect();
        lines.reverse();
        let set = parse_landmarks(&lines.join("\n")).unwrap();
        assert_eq!(set.point(3), Point2::new(3.5, 6.0));
    }

    #[test]
    fn wrong_count() {
        assert!(matches!(
            parse_landmarks(&rows(67)),
            Err(ImagingError::WrongRowCount { found: 67 })
        ));
    }

    #[test]
    fn duplicate_index() {
        let text = rows(67) + "5,1,1\n";
        assert!(matches!(parse_landmarks(&text), Err(ImagingError::DuplicateIndex(5))));
    }

    #[test]
    fn non_numeric_coordinate() {
        let text = rows(68).replace("28,28.5,56", "28,aa,3.5");
        match parse_landmarks(&text) {
            Err(ImagingError::NonNumericCoordinate { line, value }) => {
                assert_eq!(line, 28);
                assert_eq!(value, "aa");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip() {
        let set = parse_landmarks(&rows(68)).unwrap();
        assert_eq!(parse_landmarks(&set.to_csv()).unwrap(), set);
    }

    #[test]
    fn bounds_check_against_frame() {
        let set = parse_landmarks(&rows(68)).unwrap();
        let small = ThermalFrame::from_samples(50, 200, super::super::BitDepth::Eight, &vec![0; 10000]).unwrap();
        assert!(matches!(
            set.check_within(&small),
            Err(ImagingError::LandmarkOutOfFrame { index: 49 })
        ));
    }
}

//! Plain-text formats used by the DNE subcommands.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use thermoface_core::dne::DneModel;

use crate::error::{CliError, Result};

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn parse_err(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses a comma-separated matrix with one sample per row and returns it
/// as `features × samples` (one sample per column).
pub fn parse_feature_csv(text: &str, path: &Path) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, l) in data_lines(text) {
        let row = l
            .split(',')
            .map(|t| {
                let v: f64 = t
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(path, format!("line {line}: bad number {t:?}")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(parse_err(path, format!("line {line}: non-finite value")))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    path,
                    format!("line {line}: {} columns, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, "no samples"));
    }
    let n = rows[0].len();
    Ok(DMatrix::from_fn(n, rows.len(), |r, c| rows[c][r]))
}

pub fn read_feature_csv(path: &Path) -> Result<DMatrix<f64>> {
    parse_feature_csv(&read_text(path)?, path)
}

/// Writes samples as rows.
pub fn feature_csv(x: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for col in x.column_iter() {
        let row: Vec<String> = col.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Class labels, one per line (or the first field of each line), mapped to
/// ids in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labels {
    pub ids: Vec<usize>,
    pub names: Vec<String>,
}

impl Labels {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let mut ids = Vec::new();
        for (_, l) in data_lines(text) {
            let name = l.split(',').next().unwrap_or("").trim().to_string();
            let id = match names.iter().position(|n| *n == name) {
                Some(id) => id,
                None => {
                    names.push(name);
                    names.len() - 1
                }
            };
            ids.push(id);
        }
        if ids.is_empty() {
            return Err(parse_err(path, "no labels"));
        }
        Ok(Self { ids, names })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?, path)
    }

    /// Re-maps these labels onto the id space of `names`, appending unseen
    /// names.
    pub fn aligned_to(&self, names: &[String]) -> Vec<usize> {
        let mut all = names.to_vec();
        self.ids
            .iter()
            .map(|&id| {
                let name = &self.names[id];
                match all.iter().position(|n| n == name) {
                    Some(i) => i,
                    None => {
                        all.push(name.clone());
                        all.len() - 1
                    }
                }
            })
            .collect()
    }
}

fn raw_numbers(values: impl IntoIterator<Item = f64>) -> Result<Box<RawValue>> {
    let parts: Vec<String> = values.into_iter().map(|v| format!("{v:.16e}")).collect();
    Ok(RawValue::from_string(format!("[{}]", parts.join(",")))?)
}

#[derive(Serialize)]
struct ModelOut<'a> {
    n: usize,
    d: usize,
    k: usize,
    eigenvalues: Box<RawValue>,
    /// Column-major `n × d`.
    p: Box<RawValue>,
    training_objective: f64,
    non_negative: usize,
    labels: &'a [String],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelIn {
    n: usize,
    d: usize,
    k: usize,
    eigenvalues: Vec<f64>,
    p: Vec<f64>,
    #[serde(default)]
    training_objective: f64,
    #[serde(default)]
    non_negative: usize,
    #[serde(default)]
    labels: Vec<String>,
}

/// Model JSON with every matrix entry and eigenvalue printed to 17
/// significant digits.
pub fn model_to_json(model: &DneModel, labels: &[String]) -> Result<String> {
    let out = ModelOut {
        n: model.input_dim(),
        d: model.output_dim(),
        k: model.k,
        eigenvalues: raw_numbers(model.eigenvalues.iter().copied())?,
        p: raw_numbers(model.p.iter().copied())?,
        training_objective: model.training_objective,
        non_negative: model.non_negative,
        labels,
    };
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    Ok(text)
}

pub fn model_from_json(text: &str, path: &Path) -> Result<(DneModel, Vec<String>)> {
    let m: ModelIn = serde_json::from_str(text).map_err(|e| parse_err(path, e.to_string()))?;
    if m.p.len() != m.n * m.d || m.eigenvalues.len() != m.d {
        return Err(parse_err(
            path,
            format!(
                "p has {} entries and {} eigenvalues for n = {}, d = {}",
                m.p.len(),
                m.eigenvalues.len(),
                m.n,
                m.d
            ),
        ));
    }
    let model = DneModel {
        p: DMatrix::from_column_slice(m.n, m.d, &m.p),
        eigenvalues: m.eigenvalues,
        k: m.k,
        training_objective: m.training_objective,
        non_negative: m.non_negative,
    };
    Ok((model, m.labels))
}

pub fn read_model(path: &Path) -> Result<(DneModel, Vec<String>)> {
    model_from_json(&read_text(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_csv_is_samples_by_rows() {
        let x = parse_feature_csv("# header comment\n1,2,3\n4,5,6\n", Path::new("f.csv")).unwrap();
        assert_eq!(x.shape(), (3, 2));
        assert_eq!(x[(2, 1)], 6.0);
        assert_eq!(parse_feature_csv(&feature_csv(&x), Path::new("g")).unwrap(), x);
        assert!(parse_feature_csv("1,2\n3\n", Path::new("f")).is_err());
        assert!(parse_feature_csv("1,x\n", Path::new("f")).is_err());
        assert!(parse_feature_csv("", Path::new("f")).is_err());
    }

    #[test]
    fn labels_by_first_appearance() {
        let l = Labels::parse("fear\nanger\nfear\nhappiness\n", Path::new("l")).unwrap();
        assert_eq!(l.ids, vec![0, 1, 0, 2]);
        assert_eq!(l.names, vec!["fear", "anger", "happiness"]);
        let other = Labels::parse("happiness\nfear\n", Path::new("l")).unwrap();
        assert_eq!(other.aligned_to(&l.names), vec![2, 0]);
    }

    #[test]
    fn model_round_trip_is_exact() {
        let p = DMatrix::from_fn(3, 2, |r, c| (r as f64 + 1.0) / (c as f64 + 3.0) + 1e-17 * r as f64);
        let model = DneModel {
            p,
            eigenvalues: vec![-std::f64::consts::PI, -1.0 / 3.0],
            k: 4,
            training_objective: -2.5,
            non_negative: 0,
        };
        let text = model_to_json(&model, &["a".into(), "b".into()]).unwrap();
        assert!(text.contains("-3.1415926535897931e0"));
        let (back, labels) = model_from_json(&text, Path::new("m")).unwrap();
        assert_eq!(back, model);
        assert_eq!(labels, vec!["a", "b"]);
    }
}

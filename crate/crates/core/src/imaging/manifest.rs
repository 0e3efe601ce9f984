use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ImagingError;

/// The six basic emotions, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionLabel {
    Happiness,
    Disgust,
    Fear,
    Surprise,
    Anger,
    Sadness,
}

impl EmotionLabel {
    pub const ALL: [EmotionLabel; 6] = [
        EmotionLabel::Happiness,
        EmotionLabel::Disgust,
        EmotionLabel::Fear,
        EmotionLabel::Surprise,
        EmotionLabel::Anger,
        EmotionLabel::Sadness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EmotionLabel::Happiness => "happiness",
            EmotionLabel::Disgust => "disgust",
            EmotionLabel::Fear => "fear",
            EmotionLabel::Surprise => "surprise",
            EmotionLabel::Anger => "anger",
            EmotionLabel::Sadness => "sadness",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EmotionLabel {
    type Err = ImagingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EmotionLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| ImagingError::UnknownEmotion(s.to_string()))
    }
}

/// One manifest entry: a reference frame with its landmarks, plus optional
/// later frames of the same sequence to be aligned onto it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub emotion: EmotionLabel,
    pub frame: PathBuf,
    pub landmarks: PathBuf,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sequence: Vec<PathBuf>,
}

impl SubjectRecord {
    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.frame);
        fix(&mut self.landmarks);
        self.sequence.iter_mut().for_each(fix);
    }

    fn validate(&self, position: usize) -> Result<(), ImagingError> {
        if self.subject_id.trim().is_empty() {
            return Err(ImagingError::InvalidManifest(format!(
                "record {position}: empty subject_id"
            )));
        }
        for p in std::iter::once(&self.frame)
            .chain(std::iter::once(&self.landmarks))
            .chain(&self.sequence)
        {
            if !p.is_file() {
                return Err(ImagingError::InvalidManifest(format!(
                    "record {position}: missing file {}",
                    p.display()
                )));
            }
        }
        Ok(())
    }
}

/// Parses a manifest JSON array. Relative paths are resolved against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<SubjectRecord>, ImagingError> {
    let mut records: Vec<SubjectRecord> =
        serde_json::from_str(text).map_err(|e| ImagingError::InvalidManifest(e.to_string()))?;
    if records.is_empty() {
        return Err(ImagingError::InvalidManifest("manifest has no records".into()));
    }
    for (i, r) in records.iter_mut().enumerate() {
        r.resolve(base);
        r.validate(i)?;
    }
    Ok(records)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<SubjectRecord>, ImagingError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| ImagingError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_manifest(&text, path.parent().unwrap_or_else(|| Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_strings() {
        for l in EmotionLabel::ALL {
            assert_eq!(l.as_str().parse::<EmotionLabel>().unwrap(), l);
            assert_eq!(serde_json::to_string(&l).unwrap(), format!("\"{l}\""));
        }
        assert!("neutral".parse::<EmotionLabel>().is_err());
        assert!("Happiness".parse::<EmotionLabel>().is_err());
    }

    #[test]
    fn manifest_resolves_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.pgm"), b"P2 1 1 255 0").unwrap();
        fs::write(dir.path().join("a.csv"), b"").unwrap();
        let text = r#"[{"subject_id":"s1","emotion":"fear","frame":"a.pgm","landmarks":"a.csv"}]"#;
        let recs = parse_manifest(text, dir.path()).unwrap();
        assert_eq!(recs[0].emotion, EmotionLabel::Fear);
        assert_eq!(recs[0].frame, dir.path().join("a.pgm"));

        let missing = r#"[{"subject_id":"s1","emotion":"fear","frame":"b.pgm","landmarks":"a.csv"}]"#;
        assert!(matches!(
            parse_manifest(missing, dir.path()),
            Err(ImagingError::InvalidManifest(_))
        ));
        let empty_id = r#"[{"subject_id":" ","emotion":"fear","frame":"a.pgm","landmarks":"a.csv"}]"#;
        assert!(parse_manifest(empty_id, dir.path()).is_err());
        let extra = r#"[{"subject_id":"s","emotion":"fear","frame":"a.pgm","landmarks":"a.csv","x":1}]"#;
        assert!(parse_manifest(extra, dir.path()).is_err());
        assert!(parse_manifest("[]", dir.path()).is_err());
    }
}

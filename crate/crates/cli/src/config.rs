use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use thermoface_core::cov::FpsConfig;
use thermoface_core::klt::TrackerConfig;
use thermoface_core::lpq::LpqConfig;
use thermoface_core::roi::{builtin_spec, builtin_specs, RoiSpec};

use crate::error::{CliError, Result};

/// A region given either by builtin name or as a full spec.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RoiEntry {
    Builtin(String),
    Custom(RoiSpec),
}

impl RoiEntry {
    pub fn resolve(&self) -> Result<RoiSpec> {
        match self {
            RoiEntry::Builtin(name) => Ok(builtin_spec(name)?),
            RoiEntry::Custom(spec) => {
                spec.validate()?;
                Ok(spec.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DneSettings {
    /// Also evaluate the LPQ-on-ROI features with a DNE embedding.
    pub enabled: bool,
    pub k: usize,
    pub d: Option<usize>,
}

impl Default for DneSettings {
    fn default() -> Self {
        Self {
            enabled: false,
            k: 5,
            d: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub tracker: TrackerConfig,
    /// Features detected on the reference frame and tracked for alignment.
    pub max_features: usize,
    pub fps: FpsConfig,
    pub roi: Vec<RoiEntry>,
    pub dne: DneSettings,
    pub lpq: LpqConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tracker: TrackerConfig::default(),
            max_features: 40,
            fps: FpsConfig::default(),
            roi: builtin_specs().into_iter().map(|s| RoiEntry::Builtin(s.name)).collect(),
            dne: DneSettings::default(),
            lpq: LpqConfig::default(),
            seed: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config: Self =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.tracker.validate()?;
        self.fps.validate()?;
        self.lpq.validate()?;
        if self.max_features == 0 {
            return Err(CliError::Config("max_features must be at least 1".into()));
        }
        if self.dne.k == 0 {
            return Err(CliError::Config("dne.k must be at least 1".into()));
        }
        if self.dne.d == Some(0) {
            return Err(CliError::Config("dne.d must be at least 1 when given".into()));
        }
        self.roi_specs()?;
        Ok(())
    }

    pub fn roi_specs(&self) -> Result<Vec<RoiSpec>> {
        self.roi.iter().map(RoiEntry::resolve).collect()
    }
}

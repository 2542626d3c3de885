//! Pipeline configuration, read from and written to TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::ablation::AblationConfig;
use crate::classifier::cv::default_grid;
use crate::classifier::Hyperparams;
use crate::consolidation::ConsolidationParams;
use crate::error::{Error, Result};
use crate::surfacing::{ScribbleClusterParams, SurfacingParams};
use crate::topology::DEFAULT_CONNECT_COEFFICIENT;

/// Bumped whenever a key is renamed or removed.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopologyParams {
    /// Curves closer than this many minimum ink widths are connected.
    pub connect_coefficient: f64,
}

impl Default for TopologyParams {
    fn default() -> Self {
        TopologyParams {
            connect_coefficient: DEFAULT_CONNECT_COEFFICIENT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierParams {
    pub folds: usize,
    pub test_fraction: f64,
    pub grid: Vec<Hyperparams>,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            folds: 5,
            test_fraction: 0.2,
            grid: default_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub version: u32,
    pub seed: u64,
    pub classifier: ClassifierParams,
    pub consolidation: ConsolidationParams,
    pub topology: TopologyParams,
    pub scribble: ScribbleClusterParams,
    pub surfacing: SurfacingParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            version: CONFIG_VERSION,
            seed: 0,
            classifier: ClassifierParams::default(),
            consolidation: ConsolidationParams::default(),
            topology: TopologyParams::default(),
            scribble: ScribbleClusterParams::default(),
            surfacing: SurfacingParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        let positive = [
            ("consolidation.match_coefficient", self.consolidation.match_coefficient),
            ("topology.connect_coefficient", self.topology.connect_coefficient),
            ("scribble.box_scale", self.scribble.box_scale),
            ("scribble.score.match_coefficient", self.scribble.score.match_coefficient),
            ("surfacing.cycles.projection_widths", self.surfacing.cycles.projection_widths),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{key} must be positive, got {v}")));
            }
        }
        for (key, [lo, hi]) in [
            ("consolidation.epsilon_range", self.consolidation.epsilon_range),
            ("scribble.epsilon_range", self.scribble.epsilon_range),
        ] {
            if !(lo > 0.0 && lo <= hi) {
                return Err(Error::Config(format!("{key} must satisfy 0 < lo <= hi")));
            }
        }
        for (key, v) in [
            ("surfacing.cycles.min_coverage", self.surfacing.cycles.min_coverage),
            ("surfacing.verify_fraction", self.surfacing.verify_fraction),
            ("consolidation.branch_ratio", self.consolidation.branch_ratio),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{key} must lie in [0, 1], got {v}")));
            }
        }
        if self.surfacing.cycles.max_edges < 3 {
            return Err(Error::Config("surfacing.cycles.max_edges must be at least 3".into()));
        }
        Ok(())
    }

    pub fn ablation(&self) -> AblationConfig {
        AblationConfig {
            grid: self.classifier.grid.clone(),
            folds: self.classifier.folds,
            test_fraction: self.classifier.test_fraction,
            seed: self.seed,
        }
    }
}

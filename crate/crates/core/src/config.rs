//! Run configuration: ingestion, pipeline, and synthetic-corpus settings,
//! loadable from TOML or JSON.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::calibration::{AnchorMode, LabelTieBreak, ParamBounds, Style};
use crate::data::IngestConfig;
use crate::error::{Error, Result};
use crate::features::FEATURE_COUNT;
use crate::idm::ComparisonInstants;
use crate::synth::SynthConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Worker threads for pair-level parallelism; 0 = available parallelism.
    pub workers: usize,
    /// Minimum car-following episode duration, s.
    pub min_pair_duration_s: f64,
    /// Offline share of the pair split.
    pub split_fraction: f64,
    /// Feature window from the start of each episode, s.
    pub feature_window_s: f64,
    /// Principal components kept for clustering and recognition.
    pub n_components: usize,
    /// Cluster count (the elbow scan is reported; this value is used).
    pub k: usize,
    pub kmeans_restarts: usize,
    /// Elbow scan covers 1..=elbow_k_max.
    pub elbow_k_max: usize,
    /// Total objective evaluations per calibration.
    pub calibration_budget: u64,
    pub calibration_starts: usize,
    pub bounds: ParamBounds,
    /// Likelihood noise std for method 2, m/s^2.
    pub sigma: f64,
    /// Sigma sweep grid, m/s^2.
    pub sigma_grid: Vec<f64>,
    /// Observation durations for the sigma sweep, s.
    pub sigma_sweep_t_durs: Vec<f64>,
    /// Observation durations for the benchmark curves, s.
    pub t_dur_grid: Vec<f64>,
    pub rmse_instants: ComparisonInstants,
    pub anchor: AnchorMode,
    /// What to do when the rank-based style labeling ties.
    pub label_tie_break: LabelTieBreak,
    /// Manual cluster -> style assignments, overriding the parameter-rank
    /// labeling (needed when it reports a tie).
    pub style_overrides: Option<BTreeMap<usize, Style>>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            workers: 0,
            min_pair_duration_s: 15.0,
            split_fraction: 0.8,
            feature_window_s: 15.0,
            n_components: 2,
            k: 3,
            kmeans_restarts: 20,
            elbow_k_max: 10,
            calibration_budget: 4000,
            calibration_starts: 16,
            bounds: ParamBounds::default(),
            sigma: 0.15,
            sigma_grid: (1..=20).map(|i| i as f64 * 0.01).collect(),
            sigma_sweep_t_durs: vec![0.5, 2.0, 5.0],
            t_dur_grid: vec![0.1, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0, 10.0],
            rmse_instants: ComparisonInstants::WholeSeconds,
            anchor: AnchorMode::FeatureWindowEnd,
            label_tie_break: LabelTieBreak::default(),
            style_overrides: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::config(format!(
                "split_fraction must be in (0, 1), got {}",
                self.split_fraction
            )));
        }
        if self.n_components == 0 || self.n_components > FEATURE_COUNT {
            return Err(Error::config(format!(
                "n_components must be in 1..={FEATURE_COUNT}, got {}",
                self.n_components
            )));
        }
        if self.k == 0 {
            return Err(Error::config("k must be at least 1"));
        }
        if self.feature_window_s <= 0.0 || self.min_pair_duration_s <= 0.0 {
            return Err(Error::config("windows and durations must be positive"));
        }
        if !(self.sigma > 0.0 && self.sigma <= 0.5) {
            return Err(Error::config(format!(
                "sigma must lie in (0, 0.5], got {}",
                self.sigma
            )));
        }
        if self.t_dur_grid.is_empty() {
            return Err(Error::config("t_dur_grid must not be empty"));
        }
        if self.t_dur_grid.iter().any(|t| *t < 0.1) {
            return Err(Error::config("every t_dur must be at least 0.1 s"));
        }
        if self.sigma_grid.iter().any(|s| *s <= 0.0) {
            return Err(Error::config("sigma grid values must be positive"));
        }
        self.bounds.validate()?;
        Ok(())
    }
}

/// Top-level configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub ingest: IngestConfig,
    pub pipeline: PipelineConfig,
    pub synth: SynthConfig,
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        self.synth.validate()?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config =
            serde_json::from_str(text).map_err(|e| Error::config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[cfg(not(target_arch = "wasm32"))]
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config =
            toml::from_str(text).map_err(|e| Error::config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads TOML or JSON depending on the file extension.
    #[cfg(not(target_arch = "wasm32"))]
    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            Some("toml") | None => Self::from_toml(&text),
            Some(other) => Err(Error::config(format!(
                "unsupported config extension '{other}' (use .toml or .json)"
            ))),
        }
    }

    #[cfg(not(target_arch = "wasm32"))]
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

//! Experiment configuration file.

use std::path::Path;

use gibbs_bounds::estimate::Statistic;
use gibbs_bounds::model::{ModelSpec, PairwiseModel, Window};
use gibbs_bounds::simulate::{Sampler, DEFAULT_MAX_EVENTS};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Mh,
    Dcftp,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatisticKind {
    #[serde(rename = "intensity")]
    Intensity,
    #[serde(rename = "F", alias = "f")]
    F,
    #[serde(rename = "G", alias = "g")]
    G,
    #[serde(rename = "K", alias = "k")]
    K,
    #[serde(rename = "pcf")]
    Pcf,
}

impl StatisticKind {
    pub fn name(self) -> &'static str {
        match self {
            StatisticKind::Intensity => "intensity",
            StatisticKind::F => "F",
            StatisticKind::G => "G",
            StatisticKind::K => "K",
            StatisticKind::Pcf => "pcf",
        }
    }
}

/// Evenly spaced grid `min, ..., max` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.max } else { self.min + step * i as f64 })
            .collect()
    }
}

fn default_steps() -> u64 {
    100_000
}

fn default_replicates() -> usize {
    100
}

fn default_sampler() -> SamplerKind {
    SamplerKind::Dcftp
}

fn default_max_events() -> u64 {
    DEFAULT_MAX_EVENTS
}

fn default_statistic() -> StatisticKind {
    StatisticKind::Intensity
}

/// One experiment: a model, the window statistics refer to, and a replicate plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub window: Window,
    #[serde(default = "default_sampler")]
    pub sampler: SamplerKind,
    /// Metropolis–Hastings steps per replicate.
    #[serde(default = "default_steps")]
    pub steps: u64,
    #[serde(default = "default_replicates")]
    pub n_replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub t_grid: Option<GridSpec>,
    #[serde(default = "default_statistic")]
    pub statistic: StatisticKind,
    /// Dominating-event cap for dCFTP.
    #[serde(default = "default_max_events")]
    pub max_events: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.model.d != self.window.dim() {
            return Err(CliError::Usage(format!(
                "invalid config: model dimension {} differs from window dimension {}",
                self.model.d,
                self.window.dim()
            )));
        }
        if self.n_replicates == 0 {
            return Err(CliError::Usage("invalid config: n_replicates must be at least 1".into()));
        }
        if let Some(g) = self.t_grid {
            if g.count < 2 {
                return Err(CliError::Usage("invalid config: t_grid.count must be at least 2".into()));
            }
            if !(g.min.is_finite() && g.max.is_finite() && g.min >= 0.0 && g.max > g.min) {
                return Err(CliError::Usage(
                    "invalid config: t_grid needs 0 <= min < max".into(),
                ));
            }
        }
        if self.statistic != StatisticKind::Intensity && self.t_grid.is_none() {
            return Err(CliError::Usage(format!(
                "invalid config: statistic {} needs a t_grid",
                self.statistic.name()
            )));
        }
        Ok(())
    }

    /// Builds the model; a non-inhibitory interaction surfaces here.
    pub fn model(&self) -> Result<PairwiseModel, CliError> {
        Ok(PairwiseModel::from_spec(&self.model)?)
    }

    pub fn grid(&self) -> Vec<f64> {
        self.t_grid.map(|g| g.values()).unwrap_or_default()
    }

    pub fn sampler(&self) -> Sampler {
        match self.sampler {
            SamplerKind::Mh => Sampler::Mh { steps: self.steps },
            SamplerKind::Dcftp => Sampler::Dcftp {
                max_events: self.max_events,
            },
            SamplerKind::Poisson => Sampler::Poisson,
        }
    }

    /// The estimator behind `statistic`; the pair correlation function has bounds only.
    pub fn estimator(&self) -> Result<Statistic, CliError> {
        let t = self.grid();
        Ok(match self.statistic {
            StatisticKind::Intensity => Statistic::Intensity,
            StatisticKind::F => Statistic::F(t),
            StatisticKind::G => Statistic::G(t),
            StatisticKind::K => Statistic::K(t),
            StatisticKind::Pcf => {
                return Err(CliError::Usage(
                    "the pair correlation function has bounds but no estimator".into(),
                ))
            }
        })
    }
}

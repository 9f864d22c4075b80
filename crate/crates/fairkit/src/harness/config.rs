//! Experiment configuration: a TOML document describing the data source,
//! model grid, cross-validation layout, protected attributes, and the
//! mitigation methods to run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cohort::{Cohort, Schema};
use crate::error::{Error, Result};
use crate::mitigation::MitigationMethod;
use crate::models::{GbtConfig, LogisticConfig, ModelConfig, ModelKind, SelectionMetric};
use crate::synth::CohortSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataSource {
    Csv { csv: PathBuf, schema: PathBuf },
    Synthetic { synthetic: CohortSpec },
}

fn default_l2() -> Vec<f64> {
    vec![1e-3, 1e-1, 1e1]
}
fn default_rounds() -> Vec<usize> {
    vec![50, 200]
}
fn default_depth() -> Vec<usize> {
    vec![2, 4]
}
fn default_learning_rate() -> Vec<f64> {
    vec![0.1, 0.3]
}
fn default_metric() -> String {
    "bacc".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSettings {
    pub kind: ModelKind,
    /// Logistic grid: one candidate per l2 strength.
    #[serde(default = "default_l2")]
    pub l2: Vec<f64>,
    /// GBT grid: full cross product of rounds, depth, and learning rate.
    #[serde(default = "default_rounds")]
    pub rounds: Vec<usize>,
    #[serde(default = "default_depth")]
    pub depth: Vec<usize>,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: Vec<f64>,
    #[serde(default = "default_metric")]
    pub selection_metric: String,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            kind: ModelKind::Logistic,
            l2: default_l2(),
            rounds: default_rounds(),
            depth: default_depth(),
            learning_rate: default_learning_rate(),
            selection_metric: default_metric(),
        }
    }
}

impl ModelSettings {
    pub fn grid(&self) -> Result<Vec<ModelConfig<f64>>> {
        let grid: Vec<ModelConfig<f64>> = match self.kind {
            ModelKind::Logistic => self
                .l2
                .iter()
                .map(|&l2| {
                    ModelConfig::Logistic(LogisticConfig {
                        l2_strength: l2,
                        ..Default::default()
                    })
                })
                .collect(),
            ModelKind::Gbt => {
                let mut grid = Vec::new();
                for &rounds in &self.rounds {
                    for &depth in &self.depth {
                        for &lr in &self.learning_rate {
                            grid.push(ModelConfig::Gbt(GbtConfig {
                                rounds,
                                max_depth: depth,
                                learning_rate: lr,
                                ..Default::default()
                            }));
                        }
                    }
                }
                grid
            }
        };
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        Ok(grid)
    }

    pub fn metric(&self) -> Result<SelectionMetric> {
        match self.selection_metric.as_str() {
            "bacc" => Ok(SelectionMetric::BAcc),
            "auc" => Ok(SelectionMetric::Auc),
            other => Err(Error::InvalidConfig(format!(
                "selection_metric must be 'bacc' or 'auc', got '{other}'"
            ))),
        }
    }
}

fn default_repair_level() -> f64 {
    1.0
}
fn default_grid_step() -> f64 {
    0.01
}
fn default_threshold() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MitigationSpec {
    pub method: MitigationMethod,
    /// DIR repair level lambda in [0, 1].
    #[serde(default = "default_repair_level")]
    pub repair_level: f64,
    /// PSTA sweep resolution.
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    #[serde(default = "default_threshold")]
    pub default_threshold: f64,
    /// PSTA explicit unprivileged levels; absent means auto-detection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unprivileged: Option<Vec<String>>,
}

impl MitigationSpec {
    pub fn of(method: MitigationMethod) -> Self {
        MitigationSpec {
            method,
            repair_level: default_repair_level(),
            grid_step: default_grid_step(),
            default_threshold: default_threshold(),
            unprivileged: None,
        }
    }
}

fn default_seed() -> u64 {
    0
}
fn default_k_outer() -> usize {
    10
}
fn default_k_inner() -> usize {
    3
}
fn default_alpha() -> f64 {
    0.05
}
fn default_band() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    #[serde(default)]
    pub model: ModelSettings,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_k_outer")]
    pub k_outer: usize,
    #[serde(default = "default_k_inner")]
    pub k_inner: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_band")]
    pub fair_band: f64,
    pub protected: Vec<String>,
    #[serde(default)]
    pub mitigation: Vec<MitigationSpec>,
    /// Fit post-processing policies on in-sample training predictions
    /// instead of the default out-of-fold inner-CV predictions.
    #[serde(default)]
    pub post_fit_in_sample: bool,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = toml::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_outer < 2 {
            return Err(Error::InvalidConfig(format!(
                "k_outer must be at least 2, got {}",
                self.k_outer
            )));
        }
        if self.k_inner < 2 {
            return Err(Error::InvalidConfig(format!(
                "k_inner must be at least 2, got {}",
                self.k_inner
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.fair_band > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "fair_band must be positive, got {}",
                self.fair_band
            )));
        }
        if self.protected.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one protected attribute is required".into(),
            ));
        }
        for spec in &self.mitigation {
            if !(0.0..=1.0).contains(&spec.repair_level) {
                return Err(Error::BadLambda(spec.repair_level));
            }
            if !(spec.grid_step > 0.0 && spec.grid_step <= 0.5) {
                return Err(Error::InvalidConfig(format!(
                    "grid_step must be in (0, 0.5], got {}",
                    spec.grid_step
                )));
            }
        }
        self.model.grid()?;
        self.model.metric()?;
        if let DataSource::Synthetic { synthetic } = &self.data {
            synthetic.validate()?;
        }
        Ok(())
    }

    /// Loads or generates the cohort described by the data source.
    pub fn load_cohort(&self) -> Result<Cohort> {
        match &self.data {
            DataSource::Csv { csv, schema } => {
                let text = std::fs::read_to_string(schema)?;
                let schema: Schema = toml::from_str(&text)?;
                schema.validate()?;
                Cohort::load_csv(csv, &schema)
            }
            DataSource::Synthetic { synthetic } => crate::synth::generate_cohort(synthetic),
        }
    }
}

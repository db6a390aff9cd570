//! Pipeline orchestration behind the `wmad` binary: dataset generation,
//! training (main model plus ensemble members), scoring, evaluation, and
//! report rendering, all rooted in a single output directory.

pub mod pipeline;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use wmad_core::eval::EvalError;
use wmad_core::score::ScoreError;
use wmad_core::sim::dataset::DatasetSpec;
use wmad_core::sim::SimError;
use wmad_core::train::{TrainConfig, TrainError};
use wmad_core::wm::ModelConfig;

/// Failures split by exit code: bad inputs (2) vs everything after
/// validation (3).
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) => CliError::Validation(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(_) | TrainError::ConfigConflict(_) => {
                CliError::Validation(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<wmad_core::wm::WmError> for CliError {
    fn from(e: wmad_core::wm::WmError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Extra ensemble members for the disagreement scorer, trained like the main
/// model from different seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    /// Total member count including the main model.
    pub members: usize,
    /// Optimization steps per extra member.
    pub steps: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            members: 4,
            steps: 20_000,
        }
    }
}

/// Scorer knobs shared by the score stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoreParams {
    /// Observed frames before prediction starts.
    pub context: usize,
    /// Predicted frames per episode.
    pub horizon: usize,
    /// Sampled futures per prediction.
    pub samples: usize,
    /// Shrinkage added to per-dimension latent variances.
    pub lambda: f64,
    pub seed: u64,
}

impl Default for ScoreParams {
    fn default() -> Self {
        ScoreParams {
            context: 20,
            horizon: 15,
            samples: 8,
            lambda: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalParams {
    pub n_boot: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            n_boot: 200,
            confidence: 0.95,
            seed: 0,
        }
    }
}

/// One configuration file drives every stage; each section falls back to its
/// defaults when omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub dataset: DatasetSpec,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub ensemble: EnsembleConfig,
    pub score: ScoreParams,
    pub eval: EvalParams,
}

impl Default for PipelineConfig {
    /// Full benchmark scale: 2000 normal training episodes, 100 anomalous
    /// eval episodes per corner-case level (negative frames come from the
    /// normal stretches of those episodes), 20 000 optimization steps.
    fn default() -> Self {
        PipelineConfig {
            dataset: DatasetSpec {
                n_train: 2000,
                n_eval_normal: 0,
                n_eval_per_level: 100,
                ..DatasetSpec::default()
            },
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            ensemble: EnsembleConfig::default(),
            score: ScoreParams::default(),
            eval: EvalParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }

    /// Apply a command-line seed to every stage that draws randomness.
    pub fn override_seed(&mut self, seed: u64) {
        self.dataset.seed = seed;
        self.train.seed = seed;
        self.score.seed = seed;
        self.eval.seed = seed;
    }
}

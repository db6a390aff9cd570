//! Deterministic driving simulator: kinematics, planning, rendering, anomaly
//! injection, and dataset construction.

pub mod dataset;
pub mod dynamics;
pub mod episode;
pub mod inject;
pub mod planner;
pub mod registry;
pub mod render;
pub mod types;

pub use dataset::{build_dataset, DatasetManifest, DatasetSpec, ManifestEntry};
pub use dynamics::step_dynamics;
pub use episode::generate_episode;
pub use inject::{inject_anomaly, InjectionDescriptor, TrainAttributes};
pub use planner::{plan_actions, pursuit_action, Route};
pub use render::{render_observation, Scene};
pub use types::{
    hex_digest, Action, ActorState, EpisodeRecord, FrameLabel, Level, Limits, Observation,
    WorldConfig,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("planning failed: {0}")]
    Planning(String),
    #[error("episode generation failed: {0}")]
    Generation(String),
    #[error("anomaly injection failed: {0}")]
    Injection(String),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error(transparent)]
    Container(#[from] crate::container::ContainerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

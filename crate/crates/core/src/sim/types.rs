//! Domain types of the driving environment.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Physical state of a vehicle. The world is 2D: z, roll, and pitch are
/// carried in the type but pinned to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActorState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub v: f64,
    pub acc: f64,
    pub steering: f64,
}

impl ActorState {
    pub fn at(x: f64, y: f64, yaw: f64, v: f64) -> Self {
        ActorState {
            x,
            y,
            z: 0.0,
            roll: 0.0,
            pitch: 0.0,
            yaw,
            v,
            acc: 0.0,
            steering: 0.0,
        }
    }

    pub fn to_array(&self) -> [f64; 9] {
        [
            self.x,
            self.y,
            self.z,
            self.roll,
            self.pitch,
            self.yaw,
            self.v,
            self.acc,
            self.steering,
        ]
    }

    pub fn from_array(a: [f64; 9]) -> Self {
        ActorState {
            x: a[0],
            y: a[1],
            z: a[2],
            roll: a[3],
            pitch: a[4],
            yaw: a[5],
            v: a[6],
            acc: a[7],
            steering: a[8],
        }
    }
}

/// Acceleration (m/s^2) and steering angle (rad), right-negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub acc: f64,
    pub steering: f64,
}

impl Action {
    pub const ZERO: Action = Action {
        acc: 0.0,
        steering: 0.0,
    };
}

/// Kinematic limits shared by all vehicles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub v_max: f64,
    pub delta_max: f64,
    pub acc_max: f64,
    pub wheelbase: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            v_max: 5.0,
            delta_max: 0.5,
            acc_max: 2.0,
            wheelbase: 1.0,
        }
    }
}

/// Normality attributes plus grid/episode geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    /// Road-layout template id.
    pub region: u32,
    /// Surface-noise amplitude in [0, 1].
    pub weather: f64,
    /// Contrast factor in [0, 1].
    pub time_of_day: f64,
    /// Allowed static-object class ids.
    pub objects: Vec<u32>,
    /// Allowed dynamic-actor class ids.
    pub actors: Vec<u32>,
    /// Allowed behavior-policy ids.
    pub behaviors: Vec<u32>,
    /// Grid side length G.
    pub grid_size: usize,
    /// Channel count C (road, dynamic actors, static objects).
    pub channels: usize,
    /// Cell edge in meters.
    pub cell_size: f64,
    /// Episode length L in frames.
    pub episode_len: usize,
    /// Step time in seconds.
    pub dt: f64,
    /// Number of scripted traffic actors.
    pub n_traffic: usize,
    pub limits: Limits,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            region: 0,
            weather: 0.0,
            time_of_day: 1.0,
            objects: vec![0, 1, 2],
            actors: vec![0, 1],
            behaviors: vec![0, 1],
            grid_size: 16,
            channels: 3,
            cell_size: 1.0,
            episode_len: 100,
            dt: 0.1,
            n_traffic: 3,
            limits: Limits::default(),
        }
    }
}

impl WorldConfig {
    /// SHA-256 of the canonical JSON serialization, hex-encoded.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex_digest(&json)
    }

    pub fn obs_dim(&self) -> usize {
        self.channels * self.grid_size * self.grid_size
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    d.iter().map(|b| format!("{b:02x}")).collect()
}

/// Corner-case level of an injected anomaly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Domain,
    Object,
    Scene,
    Scenario,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::Domain, Level::Object, Level::Scene, Level::Scenario];

    pub fn tag(&self) -> u8 {
        match self {
            Level::Domain => 1,
            Level::Object => 2,
            Level::Scene => 3,
            Level::Scenario => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Level> {
        match tag {
            1 => Some(Level::Domain),
            2 => Some(Level::Object),
            3 => Some(Level::Scene),
            4 => Some(Level::Scenario),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Level::Domain => "domain",
            Level::Object => "object",
            Level::Scene => "scene",
            Level::Scenario => "scenario",
        }
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-frame anomaly annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLabel {
    pub level: Option<Level>,
    /// Covered-cell mask, present only for object/scene levels.
    pub mask: Option<Vec<bool>>,
}

impl FrameLabel {
    pub const NORMAL: FrameLabel = FrameLabel {
        level: None,
        mask: None,
    };

    pub fn is_anomalous(&self) -> bool {
        self.level.is_some()
    }
}

/// Ego-centric multi-channel occupancy grid, channel-major, values in [0, 1].
///
/// Values are rounded through f32 at render time so in-memory grids match
/// their on-disk representation bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub channels: usize,
    pub grid_size: usize,
    pub data: Vec<f64>,
}

impl Observation {
    pub fn zeros(channels: usize, grid_size: usize) -> Self {
        Observation {
            channels,
            grid_size,
            data: vec![0.0; channels * grid_size * grid_size],
        }
    }

    pub fn at(&self, c: usize, row: usize, col: usize) -> f64 {
        self.data[(c * self.grid_size + row) * self.grid_size + col]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Time-aligned sequences of one simulated episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub observations: Vec<Observation>,
    pub actions: Vec<Action>,
    pub actor_states: Vec<ActorState>,
    pub labels: Vec<FrameLabel>,
    pub seed: u64,
    pub cfg_digest: String,
}

impl EpisodeRecord {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

//! Corner-case injection: derive an evaluation configuration plus a
//! descriptor of what/where/when from a normal configuration.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::planner::Route;
use super::registry::{
    self, ANOMALOUS_BEHAVIORS, ANOMALY_TODS, ANOMALY_WEATHERS, HELD_OUT_REGIONS, UNKNOWN_OBJECTS,
};
use super::render::{road_entities, Scene};
use super::types::{Level, WorldConfig};
use super::SimError;
use crate::rng::substream;

/// Attribute value sets that define normality across the whole training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainAttributes {
    pub regions: Vec<u32>,
    pub weathers: Vec<f64>,
    pub time_of_days: Vec<f64>,
    pub objects: Vec<u32>,
    pub actors: Vec<u32>,
    pub behaviors: Vec<u32>,
}

impl TrainAttributes {
    pub fn defaults() -> Self {
        TrainAttributes {
            regions: registry::TRAIN_REGIONS.to_vec(),
            weathers: vec![0.0, 0.05],
            time_of_days: vec![1.0, 0.9],
            objects: registry::TRAIN_OBJECTS.to_vec(),
            actors: registry::TRAIN_ACTORS.to_vec(),
            behaviors: registry::TRAIN_BEHAVIORS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainAttribute {
    Region,
    Weather,
    TimeOfDay,
}

/// Record of an injected anomaly: enough to realize it during generation,
/// label frames, and machine-check train/eval disjointness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "level", rename_all = "lowercase")]
pub enum InjectionDescriptor {
    Domain {
        attribute: DomainAttribute,
        region: Option<u32>,
        weather: Option<f64>,
        time_of_day: Option<f64>,
    },
    Object {
        class_id: u32,
        x: f64,
        y: f64,
        yaw: f64,
    },
    Scene {
        class_id: u32,
        x: f64,
        y: f64,
        yaw: f64,
    },
    Scenario {
        actor_index: usize,
        behavior: u32,
        activation_frame: usize,
        duration: usize,
    },
}

impl InjectionDescriptor {
    pub fn level(&self) -> Level {
        match self {
            InjectionDescriptor::Domain { .. } => Level::Domain,
            InjectionDescriptor::Object { .. } => Level::Object,
            InjectionDescriptor::Scene { .. } => Level::Scene,
            InjectionDescriptor::Scenario { .. } => Level::Scenario,
        }
    }
}

/// Seeded spawn layout shared between injection and episode generation so an
/// injector can place anomalies relative to where the ego will start.
#[derive(Debug, Clone)]
pub struct SpawnPlan {
    pub ego_arc: f64,
    /// (arc position, actor class id, behavior id) per traffic actor.
    pub traffic: Vec<(f64, u32, u32)>,
}

pub fn spawn_plan(cfg: &WorldConfig, seed: u64) -> Result<SpawnPlan, SimError> {
    let template = registry::region(cfg.region)
        .ok_or_else(|| SimError::Config(format!("unknown region id {}", cfg.region)))?;
    let route = template.route();
    let total = route.total_len();
    let needed = 7.0 + 5.0 * cfg.n_traffic as f64;
    if cfg.n_traffic > 0 && needed > total {
        return Err(SimError::Generation(format!(
            "no free space to spawn {} traffic actors on a {total:.1} m route",
            cfg.n_traffic
        )));
    }
    let mut rng = substream(seed, "spawn", 0);
    let ego_arc = rng.gen::<f64>() * total;
    let mut traffic = Vec::with_capacity(cfg.n_traffic);
    for k in 0..cfg.n_traffic {
        let class = if cfg.actors.is_empty() {
            0
        } else {
            cfg.actors[rng.gen_range(0..cfg.actors.len())]
        };
        let behavior = if cfg.behaviors.is_empty() {
            registry::BEHAVIOR_FOLLOW
        } else {
            cfg.behaviors[rng.gen_range(0..cfg.behaviors.len())]
        };
        let jitter = rng.gen::<f64>() * 2.0;
        traffic.push((ego_arc + 5.0 + 5.0 * k as f64 + jitter, class, behavior));
    }
    Ok(SpawnPlan { ego_arc, traffic })
}

/// Route-frame position: point at `arc` displaced `lateral` to the left of
/// the route tangent.
fn offset_point(route: &Route, arc: f64, lateral: f64) -> (f64, f64) {
    let (x, y) = route.point_at(arc);
    let h = route.heading_at(arc);
    (x - lateral * h.sin(), y + lateral * h.cos())
}

/// Pick an out-of-training-set anomaly of the requested level.
///
/// Returns the (possibly modified) evaluation configuration plus the
/// injection descriptor. `seed` must equal the seed later passed to episode
/// generation so positions line up with the ego spawn.
pub fn inject_anomaly(
    cfg: &WorldConfig,
    level: Level,
    seed: u64,
    train: &TrainAttributes,
) -> Result<(WorldConfig, InjectionDescriptor), SimError> {
    let mut rng = substream(seed, "inject", 0);
    match level {
        Level::Domain => {
            let regions: Vec<u32> = HELD_OUT_REGIONS
                .iter()
                .copied()
                .filter(|r| !train.regions.contains(r))
                .collect();
            let weathers: Vec<f64> = ANOMALY_WEATHERS
                .iter()
                .copied()
                .filter(|w| !train.weathers.contains(w))
                .collect();
            let tods: Vec<f64> = ANOMALY_TODS
                .iter()
                .copied()
                .filter(|t| !train.time_of_days.contains(t))
                .collect();
            let mut groups = Vec::new();
            if !regions.is_empty() {
                groups.push(DomainAttribute::Region);
            }
            if !weathers.is_empty() {
                groups.push(DomainAttribute::Weather);
            }
            if !tods.is_empty() {
                groups.push(DomainAttribute::TimeOfDay);
            }
            if groups.is_empty() {
                return Err(SimError::Injection(
                    "no out-of-set domain attribute value available".into(),
                ));
            }
            let attribute = groups[rng.gen_range(0..groups.len())];
            let mut cfg2 = cfg.clone();
            let mut desc = InjectionDescriptor::Domain {
                attribute,
                region: None,
                weather: None,
                time_of_day: None,
            };
            if let InjectionDescriptor::Domain {
                region,
                weather,
                time_of_day,
                ..
            } = &mut desc
            {
                match attribute {
                    DomainAttribute::Region => {
                        let r = regions[rng.gen_range(0..regions.len())];
                        cfg2.region = r;
                        *region = Some(r);
                    }
                    DomainAttribute::Weather => {
                        let w = weathers[rng.gen_range(0..weathers.len())];
                        cfg2.weather = w;
                        *weather = Some(w);
                    }
                    DomainAttribute::TimeOfDay => {
                        let t = tods[rng.gen_range(0..tods.len())];
                        cfg2.time_of_day = t;
                        *time_of_day = Some(t);
                    }
                }
            }
            Ok((cfg2, desc))
        }
        Level::Object => {
            let classes: Vec<u32> = UNKNOWN_OBJECTS
                .iter()
                .copied()
                .filter(|c| !train.objects.contains(c) && !cfg.objects.contains(c))
                .collect();
            if classes.is_empty() {
                return Err(SimError::Injection(
                    "no unknown object class available".into(),
                ));
            }
            let class_id = classes[rng.gen_range(0..classes.len())];
            let template = registry::region(cfg.region)
                .ok_or_else(|| SimError::Config(format!("unknown region id {}", cfg.region)))?;
            let route = template.route();
            let plan = spawn_plan(cfg, seed)?;
            let arc = plan.ego_arc + 6.0 + rng.gen::<f64>() * 8.0;
            let lateral = rng.gen::<f64>() * 2.0 - 1.0;
            let (x, y) = offset_point(&route, arc, lateral);
            let yaw = rng.gen::<f64>() * std::f64::consts::TAU;
            Ok((cfg.clone(), InjectionDescriptor::Object { class_id, x, y, yaw }))
        }
        Level::Scene => {
            if cfg.objects.is_empty() {
                return Err(SimError::Injection(
                    "no allowed object class to misplace".into(),
                ));
            }
            let class_id = cfg.objects[rng.gen_range(0..cfg.objects.len())];
            let template = registry::region(cfg.region)
                .ok_or_else(|| SimError::Config(format!("unknown region id {}", cfg.region)))?;
            let route = template.route();
            let scene = Scene {
                entities: road_entities(&template),
            };
            let plan = spawn_plan(cfg, seed)?;
            for _ in 0..100 {
                let arc = plan.ego_arc + 6.0 + rng.gen::<f64>() * 8.0;
                let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let lateral = side * (template.road_width / 2.0 + 1.0 + rng.gen::<f64>() * 1.5);
                let (x, y) = offset_point(&route, arc, lateral);
                let off_road = !scene.on_road(x, y);
                let clear_of_sites = template
                    .object_sites
                    .iter()
                    .all(|&(sx, sy)| ((x - sx).powi(2) + (y - sy).powi(2)).sqrt() > 2.5);
                if off_road && clear_of_sites {
                    let yaw = rng.gen::<f64>() * std::f64::consts::TAU;
                    return Ok((cfg.clone(), InjectionDescriptor::Scene { class_id, x, y, yaw }));
                }
            }
            Err(SimError::Injection(
                "could not find an off-road placement".into(),
            ))
        }
        Level::Scenario => {
            let behaviors: Vec<u32> = ANOMALOUS_BEHAVIORS
                .iter()
                .copied()
                .filter(|b| !train.behaviors.contains(b) && !cfg.behaviors.contains(b))
                .collect();
            if behaviors.is_empty() {
                return Err(SimError::Injection(
                    "no out-of-set behavior available".into(),
                ));
            }
            if cfg.n_traffic == 0 {
                return Err(SimError::Injection(
                    "scenario injection needs at least one traffic actor".into(),
                ));
            }
            let behavior = behaviors[rng.gen_range(0..behaviors.len())];
            let activation_frame = 22 + rng.gen_range(0..9usize);
            Ok((
                cfg.clone(),
                InjectionDescriptor::Scenario {
                    actor_index: 0,
                    behavior,
                    activation_frame,
                    duration: 20,
                },
            ))
        }
    }
}

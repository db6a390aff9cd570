//! Closed-loop episode generation.
//!
//! The ego and every scripted traffic actor follow the region route with pure
//! pursuit; the bicycle model integrates all of them. Per-frame observations
//! are rendered around the ego (the ego itself is never drawn).

use rand::Rng;

use super::dynamics::step_dynamics;
use super::inject::{spawn_plan, InjectionDescriptor};
use super::planner::{pursuit_action, Route};
use super::registry::{self, BEHAVIOR_SLOW};
use super::render::{actor_entity, object_entity, render_observation, road_entities, Entity, Scene};
use super::types::{Action, ActorState, EpisodeRecord, FrameLabel, Level, WorldConfig};
use super::SimError;
use crate::rng::substream;

/// Slow-behavior cruise-speed factor.
const SLOW_FACTOR: f64 = 0.6;
/// Swerve steering flips sign every this many frames.
const SWERVE_PERIOD: usize = 5;

fn validate(cfg: &WorldConfig) -> Result<(), SimError> {
    if registry::region(cfg.region).is_none() {
        return Err(SimError::Config(format!("unknown region id {}", cfg.region)));
    }
    for &c in &cfg.objects {
        if registry::object_class(c).is_none() {
            return Err(SimError::Config(format!("unknown object class {c}")));
        }
    }
    for &c in &cfg.actors {
        if registry::actor_class(c).is_none() {
            return Err(SimError::Config(format!("unknown actor class {c}")));
        }
    }
    for &b in &cfg.behaviors {
        if !registry::behavior_exists(b) {
            return Err(SimError::Config(format!("unknown behavior id {b}")));
        }
    }
    if cfg.episode_len < 2 {
        return Err(SimError::Config("episode_len must be >= 2".into()));
    }
    if cfg.dt <= 0.0 {
        return Err(SimError::Config("dt must be positive".into()));
    }
    if !(0.0..=1.0).contains(&cfg.weather) || !(0.0..=1.0).contains(&cfg.time_of_day) {
        return Err(SimError::Config(
            "weather and time_of_day must lie in [0, 1]".into(),
        ));
    }
    if cfg.channels < 3 || cfg.grid_size < 2 {
        return Err(SimError::Config("need channels >= 3 and grid_size >= 2".into()));
    }
    Ok(())
}

struct TrafficActor {
    state: ActorState,
    class: registry::ActorClass,
    behavior: u32,
}

impl TrafficActor {
    fn target_speed(&self, behavior: u32) -> f64 {
        match behavior {
            BEHAVIOR_SLOW => SLOW_FACTOR * self.class.cruise_speed,
            _ => self.class.cruise_speed,
        }
    }
}

/// Generate one normal episode.
pub fn generate_episode(cfg: &WorldConfig, seed: u64) -> Result<EpisodeRecord, SimError> {
    generate_episode_with(cfg, seed, None)
}

/// Generate an episode, optionally realizing an injected anomaly.
///
/// `cfg` must already be the (possibly modified) evaluation configuration
/// returned by [`super::inject_anomaly`] together with the descriptor, and
/// `seed` must match the seed the descriptor was derived with.
pub fn generate_episode_with(
    cfg: &WorldConfig,
    seed: u64,
    injection: Option<&InjectionDescriptor>,
) -> Result<EpisodeRecord, SimError> {
    validate(cfg)?;
    let template = registry::region(cfg.region).expect("validated");
    let route: Route = template.route();
    route.validate()?;
    let plan = spawn_plan(cfg, seed)?;

    let mut ego = ActorState::at(0.0, 0.0, 0.0, template.target_speed);
    let (ex, ey) = route.point_at(plan.ego_arc);
    ego.x = ex;
    ego.y = ey;
    ego.yaw = route.heading_at(plan.ego_arc);

    let mut traffic: Vec<TrafficActor> = Vec::with_capacity(plan.traffic.len());
    for &(arc, class_id, behavior) in &plan.traffic {
        let class = registry::actor_class(class_id)
            .ok_or_else(|| SimError::Config(format!("unknown actor class {class_id}")))?;
        let (x, y) = route.point_at(arc);
        let mut st = ActorState::at(x, y, route.heading_at(arc), class.cruise_speed);
        if behavior == BEHAVIOR_SLOW {
            st.v = SLOW_FACTOR * class.cruise_speed;
        }
        traffic.push(TrafficActor {
            state: st,
            class,
            behavior,
        });
    }

    // Static scene: roads, seeded roadside objects, and (for object/scene
    // injections) one marked extra object.
    let mut static_entities: Vec<Entity> = road_entities(&template);
    let mut site_rng = substream(seed, "sites", 0);
    if !cfg.objects.is_empty() {
        for &(sx, sy) in &template.object_sites {
            let class_id = cfg.objects[site_rng.gen_range(0..cfg.objects.len())];
            let class = registry::object_class(class_id).expect("validated");
            let yaw = site_rng.gen::<f64>() * std::f64::consts::TAU;
            static_entities.push(object_entity(&class, sx, sy, yaw, false));
        }
    }
    match injection {
        Some(
            InjectionDescriptor::Object { class_id, x, y, yaw }
            | InjectionDescriptor::Scene { class_id, x, y, yaw },
        ) => {
            let class = registry::object_class(*class_id)
                .ok_or_else(|| SimError::Config(format!("unknown object class {class_id}")))?;
            static_entities.push(object_entity(&class, *x, *y, *yaw, true));
        }
        Some(InjectionDescriptor::Scenario { actor_index, .. }) => {
            if *actor_index >= traffic.len() {
                return Err(SimError::Injection(format!(
                    "scenario actor index {actor_index} out of range"
                )));
            }
        }
        _ => {}
    }

    let scenario_active = |t: usize| -> bool {
        matches!(
            injection,
            Some(InjectionDescriptor::Scenario {
                activation_frame,
                duration,
                ..
            }) if t >= *activation_frame && t < activation_frame + duration
        )
    };

    let len = cfg.episode_len;
    let mut noise_rng = substream(seed, "noise", 0);
    let mut observations = Vec::with_capacity(len);
    let mut actions = Vec::with_capacity(len - 1);
    let mut actor_states = Vec::with_capacity(len);
    let mut labels = Vec::with_capacity(len);

    for t in 0..len {
        let mut scene = Scene {
            entities: static_entities.clone(),
        };
        for a in &traffic {
            scene.entities.push(actor_entity(&a.class, &a.state, false));
        }
        let (obs, mask) = render_observation(&scene, &ego, cfg, &mut noise_rng);

        let label = match injection {
            Some(InjectionDescriptor::Domain { .. }) => FrameLabel {
                level: Some(Level::Domain),
                mask: None,
            },
            Some(InjectionDescriptor::Object { .. } | InjectionDescriptor::Scene { .. }) => {
                let level = injection.unwrap().level();
                if mask.iter().any(|&m| m) {
                    FrameLabel {
                        level: Some(level),
                        mask: Some(mask),
                    }
                } else {
                    FrameLabel::NORMAL
                }
            }
            Some(InjectionDescriptor::Scenario { .. }) if scenario_active(t) => FrameLabel {
                level: Some(Level::Scenario),
                mask: None,
            },
            _ => FrameLabel::NORMAL,
        };

        observations.push(obs);
        actor_states.push(ego);
        labels.push(label);

        if t + 1 < len {
            let ego_action = pursuit_action(&ego, &route, template.target_speed, &cfg.limits);
            ego = step_dynamics(&ego, &ego_action, cfg.dt, &cfg.limits);
            actions.push(ego_action);

            for (k, actor) in traffic.iter_mut().enumerate() {
                let anomalous = scenario_active(t + 1)
                    && matches!(
                        injection,
                        Some(InjectionDescriptor::Scenario { actor_index, .. }) if *actor_index == k
                    );
                let a = if anomalous {
                    let (activation, _) = match injection {
                        Some(InjectionDescriptor::Scenario {
                            activation_frame,
                            duration,
                            ..
                        }) => (*activation_frame, *duration),
                        _ => unreachable!(),
                    };
                    let phase = (t + 1 - activation) / SWERVE_PERIOD;
                    let sign = if phase % 2 == 0 { 1.0 } else { -1.0 };
                    Action {
                        acc: 0.0,
                        steering: sign * cfg.limits.delta_max,
                    }
                } else {
                    pursuit_action(
                        &actor.state,
                        &route,
                        actor.target_speed(actor.behavior),
                        &cfg.limits,
                    )
                };
                actor.state = step_dynamics(&actor.state, &a, cfg.dt, &cfg.limits);
            }
        }
    }

    Ok(EpisodeRecord {
        observations,
        actions,
        actor_states,
        labels,
        seed,
        cfg_digest: cfg.digest(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::inject::{inject_anomaly, TrainAttributes};
    use crate::sim::render::CHANNEL_ACTOR;

    #[test]
    fn generation_is_deterministic() {
        let cfg = WorldConfig {
            weather: 0.05,
            ..WorldConfig::default()
        };
        let a = generate_episode(&cfg, 42).unwrap();
        let b = generate_episode(&cfg, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_episode(&cfg, 43).unwrap();
        assert_ne!(a.observations, c.observations);
    }

    #[test]
    fn normal_episode_shapes_and_labels() {
        let cfg = WorldConfig::default();
        let ep = generate_episode(&cfg, 7).unwrap();
        assert_eq!(ep.observations.len(), cfg.episode_len);
        assert_eq!(ep.actions.len(), cfg.episode_len - 1);
        assert_eq!(ep.actor_states.len(), cfg.episode_len);
        assert!(ep.labels.iter().all(|l| !l.is_anomalous()));
    }

    #[test]
    fn zero_traffic_gives_empty_actor_channel() {
        let cfg = WorldConfig {
            n_traffic: 0,
            ..WorldConfig::default()
        };
        let ep = generate_episode(&cfg, 11).unwrap();
        let g = cfg.grid_size;
        for obs in &ep.observations {
            let ch = &obs.data[CHANNEL_ACTOR * g * g..(CHANNEL_ACTOR + 1) * g * g];
            assert!(ch.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn scenario_labels_start_at_activation_frame() {
        let cfg = WorldConfig::default();
        let train = TrainAttributes::defaults();
        let seed = 5;
        let (cfg2, desc) = inject_anomaly(&cfg, Level::Scenario, seed, &train).unwrap();
        let (activation, duration) = match desc {
            InjectionDescriptor::Scenario {
                activation_frame,
                duration,
                ..
            } => (activation_frame, duration),
            ref other => panic!("unexpected descriptor {other:?}"),
        };
        let ep = generate_episode_with(&cfg2, seed, Some(&desc)).unwrap();
        let first = ep.labels.iter().position(|l| l.is_anomalous()).unwrap();
        assert_eq!(first, activation);
        let count = ep.labels.iter().filter(|l| l.is_anomalous()).count();
        assert_eq!(count, duration.min(cfg.episode_len - activation));
    }

    #[test]
    fn object_injection_produces_masked_frames() {
        let cfg = WorldConfig::default();
        let train = TrainAttributes::defaults();
        let seed = 9;
        let (cfg2, desc) = inject_anomaly(&cfg, Level::Object, seed, &train).unwrap();
        let ep = generate_episode_with(&cfg2, seed, Some(&desc)).unwrap();
        let tagged: Vec<&FrameLabel> = ep.labels.iter().filter(|l| l.is_anomalous()).collect();
        assert!(!tagged.is_empty(), "injected object never entered view");
        for l in tagged {
            assert_eq!(l.level, Some(Level::Object));
            assert!(l.mask.as_ref().unwrap().iter().any(|&m| m));
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = WorldConfig {
            region: 99,
            ..WorldConfig::default()
        };
        assert!(matches!(
            generate_episode(&cfg, 0),
            Err(SimError::Config(_))
        ));
    }
}

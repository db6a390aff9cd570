//! Static registries for region templates, object classes, actor classes,
//! and behavior policies.
//!
//! Ids 0..N_TRAIN of each registry are the pool normality attributes draw
//! from; the remaining ids exist only so anomaly injection has out-of-set
//! values to pick.

use super::planner::Route;

/// Road-layout template: one or more thick centerline loops plus fixed
/// roadside object sites.
#[derive(Debug, Clone)]
pub struct RegionTemplate {
    pub id: u32,
    pub name: &'static str,
    /// Closed centerline loops; the first one is the driving route.
    pub roads: Vec<Vec<(f64, f64)>>,
    pub road_width: f64,
    pub target_speed: f64,
    /// Fixed positions where a static object may stand during training.
    pub object_sites: Vec<(f64, f64)>,
}

impl RegionTemplate {
    pub fn route(&self) -> Route {
        Route {
            points: self.roads[0].clone(),
            closed: true,
            target_speed: self.target_speed,
        }
    }
}

fn octagon(r: f64) -> Vec<(f64, f64)> {
    (0..8)
        .map(|k| {
            let a = std::f64::consts::FRAC_PI_4 * k as f64;
            (r * a.cos(), r * a.sin())
        })
        .collect()
}

/// Region ids available for training configurations.
pub const TRAIN_REGIONS: &[u32] = &[0, 1, 2];
/// Region ids reserved as domain-level anomalies.
pub const HELD_OUT_REGIONS: &[u32] = &[3, 4];

pub fn region(id: u32) -> Option<RegionTemplate> {
    let t = match id {
        0 => RegionTemplate {
            id,
            name: "square_loop",
            roads: vec![vec![(-12.0, -12.0), (12.0, -12.0), (12.0, 12.0), (-12.0, 12.0)]],
            road_width: 4.0,
            target_speed: 3.0,
            object_sites: vec![(-8.0, -15.2), (15.2, 8.0), (0.0, 15.4)],
        },
        1 => RegionTemplate {
            id,
            name: "rect_loop",
            roads: vec![vec![(-20.0, -8.0), (20.0, -8.0), (20.0, 8.0), (-20.0, 8.0)]],
            road_width: 4.0,
            target_speed: 3.5,
            object_sites: vec![(-12.0, -11.3), (12.0, 11.4), (23.3, 0.0)],
        },
        2 => RegionTemplate {
            id,
            name: "octagon_loop",
            roads: vec![octagon(14.0)],
            road_width: 4.0,
            target_speed: 3.0,
            object_sites: vec![(17.5, 0.0), (-17.3, 0.5), (0.0, -17.6)],
        },
        3 => RegionTemplate {
            id,
            name: "diamond_loop",
            roads: vec![vec![(16.0, 0.0), (0.0, 16.0), (-16.0, 0.0), (0.0, -16.0)]],
            road_width: 4.0,
            target_speed: 3.0,
            object_sites: vec![(0.0, 19.5), (19.4, 1.0)],
        },
        4 => RegionTemplate {
            id,
            name: "triangle_loop",
            roads: vec![vec![(-14.0, -10.0), (14.0, -10.0), (0.0, 14.0)]],
            road_width: 4.0,
            target_speed: 2.8,
            object_sites: vec![(0.0, -13.4), (-10.0, 6.5)],
        },
        _ => return None,
    };
    Some(t)
}

/// Static object class: footprint half-extents in meters.
#[derive(Debug, Clone, Copy)]
pub struct ObjectClass {
    pub id: u32,
    pub name: &'static str,
    pub half_len: f64,
    pub half_wid: f64,
}

/// Object ids available for training configurations.
pub const TRAIN_OBJECTS: &[u32] = &[0, 1, 2];
/// Object ids reserved as object-level anomalies.
pub const UNKNOWN_OBJECTS: &[u32] = &[3, 4];

pub fn object_class(id: u32) -> Option<ObjectClass> {
    let c = match id {
        0 => ObjectClass { id, name: "cone", half_len: 0.6, half_wid: 0.6 },
        1 => ObjectClass { id, name: "barrier", half_len: 1.2, half_wid: 0.6 },
        2 => ObjectClass { id, name: "box", half_len: 0.8, half_wid: 0.8 },
        3 => ObjectClass { id, name: "debris", half_len: 1.6, half_wid: 1.6 },
        4 => ObjectClass { id, name: "slab", half_len: 1.9, half_wid: 1.1 },
        _ => return None,
    };
    Some(c)
}

/// Dynamic actor class: vehicle footprint and cruise speed.
#[derive(Debug, Clone, Copy)]
pub struct ActorClass {
    pub id: u32,
    pub name: &'static str,
    pub half_len: f64,
    pub half_wid: f64,
    pub cruise_speed: f64,
}

pub const TRAIN_ACTORS: &[u32] = &[0, 1];

pub fn actor_class(id: u32) -> Option<ActorClass> {
    let c = match id {
        0 => ActorClass { id, name: "car", half_len: 1.2, half_wid: 0.7, cruise_speed: 2.5 },
        1 => ActorClass { id, name: "van", half_len: 1.6, half_wid: 0.9, cruise_speed: 2.0 },
        _ => return None,
    };
    Some(c)
}

/// Behavior policy ids.
pub const BEHAVIOR_FOLLOW: u32 = 0;
pub const BEHAVIOR_SLOW: u32 = 1;
/// Scripted lane-crossing swerve; never part of a training behavior set.
pub const BEHAVIOR_SWERVE: u32 = 2;

pub const TRAIN_BEHAVIORS: &[u32] = &[BEHAVIOR_FOLLOW, BEHAVIOR_SLOW];
pub const ANOMALOUS_BEHAVIORS: &[u32] = &[BEHAVIOR_SWERVE];

pub fn behavior_exists(id: u32) -> bool {
    id <= BEHAVIOR_SWERVE
}

/// Weather amplitudes and daytime contrast values reserved for domain
/// anomalies (training sets must not contain them).
pub const ANOMALY_WEATHERS: &[f64] = &[0.3, 0.4];
pub const ANOMALY_TODS: &[f64] = &[0.45, 0.55];

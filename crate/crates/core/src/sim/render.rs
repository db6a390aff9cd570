//! Ego-centric bird's-eye-view rasterization.
//!
//! Every entity is an oriented rectangle; a cell is covered when its center
//! lies inside the rectangle. `oracle` holds an independent point-in-polygon
//! rasterizer used to cross-check the renderer.

use rand::Rng;

use super::registry::{ActorClass, ObjectClass, RegionTemplate};
use super::types::{ActorState, Observation, WorldConfig};

pub const CHANNEL_ROAD: usize = 0;
pub const CHANNEL_ACTOR: usize = 1;
pub const CHANNEL_OBJECT: usize = 2;

#[derive(Debug, Clone, Copy)]
pub struct RectFootprint {
    pub cx: f64,
    pub cy: f64,
    pub yaw: f64,
    pub half_len: f64,
    pub half_wid: f64,
}

impl RectFootprint {
    pub fn contains(&self, px: f64, py: f64) -> bool {
        let dx = px - self.cx;
        let dy = py - self.cy;
        let lx = dx * self.yaw.cos() + dy * self.yaw.sin();
        let ly = -dx * self.yaw.sin() + dy * self.yaw.cos();
        lx.abs() <= self.half_len && ly.abs() <= self.half_wid
    }

    pub fn corners(&self) -> [(f64, f64); 4] {
        let (c, s) = (self.yaw.cos(), self.yaw.sin());
        let rot = |lx: f64, ly: f64| (self.cx + lx * c - ly * s, self.cy + lx * s + ly * c);
        [
            rot(self.half_len, -self.half_wid),
            rot(self.half_len, self.half_wid),
            rot(-self.half_len, self.half_wid),
            rot(-self.half_len, -self.half_wid),
        ]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Entity {
    pub channel: usize,
    pub rect: RectFootprint,
    /// Injected entities are marked so their covered cells land in the label mask.
    pub marked: bool,
}

/// Renderable world state at one frame.
#[derive(Debug, Clone, Default)]
pub struct Scene {
    pub entities: Vec<Entity>,
}

impl Scene {
    /// Whether a world point lies on any road rectangle.
    pub fn on_road(&self, x: f64, y: f64) -> bool {
        self.entities
            .iter()
            .any(|e| e.channel == CHANNEL_ROAD && e.rect.contains(x, y))
    }
}

/// Thick-segment rectangles for every road loop of a template. Segment ends
/// are extended by half the road width so loop corners are filled.
pub fn road_entities(template: &RegionTemplate) -> Vec<Entity> {
    let hw = template.road_width / 2.0;
    let mut out = Vec::new();
    for road in &template.roads {
        let n = road.len();
        for i in 0..n {
            let a = road[i];
            let b = road[(i + 1) % n];
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let len = (dx * dx + dy * dy).sqrt();
            if len <= 0.0 {
                continue;
            }
            out.push(Entity {
                channel: CHANNEL_ROAD,
                rect: RectFootprint {
                    cx: (a.0 + b.0) / 2.0,
                    cy: (a.1 + b.1) / 2.0,
                    yaw: dy.atan2(dx),
                    half_len: len / 2.0 + hw,
                    half_wid: hw,
                },
                marked: false,
            });
        }
    }
    out
}

pub fn object_entity(class: &ObjectClass, x: f64, y: f64, yaw: f64, marked: bool) -> Entity {
    Entity {
        channel: CHANNEL_OBJECT,
        rect: RectFootprint {
            cx: x,
            cy: y,
            yaw,
            half_len: class.half_len,
            half_wid: class.half_wid,
        },
        marked,
    }
}

pub fn actor_entity(class: &ActorClass, state: &ActorState, marked: bool) -> Entity {
    Entity {
        channel: CHANNEL_ACTOR,
        rect: RectFootprint {
            cx: state.x,
            cy: state.y,
            yaw: state.yaw,
            half_len: class.half_len,
            half_wid: class.half_wid,
        },
        marked,
    }
}

/// World coordinates of a cell center. Row 0 is furthest ahead of the ego,
/// column 0 furthest to its left; the ego sits at the grid center heading up.
pub fn cell_center(ego: &ActorState, cfg: &WorldConfig, row: usize, col: usize) -> (f64, f64) {
    let g = cfg.grid_size as f64;
    let forward = (g / 2.0 - row as f64 - 0.5) * cfg.cell_size;
    let left = (g / 2.0 - col as f64 - 0.5) * cfg.cell_size;
    let (c, s) = (ego.yaw.cos(), ego.yaw.sin());
    (
        ego.x + forward * c - left * s,
        ego.y + forward * s + left * c,
    )
}

/// Rasterize a scene around the ego. Returns the observation and the mask of
/// cells covered by marked entities (pre-noise geometry).
///
/// Weather adds uniform noise of the configured amplitude; time of day scales
/// channel contrast. Values are rounded through f32.
pub fn render_observation(
    scene: &Scene,
    ego: &ActorState,
    cfg: &WorldConfig,
    rng: &mut impl Rng,
) -> (Observation, Vec<bool>) {
    let g = cfg.grid_size;
    let mut obs = Observation::zeros(cfg.channels, g);
    let mut mask = vec![false; g * g];
    for row in 0..g {
        for col in 0..g {
            let (px, py) = cell_center(ego, cfg, row, col);
            for e in &scene.entities {
                if e.channel < cfg.channels && e.rect.contains(px, py) {
                    obs.data[(e.channel * g + row) * g + col] = 1.0;
                    if e.marked {
                        mask[row * g + col] = true;
                    }
                }
            }
        }
    }
    finish(&mut obs, cfg, rng);
    (obs, mask)
}

/// Contrast scaling, weather noise, clamping, f32 rounding. Shared with the
/// oracle so the two rasterizers differ only in their coverage test.
pub fn finish(obs: &mut Observation, cfg: &WorldConfig, rng: &mut impl Rng) {
    for v in obs.data.iter_mut() {
        *v *= cfg.time_of_day;
    }
    if cfg.weather > 0.0 {
        for v in obs.data.iter_mut() {
            let u: f64 = rng.gen();
            *v = (*v + cfg.weather * (2.0 * u - 1.0)).clamp(0.0, 1.0);
        }
    }
    for v in obs.data.iter_mut() {
        *v = *v as f32 as f64;
    }
}

pub mod oracle {
    //! Brute-force rasterizer: per-cell point-in-convex-polygon over every
    //! entity's corner list.

    use super::*;

    fn point_in_convex(p: (f64, f64), poly: &[(f64, f64)]) -> bool {
        let n = poly.len();
        for i in 0..n {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross < 0.0 {
                return false;
            }
        }
        true
    }

    pub fn render_bruteforce(
        scene: &Scene,
        ego: &ActorState,
        cfg: &WorldConfig,
        rng: &mut impl Rng,
    ) -> Observation {
        let g = cfg.grid_size;
        let mut obs = Observation::zeros(cfg.channels, g);
        for row in 0..g {
            for col in 0..g {
                let p = cell_center(ego, cfg, row, col);
                for e in &scene.entities {
                    if e.channel < cfg.channels && point_in_convex(p, &e.rect.corners()) {
                        obs.data[(e.channel * g + row) * g + col] = 1.0;
                    }
                }
            }
        }
        finish(&mut obs, cfg, rng);
        obs
    }
}

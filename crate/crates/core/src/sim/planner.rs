//! Pure-pursuit steering with proportional speed control.

use super::dynamics::step_dynamics;
use super::types::{Action, ActorState, Limits};
use super::SimError;

/// Lookahead distance in meters.
pub const LOOKAHEAD: f64 = 2.0;
/// Proportional speed gain.
pub const SPEED_GAIN: f64 = 1.0;

/// Lane polyline to follow.
#[derive(Debug, Clone)]
pub struct Route {
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
    pub target_speed: f64,
}

impl Route {
    pub fn circle(cx: f64, cy: f64, r: f64, target_speed: f64) -> Route {
        let points = (0..32)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / 32.0;
                (cx + r * a.cos(), cy + r * a.sin())
            })
            .collect();
        Route {
            points,
            closed: true,
            target_speed,
        }
    }

    fn segments(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        let n = self.points.len();
        let count = if self.closed { n } else { n - 1 };
        (0..count).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    pub fn total_len(&self) -> f64 {
        self.segments()
            .map(|(a, b)| ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt())
            .sum()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.points.len() < 2 {
            return Err(SimError::Planning("route has fewer than 2 points".into()));
        }
        if self.total_len() <= 0.0 {
            return Err(SimError::Planning("route has zero length".into()));
        }
        Ok(())
    }

    /// Arc-length position of the point on the route closest to (x, y).
    pub fn project(&self, x: f64, y: f64) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        let mut arc = 0.0;
        for (a, b) in self.segments() {
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let len2 = dx * dx + dy * dy;
            let len = len2.sqrt();
            if len > 0.0 {
                let t = (((x - a.0) * dx + (y - a.1) * dy) / len2).clamp(0.0, 1.0);
                let (px, py) = (a.0 + t * dx, a.1 + t * dy);
                let d2 = (x - px).powi(2) + (y - py).powi(2);
                if d2 < best.0 {
                    best = (d2, arc + t * len);
                }
            }
            arc += len;
        }
        best.1
    }

    /// Point at arc-length `s`, wrapping on closed routes and clamping to the
    /// end on open ones.
    pub fn point_at(&self, s: f64) -> (f64, f64) {
        let total = self.total_len();
        let mut s = if self.closed {
            s.rem_euclid(total)
        } else {
            s.clamp(0.0, total)
        };
        for (a, b) in self.segments() {
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let len = (dx * dx + dy * dy).sqrt();
            if s <= len || len <= 0.0 {
                if len <= 0.0 {
                    continue;
                }
                let t = s / len;
                return (a.0 + t * dx, a.1 + t * dy);
            }
            s -= len;
        }
        *self.points.last().unwrap()
    }

    /// Lateral distance from (x, y) to the route.
    pub fn lateral_error(&self, x: f64, y: f64) -> f64 {
        let s = self.project(x, y);
        let (px, py) = self.point_at(s);
        ((x - px).powi(2) + (y - py).powi(2)).sqrt()
    }

    /// Route tangent angle at arc-length `s`.
    pub fn heading_at(&self, s: f64) -> f64 {
        let (a, b) = (self.point_at(s), self.point_at(s + 0.2));
        (b.1 - a.1).atan2(b.0 - a.0)
    }
}

/// One pure-pursuit action toward the lookahead point, with proportional
/// speed control toward `target_speed`.
pub fn pursuit_action(s: &ActorState, route: &Route, target_speed: f64, lim: &Limits) -> Action {
    let arc = route.project(s.x, s.y);
    let (lx, ly) = route.point_at(arc + LOOKAHEAD);
    let (dx, dy) = (lx - s.x, ly - s.y);
    // lookahead point in the vehicle frame
    let fx = dx * s.yaw.cos() + dy * s.yaw.sin();
    let fy = -dx * s.yaw.sin() + dy * s.yaw.cos();
    let alpha = fy.atan2(fx);
    let steering = (2.0 * lim.wheelbase * alpha.sin())
        .atan2(LOOKAHEAD)
        .clamp(-lim.delta_max, lim.delta_max);
    let acc = (SPEED_GAIN * (target_speed - s.v)).clamp(-lim.acc_max, lim.acc_max);
    Action { acc, steering }
}

/// Closed-loop plan of `horizon` actions along `route`, simulating the
/// vehicle model forward from `start`.
pub fn plan_actions(
    start: &ActorState,
    route: &Route,
    horizon: usize,
    dt: f64,
    lim: &Limits,
) -> Result<Vec<Action>, SimError> {
    route.validate()?;
    if horizon == 0 {
        return Err(SimError::Planning("horizon must be >= 1".into()));
    }
    let mut s = *start;
    let mut actions = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let a = pursuit_action(&s, route, route.target_speed, lim);
        s = step_dynamics(&s, &a, dt, lim);
        actions.push(a);
    }
    Ok(actions)
}

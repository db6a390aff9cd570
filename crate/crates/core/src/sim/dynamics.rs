//! Kinematic bicycle model.

use super::types::{Action, ActorState, Limits};

/// One integration step. Inputs are clamped to the limits; the yaw rate is
/// v·tan(δ)/wheelbase, so positive steering turns left.
pub fn step_dynamics(s: &ActorState, a: &Action, dt: f64, lim: &Limits) -> ActorState {
    let acc = a.acc.clamp(-lim.acc_max, lim.acc_max);
    let delta = a.steering.clamp(-lim.delta_max, lim.delta_max);
    ActorState {
        x: s.x + s.v * s.yaw.cos() * dt,
        y: s.y + s.v * s.yaw.sin() * dt,
        z: 0.0,
        roll: 0.0,
        pitch: 0.0,
        yaw: s.yaw + s.v / lim.wheelbase * delta.tan() * dt,
        v: (s.v + acc * dt).clamp(0.0, lim.v_max),
        acc,
        steering: delta,
    }
}

//! Symmetric trapezoidal displacement profile with equal acceleration,
//! cruise and deceleration thirds; cruise velocity is `1.5 target/duration`.

use serde::{Deserialize, Serialize};

/// Desired displacement over a fixed duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    /// Total displacement (m or rad), non-negative magnitude.
    pub target: f64,
    /// Duration (s).
    pub duration: f64,
}

impl TrajectorySpec {
    pub fn new(target: f64, duration: f64) -> Self {
        debug_assert!(duration > 0.0);
        TrajectorySpec { target, duration }
    }

    pub fn cruise_velocity(&self) -> f64 {
        1.5 * self.target / self.duration
    }
}

/// Desired position and velocity at time `t` since trajectory start.
/// Holds the endpoint after `duration`.
pub fn trapezoid(spec: &TrajectorySpec, t: f64) -> (f64, f64) {
    debug_assert!(t >= 0.0);
    let td = spec.duration;
    if t >= td {
        return (spec.target, 0.0);
    }
    let v_c = spec.cruise_velocity();
    let t_ramp = td / 3.0;
    let accel = v_c / t_ramp;
    if t < t_ramp {
        (0.5 * accel * t * t, accel * t)
    } else if t < 2.0 * t_ramp {
        (v_c * (t - 0.5 * t_ramp), v_c)
    } else {
        let dt_end = td - t;
        (spec.target - 0.5 * accel * dt_end * dt_end, accel * dt_end)
    }
}

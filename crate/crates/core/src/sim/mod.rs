//! Fixed-step physics: two-mass gripper drivetrain, planar limit-surface
//! contact friction, and the slipping object under gravity.
//!
//! The gripper model is
//!
//! ```text
//! m1 x1'' = f_c - f_f - f_v - k1 (x1 - x2) - d1 (x1' - x2') + delta
//! m2 x2'' = k1 (x1 - x2) + d1 (x1' - x2') - k2 x2 - d2 x2'
//! f_n     = k2 x2 + d2 x2'
//! ```
//!
//! integrated with semi-implicit Euler at a fixed rate (10 kHz by default),
//! which keeps the stiff contact spring stable without an implicit solver.

mod object;

pub use object::{step_object, ObjectEnv, ObjectStep, SlipMode};

use crate::error::SimError;
use crate::types::{ContactParams, GripperParams, GripperState, PlanarVelocity, PlanarWrench};

/// Default physics step: 10 kHz, faster than the fastest real control loop.
pub const PHYSICS_DT: f64 = 1e-4;

/// Advance the two-mass gripper model by one semi-implicit Euler step with
/// implicit damping (spring forces explicit, damping terms solved at the
/// new velocities; the stiff contact damper stays accurate at the 10 kHz
/// step).
///
/// `f_c` is the commanded motor force, `f_ext` an additional external force
/// on the finger-sensor mass (contact reaction or unmodeled disturbance,
/// zero in nominal runs). At equilibrium `f_n -> f_c + f_ext`.
///
/// Motor Coulomb friction opposes `v1` and can bring it to rest within a
/// step but never reverses its sign. On separation `x2` clamps at zero
/// with `v2` zeroed; while separated the light finger is treated as
/// massless on a relaxed transmission, so no transmission force acts on
/// the motor and it coasts under pure damping. Contact re-engages as soon
/// as the transmission pushes the finger back onto the object.
pub fn step_gripper(
    state: &GripperState,
    params: &GripperParams,
    f_c: f64,
    f_ext: f64,
    dt: f64,
) -> Result<GripperState, SimError> {
    if !(state.is_finite() && f_c.is_finite() && f_ext.is_finite() && dt.is_finite()) {
        return Err(SimError::NonFinite("step_gripper"));
    }
    if dt <= 0.0 {
        return Err(SimError::InvalidParameter("dt must be > 0"));
    }

    let in_contact = state.x2 > 0.0
        || params.k1 * state.x1 + params.d1 * state.v1 > 0.0;

    if !in_contact {
        // Separated: no transmission load on the motor.
        let mut v1 = (params.m1 * state.v1 + dt * f_c) / (params.m1 + dt * params.c_v);
        v1 = coulomb_decay(v1, dt * params.f_f_motor / params.m1);
        return Ok(GripperState {
            x1: state.x1 + dt * v1,
            v1,
            x2: 0.0,
            v2: 0.0,
        });
    }

    let f_spring = params.k1 * (state.x1 - state.x2);
    let f_contact_spring = params.k2 * state.x2;

    // Implicit damping: solve the 2x2 system for the new velocities.
    let a11 = params.m1 + dt * (params.d1 + params.c_v);
    let a12 = -dt * params.d1;
    let a21 = -dt * params.d1;
    let a22 = params.m2 + dt * (params.d1 + params.d2);
    let b1 = params.m1 * state.v1 + dt * (f_c - f_spring);
    let b2 = params.m2 * state.v2 + dt * (f_spring - f_contact_spring + f_ext);
    let det = a11 * a22 - a12 * a21;
    let mut v1 = (b1 * a22 - a12 * b2) / det;
    let v2 = (a11 * b2 - a21 * b1) / det;

    v1 = coulomb_decay(v1, dt * params.f_f_motor / params.m1);

    let x1 = state.x1 + dt * v1;
    let mut x2 = state.x2 + dt * v2;
    let mut v2 = v2;
    if x2 <= 0.0 {
        // Finger separated from the object.
        x2 = 0.0;
        v2 = 0.0;
    }

    Ok(GripperState { x1, v1, x2, v2 })
}

/// Coulomb friction decays the velocity toward zero and clamps there; it
/// never flips the sign within a step.
fn coulomb_decay(v: f64, dv: f64) -> f64 {
    if v > 0.0 {
        (v - dv).max(0.0)
    } else if v < 0.0 {
        (v + dv).min(0.0)
    } else {
        v
    }
}

/// Normal force seen by the F/T sensor: `k2 x2 + d2 x2'`, clamped at zero.
pub fn measured_normal_force(state: &GripperState, params: &GripperParams) -> f64 {
    (params.k2 * state.x2 + params.d2 * state.v2).max(0.0)
}

/// Velocity-dependent friction coefficient: Coulomb level plus a static
/// peak decaying over the Stribeck velocity plus a viscous term,
///
/// `mu(s) = mu_c + (mu_s - mu_c) exp(-(s/v_s)^2) + mu_v s`
///
/// floored at zero so friction can never inject power (negative `mu_v`
/// would otherwise flip the force direction at high slip speeds).
pub fn stribeck_mu(slip_speed: f64, cp: &ContactParams) -> f64 {
    let s = slip_speed.abs();
    let mu = cp.mu_c + (cp.mu_s - cp.mu_c) * (-(s / cp.v_s).powi(2)).exp() + cp.mu_v * s;
    mu.max(0.0)
}

/// Sliding friction wrench of the ellipsoid limit-surface model.
///
/// With `S = diag(1, 1, r)` and generalized slip speed `s = ||S v_rel||`,
/// the wrench is `F = -mu(s) f_n S u` where `u = S v_rel / s`. Sticking
/// (`s = 0`) returns the zero wrench; the caller owns stick resolution.
pub fn friction_wrench(
    v_rel: &PlanarVelocity,
    f_n: f64,
    cp: &ContactParams,
) -> Result<PlanarWrench, SimError> {
    if !(v_rel.is_finite() && f_n.is_finite()) {
        return Err(SimError::NonFinite("friction_wrench"));
    }
    if f_n < 0.0 {
        return Err(SimError::NegativeNormalForce(f_n));
    }

    let sx = v_rel.vx;
    let sy = v_rel.vy;
    let sw = cp.r * v_rel.omega;
    let s = (sx * sx + sy * sy + sw * sw).sqrt();
    if s == 0.0 {
        return Ok(PlanarWrench::ZERO);
    }

    let scale = -stribeck_mu(s, cp) * f_n / s;
    Ok(PlanarWrench {
        fx: scale * sx,
        fy: scale * sy,
        tau: scale * cp.r * sw,
    })
}

/// Energy-like function of the gripper state about the constant-`f_c`
/// equilibrium (kinetic terms plus both spring deflection terms). Along
/// undisturbed trajectories it is non-increasing up to integrator
/// tolerance.
pub fn lyapunov_value(state: &GripperState, params: &GripperParams, f_c: f64) -> f64 {
    let spring1 = state.x1 - state.x2 - f_c / params.k1;
    let spring2 = state.x2 - f_c / params.k2;
    0.5 * params.m1 * state.v1 * state.v1
        + 0.5 * params.m2 * state.v2 * state.v2
        + 0.5 * params.k1 * spring1 * spring1
        + 0.5 * params.k2 * spring2 * spring2
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params() -> GripperParams {
        GripperParams::default()
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let p = params();
        let f_c = 12.0;
        let eq = GripperState::equilibrium(&p, f_c);
        let mut s = eq;
        for _ in 0..1000 {
            s = step_gripper(&s, &p, f_c, 0.0, PHYSICS_DT).unwrap();
        }
        assert_abs_diff_eq!(s.x1, eq.x1, epsilon = 1e-9);
        assert_abs_diff_eq!(s.x2, eq.x2, epsilon = 1e-9);
        assert_abs_diff_eq!(s.v1, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.v2, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn free_motor_velocity_decays() {
        let p = params();
        // Retracted past the contact point with no commanded force.
        let mut s = GripperState {
            x1: -5e-3,
            v1: 0.4,
            x2: 0.0,
            v2: 0.0,
        };
        let mut prev = s.v1.abs();
        for _ in 0..2000 {
            s = step_gripper(&s, &p, 0.0, 0.0, PHYSICS_DT).unwrap();
            let mag = s.v1.abs();
            assert!(mag <= prev + 1e-12, "|v1| must decay: {mag} > {prev}");
            prev = mag;
        }
    }

    // Half-rise time of an open-loop 5 -> 25 N force step checked against a
    // 100x finer reference integration of the same dynamics.
    #[test]
    fn step_t50_matches_fine_reference() {
        let p = params();

        let t50 = |dt: f64| -> f64 {
            let mut s = GripperState::equilibrium(&p, 5.0);
            let target = 5.0 + 0.5 * 20.0;
            let mut t = 0.0;
            let mut prev_f = measured_normal_force(&s, &p);
            loop {
                s = step_gripper(&s, &p, 25.0, 0.0, dt).unwrap();
                t += dt;
                let f = measured_normal_force(&s, &p);
                if prev_f < target && f >= target {
                    // Linear interpolation inside the crossing step.
                    return t - dt + dt * (target - prev_f) / (f - prev_f);
                }
                prev_f = f;
                assert!(t < 1.0, "force never crossed 50% of the change");
            }
        };

        let coarse = t50(PHYSICS_DT);
        let fine = t50(PHYSICS_DT / 100.0);
        assert!(coarse > 0.0 && coarse < 0.1, "t50 = {coarse}");
        assert_relative_eq!(coarse, fine, max_relative = 0.01);
    }

    #[test]
    fn normal_force_examples() {
        let p = params();
        let zero = GripperState::default();
        assert_eq!(measured_normal_force(&zero, &p), 0.0);

        let compressed = GripperState {
            x2: 7.0 / p.k2,
            ..Default::default()
        };
        assert_relative_eq!(measured_normal_force(&compressed, &p), 7.0);

        let moving = GripperState {
            x2: 1e-3,
            v2: 0.01,
            ..Default::default()
        };
        let p2 = GripperParams {
            k2: 1e4,
            d2: 10.0,
            ..p
        };
        assert_relative_eq!(measured_normal_force(&moving, &p2), 10.1);
    }

    #[test]
    fn normal_force_clamped_at_zero() {
        let p = params();
        let s = GripperState {
            x2: 1e-5,
            v2: -1.0,
            ..Default::default()
        };
        assert_eq!(measured_normal_force(&s, &p), 0.0);
    }

    #[test]
    fn friction_zero_velocity_gives_zero_wrench() {
        let cp = ContactParams::default();
        let w = friction_wrench(&PlanarVelocity::ZERO, 10.0, &cp).unwrap();
        assert_eq!(w, PlanarWrench::ZERO);
    }

    #[test]
    fn friction_fast_linear_slide_reaches_coulomb_level() {
        let cp = ContactParams::new(0.55, 0.5, 0.0, 2e-3, 6e-3);
        let v = PlanarVelocity::new(0.1, 0.0, 0.0);
        let w = friction_wrench(&v, 10.0, &cp).unwrap();
        // Stribeck tail exp(-(0.1/2e-3)^2) is ~0, so mu -> mu_c.
        assert_relative_eq!(w.fx, -5.0, max_relative = 1e-9);
        assert_eq!(w.fy, 0.0);
        assert_eq!(w.tau, 0.0);
    }

    #[test]
    fn friction_pure_spin_torque_is_mu_r_fn() {
        let cp = ContactParams::new(0.55, 0.5, 0.0, 2e-3, 8e-3);
        let omega = 10.0; // r*omega = 0.08 >> v_s
        let w = friction_wrench(&PlanarVelocity::new(0.0, 0.0, omega), 10.0, &cp).unwrap();
        assert_relative_eq!(w.tau.abs(), cp.mu_c * cp.r * 10.0, max_relative = 1e-6);
        assert_eq!(w.fx, 0.0);
        assert_eq!(w.fy, 0.0);
        assert!(w.tau < 0.0, "torque opposes spin");
    }

    #[test]
    fn friction_rejects_negative_normal_force() {
        let cp = ContactParams::default();
        let v = PlanarVelocity::new(0.1, 0.0, 0.0);
        assert!(matches!(
            friction_wrench(&v, -1.0, &cp),
            Err(SimError::NegativeNormalForce(_))
        ));
    }

    #[test]
    fn lyapunov_zero_at_equilibrium_and_kinetic_offset() {
        let p = params();
        let f_c = 9.0;
        let eq = GripperState::equilibrium(&p, f_c);
        assert_abs_diff_eq!(lyapunov_value(&eq, &p, f_c), 0.0, epsilon = 1e-15);

        let moving = GripperState { v1: 1.0, ..eq };
        assert_relative_eq!(lyapunov_value(&moving, &p, f_c), p.m1 / 2.0);
    }

    #[test]
    fn lyapunov_non_increasing_along_trajectory() {
        let p = params();
        let f_c = 18.0;
        let mut s = GripperState {
            x1: 0.0,
            v1: 0.0,
            x2: 0.0,
            v2: 0.0,
        };
        let mut values = Vec::new();
        for _ in 0..5000 {
            values.push(lyapunov_value(&s, &p, f_c));
            s = step_gripper(&s, &p, f_c, 0.0, PHYSICS_DT).unwrap();
        }
        values.push(lyapunov_value(&s, &p, f_c));
        let v_max = values.iter().cloned().fold(0.0, f64::max);
        for w in values.windows(2) {
            let rise = (w[1] - w[0]) / PHYSICS_DT;
            assert!(
                rise <= 1e-6 * v_max,
                "dV/dt = {rise} exceeds tolerance {}",
                1e-6 * v_max
            );
        }
    }

    #[test]
    fn non_finite_inputs_fault() {
        let p = params();
        let s = GripperState::default();
        assert!(step_gripper(&s, &p, f64::NAN, 0.0, PHYSICS_DT).is_err());
        let bad = GripperState {
            x1: f64::INFINITY,
            ..s
        };
        assert!(step_gripper(&bad, &p, 0.0, 0.0, PHYSICS_DT).is_err());
    }
}

//! Stick-slip dynamics of the grasped object.
//!
//! The object has two slip degrees of freedom in the contact plane: linear
//! displacement `p` along the gravity axis and rotation `theta` about the
//! grasp axis. Both are always integrated together so the ellipsoid limit
//! surface couples them (a contact sliding in pure spin cannot hold a
//! tangential load, which is what makes hinge-mode creep physical).
//!
//! Stick is explicit: the object is in full stick only while the net
//! applied load lies inside the static limit surface
//! `||S^-1 F|| <= sum_i mu_s_i f_n_i`, and a sliding degree of freedom
//! re-sticks when its relative velocity crosses zero within a step.

use crate::sim::stribeck_mu;
use crate::types::{ContactParams, ObjectParams, ObjectState, PlanarVelocity, PlanarWrench};

/// Gravity load routing for the object step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlipMode {
    /// Tangential gravity load only; no pendulum torque.
    Linear,
    /// Pendulum torque `-m g rho sin(theta)` about the grasp axis is active
    /// in addition to the tangential load.
    Rotational,
}

/// External conditions for one object step.
#[derive(Debug, Clone, Copy)]
pub struct ObjectEnv {
    /// Tangential load along the slip axis (N); `m*g` for a hanging object.
    pub gravity_force: f64,
    /// Additional scripted tangential disturbance (N).
    pub external_force: f64,
    /// Additional scripted spin disturbance (N·m).
    pub external_torque: f64,
    /// Gravitational acceleration used for the pendulum term (m/s²).
    pub gravity_accel: f64,
    /// Scripted finger tangential velocity (m/s); arm-driven.
    pub gripper_vel: f64,
    /// Scripted finger angular velocity (rad/s); arm-driven.
    pub gripper_omega: f64,
    /// Object externally supported (resting on a surface): its world motion
    /// is constrained and only the scripted gripper motion produces slip.
    pub anchored: bool,
}

impl Default for ObjectEnv {
    fn default() -> Self {
        ObjectEnv {
            gravity_force: 0.0,
            external_force: 0.0,
            external_torque: 0.0,
            gravity_accel: 9.81,
            gripper_vel: 0.0,
            gripper_omega: 0.0,
            anchored: false,
        }
    }
}

/// Result of one object step: the new state plus the wrench each contact
/// exerts on its finger (what the F/T sensors read).
#[derive(Debug, Clone, Copy)]
pub struct ObjectStep {
    pub state: ObjectState,
    pub reactions: [PlanarWrench; 2],
}

/// True when the combined load wrench lies inside the static limit surface
/// of the two contacts.
pub fn inside_static_surface(
    f_tangential: f64,
    torque: f64,
    f_n: [f64; 2],
    cp: [&ContactParams; 2],
) -> bool {
    let r_bar = 0.5 * (cp[0].r + cp[1].r);
    let load = f_tangential.hypot(torque / r_bar);
    let capacity = cp[0].mu_s * f_n[0] + cp[1].mu_s * f_n[1];
    load <= capacity
}

/// Advance the object by one step of stick-slip dynamics.
pub fn step_object(
    obj: &ObjectState,
    op: &ObjectParams,
    f_n: [f64; 2],
    cp: [&ContactParams; 2],
    env: &ObjectEnv,
    mode: SlipMode,
    dt: f64,
) -> ObjectStep {
    debug_assert!(dt > 0.0);
    let f_n = [f_n[0].max(0.0), f_n[1].max(0.0)];

    let tau_pendulum = match mode {
        SlipMode::Linear => 0.0,
        SlipMode::Rotational => {
            -op.mass * env.gravity_accel * op.cog_offset * obj.theta.sin()
        }
    };
    let load_f = env.gravity_force + env.external_force;
    let load_tau = tau_pendulum + env.external_torque;

    if env.anchored {
        return step_anchored(obj, f_n, cp, env);
    }

    let u_lin = obj.v - env.gripper_vel;
    let u_rot = obj.omega - env.gripper_omega;

    if u_lin == 0.0 && u_rot == 0.0 && inside_static_surface(load_f, load_tau, f_n, cp) {
        // Full stick: the object is carried by the gripper and the contacts
        // balance the applied load in equal shares.
        let v = env.gripper_vel;
        let omega = env.gripper_omega;
        let state = ObjectState {
            p: obj.p + dt * v,
            v,
            theta: obj.theta + dt * omega,
            omega,
            stuck_linear: true,
            stuck_rot: true,
        };
        let share = PlanarWrench::new(0.5 * load_f, 0.0, 0.5 * load_tau);
        return ObjectStep {
            state,
            reactions: [share, share],
        };
    }

    // Sliding (or breakaway). Friction direction comes from the relative
    // twist, or from the flow-rule direction S^-2 F on breakaway from rest.
    let r_bar = 0.5 * (cp[0].r + cp[1].r);
    let breakaway = u_lin == 0.0 && u_rot == 0.0;
    let (dir_lin, dir_rot) = if breakaway {
        let tw = load_tau / (r_bar * r_bar);
        let n = load_f.hypot(tw);
        if n == 0.0 {
            // No load and no motion: nothing to do.
            let mut state = *obj;
            state.stuck_linear = true;
            state.stuck_rot = true;
            state.v = env.gripper_vel;
            state.omega = env.gripper_omega;
            state.p += dt * state.v;
            state.theta += dt * state.omega;
            return ObjectStep {
                state,
                reactions: [PlanarWrench::ZERO; 2],
            };
        }
        (load_f / n, tw / n)
    } else {
        (u_lin, u_rot)
    };

    let mut friction = [PlanarWrench::ZERO; 2];
    for i in 0..2 {
        let s_i = dir_lin.hypot(cp[i].r * dir_rot);
        if s_i == 0.0 || f_n[i] == 0.0 {
            continue;
        }
        // On breakaway the slip speed is zero, so mu evaluates to mu_s; while
        // sliding the direction vector is the relative twist itself.
        let speed = if breakaway {
            0.0
        } else {
            u_lin.hypot(cp[i].r * u_rot)
        };
        let scale = -stribeck_mu(speed, cp[i]) * f_n[i] / s_i;
        friction[i] = PlanarWrench::new(
            scale * dir_lin,
            0.0,
            scale * cp[i].r * cp[i].r * dir_rot,
        );
    }

    let a_lin = (load_f + friction[0].fx + friction[1].fx) / op.mass;
    let a_rot = (load_tau + friction[0].tau + friction[1].tau) / op.inertia_grasp;

    let mut u_lin_new = u_lin + dt * a_lin;
    let mut u_rot_new = u_rot + dt * a_rot;
    if breakaway {
        // Friction computed at the impending direction may not reverse it.
        if u_lin_new * dir_lin < 0.0 {
            u_lin_new = 0.0;
        }
        if u_rot_new * dir_rot < 0.0 {
            u_rot_new = 0.0;
        }
    } else {
        // Re-stick a degree of freedom when its slip velocity crosses zero.
        if u_lin != 0.0 && u_lin_new * u_lin < 0.0 {
            u_lin_new = 0.0;
        }
        if u_rot != 0.0 && u_rot_new * u_rot < 0.0 {
            u_rot_new = 0.0;
        }
    }

    let full_stick = u_lin_new == 0.0 && u_rot_new == 0.0;
    let v = u_lin_new + env.gripper_vel;
    let omega = u_rot_new + env.gripper_omega;
    let state = ObjectState {
        p: obj.p + dt * v,
        v,
        theta: obj.theta + dt * omega,
        omega,
        stuck_linear: full_stick,
        stuck_rot: full_stick,
    };
    ObjectStep {
        state,
        reactions: [friction[0] * -1.0, friction[1] * -1.0],
    }
}

/// Object resting on an external support: world motion constrained, slip is
/// purely the scripted gripper motion. Used by the exploration phase.
fn step_anchored(
    obj: &ObjectState,
    f_n: [f64; 2],
    cp: [&ContactParams; 2],
    env: &ObjectEnv,
) -> ObjectStep {
    let v_rel = PlanarVelocity::new(-env.gripper_vel, 0.0, -env.gripper_omega);
    let at_rest = v_rel.vx == 0.0 && v_rel.omega == 0.0;
    let mut reactions = [PlanarWrench::ZERO; 2];
    if !at_rest {
        for i in 0..2 {
            if let Ok(w) = crate::sim::friction_wrench(&v_rel, f_n[i], cp[i]) {
                reactions[i] = w * -1.0;
            }
        }
    }
    let state = ObjectState {
        p: obj.p,
        v: 0.0,
        theta: obj.theta,
        omega: 0.0,
        stuck_linear: at_rest,
        stuck_rot: at_rest,
    };
    ObjectStep { state, reactions }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn cp() -> ContactParams {
        ContactParams::new(0.55, 0.5, 0.0, 2e-3, 6e-3)
    }

    fn op() -> ObjectParams {
        ObjectParams {
            mass: 0.15,
            inertia_grasp: 8e-4,
            cog_offset: 0.05,
            width: 0.07,
        }
    }

    #[test]
    fn stuck_object_inside_cone_stays_put() {
        let c = cp();
        let env = ObjectEnv {
            gravity_force: 0.15 * 9.81, // 1.47 N, capacity 2*0.55*5 = 5.5 N
            ..Default::default()
        };
        let s0 = ObjectState::stuck_at(0.0);
        let out = step_object(&s0, &op(), [5.0, 5.0], [&c, &c], &env, SlipMode::Linear, 1e-4);
        assert_eq!(out.state, s0);
        // Contacts carry the hanging load in equal shares.
        assert_relative_eq!(out.reactions[0].fx, 0.5 * env.gravity_force);
        assert_relative_eq!(out.reactions[1].fx, 0.5 * env.gravity_force);
    }

    #[test]
    fn free_fall_velocity_increment() {
        let c = cp();
        let o = op();
        let env = ObjectEnv {
            gravity_force: o.mass * 9.81,
            ..Default::default()
        };
        let s0 = ObjectState::stuck_at(0.0);
        let out = step_object(&s0, &o, [0.0, 0.0], [&c, &c], &env, SlipMode::Linear, 0.01);
        assert_relative_eq!(out.state.v, 0.0981, max_relative = 1e-12);
        assert!(!out.state.stuck_linear);
    }

    #[test]
    fn pendulum_at_rest_below_grasp_stays_at_rest() {
        let c = cp();
        let o = op();
        let env = ObjectEnv {
            gravity_force: o.mass * 9.81,
            ..Default::default()
        };
        let s0 = ObjectState::stuck_at(0.0);
        let out = step_object(&s0, &o, [5.0, 5.0], [&c, &c], &env, SlipMode::Rotational, 1e-4);
        assert_eq!(out.state.omega, 0.0);
        assert_eq!(out.state.theta, 0.0);
        assert!(out.state.stuck_rot);
    }

    #[test]
    fn breakaway_then_restick_when_velocity_crosses_zero() {
        let c = cp();
        let o = op();
        // Load just above the static capacity, then removed: the object
        // must start sliding and re-stick once velocity returns to zero.
        let capacity = 2.0 * c.mu_s * 2.0;
        let mut env = ObjectEnv {
            gravity_force: capacity * 1.05,
            ..Default::default()
        };
        let mut s = ObjectState::stuck_at(0.0);
        let dt = 1e-4;
        let mut slipped = false;
        for _ in 0..200 {
            let out = step_object(&s, &o, [2.0, 2.0], [&c, &c], &env, SlipMode::Linear, dt);
            s = out.state;
            if !s.stuck_linear {
                slipped = true;
            }
        }
        assert!(slipped, "load above capacity must break stick");
        assert!(s.v > 0.0);

        // Reverse the load so kinetic friction plus load decelerate it.
        env.gravity_force = -0.5;
        let mut restuck = false;
        for _ in 0..20000 {
            let out = step_object(&s, &o, [2.0, 2.0], [&c, &c], &env, SlipMode::Linear, dt);
            s = out.state;
            if s.stuck_linear {
                restuck = true;
                break;
            }
        }
        assert!(restuck, "velocity zero crossing must re-stick");
        assert_eq!(s.v, 0.0);
    }

    #[test]
    fn pendulum_swings_toward_vertical_when_slipping() {
        let c = cp();
        let o = op();
        let env = ObjectEnv {
            gravity_force: o.mass * 9.81,
            ..Default::default()
        };
        // Low grasp force: gravity torque at 60 degrees exceeds capacity.
        let mut s = ObjectState::stuck_at(60f64.to_radians());
        let dt = 1e-4;
        for _ in 0..1000 {
            s = step_object(&s, &o, [0.5, 0.5], [&c, &c], &env, SlipMode::Rotational, dt).state;
        }
        assert!(
            s.theta < 60f64.to_radians(),
            "hang angle must decrease, got {}",
            s.theta
        );
        assert!(s.omega < 0.0, "still swinging down, got {}", s.omega);
    }

    #[test]
    fn anchored_object_reports_kinetic_friction_of_scripted_motion() {
        let c = cp();
        let o = op();
        let env = ObjectEnv {
            gripper_vel: 0.0125,
            anchored: true,
            ..Default::default()
        };
        let s0 = ObjectState::stuck_at(0.0);
        let out = step_object(&s0, &o, [5.0, 5.0], [&c, &c], &env, SlipMode::Linear, 1e-4);
        // Finger slides down relative to the object: the object surface moves
        // up in the finger frame and drags the finger down-stream.
        let mu = stribeck_mu(0.0125, &c);
        assert_relative_eq!(out.reactions[0].fx.abs(), mu * 5.0, max_relative = 1e-12);
        assert_eq!(out.state.p, 0.0);
        assert!(!out.state.stuck_linear);
    }

    #[test]
    fn spin_slip_cannot_hold_tangential_load() {
        let c = cp();
        let o = op();
        // Object at rest linearly but spinning relative to the gripper: the
        // limit surface leaves no tangential capacity, so it must creep.
        let env = ObjectEnv {
            gravity_force: 0.5,
            gripper_omega: -0.5,
            ..Default::default()
        };
        let s0 = ObjectState {
            p: 0.0,
            v: 0.0,
            theta: 0.0,
            omega: 0.0,
            stuck_linear: false,
            stuck_rot: false,
        };
        let out = step_object(&s0, &o, [5.0, 5.0], [&c, &c], &env, SlipMode::Linear, 1e-4);
        assert!(out.state.v > 0.0, "loaded DOF must creep during spin slip");
    }

    #[test]
    fn stick_share_reaction_stays_inside_static_surface() {
        let c = cp();
        let env = ObjectEnv {
            gravity_force: 1.0,
            external_torque: 0.002,
            ..Default::default()
        };
        let s0 = ObjectState::stuck_at(0.0);
        let out = step_object(&s0, &op(), [5.0, 5.0], [&c, &c], &env, SlipMode::Linear, 1e-4);
        assert!(out.state.stuck_linear);
        for w in out.reactions {
            let load = w.fx.hypot(w.tau / c.r);
            assert!(load <= c.mu_s * 5.0 + 1e-12);
        }
        assert_abs_diff_eq!(
            out.reactions[0].fx + out.reactions[1].fx,
            env.gravity_force,
            epsilon = 1e-12
        );
    }
}

//! The four slip-aware control laws.

use super::{AveragedSensing, SlipCtrlState, SlipGains, TrajectorySpec};
use crate::slip::trapezoid;

/// Numerical-stability epsilon of the limit-surface ratios.
const EPS: f64 = 1e-5;
/// The gripper's maximum grasp force (N); trajectory-law integrals are
/// clamped so the pre-floor command stays inside [0, F_N_MAX].
pub const F_N_MAX: f64 = 45.0;
/// Slip-force estimates hold while the measured acceleration magnitude is
/// at or above this level.
const ACCEL_GATE: f64 = 0.1;
/// Dwell below the approach-speed threshold before "not moving towards the
/// target" latches (s).
const STALL_DWELL: f64 = 0.25;
/// Fraction of cruise velocity that still counts as approaching.
const APPROACH_FRACTION: f64 = 0.1;

/// Intermediate quantities of the slip-avoidance law, exposed for tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvoidanceTerms {
    /// Norm of the averaged tangential force (N).
    pub f_t: f64,
    /// Tangential share of the limit-surface load.
    pub gamma_t: f64,
    /// Torsional share of the limit-surface load.
    pub gamma_tau: f64,
    /// Grasp force needed to counter the tangential load (N).
    pub f_n_t_min: f64,
    /// Grasp force needed to counter the spin torque (N).
    pub f_n_tau_min: f64,
}

/// Decompose the averaged wrench into the minimum grasp forces of the
/// ellipsoid limit-surface model, `S = diag(1, 1, r)`.
pub fn avoidance_terms(s: &AveragedSensing) -> AvoidanceTerms {
    let f_t = s.wrench.tangential_norm();
    let s_inv_norm = (s.wrench.fx * s.wrench.fx
        + s.wrench.fy * s.wrench.fy
        + (s.wrench.tau / s.r) * (s.wrench.tau / s.r))
        .sqrt();
    let gamma_t = (f_t + EPS) / (s_inv_norm + EPS);
    let gamma_tau = (s.wrench.tau.abs() / s.r + EPS) / (s_inv_norm + EPS);
    AvoidanceTerms {
        f_t,
        gamma_t,
        gamma_tau,
        f_n_t_min: f_t / (s.mu_c * gamma_t),
        f_n_tau_min: s.wrench.tau.abs() / (s.mu_c * s.r * gamma_tau),
    }
}

/// Slip-avoidance: hold the measured load wrench inside the margin-scaled
/// limit surface, with a velocity term against active slip. Output rises
/// instantly and decays through the exponential filter.
pub fn slip_avoidance_update(s: &AveragedSensing, gains: &SlipGains, f_d_prev: f64) -> f64 {
    let terms = avoidance_terms(s);
    let slip_norm = (s.velocity.vx * s.velocity.vx
        + s.velocity.vy * s.velocity.vy
        + (s.r * s.velocity.omega) * (s.r * s.velocity.omega))
        .sqrt();
    let f_n_c = gains.gamma_s
        * terms
            .f_n_t_min
            .max(terms.f_n_tau_min)
            .max(gains.f_n_s_min)
        + gains.k_p_s * slip_norm;
    if f_n_c > f_d_prev {
        f_n_c
    } else {
        gains.alpha_s * f_d_prev + (1.0 - gains.alpha_s) * f_n_c
    }
}

/// Output of one trajectory-controller tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipUpdate {
    pub f_d: f64,
    pub state: SlipCtrlState,
    /// Exit conditions for the mode switch.
    pub reached: bool,
    pub trajectory_elapsed: bool,
    pub approaching: bool,
}

/// Linear slip control: track a displacement trajectory by modulating the
/// grasp force around the slip-holding force `f_s`.
pub fn linear_slip_update(
    s: &AveragedSensing,
    gains: &SlipGains,
    traj: &TrajectorySpec,
    state: &SlipCtrlState,
) -> SlipUpdate {
    let v_t = s.velocity.tangential_norm();
    let v_dot = (v_t - state.prev_speed) / gains.t_h;

    // Slip-force estimate: blend toward f_t/mu_c, held during accelerations
    // so force transients do not corrupt it.
    let updated = v_dot < ACCEL_GATE;
    let f_slip = if updated {
        gains.alpha * state.f_slip + (1.0 - gains.alpha) * s.wrench.tangential_norm() / s.mu_c
    } else {
        state.f_slip
    };

    let p = state.p + v_t * gains.t_h;
    let t = state.t_in_mode;
    let (p_d, v_d) = trapezoid(traj, t);
    let v_c = v_d + gains.k_p_v * (p_d - p);

    let mut integral = state.integral + (v_c - v_t) * gains.t_h;
    let direct = f_slip - gains.k_p_l * f_slip * (v_c - v_t) + gains.k_d_l * f_slip * v_dot;
    let mut f_n_c = direct - gains.k_i_l * integral;
    // Anti-windup by back-calculation against the gripper's force range.
    if f_n_c > F_N_MAX {
        integral = (direct - F_N_MAX) / gains.k_i_l;
        f_n_c = F_N_MAX;
    } else if f_n_c < 0.0 {
        integral = direct / gains.k_i_l;
        f_n_c = 0.0;
    }
    let f_d = f_n_c.max(gains.f_n_min);

    let slow_timer = if v_t < APPROACH_FRACTION * traj.cruise_velocity() {
        state.slow_timer + gains.t_h
    } else {
        0.0
    };

    SlipUpdate {
        f_d,
        state: SlipCtrlState {
            t_in_mode: t + gains.t_h,
            p,
            integral,
            f_slip,
            f_d_prev: f_d,
            prev_speed: v_t,
            slow_timer,
            slip_force_updated: updated,
            ..*state
        },
        reached: p >= traj.target,
        trajectory_elapsed: t > traj.duration,
        approaching: slow_timer < STALL_DWELL,
    }
}

/// Rotational slip control: the rotational analog of the linear law, with
/// the additional linear-slip guard `f_t/mu_c` in the output max.
pub fn rotational_slip_update(
    s: &AveragedSensing,
    gains: &SlipGains,
    traj: &TrajectorySpec,
    state: &SlipCtrlState,
) -> SlipUpdate {
    let omega_a = s.velocity.omega.abs();
    let omega_dot = (omega_a - state.prev_speed) / gains.t_h;

    let terms = avoidance_terms(s);
    let updated = omega_dot.abs() < ACCEL_GATE;
    let f_slip = if updated {
        gains.alpha * state.f_slip + (1.0 - gains.alpha) * terms.f_n_tau_min
    } else {
        state.f_slip
    };

    let theta = state.p + omega_a * gains.t_h;
    let t = state.t_in_mode;
    let (theta_d, omega_d) = trapezoid(traj, t);
    let omega_c = omega_d + gains.k_p_omega * (theta_d - theta);
    let e_omega = omega_c - omega_a;

    let mut integral = state.integral + e_omega * gains.t_h;
    let direct = f_slip - gains.k_p_tau * f_slip * e_omega + gains.k_d_tau * f_slip * omega_dot;
    let mut f_n_c = direct - gains.k_i_tau * integral;
    if f_n_c > F_N_MAX {
        integral = (direct - F_N_MAX) / gains.k_i_tau;
        f_n_c = F_N_MAX;
    } else if f_n_c < 0.0 {
        integral = direct / gains.k_i_tau;
        f_n_c = 0.0;
    }
    let f_d = f_n_c.max(terms.f_t / s.mu_c).max(gains.f_n_min);

    let slow_timer = if omega_a < APPROACH_FRACTION * traj.cruise_velocity() {
        state.slow_timer + gains.t_h
    } else {
        0.0
    };

    SlipUpdate {
        f_d,
        state: SlipCtrlState {
            t_in_mode: t + gains.t_h,
            p: theta,
            integral,
            f_slip,
            f_d_prev: f_d,
            prev_speed: omega_a,
            slow_timer,
            slip_force_updated: updated,
            ..*state
        },
        reached: theta >= traj.target,
        trajectory_elapsed: t > traj.duration,
        approaching: slow_timer < STALL_DWELL,
    }
}

/// Hinge mode: let the object rotate freely in hand while suppressing
/// linear slip, `f_nc = gamma_h f_t/mu_c + k_ph v_t`. Memoryless.
pub fn hinge_update(s: &AveragedSensing, gains: &SlipGains) -> f64 {
    let f_n_c =
        gains.gamma_h * s.wrench.tangential_norm() / s.mu_c + gains.k_p_h * s.velocity.tangential_norm();
    f_n_c.max(gains.f_n_min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{PlanarVelocity, PlanarWrench};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn sensing(wrench: PlanarWrench, velocity: PlanarVelocity, mu_c: f64, r: f64) -> AveragedSensing {
        AveragedSensing {
            wrench,
            velocity,
            mu_c,
            r,
        }
    }

    #[test]
    fn avoidance_pure_tangential_load() {
        let s = sensing(
            PlanarWrench::new(1.0, 0.0, 0.0),
            PlanarVelocity::ZERO,
            0.5,
            5e-3,
        );
        let gains = SlipGains::default();
        let terms = avoidance_terms(&s);
        assert_relative_eq!(terms.gamma_t, 1.0, max_relative = 1e-4);
        assert_relative_eq!(terms.f_n_t_min, 2.0, max_relative = 1e-4);
        assert_abs_diff_eq!(terms.f_n_tau_min, 0.0, epsilon = 1e-9);
        let f_d = slip_avoidance_update(&s, &gains, 0.0);
        assert_relative_eq!(f_d, 4.0, max_relative = 1e-4);
    }

    #[test]
    fn avoidance_standing_minimum() {
        let s = sensing(PlanarWrench::ZERO, PlanarVelocity::ZERO, 0.5, 5e-3);
        let gains = SlipGains::default();
        let f_d = slip_avoidance_update(&s, &gains, 0.0);
        assert_relative_eq!(f_d, gains.gamma_s * gains.f_n_s_min);
    }

    #[test]
    fn avoidance_pure_torque_load() {
        let s = sensing(
            PlanarWrench::new(0.0, 0.0, 0.01),
            PlanarVelocity::ZERO,
            0.5,
            5e-3,
        );
        let gains = SlipGains::default();
        let terms = avoidance_terms(&s);
        assert_relative_eq!(terms.gamma_tau, 1.0, max_relative = 1e-4);
        assert_relative_eq!(terms.f_n_tau_min, 4.0, max_relative = 1e-4);
        let f_d = slip_avoidance_update(&s, &gains, 0.0);
        assert_relative_eq!(f_d, 8.0, max_relative = 1e-4);
    }

    #[test]
    fn avoidance_decay_follows_geometric_law() {
        let s = sensing(PlanarWrench::ZERO, PlanarVelocity::ZERO, 0.5, 5e-3);
        let gains = SlipGains::default();
        let floor = gains.gamma_s * gains.f_n_s_min;
        let f0 = 20.0;
        let mut f_d = f0;
        for k in 1..=40 {
            f_d = slip_avoidance_update(&s, &gains, f_d);
            let expected = floor + gains.alpha_s.powi(k) * (f0 - floor);
            assert_relative_eq!(f_d, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn avoidance_rises_instantly() {
        let gains = SlipGains::default();
        let quiet = sensing(PlanarWrench::ZERO, PlanarVelocity::ZERO, 0.5, 5e-3);
        let loaded = sensing(
            PlanarWrench::new(3.0, 0.0, 0.0),
            PlanarVelocity::ZERO,
            0.5,
            5e-3,
        );
        let f_before = slip_avoidance_update(&quiet, &gains, 4.0);
        let f_after = slip_avoidance_update(&loaded, &gains, f_before);
        assert_relative_eq!(f_after, 2.0 * 3.0 / 0.5, max_relative = 1e-4);
    }

    #[test]
    fn avoidance_scale_covariance() {
        let base = sensing(
            PlanarWrench::new(0.7, -0.3, 0.004),
            PlanarVelocity::ZERO,
            0.45,
            6e-3,
        );
        let t1 = avoidance_terms(&base);
        for lambda in [2.0, 10.0] {
            let scaled = sensing(base.wrench * lambda, PlanarVelocity::ZERO, 0.45, 6e-3);
            let t2 = avoidance_terms(&scaled);
            assert_relative_eq!(t2.f_n_t_min, lambda * t1.f_n_t_min, max_relative = 1e-3);
            assert_relative_eq!(t2.f_n_tau_min, lambda * t1.f_n_tau_min, max_relative = 1e-3);
            assert_relative_eq!(t2.gamma_t, t1.gamma_t, max_relative = 1e-3);
            assert_relative_eq!(t2.gamma_tau, t1.gamma_tau, max_relative = 1e-3);
        }
    }

    #[test]
    fn linear_perfect_tracking_outputs_slip_force_floor() {
        let gains = SlipGains::default();
        let traj = TrajectorySpec::new(0.02, 5.0);
        // Mid-cruise state with exact tracking and a settled f_s.
        let v_c = traj.cruise_velocity();
        let (p_d, _) = trapezoid(&traj, 2.5);
        let state = SlipCtrlState {
            t_in_mode: 2.5,
            p: p_d,
            integral: 0.0,
            f_slip: 3.0,
            prev_speed: v_c,
            ..SlipCtrlState::enter(super::super::ControlMode::LinearSlip, 0.0)
        };
        // f_t/mu_c chosen so the blend leaves f_slip unchanged.
        let s = sensing(
            PlanarWrench::new(1.5, 0.0, 0.0),
            PlanarVelocity::new(v_c, 0.0, 0.0),
            0.5,
            5e-3,
        );
        let out = linear_slip_update(&s, &gains, &traj, &state);
        // p advances by one tick of cruise, p_d too: correction terms cancel
        // except the tiny residual; f_d stays within a few percent of f_s.
        assert_relative_eq!(out.f_d, 3.0, max_relative = 0.05);
        assert!(out.state.slip_force_updated);
    }

    #[test]
    fn linear_stuck_object_decreases_force() {
        let gains = SlipGains::default();
        let traj = TrajectorySpec::new(0.02, 5.0);
        let mut state = SlipCtrlState {
            f_slip: 3.0,
            t_in_mode: 1.0,
            ..SlipCtrlState::enter(super::super::ControlMode::LinearSlip, 0.0)
        };
        let s = sensing(
            PlanarWrench::new(1.5, 0.0, 0.0),
            PlanarVelocity::ZERO,
            0.5,
            5e-3,
        );
        let mut prev_f = f64::INFINITY;
        for _ in 0..20 {
            let out = linear_slip_update(&s, &gains, &traj, &state);
            state = out.state;
            assert!(
                out.f_d <= prev_f + 1e-12 || out.f_d == gains.f_n_min,
                "force must decrease toward breakaway"
            );
            prev_f = out.f_d;
        }
        assert!(prev_f < 3.0);
    }

    #[test]
    fn linear_floor_is_f_n_min() {
        let gains = SlipGains::default();
        let traj = TrajectorySpec::new(0.02, 5.0);
        // Huge tracking deficit drives f_nc to the clamp at zero; the output
        // floors at f_n_min.
        let state = SlipCtrlState {
            f_slip: 1.0,
            integral: 10.0,
            t_in_mode: 2.0,
            ..SlipCtrlState::enter(super::super::ControlMode::LinearSlip, 0.0)
        };
        let s = sensing(
            PlanarWrench::new(0.5, 0.0, 0.0),
            PlanarVelocity::ZERO,
            0.5,
            5e-3,
        );
        let out = linear_slip_update(&s, &gains, &traj, &state);
        assert_eq!(out.f_d, gains.f_n_min);
    }

    #[test]
    fn slip_force_held_during_acceleration() {
        let gains = SlipGains::default();
        let traj = TrajectorySpec::new(0.02, 5.0);
        let state = SlipCtrlState {
            f_slip: 3.0,
            prev_speed: 0.0,
            t_in_mode: 1.0,
            ..SlipCtrlState::enter(super::super::ControlMode::LinearSlip, 0.0)
        };
        // Speed jumps by 0.005 in one tick: v_dot ~ 0.6 >= 0.1 gate.
        let s = sensing(
            PlanarWrench::new(2.9, 0.0, 0.0),
            PlanarVelocity::new(0.005, 0.0, 0.0),
            0.5,
            5e-3,
        );
        let out = linear_slip_update(&s, &gains, &traj, &state);
        assert!(!out.state.slip_force_updated);
        assert_eq!(out.state.f_slip, 3.0);
    }

    #[test]
    fn rotational_guard_floor_from_hanging_load() {
        let gains = SlipGains::default();
        let traj = TrajectorySpec::new(45f64.to_radians(), 5.0);
        let state = SlipCtrlState {
            f_slip: 0.0,
            t_in_mode: 0.0,
            ..SlipCtrlState::enter(super::super::ControlMode::RotationalSlip, 0.0)
        };
        // 100 g object hanging: f_t = 0.981 N, mu_c = 0.5 -> guard 1.962 N.
        let s = sensing(
            PlanarWrench::new(0.981, 0.0, 0.0),
            PlanarVelocity::ZERO,
            0.5,
            5e-3,
        );
        let out = rotational_slip_update(&s, &gains, &traj, &state);
        assert!(out.f_d >= 1.962 - 1e-9);
    }

    #[test]
    fn rotational_perfect_tracking_outputs_max_of_floors() {
        let gains = SlipGains::default();
        let traj = TrajectorySpec::new(45f64.to_radians(), 5.0);
        let omega_c = traj.cruise_velocity();
        let (theta_d, _) = trapezoid(&traj, 2.5);
        let state = SlipCtrlState {
            t_in_mode: 2.5,
            p: theta_d,
            f_slip: 12.0,
            prev_speed: omega_c,
            ..SlipCtrlState::enter(super::super::ControlMode::RotationalSlip, 0.0)
        };
        let s = sensing(
            PlanarWrench::new(0.981, 0.0, 12.0 * 0.5 * 5e-3),
            PlanarVelocity::new(0.0, 0.0, omega_c),
            0.5,
            5e-3,
        );
        let out = rotational_slip_update(&s, &gains, &traj, &state);
        assert_relative_eq!(out.f_d, 12.0, max_relative = 0.1);
    }

    #[test]
    fn hinge_examples() {
        let gains = SlipGains::default();
        let s = sensing(
            PlanarWrench::new(1.0, 0.0, 0.0),
            PlanarVelocity::ZERO,
            0.5,
            5e-3,
        );
        assert_relative_eq!(hinge_update(&s, &gains), 2.8);

        let quiet = sensing(PlanarWrench::ZERO, PlanarVelocity::ZERO, 0.5, 5e-3);
        assert_eq!(hinge_update(&quiet, &gains), gains.f_n_min);
    }
}

//! Outer-loop slip-aware controllers running at the 120 Hz sensor rate.
//!
//! All four controllers output a desired grasp force `f_d` for the inner
//! loop. Measured quantities are bar averages of the two contact sensors
//! expressed in the middle frame; displacement is integrated from the
//! fused speed norms, assuming the object moves along the gravity field.

mod controllers;
mod trajectory;

pub use controllers::{
    avoidance_terms, hinge_update, linear_slip_update, rotational_slip_update,
    slip_avoidance_update, AvoidanceTerms, SlipUpdate, F_N_MAX,
};
pub use trajectory::{trapezoid, TrajectorySpec};

use serde::{Deserialize, Serialize};

use crate::types::{PlanarVelocity, PlanarWrench};

/// Control mode of the outer loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlMode {
    /// Scripted `f_d` profile, no slip controller.
    Direct,
    Avoidance,
    LinearSlip,
    RotationalSlip,
    Hinge,
}

impl ControlMode {
    pub fn code(&self) -> u8 {
        match self {
            ControlMode::Direct => 0,
            ControlMode::Avoidance => 1,
            ControlMode::LinearSlip => 2,
            ControlMode::RotationalSlip => 3,
            ControlMode::Hinge => 4,
        }
    }
}

/// Slip-aware control gains; defaults are the tuned values of the real
/// system. `alpha_s` (avoidance decay) and `t_h` (outer period, the 84:1
/// divisor of the 10 kHz physics rate) are configuration, not identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlipGains {
    pub gamma_s: f64,
    pub gamma_h: f64,
    pub alpha: f64,
    pub alpha_s: f64,
    /// Grasp-force floor of the trajectory and hinge controllers (N).
    pub f_n_min: f64,
    /// Standing minimum inside the avoidance max (N).
    pub f_n_s_min: f64,
    pub k_p_v: f64,
    pub k_p_omega: f64,
    pub k_p_l: f64,
    pub k_p_tau: f64,
    pub k_i_l: f64,
    pub k_i_tau: f64,
    pub k_d_l: f64,
    pub k_d_tau: f64,
    pub k_p_s: f64,
    pub k_p_h: f64,
    /// Outer-loop step (s).
    pub t_h: f64,
}

impl Default for SlipGains {
    fn default() -> Self {
        SlipGains {
            gamma_s: 2.0,
            gamma_h: 1.4,
            alpha: 0.95,
            alpha_s: 0.95,
            f_n_min: 0.9,
            f_n_s_min: 2.0,
            k_p_v: 2.0,
            k_p_omega: 2.0,
            k_p_l: 50.0,
            k_p_tau: 2.0,
            k_i_l: 1000.0,
            k_i_tau: 40.0,
            k_d_l: 0.1,
            k_d_tau: 0.05,
            k_p_s: 100.0,
            k_p_h: 100.0,
            t_h: 84.0 / 10_000.0,
        }
    }
}

/// Bar-averaged sensing consumed by the outer loop: mean wrench and mean
/// fused velocity of the two contact sensors in the middle frame, plus the
/// averaged contact estimates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AveragedSensing {
    pub wrench: PlanarWrench,
    pub velocity: PlanarVelocity,
    pub mu_c: f64,
    pub r: f64,
}

impl AveragedSensing {
    pub fn from_pair(
        wrenches: [PlanarWrench; 2],
        velocities: [PlanarVelocity; 2],
        mu_c: [f64; 2],
        r: [f64; 2],
    ) -> Self {
        AveragedSensing {
            wrench: (wrenches[0] + wrenches[1]) * 0.5,
            velocity: PlanarVelocity::new(
                0.5 * (velocities[0].vx + velocities[1].vx),
                0.5 * (velocities[0].vy + velocities[1].vy),
                0.5 * (velocities[0].omega + velocities[1].omega),
            ),
            mu_c: 0.5 * (mu_c[0] + mu_c[1]),
            r: 0.5 * (r[0] + r[1]),
        }
    }
}

/// State carried by the trajectory-following controllers between ticks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlipCtrlState {
    pub mode: ControlMode,
    /// Time since mode entry (s).
    pub t_in_mode: f64,
    /// Integrated displacement since mode entry (m or rad).
    pub p: f64,
    /// Velocity-error integral.
    pub integral: f64,
    /// Slip-force estimate (`f_s` or `f_tau`, N).
    pub f_slip: f64,
    /// Previous outer-loop output, for the avoidance decay filter.
    pub f_d_prev: f64,
    /// Previous speed sample for the backward-Euler derivative.
    pub prev_speed: f64,
    /// Time accumulated below the approach-speed threshold (s).
    pub slow_timer: f64,
    /// Gate state of the last tick: true when the slip-force estimate was
    /// updated rather than held.
    pub slip_force_updated: bool,
}

impl SlipCtrlState {
    /// Fresh state on mode entry. Displacement integration restarts; the
    /// previous output seeds the decay filter for continuity.
    pub fn enter(mode: ControlMode, f_d_prev: f64) -> Self {
        SlipCtrlState {
            mode,
            t_in_mode: 0.0,
            p: 0.0,
            integral: 0.0,
            f_slip: 0.0,
            f_d_prev,
            prev_speed: 0.0,
            slow_timer: 0.0,
            slip_force_updated: false,
        }
    }
}

impl Default for SlipCtrlState {
    fn default() -> Self {
        SlipCtrlState::enter(ControlMode::Avoidance, 0.0)
    }
}

/// Exit conditions evaluated by the trajectory controllers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SwitchConditions {
    /// Integrated displacement reached the target.
    pub reached: bool,
    /// Trajectory time has run out.
    pub trajectory_elapsed: bool,
    /// Object still moving toward the target (speed above 10% of cruise
    /// for the trailing quarter second).
    pub approaching: bool,
}

/// Mode transition rule: trajectory modes exit to slip-avoidance when the
/// target is reached, or when time has run out and the object is no longer
/// approaching the target. Hinge and avoidance persist until commanded.
pub fn mode_switch(mode: ControlMode, c: &SwitchConditions) -> ControlMode {
    match mode {
        ControlMode::LinearSlip | ControlMode::RotationalSlip => {
            if c.reached || (c.trajectory_elapsed && !c.approaching) {
                ControlMode::Avoidance
            } else {
                mode
            }
        }
        other => other,
    }
}

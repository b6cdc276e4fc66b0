//! Two-phase contact exploration at pick-up.
//!
//! With the object resting on its support, the gripper grasps at `f_g`,
//! dwells, slides down by `d_e`, then rotates by `theta_e` and back. The
//! friction coefficients come out of the linear phase, the rim radius out
//! of the rotational phase; each finger is evaluated independently. The
//! whole script fits in two seconds.

use serde::{Deserialize, Serialize};

use crate::error::{EstimationError, HarnessError};
use crate::estimation::{estimate_friction, estimate_radius, ContactSampleLog};
use crate::harness::scenario::{ArmMotionKind, ArmSegment};
use crate::harness::world::World;
use crate::types::ContactParams;

/// Exploration script parameters; defaults are the tuned values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplorationConfig {
    /// Exploration grasp force (N).
    pub f_g: f64,
    /// Settle time after grasping (s).
    pub t1: f64,
    /// Linear move duration (s).
    pub t2: f64,
    /// Linear displacement (m).
    pub d_e: f64,
    /// Rotation angle (rad).
    pub theta_e: f64,
    /// Rotation duration, each way (s).
    pub t_theta: f64,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        ExplorationConfig {
            f_g: 5.0,
            t1: 0.2,
            t2: 0.8,
            d_e: 0.010,
            theta_e: 10f64.to_radians(),
            t_theta: 0.5,
        }
    }
}

impl ExplorationConfig {
    pub fn total_duration(&self) -> f64 {
        self.t1 + self.t2 + 2.0 * self.t_theta
    }

    /// Mean linear exploration speed (m/s).
    pub fn mean_speed(&self) -> f64 {
        self.d_e / self.t2
    }
}

/// Identified parameters for one finger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FingerEstimate {
    pub params: ContactParams,
    /// Below the friction floor the radius quotient is meaningless.
    pub radius_reliable: bool,
    pub kinetic_samples: usize,
    pub rotation_samples: usize,
}

/// Result of one exploration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationOutcome {
    pub fingers: [FingerEstimate; 2],
    /// Scripted duration (s).
    pub duration: f64,
}

impl ExplorationOutcome {
    pub fn mu_c_bar(&self) -> f64 {
        0.5 * (self.fingers[0].params.mu_c + self.fingers[1].params.mu_c)
    }

    pub fn r_bar(&self) -> f64 {
        0.5 * (self.fingers[0].params.r + self.fingers[1].params.r)
    }
}

/// Friction level below which the radius estimate is flagged unreliable.
const MU_C_RELIABLE_MIN: f64 = 0.05;

/// Run the scripted exploration on a world whose object rests on its
/// support, then identify per-finger contact parameters from the logged
/// 120 Hz samples.
pub fn run_exploration(
    cfg: &ExplorationConfig,
    world: &mut World,
) -> Result<ExplorationOutcome, HarnessError> {
    let t0 = world.t();
    world.set_direct_force(cfg.f_g);
    world.push_arm_segment(ArmSegment {
        t: t0 + cfg.t1,
        kind: ArmMotionKind::Translate,
        amount: cfg.d_e,
        duration: cfg.t2,
    });
    world.push_arm_segment(ArmSegment {
        t: t0 + cfg.t1 + cfg.t2,
        kind: ArmMotionKind::Rotate,
        amount: cfg.theta_e,
        duration: cfg.t_theta,
    });
    world.push_arm_segment(ArmSegment {
        t: t0 + cfg.t1 + cfg.t2 + cfg.t_theta,
        kind: ArmMotionKind::Rotate,
        amount: -cfg.theta_e,
        duration: cfg.t_theta,
    });

    let log_start = [
        world.outer_log[0].samples.len(),
        world.outer_log[1].samples.len(),
    ];
    world.run_for(cfg.total_duration())?;

    let mut fingers = Vec::with_capacity(2);
    for finger in 0..2 {
        let mut episode = ContactSampleLog::new(finger as u8);
        episode.samples = world.outer_log[finger].samples[log_start[finger]..].to_vec();
        fingers.push(estimate_finger(&episode, world.contact_truth[finger].v_s)?);
    }

    Ok(ExplorationOutcome {
        fingers: [fingers[0], fingers[1]],
        duration: cfg.total_duration(),
    })
}

/// Identify one finger's contact parameters from an exploration episode.
/// The Stribeck velocity is not identified; it stays at the configured
/// default carried by the world.
pub fn estimate_finger(
    episode: &ContactSampleLog,
    v_s: f64,
) -> Result<FingerEstimate, EstimationError> {
    let friction = estimate_friction(episode)?;
    let radius = estimate_radius(episode, friction.mu_c.max(1e-6))?;
    let radius_reliable = friction.mu_c >= MU_C_RELIABLE_MIN;
    Ok(FingerEstimate {
        params: ContactParams {
            mu_s: friction.mu_s,
            mu_c: friction.mu_c,
            mu_v: friction.mu_v,
            v_s,
            r: radius.r,
        },
        radius_reliable,
        kinetic_samples: friction.kinetic_samples,
        rotation_samples: radius.samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_fits_in_two_seconds_and_matches_mean_speed() {
        let cfg = ExplorationConfig::default();
        assert!(cfg.total_duration() <= 2.0 + 1e-12);
        assert!((cfg.mean_speed() - 0.0125).abs() < 1e-12);
    }
}

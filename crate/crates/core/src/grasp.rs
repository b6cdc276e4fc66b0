//! Inner-loop grasp force controller: feedforward plus a scaled PI with
//! anti-windup, running at 500 Hz, and the force-to-voltage map.
//!
//! The error-dependent scaling factor `eta = gamma*de^2 + 1` suppresses the
//! P and I terms right after large reference changes so the feedforward
//! does the work, which keeps overshoot low.

use serde::{Deserialize, Serialize};

use crate::error::SimError;

/// Gains of the inner-loop controller. Defaults are the tuned values of the
/// real gripper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspGains {
    pub k_p: f64,
    /// Integral gain (1/s).
    pub k_i: f64,
    /// Bound on the integral contribution (N).
    pub i_max: f64,
    /// Overshoot-scaling coefficient.
    pub gamma: f64,
    /// Controller period (s); 500 Hz.
    pub t_s: f64,
}

impl Default for GraspGains {
    fn default() -> Self {
        GraspGains {
            k_p: 2.0,
            k_i: 100.0,
            i_max: 10.0,
            gamma: 5.0,
            t_s: 2e-3,
        }
    }
}

/// Controller state carried between 500 Hz ticks.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GraspCtrlState {
    /// Accumulated error (N·s), clamped so `|k_i * integral| <= i_max/eta`.
    pub integral: f64,
    pub prev_error: f64,
}

/// One controller tick: returns the commanded force and the updated state.
///
/// `e = f_d - f_n`, `eta = gamma*(e - prev_e)^2 + 1`, the integral is
/// accumulated then clamped symmetrically to `i_max/(eta*k_i)`, and
/// `f_c = f_d + (k_p/eta)*e + k_i*integral`. The clamp acts on the stored
/// integral so saturation cannot hide accumulated windup.
pub fn grasp_update(
    state: &GraspCtrlState,
    f_d: f64,
    f_n: f64,
    gains: &GraspGains,
) -> Result<(f64, GraspCtrlState), SimError> {
    if !(f_d.is_finite() && f_n.is_finite() && state.integral.is_finite()) {
        return Err(SimError::NonFinite("grasp_update"));
    }

    let e = f_d - f_n;
    let de = e - state.prev_error;
    let eta = gains.gamma * de * de + 1.0;

    let i_bound = gains.i_max / (eta * gains.k_i);
    let integral = (state.integral + e * gains.t_s).clamp(-i_bound, i_bound);

    let f_c = f_d + gains.k_p / eta * e + gains.k_i * integral;
    Ok((
        f_c,
        GraspCtrlState {
            integral,
            prev_error: e,
        },
    ))
}

/// Map a commanded force to the motor target voltage, `V_t = -f_c/k_f`.
/// Positive voltage opens the gripper.
pub fn force_to_voltage(f_c: f64, k_f: f64) -> f64 {
    debug_assert!(k_f > 0.0);
    -f_c / k_f
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn zero_error_is_pure_feedforward() {
        let gains = GraspGains::default();
        let (f_c, s) = grasp_update(&GraspCtrlState::default(), 10.0, 10.0, &gains).unwrap();
        assert_eq!(f_c, 10.0);
        assert_eq!(s.integral, 0.0);
    }

    #[test]
    fn large_step_is_suppressed_by_eta() {
        let gains = GraspGains::default();
        let (f_c, s) = grasp_update(&GraspCtrlState::default(), 25.0, 5.0, &gains).unwrap();
        // e = 20, de = 20, eta = 5*400 + 1 = 2001.
        let eta = 2001.0;
        let p_term = 2.0 * 20.0 / eta;
        let i_term = (20.0 * 2e-3f64).min(10.0 / eta / 100.0) * 100.0;
        assert_relative_eq!(p_term, 0.01999, max_relative = 1e-3);
        assert_relative_eq!(i_term, 0.004998, max_relative = 1e-3);
        assert_relative_eq!(f_c, 25.0 + p_term + i_term);
        assert_relative_eq!(f_c, 25.025, max_relative = 1e-4);
        assert_eq!(s.prev_error, 20.0);
    }

    #[test]
    fn persistent_error_saturates_integral_at_i_max() {
        let gains = GraspGains::default();
        let mut state = GraspCtrlState::default();
        let mut f_c = 0.0;
        // Constant e = 1 so de -> 0 and eta -> 1 after the first tick.
        for _ in 0..2000 {
            let out = grasp_update(&state, 11.0, 10.0, &gains).unwrap();
            f_c = out.0;
            state = out.1;
        }
        assert_relative_eq!(gains.k_i * state.integral, gains.i_max);
        assert_relative_eq!(f_c, 11.0 + 2.0 + 10.0);
    }

    #[test]
    fn windup_bound_holds_for_any_sequence() {
        let gains = GraspGains::default();
        let mut state = GraspCtrlState::default();
        let inputs = [
            (5.0, 0.0),
            (25.0, 5.0),
            (25.0, 30.0),
            (2.0, 45.0),
            (40.0, 0.0),
            (40.0, 39.0),
        ];
        for (f_d, f_n) in inputs.iter().cycle().take(600) {
            let out = grasp_update(&state, *f_d, *f_n, &gains).unwrap();
            state = out.1;
            assert!(
                (gains.k_i * state.integral).abs() <= gains.i_max + 1e-12,
                "windup bound violated"
            );
        }
    }

    #[test]
    fn force_to_voltage_sign_convention() {
        assert_eq!(force_to_voltage(0.0, 3.9166), 0.0);
        assert_relative_eq!(force_to_voltage(3.9166, 3.9166), -1.0);
        assert_relative_eq!(force_to_voltage(-7.8332, 3.9166), 2.0);
    }

    #[test]
    fn determinism_same_sequence_same_output() {
        let gains = GraspGains::default();
        let run = || {
            let mut state = GraspCtrlState::default();
            let mut trace = Vec::new();
            for k in 0..500 {
                let f_d = if k < 100 { 5.0 } else { 25.0 };
                let f_n = f_d * 0.9;
                let (f_c, next) = grasp_update(&state, f_d, f_n, &gains).unwrap();
                trace.push(f_c.to_bits());
                state = next;
            }
            trace
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_input_faults() {
        let gains = GraspGains::default();
        assert!(grasp_update(&GraspCtrlState::default(), f64::NAN, 0.0, &gains).is_err());
    }

    #[test]
    fn eta_never_below_one() {
        let gains = GraspGains::default();
        let mut state = GraspCtrlState::default();
        for (f_d, f_n) in [(1.0, 0.0), (1.0, 0.5), (1.0, 0.9)] {
            let (f_c, next) = grasp_update(&state, f_d, f_n, &gains).unwrap();
            let e: f64 = f_d - f_n;
            // Proportional contribution magnitude bounded by k_p*|e|.
            assert!((f_c - f_d - gains.k_i * next.integral).abs() <= gains.k_p * e.abs() + 1e-12);
            state = next;
        }
    }

    #[test]
    fn closed_loop_with_gripper_converges_into_two_percent_band() {
        use crate::sim::{measured_normal_force, step_gripper, PHYSICS_DT};
        use crate::types::{GripperParams, GripperState};

        let gains = GraspGains::default();
        let p = GripperParams::default();
        for f_d in [2.0, 10.0, 25.0, 40.0] {
            let mut gs = GripperState::default();
            let mut cs = GraspCtrlState::default();
            let mut f_c = 0.0;
            let steps = (0.5 / PHYSICS_DT) as usize;
            let mut settled_at = None;
            for k in 0..steps {
                if k % 20 == 0 {
                    let f_n = measured_normal_force(&gs, &p);
                    let out = grasp_update(&cs, f_d, f_n, &gains).unwrap();
                    f_c = out.0;
                    cs = out.1;
                }
                gs = step_gripper(&gs, &p, f_c, 0.0, PHYSICS_DT).unwrap();
                let err = (measured_normal_force(&gs, &p) - f_d).abs();
                if err > 0.02 * f_d {
                    settled_at = None;
                } else if settled_at.is_none() {
                    settled_at = Some(k);
                }
            }
            assert!(settled_at.is_some(), "f_d = {f_d} never settled");
            let f_n = measured_normal_force(&gs, &p);
            assert_abs_diff_eq!(f_n, f_d, epsilon = 0.02 * f_d);
        }
    }
}

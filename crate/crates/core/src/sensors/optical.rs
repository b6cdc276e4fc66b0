//! Forward simulation of the optical mouse sensors: distortion,
//! quantization to the counting grid, and dropout.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::sensors::{build_a, OpticalAxisCalibration, SensorLayout};
use crate::types::PlanarVelocity;

/// Spatial resolution of one count at 3200 counts per inch (m).
pub const SENSOR_QUANTUM: f64 = 0.008e-3;

/// Raw output of the three optical sensors after on-board window averaging.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RawOpticalReading {
    /// Per-sensor (x, y) velocities (m/s).
    pub velocities: [[f64; 2]; 3],
    /// Ground-truth tracking validity; a non-tracking sensor reports zero or
    /// attenuated magnitudes, which is the failure signature the rejection
    /// system exploits. Diagnostics only — fusion never reads these.
    pub tracking: [bool; 3],
}

/// Configuration of the forward sensor model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalSimConfig {
    /// Per-sensor, per-axis distortion parameters; the sensor reports the
    /// inverse of the calibration map.
    pub distortion: [[OpticalAxisCalibration; 2]; 3],
    /// Counting grid (m per count).
    pub quantum: f64,
    /// Quantize displacement counts over the averaging window.
    pub quantize: bool,
    /// Add zero-mean uniform dither (in counts) before rounding.
    pub jitter: bool,
    /// Magnitude multiplier for a non-tracking sensor (0 = reads zero).
    pub dropout_attenuation: f64,
}

impl Default for OpticalSimConfig {
    fn default() -> Self {
        OpticalSimConfig {
            distortion: [[OpticalAxisCalibration::identity(); 2]; 3],
            quantum: SENSOR_QUANTUM,
            quantize: true,
            jitter: false,
            dropout_attenuation: 0.0,
        }
    }
}

impl OpticalSimConfig {
    /// Ideal sensor: no distortion, no quantization.
    pub fn perfect() -> Self {
        OpticalSimConfig {
            quantize: false,
            ..Default::default()
        }
    }

    /// Same distortion parameters on every axis.
    pub fn with_uniform_distortion(cal: OpticalAxisCalibration) -> Self {
        OpticalSimConfig {
            distortion: [[cal; 2]; 3],
            ..Default::default()
        }
    }
}

/// Stateful forward model of one triple-sensor assembly. The displacement
/// counter carries the sub-count residual between windows, like the real
/// hardware counters, so quantization error does not accumulate over an
/// integrated trajectory.
#[derive(Debug, Clone, Default)]
pub struct OpticalSensorSim {
    residual: [[f64; 2]; 3],
}

impl OpticalSensorSim {
    pub fn new() -> Self {
        Self::default()
    }

    /// One averaging window: per sensor the ideal reading `A_j v`, distorted
    /// per axis by the inverse calibration map, attenuated on dropout, and
    /// quantized to the counting grid over the window.
    pub fn read<R: Rng>(
        &mut self,
        true_v: &PlanarVelocity,
        layout: &SensorLayout,
        cfg: &OpticalSimConfig,
        window_dt: f64,
        dropout: &[bool; 3],
        rng: &mut R,
    ) -> RawOpticalReading {
        debug_assert!(window_dt > 0.0);
        let a = build_a(layout);
        let mut velocities = [[0.0f64; 2]; 3];
        let mut tracking = [true; 3];

        for j in 0..3 {
            let ideal = [
                a[(2 * j, 0)] * true_v.vx
                    + a[(2 * j, 1)] * true_v.vy
                    + a[(2 * j, 2)] * true_v.omega,
                a[(2 * j + 1, 0)] * true_v.vx
                    + a[(2 * j + 1, 1)] * true_v.vy
                    + a[(2 * j + 1, 2)] * true_v.omega,
            ];
            for axis in 0..2 {
                let mut raw = super::inverse_distortion(ideal[axis], &cfg.distortion[j][axis]);
                if dropout[j] {
                    raw *= cfg.dropout_attenuation;
                    tracking[j] = false;
                }
                if cfg.quantize {
                    let disp = raw * window_dt + self.residual[j][axis];
                    let mut counts = disp / cfg.quantum;
                    if cfg.jitter {
                        counts += rng.gen_range(-0.5..0.5);
                    }
                    let counted = counts.round();
                    self.residual[j][axis] = disp - counted * cfg.quantum;
                    raw = counted * cfg.quantum / window_dt;
                }
                velocities[j][axis] = raw;
            }
        }

        RawOpticalReading {
            velocities,
            tracking,
        }
    }
}

/// One-shot window of the forward sensor model with no carried counter
/// state.
pub fn simulate_optical_reading<R: Rng>(
    true_v: &PlanarVelocity,
    layout: &SensorLayout,
    cfg: &OpticalSimConfig,
    window_dt: f64,
    dropout: &[bool; 3],
    rng: &mut R,
) -> RawOpticalReading {
    OpticalSensorSim::new().read(true_v, layout, cfg, window_dt, dropout, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensors::{apply_calibration, fuse};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const WINDOW: f64 = 84.0 / 10_000.0;

    #[test]
    fn zero_velocity_reads_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = simulate_optical_reading(
            &PlanarVelocity::ZERO,
            &SensorLayout::default(),
            &OpticalSimConfig::default(),
            WINDOW,
            &[false; 3],
            &mut rng,
        );
        assert_eq!(out.velocities, [[0.0; 2]; 3]);
        assert_eq!(out.tracking, [true; 3]);
    }

    #[test]
    fn roundtrip_recovers_within_one_quantum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let layout = SensorLayout::default();
        let cal = OpticalAxisCalibration::new(0.3, 0.9);
        let cfg = OpticalSimConfig::with_uniform_distortion(cal);
        let truth = PlanarVelocity::new(0.0125, -0.004, 0.4);

        let raw = simulate_optical_reading(&truth, &layout, &cfg, WINDOW, &[false; 3], &mut rng);
        let mut calibrated = [[0.0; 2]; 3];
        for j in 0..3 {
            for axis in 0..2 {
                calibrated[j][axis] = apply_calibration(raw.velocities[j][axis], &cal).unwrap();
            }
        }
        let fused = fuse(&calibrated, &layout);
        let tol = SENSOR_QUANTUM / WINDOW * std::f64::consts::SQRT_2;
        assert_abs_diff_eq!(fused.velocity.vx, truth.vx, epsilon = tol);
        assert_abs_diff_eq!(fused.velocity.vy, truth.vy, epsilon = tol);
        assert_abs_diff_eq!(fused.velocity.omega * layout.d, truth.omega * layout.d, epsilon = tol);
    }

    #[test]
    fn dropout_attenuates_magnitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layout = SensorLayout::default();
        let cfg = OpticalSimConfig {
            dropout_attenuation: 0.1,
            ..OpticalSimConfig::perfect()
        };
        let truth = PlanarVelocity::new(0.05, 0.0, 0.0);
        let out = simulate_optical_reading(&truth, &layout, &cfg, WINDOW, &[false, true, false], &mut rng);
        let full = out.velocities[0][0].hypot(out.velocities[0][1]);
        let attenuated = out.velocities[1][0].hypot(out.velocities[1][1]);
        assert_abs_diff_eq!(attenuated, 0.1 * full, epsilon = 1e-12);
        assert!(!out.tracking[1]);
    }
}

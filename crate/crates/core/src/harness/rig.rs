//! Simulated calibration/test rig for the planar velocity sensor: a cart on
//! linear tracks with a rotatable sensor mount. The four tests move the
//! sensor over a surface while the fused velocity is integrated and
//! compared with the known rig displacement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::sensors::{
    apply_calibration, fit_axis_calibration, fuse, inverse_distortion, simulate_optical_reading,
    OpticalAxisCalibration, OpticalSimConfig, SensorLayout,
};
use crate::slip::{trapezoid, TrajectorySpec};
use crate::types::PlanarVelocity;

/// Which rig motion to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RigKind {
    /// 100 mm straight line along the sensor x direction.
    Linear,
    /// 180 degree rotation in place.
    Rotation,
    /// 100 mm line with one sensor leaving the surface at the 50 mm mark.
    Rejection,
    /// Simultaneous 100 mm line and 180 degree rotation.
    Combined,
}

impl std::str::FromStr for RigKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(RigKind::Linear),
            "rotation" => Ok(RigKind::Rotation),
            "rejection" => Ok(RigKind::Rejection),
            "combined" => Ok(RigKind::Combined),
            other => Err(format!(
                "unknown rig test `{other}` (expected linear|rotation|rejection|combined)"
            )),
        }
    }
}

/// Surface-dependent distortion of the optical sensors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePreset {
    pub name: &'static str,
    pub a: f64,
    pub b: f64,
}

pub const SURFACES: [SurfacePreset; 3] = [
    SurfacePreset {
        name: "wood",
        a: 0.25,
        b: 0.92,
    },
    SurfacePreset {
        name: "cardboard",
        a: 0.30,
        b: 0.90,
    },
    SurfacePreset {
        name: "plastic",
        a: 0.35,
        b: 0.88,
    },
];

pub fn surface_preset(name: &str) -> Result<SurfacePreset, HarnessError> {
    SURFACES
        .iter()
        .find(|s| s.name == name)
        .copied()
        .ok_or_else(|| {
            HarnessError::config(
                "surface",
                format!("unknown surface `{name}` (expected wood|cardboard|plastic)"),
            )
        })
}

/// Rig displacements.
pub const RIG_TRAVEL: f64 = 0.100;
pub const RIG_ROTATION: f64 = std::f64::consts::PI;

/// Per-run tracking errors.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RigErrors {
    pub x_mm: f64,
    pub y_mm: f64,
    pub theta_deg: f64,
    /// Combined-path distance error (mm).
    pub distance_mm: f64,
}

/// Error statistics over the seeded runs; columns mirror the tracking-error
/// tables: per-axis mean and standard deviation plus the combined motion
/// distance/angle pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigReport {
    pub kind: RigKind,
    pub surface: String,
    pub runs: Vec<RigErrors>,
    pub mean_x_mm: f64,
    pub std_x_mm: f64,
    pub mean_y_mm: f64,
    pub std_y_mm: f64,
    pub mean_theta_deg: f64,
    pub std_theta_deg: f64,
    pub mean_distance_mm: f64,
    pub std_distance_mm: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count().max(1) as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Fit per-axis calibration from simulated near-constant manual strokes
/// over the calibration track (known displacement, measured average speed).
pub fn fit_rig_calibration(
    surface: &SurfacePreset,
    seed: u64,
) -> [[OpticalAxisCalibration; 2]; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xca11b);
    let distortion = OpticalAxisCalibration::new(surface.a, surface.b);
    let mut out = [[OpticalAxisCalibration::identity(); 2]; 3];
    for row in out.iter_mut() {
        for cal in row.iter_mut() {
            // Strokes at spread speeds; measured average = distorted speed
            // quantized over the whole stroke (the quantization residue is
            // sub-count and speed-dependent).
            let samples: Vec<(f64, f64)> = (0..8)
                .map(|k| {
                    let v = 0.02 + 0.02 * k as f64 + rng.gen_range(-0.002..0.002);
                    let t_stroke = RIG_TRAVEL / v;
                    let raw = inverse_distortion(v, &distortion);
                    let counts = (raw * t_stroke / crate::sensors::SENSOR_QUANTUM).round();
                    let measured = counts * crate::sensors::SENSOR_QUANTUM / t_stroke;
                    (v, measured)
                })
                .collect();
            *cal = fit_axis_calibration(&samples).unwrap_or(distortion);
        }
    }
    out
}

/// Run one rig test over the given seeds and report error statistics.
///
/// Each seed varies the stroke speed (manual actuation), integrates the
/// fused velocity at the 120 Hz window rate and compares with the rig's
/// known displacement.
pub fn rig_test(
    kind: RigKind,
    surface: &SurfacePreset,
    seeds: &[u64],
    quantize: bool,
) -> RigReport {
    let layout = SensorLayout::default();
    let distortion = OpticalAxisCalibration::new(surface.a, surface.b);
    let runs: Vec<RigErrors> = seeds
        .iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cfg = OpticalSimConfig {
                distortion: [[distortion; 2]; 3],
                quantize,
                ..Default::default()
            };
            let calibration = if quantize {
                fit_rig_calibration(surface, seed)
            } else {
                [[distortion; 2]; 3]
            };

            let duration: f64 = 4.0 * rng.gen_range(0.85..1.15);
            let window: f64 = 84.0 / 10_000.0;
            let n_windows = (duration / window).ceil() as usize;
            let lin_spec = TrajectorySpec::new(RIG_TRAVEL, duration);
            let rot_spec = TrajectorySpec::new(RIG_ROTATION, duration);

            let (lin_amount, rot_amount) = match kind {
                RigKind::Linear | RigKind::Rejection => (true, false),
                RigKind::Rotation => (false, true),
                RigKind::Combined => (true, true),
            };

            // Dead-reckoning state: local velocities are counter-rotated by
            // the integrated angle estimate before integrating displacement.
            let mut world_x = 0.0;
            let mut world_y = 0.0;
            let mut theta_hat = 0.0;
            let mut prev_pos = 0.0;
            let mut prev_angle = 0.0;
            for k in 0..n_windows {
                let t1 = ((k + 1) as f64 * window).min(duration);
                let pos = if lin_amount { trapezoid(&lin_spec, t1).0 } else { 0.0 };
                let angle = if rot_amount { trapezoid(&rot_spec, t1).0 } else { 0.0 };
                let mid_angle = 0.5 * (angle + prev_angle);
                let v_world = (pos - prev_pos) / window;
                // Track velocity expressed in the rotating sensor frame.
                let true_v = PlanarVelocity::new(
                    v_world * mid_angle.cos(),
                    -v_world * mid_angle.sin(),
                    (angle - prev_angle) / window,
                );
                prev_pos = pos;
                prev_angle = angle;

                // In the rejection test one sensor leaves the surface at the
                // halfway mark.
                let dropout = if kind == RigKind::Rejection && pos >= 0.5 * RIG_TRAVEL {
                    [true, false, false]
                } else {
                    [false; 3]
                };

                let raw =
                    simulate_optical_reading(&true_v, &layout, &cfg, window, &dropout, &mut rng);
                let mut calibrated = [[0.0f64; 2]; 3];
                for j in 0..3 {
                    for axis in 0..2 {
                        calibrated[j][axis] =
                            apply_calibration(raw.velocities[j][axis], &calibration[j][axis])
                                .unwrap_or(0.0);
                    }
                }
                let fused = fuse(&calibrated, &layout).velocity;
                let mid_hat = theta_hat + 0.5 * fused.omega * window;
                world_x += (fused.vx * mid_hat.cos() - fused.vy * mid_hat.sin()) * window;
                world_y += (fused.vx * mid_hat.sin() + fused.vy * mid_hat.cos()) * window;
                theta_hat += fused.omega * window;
            }

            let true_x = if lin_amount { RIG_TRAVEL } else { 0.0 };
            let true_theta = if rot_amount { RIG_ROTATION } else { 0.0 };
            RigErrors {
                x_mm: (world_x - true_x) * 1e3,
                y_mm: world_y * 1e3,
                theta_deg: (theta_hat - true_theta).to_degrees(),
                distance_mm: (world_x.hypot(world_y) - true_x) * 1e3,
            }
        })
        .collect();

    let (mean_x_mm, std_x_mm) = mean_std(runs.iter().map(|r| r.x_mm));
    let (mean_y_mm, std_y_mm) = mean_std(runs.iter().map(|r| r.y_mm));
    let (mean_theta_deg, std_theta_deg) = mean_std(runs.iter().map(|r| r.theta_deg));
    let (mean_distance_mm, std_distance_mm) = mean_std(runs.iter().map(|r| r.distance_mm));
    RigReport {
        kind,
        surface: surface.name.to_string(),
        runs,
        mean_x_mm,
        std_x_mm,
        mean_y_mm,
        std_y_mm,
        mean_theta_deg,
        std_theta_deg,
        mean_distance_mm,
        std_distance_mm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_sensors_track_exactly() {
        let surface = SurfacePreset {
            name: "ideal",
            a: 0.0,
            b: 1.0,
        };
        let report = rig_test(RigKind::Linear, &surface, &[1], false);
        assert!(report.runs[0].x_mm.abs() < 1e-9, "{:?}", report.runs[0]);
        assert!(report.runs[0].y_mm.abs() < 1e-9);
        assert!(report.runs[0].theta_deg.abs() < 1e-9);
    }

    #[test]
    fn quantized_linear_error_within_two_percent() {
        let surface = surface_preset("cardboard").unwrap();
        let seeds: Vec<u64> = (1..=10).collect();
        let report = rig_test(RigKind::Linear, &surface, &seeds, true);
        for run in &report.runs {
            assert!(
                run.x_mm.abs() <= 2.0,
                "linear x error {} mm exceeds 2%",
                run.x_mm
            );
        }
    }

    #[test]
    fn rejection_error_comparable_to_linear() {
        let surface = surface_preset("wood").unwrap();
        let seeds: Vec<u64> = (1..=10).collect();
        let linear = rig_test(RigKind::Linear, &surface, &seeds, true);
        let rejection = rig_test(RigKind::Rejection, &surface, &seeds, true);
        let lin_worst = linear
            .runs
            .iter()
            .map(|r| r.x_mm.abs())
            .fold(0.0f64, f64::max)
            .max(0.25);
        let rej_worst = rejection
            .runs
            .iter()
            .map(|r| r.x_mm.abs())
            .fold(0.0f64, f64::max);
        assert!(
            rej_worst <= 2.0 * lin_worst.max(1.0),
            "rejection {rej_worst} mm vs linear {lin_worst} mm"
        );
    }

    #[test]
    fn rotation_error_within_one_percent() {
        let surface = surface_preset("plastic").unwrap();
        let seeds: Vec<u64> = (1..=10).collect();
        let report = rig_test(RigKind::Rotation, &surface, &seeds, true);
        for run in &report.runs {
            assert!(
                run.theta_deg.abs() <= 1.8,
                "rotation error {} deg exceeds 1%",
                run.theta_deg
            );
        }
    }
}

//! Pseudo-inverse fusion of the three optical sensors with residual-based
//! outlier rejection.

use nalgebra::{SMatrix, SVector};

use crate::error::SensorError;
use crate::sensors::SensorLayout;
use crate::types::PlanarVelocity;

/// Relative residual threshold above which one sensor is rejected.
pub const REJECTION_THRESHOLD: f64 = 0.2;
/// Regularizer in the relative-residual denominator.
pub const REJECTION_REGULARIZER: f64 = 1e-3;

/// Stacked 6x3 measurement matrix: row pair `j` maps the planar velocity to
/// sensor `j`'s 2D reading, `[R(theta_j) | (d, 0)^T]`.
pub fn build_a(layout: &SensorLayout) -> SMatrix<f64, 6, 3> {
    let mut a = SMatrix::<f64, 6, 3>::zeros();
    for (j, angle) in SensorLayout::ANGLES.iter().enumerate() {
        let (sin, cos) = angle.sin_cos();
        a[(2 * j, 0)] = cos;
        a[(2 * j, 1)] = -sin;
        a[(2 * j, 2)] = layout.d;
        a[(2 * j + 1, 0)] = sin;
        a[(2 * j + 1, 1)] = cos;
        a[(2 * j + 1, 2)] = 0.0;
    }
    a
}

/// Outcome of one fusion solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionResult {
    pub velocity: PlanarVelocity,
    /// Index of the rejected sensor, when the residual test fired.
    pub rejected: Option<usize>,
    /// Relative residual of the accepted solve.
    pub residual: f64,
}

/// Least-squares fuse of the three calibrated 2D readings into a planar
/// velocity.
///
/// Solves `v = A^+ v_o`; if the relative residual
/// `||v_o - A v|| / (||v_o|| + 1e-3)` exceeds the threshold, the sensor
/// with the lowest speed is discarded and the reduced 4x3 system re-solved.
pub fn fuse(readings: &[[f64; 2]; 3], layout: &SensorLayout) -> FusionResult {
    let a = build_a(layout);
    let v_o = SVector::<f64, 6>::from_iterator(readings.iter().flatten().cloned());

    let pinv = a
        .pseudo_inverse(1e-12)
        .expect("fixed-geometry measurement matrix is full rank");
    let v_hat = pinv * v_o;
    let residual = (v_o - a * v_hat).norm();
    let relative = residual / (v_o.norm() + REJECTION_REGULARIZER);

    if relative <= REJECTION_THRESHOLD {
        return FusionResult {
            velocity: PlanarVelocity::new(v_hat[0], v_hat[1], v_hat[2]),
            rejected: None,
            residual: relative,
        };
    }

    // Lost tracking reads as zero or strongly reduced velocity, so the
    // slowest sensor is the outlier.
    let mut worst = 0;
    let mut lowest = f64::INFINITY;
    for (j, r) in readings.iter().enumerate() {
        let speed = r[0].hypot(r[1]);
        if speed < lowest {
            lowest = speed;
            worst = j;
        }
    }

    let kept: Vec<usize> = (0..3).filter(|j| *j != worst).collect();
    let (velocity, residual) = solve_pair(readings, layout, [kept[0], kept[1]]);
    FusionResult {
        velocity,
        rejected: Some(worst),
        residual,
    }
}

/// Fuse with an explicit availability mask; fails when fewer than two
/// sensors are usable (the caller decides the hold policy).
pub fn fuse_masked(
    readings: &[[f64; 2]; 3],
    available: &[bool; 3],
    layout: &SensorLayout,
) -> Result<FusionResult, SensorError> {
    let present: Vec<usize> = (0..3).filter(|j| available[*j]).collect();
    match present.len() {
        3 => Ok(fuse(readings, layout)),
        2 => {
            let (velocity, residual) = solve_pair(readings, layout, [present[0], present[1]]);
            Ok(FusionResult {
                velocity,
                rejected: (0..3).find(|j| !available[*j]),
                residual,
            })
        }
        _ => Err(SensorError::Degraded),
    }
}

fn solve_pair(
    readings: &[[f64; 2]; 3],
    layout: &SensorLayout,
    keep: [usize; 2],
) -> (PlanarVelocity, f64) {
    let a = build_a(layout);
    let mut a_red = SMatrix::<f64, 4, 3>::zeros();
    let mut v_red = SVector::<f64, 4>::zeros();
    for (slot, j) in keep.iter().enumerate() {
        for c in 0..3 {
            a_red[(2 * slot, c)] = a[(2 * j, c)];
            a_red[(2 * slot + 1, c)] = a[(2 * j + 1, c)];
        }
        v_red[2 * slot] = readings[*j][0];
        v_red[2 * slot + 1] = readings[*j][1];
    }
    let pinv = a_red
        .pseudo_inverse(1e-12)
        .expect("any two sensors still span the planar velocity");
    let v_hat = pinv * v_red;
    let residual = (v_red - a_red * v_hat).norm() / (v_red.norm() + REJECTION_REGULARIZER);
    (PlanarVelocity::new(v_hat[0], v_hat[1], v_hat[2]), residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn forward(v: &PlanarVelocity, layout: &SensorLayout) -> [[f64; 2]; 3] {
        let a = build_a(layout);
        let vv = SVector::<f64, 3>::new(v.vx, v.vy, v.omega);
        let y = a * vv;
        [[y[0], y[1]], [y[2], y[3]], [y[4], y[5]]]
    }

    #[test]
    fn zero_velocity_maps_to_zero_readings() {
        let layout = SensorLayout::default();
        let r = forward(&PlanarVelocity::ZERO, &layout);
        assert_eq!(r, [[0.0; 2]; 3]);
    }

    #[test]
    fn pure_rotation_reads_d_along_x_in_every_frame() {
        let layout = SensorLayout::new(0.01);
        let r = forward(&PlanarVelocity::new(0.0, 0.0, 1.0), &layout);
        for reading in r {
            assert_abs_diff_eq!(reading[0], 0.01, epsilon = 1e-15);
            assert_abs_diff_eq!(reading[1], 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn pure_translation_reads_rotated_velocity() {
        let layout = SensorLayout::default();
        let r = forward(&PlanarVelocity::new(0.01, 0.0, 0.0), &layout);
        for (j, angle) in SensorLayout::ANGLES.iter().enumerate() {
            assert_abs_diff_eq!(r[j][0], 0.01 * angle.cos(), epsilon = 1e-15);
            assert_abs_diff_eq!(r[j][1], 0.01 * angle.sin(), epsilon = 1e-15);
        }
    }

    #[test]
    fn consistent_readings_recover_exactly_without_rejection() {
        let layout = SensorLayout::default();
        let v = PlanarVelocity::new(0.012, -0.03, 1.7);
        let out = fuse(&forward(&v, &layout), &layout);
        assert!(out.rejected.is_none());
        assert_abs_diff_eq!(out.velocity.vx, v.vx, epsilon = 1e-12);
        assert_abs_diff_eq!(out.velocity.vy, v.vy, epsilon = 1e-12);
        assert_abs_diff_eq!(out.velocity.omega, v.omega, epsilon = 1e-12);
    }

    #[test]
    fn dead_sensor_is_rejected_and_recovered() {
        let layout = SensorLayout::default();
        let v = PlanarVelocity::new(0.02, -0.01, 0.5);
        let mut readings = forward(&v, &layout);
        readings[2] = [0.0, 0.0];
        let out = fuse(&readings, &layout);
        assert_eq!(out.rejected, Some(2));
        assert_abs_diff_eq!(out.velocity.vx, v.vx, epsilon = 1e-9);
        assert_abs_diff_eq!(out.velocity.vy, v.vy, epsilon = 1e-9);
        assert_abs_diff_eq!(out.velocity.omega, v.omega, epsilon = 1e-9);
    }

    #[test]
    fn all_zero_readings_fuse_to_zero_without_rejection() {
        let layout = SensorLayout::default();
        let out = fuse(&[[0.0; 2]; 3], &layout);
        assert!(out.rejected.is_none());
        assert_eq!(out.velocity, PlanarVelocity::ZERO);
    }

    #[test]
    fn masked_two_sensor_solve_recovers() {
        let layout = SensorLayout::default();
        let v = PlanarVelocity::new(-0.04, 0.015, -2.0);
        let mut readings = forward(&v, &layout);
        readings[0] = [123.0, -55.0]; // garbage, masked out
        let out = fuse_masked(&readings, &[false, true, true], &layout).unwrap();
        assert_abs_diff_eq!(out.velocity.vx, v.vx, epsilon = 1e-9);
        assert_abs_diff_eq!(out.velocity.omega, v.omega, epsilon = 1e-9);
    }

    #[test]
    fn fewer_than_two_sensors_is_degraded() {
        let layout = SensorLayout::default();
        let readings = [[0.0; 2]; 3];
        assert!(matches!(
            fuse_masked(&readings, &[false, false, true], &layout),
            Err(SensorError::Degraded)
        ));
    }
}

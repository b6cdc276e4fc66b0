//! Simulated F/T and planar velocity sensing.
//!
//! The velocity sensor is three optical mouse sensors spaced 120 degrees
//! apart on a circle of radius `d`. Each reports a 2D velocity in its own
//! frame; the planar velocity is recovered by a least-squares solve through
//! the stacked measurement model, with residual-based rejection of a sensor
//! that lost tracking (lost tracking reads as zero or strongly attenuated
//! velocity).

mod calibration;
mod fusion;
mod optical;

pub use calibration::{
    apply_calibration, calibration_fit_report, fit_axis_calibration, inverse_distortion,
    OpticalAxisCalibration,
};
pub use fusion::{build_a, fuse, fuse_masked, FusionResult, REJECTION_REGULARIZER, REJECTION_THRESHOLD};
pub use optical::{
    simulate_optical_reading, OpticalSensorSim, OpticalSimConfig, RawOpticalReading, SENSOR_QUANTUM,
};

use serde::{Deserialize, Serialize};

use crate::types::{PlanarWrench, PlanarVelocity};

/// Geometry of the triple optical sensor: lever arm `d` from the centre to
/// each measurement point and the three fixed frame rotations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorLayout {
    /// Lever arm (m).
    pub d: f64,
}

impl SensorLayout {
    /// Frame rotations of the three optical sensors (rad).
    pub const ANGLES: [f64; 3] = [
        -30.0 * std::f64::consts::PI / 180.0,
        -150.0 * std::f64::consts::PI / 180.0,
        90.0 * std::f64::consts::PI / 180.0,
    ];

    pub fn new(d: f64) -> Self {
        debug_assert!(d > 0.0);
        SensorLayout { d }
    }
}

impl Default for SensorLayout {
    fn default() -> Self {
        SensorLayout { d: 0.01 }
    }
}

/// One F/T sensor sample: contact wrench plus normal force.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FTReading {
    pub wrench: PlanarWrench,
    /// Normal force (N), never negative.
    pub f_n: f64,
}

impl FTReading {
    pub fn new(wrench: PlanarWrench, f_n: f64) -> Self {
        FTReading {
            wrench,
            f_n: f_n.max(0.0),
        }
    }
}

/// Convenience: ideal noiseless reading of one optical sensor given the true
/// planar velocity at the contact.
pub fn ideal_sensor_reading(layout: &SensorLayout, sensor: usize, v: &PlanarVelocity) -> [f64; 2] {
    let a = build_a(layout);
    let row = 2 * sensor;
    [
        a[(row, 0)] * v.vx + a[(row, 1)] * v.vy + a[(row, 2)] * v.omega,
        a[(row + 1, 0)] * v.vx + a[(row + 1, 1)] * v.vy + a[(row + 1, 2)] * v.omega,
    ]
}

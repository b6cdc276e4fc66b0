//! Per-axis calibration of the optical sensors.
//!
//! Each raw axis velocity is mapped through `v_c = v / (b + a v)`. The
//! parameters are fitted by regressing the measured/true speed ratio
//! against measured speed, since `v_m / v_true = b + a v_m` holds exactly
//! when the distortion is the inverse of the calibration map.

use serde::{Deserialize, Serialize};

use crate::error::SensorError;
use crate::estimation::linear_regression;

/// Calibration parameters of one sensor axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalAxisCalibration {
    /// Dimensionless slope parameter.
    pub a: f64,
    /// Dimensionless offset parameter; the raw/true ratio at zero speed.
    pub b: f64,
}

impl OpticalAxisCalibration {
    pub fn identity() -> Self {
        OpticalAxisCalibration { a: 0.0, b: 1.0 }
    }

    pub fn new(a: f64, b: f64) -> Self {
        debug_assert!(b > 0.0);
        OpticalAxisCalibration { a, b }
    }
}

impl Default for OpticalAxisCalibration {
    fn default() -> Self {
        Self::identity()
    }
}

/// Apply the calibration filter `raw / (b + a*raw)`.
pub fn apply_calibration(raw: f64, cal: &OpticalAxisCalibration) -> Result<f64, SensorError> {
    let denom = cal.b + cal.a * raw;
    if denom.abs() < 1e-9 {
        return Err(SensorError::CalibrationSingular { raw });
    }
    Ok(raw / denom)
}

/// Inverse of the calibration map: what a distorting sensor reports for a
/// true velocity, `raw = b*v / (1 - a*v)`.
pub fn inverse_distortion(true_v: f64, cal: &OpticalAxisCalibration) -> f64 {
    cal.b * true_v / (1.0 - cal.a * true_v)
}

/// Fit `(a, b)` from paired (true, measured) average speeds by ordinary
/// least squares on the ratio measured/true versus measured speed.
pub fn fit_axis_calibration(
    samples: &[(f64, f64)],
) -> Result<OpticalAxisCalibration, SensorError> {
    if samples.len() < 2 {
        return Err(SensorError::DegenerateFit);
    }
    let xs: Vec<f64> = samples.iter().map(|(_, m)| *m).collect();
    let ys: Vec<f64> = samples
        .iter()
        .map(|(t, m)| if *t == 0.0 { f64::NAN } else { m / t })
        .collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(SensorError::DegenerateFit);
    }
    let (b, a) = linear_regression(&xs, &ys).map_err(|_| SensorError::DegenerateFit)?;
    Ok(OpticalAxisCalibration { a, b })
}

/// Rows of the calibration-fit report: (measured speed, measured/true ratio,
/// fitted ratio). Serialized as CSV by the harness.
pub fn calibration_fit_report(
    samples: &[(f64, f64)],
    cal: &OpticalAxisCalibration,
) -> Vec<(f64, f64, f64)> {
    samples
        .iter()
        .map(|(t, m)| (*m, m / t, cal.b + cal.a * m))
        .collect()
}

//! Error types shared across the crate.

use thiserror::Error;

/// Faults raised by the physics layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("non-finite input to {0}")]
    NonFinite(&'static str),
    #[error("negative normal force {0} passed to friction model")]
    NegativeNormalForce(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Faults raised by the sensing layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensorError {
    #[error("calibration denominator ~0 for raw velocity {raw}")]
    CalibrationSingular { raw: f64 },
    #[error("degenerate calibration fit: all sample speeds equal")]
    DegenerateFit,
    #[error("fewer than two tracking sensors available")]
    Degraded,
}

/// Faults raised by the contact-property estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("degenerate regression: need >= 2 points with distinct abscissae")]
    DegenerateRegression,
    #[error("insufficient sliding samples for friction regression ({0} kinetic samples)")]
    InsufficientSlip(usize),
    #[error("insufficient rotation samples for radius regression ({0} samples)")]
    InsufficientRotation(usize),
}

/// Faults raised by the scenario runner and exporters.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario config at `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("failed to parse scenario file: {0}")]
    Parse(String),
    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bode segment at {freq} Hz shorter than two periods")]
    SegmentTooShort { freq: f64 },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
}

impl HarnessError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        HarnessError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

//! Declarative scenario configuration: object and gripper presets, timed
//! commands, disturbance profiles and loop rates. Scenario files are plain
//! TOML; the schema is documented in the repository README.

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::grasp::GraspGains;
use crate::sensors::{OpticalAxisCalibration, OpticalSimConfig};
use crate::sim::SlipMode;
use crate::slip::{ControlMode, SlipGains};
use crate::types::{ContactParams, GripperParams, ObjectParams};

/// Loop rates; the inner and outer loops run on integer divisors of the
/// physics rate (10 kHz / 20 = 500 Hz, 10 kHz / 84 ~ 119.05 Hz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Rates {
    pub physics_hz: f64,
    pub inner_div: u32,
    pub outer_div: u32,
}

impl Default for Rates {
    fn default() -> Self {
        Rates {
            physics_hz: 10_000.0,
            inner_div: 20,
            outer_div: 84,
        }
    }
}

impl Rates {
    pub fn dt(&self) -> f64 {
        1.0 / self.physics_hz
    }

    pub fn outer_period(&self) -> f64 {
        self.outer_div as f64 * self.dt()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.physics_hz <= 0.0 {
            return Err(HarnessError::config("rates.physics_hz", "must be > 0"));
        }
        if self.inner_div == 0 || self.outer_div == 0 {
            return Err(HarnessError::config(
                "rates.inner_div/outer_div",
                "divisors must be >= 1",
            ));
        }
        Ok(())
    }
}

/// Object definition: either a named preset or explicit parameters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectSpec {
    pub preset: Option<String>,
    pub params: Option<ObjectParams>,
    /// Ground-truth contact parameters per finger.
    pub contact: Option<[ContactParams; 2]>,
    /// Contact stiffness/damping override of the gripper model.
    pub k2: Option<f64>,
    pub d2: Option<f64>,
}

/// Resolved object: inertial parameters, per-finger contact truth and the
/// contact compliance it presents to the gripper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectPreset {
    pub params: ObjectParams,
    pub contact: [ContactParams; 2],
    pub k2: f64,
    pub d2: f64,
}

/// The five desk objects. Masses and grasp dimensions are the measured
/// values; contact stiffness is ranked by rigidity class and the friction
/// coefficients follow the identified ranges per material.
pub fn object_preset(name: &str) -> Result<ObjectPreset, HarnessError> {
    let p = match name {
        "sponge" => ObjectPreset {
            params: ObjectParams {
                mass: 0.0068,
                inertia_grasp: 9.5e-6,
                cog_offset: 0.025,
                width: 0.062,
            },
            contact: [
                ContactParams::new(0.75, 0.60, 2.0, 2e-3, 8e-3),
                ContactParams::new(0.74, 0.59, 2.0, 2e-3, 8e-3),
            ],
            k2: 1.5e3,
            d2: 8.0,
        },
        "cardboard" => ObjectPreset {
            params: ObjectParams {
                mass: 0.1606,
                inertia_grasp: 8.6e-4,
                cog_offset: 0.055,
                width: 0.070,
            },
            contact: [
                ContactParams::new(0.565, 0.538, 0.6, 2e-3, 6.1e-3),
                ContactParams::new(0.540, 0.511, 0.4, 2e-3, 5.8e-3),
            ],
            k2: 6e3,
            d2: 15.0,
        },
        "case" => ObjectPreset {
            params: ObjectParams {
                mass: 0.1387,
                inertia_grasp: 9.5e-4,
                cog_offset: 0.065,
                width: 0.070,
            },
            contact: [
                ContactParams::new(0.533, 0.511, 1.1, 2e-3, 6.3e-3),
                ContactParams::new(0.507, 0.479, 1.9, 2e-3, 5.0e-3),
            ],
            k2: 4e3,
            d2: 12.0,
        },
        "plastic" => ObjectPreset {
            params: ObjectParams {
                mass: 0.0841,
                inertia_grasp: 3.6e-4,
                cog_offset: 0.050,
                width: 0.081,
            },
            contact: [
                ContactParams::new(0.411, 0.366, 3.6, 2e-3, 7.6e-3),
                ContactParams::new(0.399, 0.363, 3.6, 2e-3, 7.4e-3),
            ],
            k2: 5e3,
            d2: 14.0,
        },
        "wood" => ObjectPreset {
            params: ObjectParams {
                mass: 0.1413,
                inertia_grasp: 1.08e-3,
                cog_offset: 0.070,
                width: 0.060,
            },
            contact: [
                ContactParams::new(0.499, 0.444, -1.1, 2e-3, 7.0e-3),
                ContactParams::new(0.507, 0.432, -1.1, 2e-3, 6.0e-3),
            ],
            k2: 1e4,
            d2: 20.0,
        },
        other => {
            return Err(HarnessError::config(
                "object.preset",
                format!("unknown preset `{other}` (expected sponge|cardboard|case|plastic|wood)"),
            ))
        }
    };
    Ok(p)
}

/// Names of all built-in presets, stiffest contact first.
pub const PRESET_NAMES: [&str; 5] = ["wood", "cardboard", "plastic", "case", "sponge"];

impl ObjectSpec {
    pub fn resolve(&self) -> Result<ObjectPreset, HarnessError> {
        let mut preset = match &self.preset {
            Some(name) => object_preset(name)?,
            None => ObjectPreset {
                params: self
                    .params
                    .ok_or_else(|| HarnessError::config("object", "need preset or params"))?,
                contact: self.contact.unwrap_or([ContactParams::default(); 2]),
                k2: 1e4,
                d2: 20.0,
            },
        };
        if let Some(params) = self.params {
            preset.params = params;
        }
        if let Some(contact) = self.contact {
            preset.contact = contact;
        }
        if let Some(k2) = self.k2 {
            preset.k2 = k2;
        }
        if let Some(d2) = self.d2 {
            preset.d2 = d2;
        }
        preset.params.validate().map_err(|e| {
            HarnessError::config("object.params", e.to_string())
        })?;
        for cp in &preset.contact {
            cp.validate()
                .map_err(|e| HarnessError::config("object.contact", e.to_string()))?;
        }
        Ok(preset)
    }
}

/// World-level environment of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Environment {
    /// Object resting on a support (exploration) rather than hanging.
    pub anchored: bool,
    /// Initial hang angle of the CoG axis from vertical (deg).
    pub hang_angle_deg: f64,
    pub gravity: f64,
    /// Gravity routing for the object step.
    pub rotational: bool,
}

impl Default for Environment {
    fn default() -> Self {
        Environment {
            anchored: false,
            hang_angle_deg: 0.0,
            gravity: 9.81,
            rotational: false,
        }
    }
}

impl Environment {
    pub fn slip_mode(&self) -> SlipMode {
        if self.rotational {
            SlipMode::Rotational
        } else {
            SlipMode::Linear
        }
    }
}

/// Where the velocity pipeline gets its calibration parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationSource {
    /// Use the true distortion parameters (perfectly calibrated sensor).
    #[default]
    Exact,
    /// Uncalibrated: identity map.
    Identity,
}

/// Sensing configuration of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    /// Lever arm of the optical sensors (m).
    pub layout_d: f64,
    pub optical: OpticalSimConfig,
    pub calibration: CalibrationSource,
    /// Uniform additive noise amplitude on the F/T channels (N, N·m).
    pub ft_noise: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            layout_d: 0.01,
            optical: OpticalSimConfig::default(),
            calibration: CalibrationSource::Exact,
            ft_noise: 0.0,
        }
    }
}

impl SensorConfig {
    /// Calibration used by the estimation pipeline.
    pub fn pipeline_calibration(&self) -> [[OpticalAxisCalibration; 2]; 3] {
        match self.calibration {
            CalibrationSource::Exact => self.optical.distortion,
            CalibrationSource::Identity => [[OpticalAxisCalibration::identity(); 2]; 3],
        }
    }
}

/// Timed command applied by the scheduler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedCommand {
    pub t: f64,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Command {
    /// Switch the outer controller mode.
    SetMode { mode: ControlMode },
    /// Start a displacement trajectory (with the current mode).
    StartTrajectory { target: f64, duration: f64 },
    /// Feed contact estimates to the controllers.
    SetEstimates { mu_c: [f64; 2], r: [f64; 2] },
    /// Copy the ground-truth contact parameters into the estimates.
    UseTruthEstimates,
    /// Remove the support: the object hangs from the grasp.
    Release,
    /// Force one optical sensor of one finger into dropout.
    SetDropout { finger: u8, sensor: u8, active: bool },
}

/// Piecewise force profile consumed in direct mode at the inner rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceSegment {
    pub t: f64,
    pub duration: f64,
    #[serde(flatten)]
    pub kind: ForceSegmentKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ForceSegmentKind {
    Constant { f: f64 },
    Sine { base: f64, amplitude: f64, freq_hz: f64 },
}

impl ForceSegment {
    pub fn value_at(&self, t: f64) -> Option<f64> {
        if t < self.t || t >= self.t + self.duration {
            return None;
        }
        Some(match self.kind {
            ForceSegmentKind::Constant { f } => f,
            ForceSegmentKind::Sine {
                base,
                amplitude,
                freq_hz,
            } => base + amplitude * (2.0 * std::f64::consts::PI * freq_hz * (t - self.t)).sin(),
        })
    }
}

/// Scripted external load on the object, active during `[t, t + duration)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Disturbance {
    pub t: f64,
    pub duration: f64,
    /// Added weight resting on the object (kg): raises the tangential
    /// gravity load and the translating mass.
    pub extra_mass: f64,
    /// Direct tangential force (N).
    pub force: f64,
    /// Spin torque (N·m).
    pub torque: f64,
}

impl Default for Disturbance {
    fn default() -> Self {
        Disturbance {
            t: 0.0,
            duration: 0.0,
            extra_mass: 0.0,
            force: 0.0,
            torque: 0.0,
        }
    }
}

/// Scripted arm motion segment; velocity follows the trapezoid profile of
/// the displacement over the segment duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmSegment {
    pub t: f64,
    pub kind: ArmMotionKind,
    /// Displacement (m) or rotation (rad); sign = direction.
    pub amount: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmMotionKind {
    Translate,
    Rotate,
}

/// A full scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub duration: f64,
    #[serde(default)]
    pub rates: Rates,
    #[serde(default)]
    pub gripper: GripperParams,
    pub object: ObjectSpec,
    #[serde(default)]
    pub environment: Environment,
    #[serde(default)]
    pub sensors: SensorConfig,
    #[serde(default)]
    pub grasp_gains: GraspGains,
    #[serde(default)]
    pub slip_gains: SlipGains,
    /// Grasp force already settled at t = 0 (the gripper starts at the
    /// matching equilibrium). Without it the run starts ungrasped.
    #[serde(default)]
    pub initial_grasp: Option<f64>,
    #[serde(default)]
    pub initial_mode: Option<ControlMode>,
    #[serde(default)]
    pub schedule: Vec<TimedCommand>,
    #[serde(default)]
    pub force_profile: Vec<ForceSegment>,
    #[serde(default)]
    pub disturbances: Vec<Disturbance>,
    #[serde(default)]
    pub arm_motions: Vec<ArmSegment>,
    /// Record every n-th physics step.
    #[serde(default = "default_decimation")]
    pub trace_decimation: u32,
}

fn default_decimation() -> u32 {
    1
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Scenario, HarnessError> {
        let sc: Scenario = toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Scenario, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::io(path.display().to_string(), e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.duration > 0.0) {
            return Err(HarnessError::config("duration", "must be > 0"));
        }
        self.rates.validate()?;
        self.gripper
            .validate()
            .map_err(|e| HarnessError::config("gripper", e.to_string()))?;
        self.object.resolve().map(|_| ())?;
        if self.trace_decimation == 0 {
            return Err(HarnessError::config("trace_decimation", "must be >= 1"));
        }
        for (i, seg) in self.arm_motions.iter().enumerate() {
            if !(seg.duration > 0.0) {
                return Err(HarnessError::config(
                    format!("arm_motions[{i}].duration"),
                    "must be > 0",
                ));
            }
        }
        for (i, seg) in self.force_profile.iter().enumerate() {
            if !(seg.duration > 0.0) {
                return Err(HarnessError::config(
                    format!("force_profile[{i}].duration"),
                    "must be > 0",
                ));
            }
        }
        Ok(())
    }

    /// Effective gripper parameters: object preset supplies the contact
    /// stiffness and damping.
    pub fn effective_gripper(&self, preset: &ObjectPreset) -> GripperParams {
        GripperParams {
            k2: preset.k2,
            d2: preset.d2,
            ..self.gripper
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve_and_validate() {
        for name in PRESET_NAMES {
            let p = object_preset(name).unwrap();
            p.params.validate().unwrap();
            for cp in p.contact {
                cp.validate().unwrap();
            }
        }
        assert!(object_preset("granite").is_err());
    }

    #[test]
    fn toml_roundtrip() {
        let sc = Scenario {
            name: "t".into(),
            seed: 3,
            duration: 1.0,
            rates: Rates::default(),
            gripper: GripperParams::default(),
            object: ObjectSpec {
                preset: Some("wood".into()),
                ..Default::default()
            },
            environment: Environment::default(),
            sensors: SensorConfig::default(),
            grasp_gains: GraspGains::default(),
            slip_gains: SlipGains::default(),
            initial_grasp: Some(5.0),
            initial_mode: None,
            schedule: vec![TimedCommand {
                t: 0.5,
                command: Command::SetMode {
                    mode: ControlMode::Avoidance,
                },
            }],
            force_profile: vec![ForceSegment {
                t: 0.0,
                duration: 0.5,
                kind: ForceSegmentKind::Constant { f: 5.0 },
            }],
            disturbances: vec![],
            arm_motions: vec![],
            trace_decimation: 1,
        };
        let text = toml::to_string(&sc).unwrap();
        let parsed = Scenario::from_toml(&text).unwrap();
        assert_eq!(parsed, sc);
    }

    #[test]
    fn config_errors_carry_field_paths() {
        let text = r#"
name = "bad"
duration = -1.0
[object]
preset = "wood"
"#;
        let err = Scenario::from_toml(text).unwrap_err();
        assert!(err.to_string().contains("duration"));
    }

    #[test]
    fn force_segment_evaluation() {
        let seg = ForceSegment {
            t: 1.0,
            duration: 2.0,
            kind: ForceSegmentKind::Sine {
                base: 15.0,
                amplitude: 5.0,
                freq_hz: 1.0,
            },
        };
        assert_eq!(seg.value_at(0.5), None);
        assert_eq!(seg.value_at(1.0), Some(15.0));
        let quarter = seg.value_at(1.25).unwrap();
        assert!((quarter - 20.0).abs() < 1e-9);
        assert_eq!(seg.value_at(3.0), None);
    }
}

//! Deterministic simulation and control stack for slip-aware parallel grasping.
//!
//! The crate is organised around the layers of a force-controlled parallel
//! gripper that manipulates objects by letting them slip in a controlled way:
//!
//! * [`sim`] — fixed-step physics of the two-mass gripper drivetrain, the
//!   planar limit-surface contact, and the slipping object under gravity.
//! * [`sensors`] — simulated F/T sensing and the redundant triple optical
//!   velocity sensor with calibration, pseudo-inverse fusion and outlier
//!   rejection.
//! * [`grasp`] — the 500 Hz inner-loop grasp force controller (feedforward +
//!   scaled PI with anti-windup) and the force-to-voltage map.
//! * [`estimation`] — contact-property identification from short linear and
//!   rotational exploration moves.
//! * [`slip`] — the 120 Hz outer-loop slip-aware controllers (avoidance,
//!   linear, rotational, hinge) and trajectory generation.
//! * [`harness`] — deterministic multi-rate scheduler, scenario runner,
//!   experiment metrics and CSV/JSON trace export.
//!
//! Everything is pure value-semantics state stepped single-threaded; the same
//! scenario and seed always produce bit-identical traces.

pub mod error;
pub mod estimation;
pub mod grasp;
pub mod harness;
pub mod sensors;
pub mod sim;
pub mod slip;
pub mod types;

pub use error::{EstimationError, HarnessError, SensorError, SimError};
pub use types::{
    ContactParams, GripperParams, GripperState, ObjectParams, ObjectState, PlanarVelocity,
    PlanarWrench,
};

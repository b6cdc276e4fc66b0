//! Deterministic multi-rate scenario harness: scheduler, scenario configs,
//! experiment metrics, rig tests and trace export.

pub mod export;
pub mod metrics;
pub mod rig;
pub mod runner;
pub mod scenario;
pub mod trace;
pub mod world;

pub use export::{export, import_csv, read_trace_csv, write_trace_csv, ExportFormat, TRACE_CSV_HEADER};
pub use metrics::{
    bode_analysis, step_metrics, synthetic_bode_trace, BodePoint, BodeSegment, StepMetrics,
    BODE_FREQS, SETTLE_BAND,
};
pub use rig::{fit_rig_calibration, rig_test, surface_preset, RigErrors, RigKind, RigReport, SURFACES};
pub use runner::{
    avoidance_scenario, bode_scenario, hinge_scenario, linear_slip_scenario, perturb_scenario,
    rotational_slip_scenario, run_bode_test, run_demo, run_demo_batch, run_hinge_batch,
    run_linear_slip_batch, run_rotational_slip_batch, run_step_test, step_scenario, BodeReport,
    DemoBatchReport, DemoReport, HingeReport, StepReport, TrackingReport,
};
pub use scenario::{
    object_preset, ArmMotionKind, ArmSegment, CalibrationSource, Command, Disturbance, Environment,
    ForceSegment, ForceSegmentKind, ObjectPreset, ObjectSpec, Rates, Scenario, SensorConfig,
    TimedCommand, PRESET_NAMES,
};
pub use trace::{Event, EventKind, Trace, TraceMeta, TraceRow};
pub use world::{run_scenario, ContactEstimates, World, VOLTAGE_LIMIT};

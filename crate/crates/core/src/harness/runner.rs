//! Prebuilt experiment scenarios and their reports: force steps, frequency
//! sweeps, slip tracking, hinge, avoidance and the composite demo.

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::estimation::{run_exploration, ExplorationConfig};
use crate::harness::metrics::{bode_analysis, step_metrics, BodePoint, BodeSegment, StepMetrics, BODE_FREQS};
use crate::harness::scenario::{
    ArmMotionKind, ArmSegment, Command, Disturbance, ForceSegment, ForceSegmentKind, ObjectSpec,
    Scenario, TimedCommand,
};
use crate::harness::trace::{EventKind, Trace};
use crate::harness::world::{run_scenario, World};
use crate::slip::ControlMode;

fn base_scenario(name: &str, preset: &str, duration: f64, seed: u64) -> Scenario {
    Scenario {
        name: name.into(),
        seed,
        duration,
        rates: Default::default(),
        gripper: Default::default(),
        object: ObjectSpec {
            preset: Some(preset.into()),
            ..Default::default()
        },
        environment: Default::default(),
        sensors: Default::default(),
        grasp_gains: Default::default(),
        slip_gains: Default::default(),
        initial_grasp: None,
        initial_mode: None,
        schedule: vec![],
        force_profile: vec![],
        disturbances: vec![],
        arm_motions: vec![],
        trace_decimation: 1,
    }
}

/// Apply a deterministic per-seed perturbation to the ground-truth contact
/// parameters and initial conditions, standing in for trial-to-trial
/// variation of real repeated experiments. Seed 0 leaves the scenario
/// untouched.
pub fn perturb_scenario(scenario: &mut Scenario, seed: u64) {
    use rand::{Rng, SeedableRng};
    scenario.seed = seed;
    if seed == 0 {
        return;
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let preset = scenario.object.resolve().expect("scenario already validated");
    let mut contact = preset.contact;
    for cp in contact.iter_mut() {
        let scale = 1.0 + rng.gen_range(-0.03..0.03);
        cp.mu_c *= scale;
        cp.mu_s *= scale;
        cp.r *= 1.0 + rng.gen_range(-0.05..0.05);
    }
    scenario.object.contact = Some(contact);
}

/// 5 -> 25 N force step scenario while grasping the (supported) object.
pub fn step_scenario(preset: &str, f_from: f64, f_to: f64) -> Scenario {
    let mut sc = base_scenario(&format!("step-{preset}"), preset, 0.8, 7);
    sc.environment.anchored = true;
    sc.force_profile = vec![
        ForceSegment {
            t: 0.0,
            duration: 0.3,
            kind: ForceSegmentKind::Constant { f: f_from },
        },
        ForceSegment {
            t: 0.3,
            duration: 0.5,
            kind: ForceSegmentKind::Constant { f: f_to },
        },
    ];
    sc
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepReport {
    pub preset: String,
    pub f_from: f64,
    pub f_to: f64,
    pub metrics: StepMetrics,
}

pub fn run_step_test(preset: &str, f_from: f64, f_to: f64) -> Result<(StepReport, Trace), HarnessError> {
    let sc = step_scenario(preset, f_from, f_to);
    let trace = run_scenario(&sc)?;
    let metrics = step_metrics(&trace, f_from, f_to);
    Ok((
        StepReport {
            preset: preset.into(),
            f_from,
            f_to,
            metrics,
        },
        trace,
    ))
}

/// Per-frequency sinusoid scenario for the frequency response.
pub fn bode_scenario(preset: &str, freqs: &[f64]) -> (Scenario, Vec<BodeSegment>) {
    let settle = 0.4;
    let base = 15.0;
    let amplitude = 5.0;
    let mut profile = vec![ForceSegment {
        t: 0.0,
        duration: settle,
        kind: ForceSegmentKind::Constant { f: base },
    }];
    let mut segments = Vec::new();
    let mut t0 = settle;
    for &freq in freqs {
        let periods = (8.0f64).max(2.0 * freq.ceil());
        let seg_len = periods / freq;
        profile.push(ForceSegment {
            t: t0,
            duration: seg_len,
            kind: ForceSegmentKind::Sine {
                base,
                amplitude,
                freq_hz: freq,
            },
        });
        // Analysis window skips the first two periods of each segment.
        segments.push(BodeSegment {
            freq,
            t_start: t0 + 2.0 / freq,
            t_end: t0 + seg_len,
        });
        t0 += seg_len;
    }
    let mut sc = base_scenario(&format!("bode-{preset}"), preset, t0 + 0.1, 7);
    sc.environment.anchored = true;
    sc.initial_grasp = Some(base);
    sc.force_profile = profile;
    (sc, segments)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BodeReport {
    pub preset: String,
    pub points: Vec<BodePoint>,
}

pub fn run_bode_test(preset: &str) -> Result<(BodeReport, Trace), HarnessError> {
    let (sc, segments) = bode_scenario(preset, &BODE_FREQS);
    let trace = run_scenario(&sc)?;
    let points = bode_analysis(&trace, &segments)?;
    Ok((
        BodeReport {
            preset: preset.into(),
            points,
        },
        trace,
    ))
}

/// Hanging-object linear slip tracking scenario.
pub fn linear_slip_scenario(preset: &str, target: f64, duration: f64, seed: u64) -> Scenario {
    let settle = 0.5;
    let tail = 1.0;
    let mut sc = base_scenario(
        &format!("linear-slip-{preset}-{}mm-{}s", target * 1e3, duration),
        preset,
        settle + duration + tail,
        seed,
    );
    sc.initial_grasp = Some(4.0);
    sc.initial_mode = Some(ControlMode::Avoidance);
    sc.schedule = vec![
        TimedCommand {
            t: settle,
            command: Command::StartTrajectory { target, duration },
        },
        TimedCommand {
            t: settle,
            command: Command::SetMode {
                mode: ControlMode::LinearSlip,
            },
        },
    ];
    perturb_scenario(&mut sc, seed);
    sc
}

/// Rotational slip scenario: object hangs at `target + margin` off vertical
/// and rotates toward vertical by `target`.
pub fn rotational_slip_scenario(preset: &str, target: f64, duration: f64, seed: u64) -> Scenario {
    let settle = 0.5;
    let tail = 1.0;
    let mut sc = base_scenario(
        &format!(
            "rot-slip-{preset}-{:.0}deg-{}s",
            target.to_degrees(),
            duration
        ),
        preset,
        settle + duration + tail,
        seed,
    );
    sc.environment.rotational = true;
    sc.environment.hang_angle_deg = target.to_degrees() + 15.0;
    sc.initial_grasp = Some(8.0);
    sc.initial_mode = Some(ControlMode::Avoidance);
    sc.schedule = vec![
        TimedCommand {
            t: settle,
            command: Command::StartTrajectory { target, duration },
        },
        TimedCommand {
            t: settle,
            command: Command::SetMode {
                mode: ControlMode::RotationalSlip,
            },
        },
    ];
    perturb_scenario(&mut sc, seed);
    sc
}

/// Hinge scenario: object hangs vertically, the arm rotates the gripper.
pub fn hinge_scenario(preset: &str, rotation: f64, duration: f64, seed: u64) -> Scenario {
    let settle = 0.5;
    let tail = 0.5;
    let mut sc = base_scenario(
        &format!("hinge-{preset}-{:.0}deg", rotation.to_degrees()),
        preset,
        settle + duration + tail,
        seed,
    );
    sc.environment.rotational = true;
    sc.initial_grasp = Some(4.0);
    sc.initial_mode = Some(ControlMode::Avoidance);
    sc.schedule = vec![TimedCommand {
        t: settle,
        command: Command::SetMode {
            mode: ControlMode::Hinge,
        },
    }];
    sc.arm_motions = vec![ArmSegment {
        t: settle,
        kind: ArmMotionKind::Rotate,
        amount: rotation,
        duration,
    }];
    perturb_scenario(&mut sc, seed);
    sc
}

/// Slip-avoidance robustness scenario: added weight, side torque, then an
/// impact pulse, each later removed.
pub fn avoidance_scenario(preset: &str) -> Scenario {
    let mut sc = base_scenario(&format!("avoidance-{preset}"), preset, 6.0, 7);
    sc.initial_grasp = Some(4.0);
    sc.initial_mode = Some(ControlMode::Avoidance);
    sc.disturbances = vec![
        // 141 g weight placed on top, later removed.
        Disturbance {
            t: 1.0,
            duration: 1.0,
            extra_mass: 0.141,
            ..Default::default()
        },
        // Weight on the side: torque disturbance.
        Disturbance {
            t: 2.5,
            duration: 1.0,
            extra_mass: 0.141,
            torque: 0.141 * 9.81 * 0.03,
            ..Default::default()
        },
        // Impact: short tangential force pulse.
        Disturbance {
            t: 4.0,
            duration: 0.05,
            force: 6.0,
            ..Default::default()
        },
    ];
    sc
}

/// Outcome statistics of a batch of seeded slip-tracking runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrackingReport {
    pub preset: String,
    /// Commanded displacement (m or rad).
    pub target: f64,
    pub duration: f64,
    pub seeds: Vec<u64>,
    /// Final true displacement per seed (m or rad).
    pub final_true: Vec<f64>,
    /// Final controller-estimated displacement per seed.
    pub final_est: Vec<f64>,
    pub mean_true: f64,
    pub std_true: f64,
    /// Mean of (true - estimated), the tracking error.
    pub mean_err: f64,
    pub std_err: f64,
    /// Stick/slip transition count per seed.
    pub stick_slip_events: Vec<usize>,
    pub separations: usize,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len().max(1) as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn tracking_report(
    preset: &str,
    target: f64,
    duration: f64,
    seeds: &[u64],
    traces: &[Trace],
    rotational: bool,
) -> TrackingReport {
    let final_true: Vec<f64> = traces
        .iter()
        .map(|t| {
            let last = t.rows.last().unwrap();
            if rotational {
                last.rel_theta.abs()
            } else {
                last.p.abs()
            }
        })
        .collect();
    let final_est: Vec<f64> = traces
        .iter()
        .map(|t| {
            // Largest controller displacement over the run: the controller
            // state resets when it hands back to avoidance.
            t.rows.iter().map(|r| r.p_hat).fold(0.0f64, f64::max)
        })
        .collect();
    let errs: Vec<f64> = final_true
        .iter()
        .zip(&final_est)
        .map(|(t, e)| t - e)
        .collect();
    let stick_slip_events: Vec<usize> = traces
        .iter()
        .map(|t| t.events_of(EventKind::Slip).count() + t.events_of(EventKind::Stick).count())
        .collect();
    let separations = traces
        .iter()
        .map(|t| t.events_of(EventKind::Separation).count())
        .sum();
    let (mean_true, std_true) = mean_std(&final_true);
    let (mean_err, std_err) = mean_std(&errs);
    TrackingReport {
        preset: preset.into(),
        target,
        duration,
        seeds: seeds.to_vec(),
        final_true,
        final_est,
        mean_true,
        std_true,
        mean_err,
        std_err,
        stick_slip_events,
        separations,
    }
}

pub fn run_linear_slip_batch(
    preset: &str,
    target: f64,
    duration: f64,
    seeds: &[u64],
) -> Result<TrackingReport, HarnessError> {
    let mut traces = Vec::new();
    for &seed in seeds {
        let sc = linear_slip_scenario(preset, target, duration, seed);
        traces.push(run_scenario(&sc)?);
    }
    Ok(tracking_report(preset, target, duration, seeds, &traces, false))
}

pub fn run_rotational_slip_batch(
    preset: &str,
    target: f64,
    duration: f64,
    seeds: &[u64],
) -> Result<TrackingReport, HarnessError> {
    let mut traces = Vec::new();
    for &seed in seeds {
        let sc = rotational_slip_scenario(preset, target, duration, seed);
        traces.push(run_scenario(&sc)?);
    }
    Ok(tracking_report(preset, target, duration, seeds, &traces, true))
}

/// Hinge outcome: change of the object's world orientation while the
/// gripper rotates (column of the hinge table).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HingeReport {
    pub preset: String,
    pub gripper_rotation_deg: f64,
    pub seeds: Vec<u64>,
    pub orientation_change_deg: Vec<f64>,
    pub mean_deg: f64,
    pub std_deg: f64,
    pub separations: usize,
}

pub fn run_hinge_batch(
    preset: &str,
    rotation: f64,
    duration: f64,
    seeds: &[u64],
) -> Result<HingeReport, HarnessError> {
    let mut changes = Vec::new();
    let mut separations = 0;
    for &seed in seeds {
        let sc = hinge_scenario(preset, rotation, duration, seed);
        let trace = run_scenario(&sc)?;
        let first = trace.rows.first().unwrap().theta;
        let last = trace.rows.last().unwrap().theta;
        changes.push((last - first).abs().to_degrees());
        separations += trace.events_of(EventKind::Separation).count();
    }
    let (mean_deg, std_deg) = mean_std(&changes);
    Ok(HingeReport {
        preset: preset.into(),
        gripper_rotation_deg: rotation.to_degrees(),
        seeds: seeds.to_vec(),
        orientation_change_deg: changes,
        mean_deg,
        std_deg,
        separations,
    })
}

/// The composite in-hand manipulation demonstration: grasp on the support,
/// estimate contact properties, lift under slip-avoidance, 30 mm linear
/// slip, hinge while the gripper rotates, back to avoidance, then 30
/// degrees of rotational slip.
pub fn run_demo(preset: &str, seed: u64) -> Result<DemoReport, HarnessError> {
    let mut sc = base_scenario(&format!("demo-{preset}"), preset, 30.0, seed);
    sc.environment.anchored = true;
    sc.environment.rotational = true;
    perturb_scenario(&mut sc, seed);
    let mut world = World::from_scenario(&sc)?;

    // Grasp and explore on the support.
    let exploration = run_exploration(&ExplorationConfig::default(), &mut world)?;
    let est = [
        exploration.fingers[0].params,
        exploration.fingers[1].params,
    ];
    world.apply_command(&Command::SetEstimates {
        mu_c: [est[0].mu_c, est[1].mu_c],
        r: [est[0].r, est[1].r],
    });

    // Lift: release the support under slip-avoidance.
    world.apply_command(&Command::SetMode {
        mode: ControlMode::Avoidance,
    });
    world.run_for(0.5)?;
    world.apply_command(&Command::Release);
    world.run_for(1.0)?;

    // 30 mm downward linear slip in 3 s.
    let p_before = world.object.p;
    world.apply_command(&Command::StartTrajectory {
        target: 0.030,
        duration: 3.0,
    });
    world.apply_command(&Command::SetMode {
        mode: ControlMode::LinearSlip,
    });
    world.run_for(4.0)?;
    let linear_slip = (world.object.p - p_before).abs();

    // Hinge: gripper rotates 30 degrees while the object stays vertical.
    world.apply_command(&Command::SetMode {
        mode: ControlMode::Hinge,
    });
    let t = world.t();
    world.push_arm_segment(ArmSegment {
        t: t + 0.1,
        kind: ArmMotionKind::Rotate,
        amount: 30f64.to_radians(),
        duration: 2.0,
    });
    world.run_for(2.5)?;

    // Re-secure, then rotate the object 30 degrees by rotational slip.
    world.apply_command(&Command::SetMode {
        mode: ControlMode::Avoidance,
    });
    world.run_for(0.5)?;
    let theta_before = world.object.theta;
    world.apply_command(&Command::StartTrajectory {
        target: 30f64.to_radians(),
        duration: 3.0,
    });
    world.apply_command(&Command::SetMode {
        mode: ControlMode::RotationalSlip,
    });
    world.run_for(4.0)?;
    let rotation = (world.object.theta - theta_before).abs();

    world.apply_command(&Command::SetMode {
        mode: ControlMode::Avoidance,
    });
    world.run_for(0.5)?;

    let trace = world.into_trace();
    let separations = trace.events_of(EventKind::Separation).count();
    let uncontrolled_drop = trace.rows.last().unwrap().p.abs() > 0.15;
    Ok(DemoReport {
        preset: preset.into(),
        seed,
        mu_c_estimates: [est[0].mu_c, est[1].mu_c],
        r_estimates: [est[0].r, est[1].r],
        linear_slip_m: linear_slip,
        rotation_rad: rotation,
        separations,
        success: separations == 0 && !uncontrolled_drop,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemoReport {
    pub preset: String,
    pub seed: u64,
    pub mu_c_estimates: [f64; 2],
    pub r_estimates: [f64; 2],
    pub linear_slip_m: f64,
    pub rotation_rad: f64,
    pub separations: usize,
    pub success: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemoBatchReport {
    pub preset: String,
    pub runs: Vec<DemoReport>,
    pub successes: usize,
}

pub fn run_demo_batch(preset: &str, seeds: &[u64]) -> Result<DemoBatchReport, HarnessError> {
    let mut runs = Vec::new();
    for &seed in seeds {
        runs.push(run_demo(preset, seed)?);
    }
    let successes = runs.iter().filter(|r| r.success).count();
    Ok(DemoBatchReport {
        preset: preset.into(),
        runs,
        successes,
    })
}

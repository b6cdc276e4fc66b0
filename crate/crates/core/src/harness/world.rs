//! The stepped simulation world: physics at the base rate, grasp control on
//! the inner divisor, sensing and slip control on the outer divisor.
//!
//! Per tick the order is fixed: physics step, then inner control when due,
//! then sensors plus outer control when due; the outer controller consumes
//! sensor values from the same tick. Identical seeds produce bit-identical
//! traces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::HarnessError;
use crate::estimation::{ContactSample, ContactSampleLog};
use crate::grasp::{force_to_voltage, grasp_update, GraspCtrlState, GraspGains};
use crate::harness::scenario::{
    ArmMotionKind, ArmSegment, Command, Disturbance, ForceSegment, ObjectPreset, Scenario,
};
use crate::harness::trace::{Event, EventKind, Trace, TraceMeta, TraceRow};
use crate::sensors::{
    apply_calibration, fuse, FTReading, OpticalAxisCalibration, OpticalSensorSim, OpticalSimConfig,
    SensorLayout,
};
use crate::sim::{
    measured_normal_force, step_gripper, step_object, ObjectEnv, SlipMode,
};
use crate::slip::{
    hinge_update, linear_slip_update, mode_switch, rotational_slip_update, slip_avoidance_update,
    trapezoid, AveragedSensing, ControlMode, SlipCtrlState, SlipGains, SwitchConditions,
    TrajectorySpec,
};
use crate::types::{
    ContactParams, GripperParams, GripperState, ObjectParams, ObjectState, PlanarVelocity,
    PlanarWrench,
};

/// Motor voltage ceiling (V); the driver output is software-limited.
pub const VOLTAGE_LIMIT: f64 = 20.0;

/// Per-finger contact estimates consumed by the outer controllers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEstimates {
    pub mu_c: [f64; 2],
    pub r: [f64; 2],
}

impl ContactEstimates {
    pub fn from_truth(cp: &[ContactParams; 2]) -> Self {
        ContactEstimates {
            mu_c: [cp[0].mu_c, cp[1].mu_c],
            r: [cp[0].r, cp[1].r],
        }
    }

    pub fn mu_c_bar(&self) -> f64 {
        0.5 * (self.mu_c[0] + self.mu_c[1])
    }

    pub fn r_bar(&self) -> f64 {
        0.5 * (self.r[0] + self.r[1])
    }
}

/// Latest sensed values, held between outer ticks.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sensed {
    pub ft: [FTReading; 2],
    pub fused: [PlanarVelocity; 2],
    pub bar: AveragedSensing,
}

pub struct World {
    // Timebase.
    pub dt: f64,
    pub tick: u64,
    pub inner_div: u32,
    pub outer_div: u32,

    // Gripper.
    pub gripper_params: GripperParams,
    pub gripper: GripperState,
    pub grasp_gains: GraspGains,
    pub grasp_state: GraspCtrlState,
    pub f_d: f64,
    pub f_c: f64,
    pub v_t: f64,

    // Object.
    pub object_params: ObjectParams,
    pub object: ObjectState,
    pub contact_truth: [ContactParams; 2],
    pub gravity: f64,
    pub anchored: bool,
    pub slip_mode: SlipMode,

    // Outer control.
    pub slip_gains: SlipGains,
    pub mode: ControlMode,
    pub slip_state: SlipCtrlState,
    pub trajectory: Option<TrajectorySpec>,
    pub estimates: ContactEstimates,

    // Sensing.
    pub layout: SensorLayout,
    pub optical_cfg: OpticalSimConfig,
    pub calibration: [[OpticalAxisCalibration; 2]; 3],
    pub ft_noise: f64,
    pub dropout: [[bool; 3]; 2],
    pub sensed: Sensed,
    pub outer_log: [ContactSampleLog; 2],

    // Scripts.
    schedule: Vec<crate::harness::scenario::TimedCommand>,
    next_command: usize,
    force_profile: Vec<ForceSegment>,
    arm_segments: Vec<ArmSegment>,
    disturbances: Vec<Disturbance>,

    // Runtime accumulators.
    rng: ChaCha8Rng,
    reactions: [PlanarWrench; 2],
    window_dp: f64,
    window_dtheta: f64,
    window_ticks: u32,
    gripper_angle: f64,
    rel_theta: f64,
    had_contact: bool,
    last_f_direct: f64,

    // Output.
    pub events: Vec<Event>,
    pub rows: Vec<TraceRow>,
    pub trace_decimation: u32,
    meta: TraceMeta,
}

impl World {
    pub fn from_scenario(scenario: &Scenario) -> Result<World, HarnessError> {
        scenario.validate()?;
        let preset = scenario.object.resolve()?;
        Ok(Self::new(scenario, &preset))
    }

    fn new(scenario: &Scenario, preset: &ObjectPreset) -> World {
        let gripper_params = scenario.effective_gripper(preset);
        let f0 = scenario.initial_grasp.unwrap_or(0.0);
        let gripper = if f0 > 0.0 {
            GripperState::equilibrium(&gripper_params, f0)
        } else {
            GripperState::default()
        };
        let mode = scenario.initial_mode.unwrap_or(ControlMode::Direct);
        let hang = scenario.environment.hang_angle_deg.to_radians();

        let mut schedule = scenario.schedule.clone();
        schedule.sort_by(|a, b| a.t.total_cmp(&b.t));

        World {
            dt: scenario.rates.dt(),
            tick: 0,
            inner_div: scenario.rates.inner_div,
            outer_div: scenario.rates.outer_div,
            gripper_params,
            gripper,
            grasp_gains: scenario.grasp_gains,
            grasp_state: GraspCtrlState::default(),
            f_d: f0,
            f_c: f0,
            v_t: force_to_voltage(f0, gripper_params.k_f),
            object_params: preset.params,
            object: ObjectState::stuck_at(hang),
            contact_truth: preset.contact,
            gravity: scenario.environment.gravity,
            anchored: scenario.environment.anchored,
            slip_mode: scenario.environment.slip_mode(),
            slip_gains: scenario.slip_gains,
            mode,
            slip_state: SlipCtrlState::enter(mode, f0),
            trajectory: None,
            estimates: ContactEstimates::from_truth(&preset.contact),
            layout: SensorLayout::new(scenario.sensors.layout_d),
            optical_cfg: scenario.sensors.optical.clone(),
            calibration: scenario.sensors.pipeline_calibration(),
            ft_noise: scenario.sensors.ft_noise,
            dropout: [[false; 3]; 2],
            sensed: Sensed::default(),
            outer_log: [ContactSampleLog::new(0), ContactSampleLog::new(1)],
            schedule,
            next_command: 0,
            force_profile: scenario.force_profile.clone(),
            arm_segments: scenario.arm_motions.clone(),
            disturbances: scenario.disturbances.clone(),
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            reactions: [PlanarWrench::ZERO; 2],
            window_dp: 0.0,
            window_dtheta: 0.0,
            window_ticks: 0,
            gripper_angle: 0.0,
            rel_theta: 0.0,
            had_contact: f0 > 0.0,
            last_f_direct: f0,
            events: Vec::new(),
            rows: Vec::new(),
            trace_decimation: scenario.trace_decimation,
            meta: TraceMeta {
                name: scenario.name.clone(),
                seed: scenario.seed,
                dt: scenario.rates.dt(),
                inner_div: scenario.rates.inner_div,
                outer_div: scenario.rates.outer_div,
                outer_rate_hz: scenario.rates.physics_hz / scenario.rates.outer_div as f64,
                decimation: scenario.trace_decimation,
            },
        }
    }

    pub fn t(&self) -> f64 {
        self.tick as f64 * self.dt
    }

    /// Append an arm motion at runtime (used by the exploration script).
    pub fn push_arm_segment(&mut self, seg: ArmSegment) {
        self.arm_segments.push(seg);
    }

    pub fn set_direct_force(&mut self, f: f64) {
        self.mode = ControlMode::Direct;
        self.last_f_direct = f;
        self.f_d = f;
    }

    /// Run until the world clock reaches `t_end`.
    pub fn run_until(&mut self, t_end: f64) -> Result<(), HarnessError> {
        while self.t() < t_end - 0.5 * self.dt {
            self.step_tick()?;
        }
        Ok(())
    }

    pub fn run_for(&mut self, duration: f64) -> Result<(), HarnessError> {
        let t_end = self.t() + duration;
        self.run_until(t_end)
    }

    pub fn into_trace(self) -> Trace {
        Trace {
            meta: self.meta,
            rows: self.rows,
            events: self.events,
        }
    }

    pub fn event(&mut self, kind: EventKind, detail: impl Into<String>) {
        self.events.push(Event {
            t: self.t(),
            kind,
            detail: detail.into(),
        });
    }

    fn apply_due_commands(&mut self) {
        let now = self.t();
        while self.next_command < self.schedule.len() && self.schedule[self.next_command].t <= now {
            let cmd = self.schedule[self.next_command].command.clone();
            self.next_command += 1;
            self.apply_command(&cmd);
        }
    }

    pub fn apply_command(&mut self, cmd: &Command) {
        self.event(EventKind::Command, format!("{cmd:?}"));
        match cmd {
            Command::SetMode { mode } => self.enter_mode(*mode),
            Command::StartTrajectory { target, duration } => {
                self.trajectory = Some(TrajectorySpec::new(*target, *duration));
            }
            Command::SetEstimates { mu_c, r } => {
                self.estimates = ContactEstimates { mu_c: *mu_c, r: *r };
            }
            Command::UseTruthEstimates => {
                self.estimates = ContactEstimates::from_truth(&self.contact_truth);
            }
            Command::Release => {
                self.anchored = false;
            }
            Command::SetDropout {
                finger,
                sensor,
                active,
            } => {
                self.dropout[*finger as usize % 2][*sensor as usize % 3] = *active;
            }
        }
    }

    pub fn enter_mode(&mut self, mode: ControlMode) {
        if mode != self.mode {
            self.event(EventKind::ModeSwitch, format!("{:?} -> {:?}", self.mode, mode));
        }
        self.mode = mode;
        let mut state = SlipCtrlState::enter(mode, self.f_d);
        // Warm-start the slip-force estimate from the current load so the
        // first ticks do not command a release.
        let bar = self.sensed.bar;
        if bar.mu_c > 0.0 {
            state.f_slip = match mode {
                ControlMode::LinearSlip => bar.wrench.tangential_norm() / bar.mu_c,
                ControlMode::RotationalSlip => crate::slip::avoidance_terms(&bar).f_n_tau_min,
                _ => 0.0,
            };
            state.prev_speed = match mode {
                ControlMode::LinearSlip => bar.velocity.tangential_norm(),
                ControlMode::RotationalSlip => bar.velocity.omega.abs(),
                _ => 0.0,
            };
        }
        self.slip_state = state;
    }

    /// Scripted arm velocities at time `t`.
    fn arm_velocity(&self, t: f64) -> (f64, f64) {
        let mut vel = 0.0;
        let mut omega = 0.0;
        for seg in &self.arm_segments {
            if t < seg.t || t >= seg.t + seg.duration {
                continue;
            }
            let spec = TrajectorySpec::new(seg.amount, seg.duration);
            let (_, v) = trapezoid(&spec, t - seg.t);
            match seg.kind {
                ArmMotionKind::Translate => vel += v,
                ArmMotionKind::Rotate => omega += v,
            }
        }
        (vel, omega)
    }

    /// Active disturbance sums at time `t`: (extra mass, force, torque).
    fn disturbance_at(&self, t: f64) -> (f64, f64, f64) {
        let mut extra_mass = 0.0;
        let mut force = 0.0;
        let mut torque = 0.0;
        for d in &self.disturbances {
            if t >= d.t && t < d.t + d.duration {
                extra_mass += d.extra_mass;
                force += d.force;
                torque += d.torque;
            }
        }
        (extra_mass, force, torque)
    }

    /// One scheduler tick: physics, then inner control when due, then
    /// sensing plus outer control when due.
    pub fn step_tick(&mut self) -> Result<(), HarnessError> {
        let t = self.t();
        self.apply_due_commands();
        let (arm_vel, arm_omega) = self.arm_velocity(t);
        let (extra_mass, dist_force, dist_torque) = self.disturbance_at(t);

        // Physics: actuator force through the voltage limit, then the
        // gripper masses, then the object.
        self.v_t = force_to_voltage(self.f_c, self.gripper_params.k_f)
            .clamp(-VOLTAGE_LIMIT, VOLTAGE_LIMIT);
        let f_act = -self.gripper_params.k_f * self.v_t;
        self.gripper = step_gripper(&self.gripper, &self.gripper_params, f_act, 0.0, self.dt)?;
        let f_n_true = measured_normal_force(&self.gripper, &self.gripper_params);

        if self.had_contact && self.gripper.x2 == 0.0 && self.f_d > 0.5 {
            self.event(EventKind::Separation, format!("x2 = 0 with f_d = {}", self.f_d));
            self.had_contact = false;
        } else if self.gripper.x2 > 0.0 {
            self.had_contact = true;
        }

        let mass = self.object_params.mass + extra_mass;
        let params = ObjectParams {
            mass,
            ..self.object_params
        };
        let hanging = !self.anchored;
        let env = ObjectEnv {
            gravity_force: if hanging { mass * self.gravity } else { 0.0 } + dist_force,
            external_force: 0.0,
            external_torque: dist_torque,
            gravity_accel: self.gravity,
            gripper_vel: arm_vel,
            gripper_omega: arm_omega,
            anchored: self.anchored,
        };
        let was_stuck = self.object.stuck_linear && self.object.stuck_rot;
        let out = step_object(
            &self.object,
            &params,
            [f_n_true, f_n_true],
            [&self.contact_truth[0], &self.contact_truth[1]],
            &env,
            self.slip_mode,
            self.dt,
        );
        let now_stuck = out.state.stuck_linear && out.state.stuck_rot;
        if was_stuck && !now_stuck {
            self.event(EventKind::Slip, format!("v = {:.6}", out.state.v));
        } else if !was_stuck && now_stuck {
            self.event(EventKind::Stick, String::new());
        }
        // Relative slip over the sensing window.
        let u_lin = if self.anchored {
            -env.gripper_vel
        } else {
            out.state.v - env.gripper_vel
        };
        let u_rot = if self.anchored {
            -env.gripper_omega
        } else {
            out.state.omega - env.gripper_omega
        };
        self.window_dp += u_lin * self.dt;
        self.window_dtheta += u_rot * self.dt;
        self.window_ticks += 1;
        self.gripper_angle += arm_omega * self.dt;
        self.rel_theta += u_rot * self.dt;
        self.object = out.state;
        self.reactions = out.reactions;

        // Inner loop.
        if self.tick % self.inner_div as u64 == 0 {
            if self.mode == ControlMode::Direct {
                let mut f = self.last_f_direct;
                for seg in &self.force_profile {
                    if let Some(v) = seg.value_at(t) {
                        f = v;
                    }
                }
                self.last_f_direct = f;
                self.f_d = f;
            }
            let f_n_meas = self.measured_fn(f_n_true);
            let (f_c, next) = grasp_update(&self.grasp_state, self.f_d, f_n_meas, &self.grasp_gains)?;
            self.f_c = f_c;
            self.grasp_state = next;
        }

        // Sensing + outer loop.
        if self.tick % self.outer_div as u64 == 0 {
            self.outer_update(f_n_true)?;
        }

        self.tick += 1;
        if (self.tick - 1) % self.trace_decimation as u64 == 0 {
            self.record_row(f_n_true);
        }
        Ok(())
    }

    fn measured_fn(&mut self, f_n_true: f64) -> f64 {
        if self.ft_noise > 0.0 {
            (f_n_true + self.rng.gen_range(-self.ft_noise..self.ft_noise)).max(0.0)
        } else {
            f_n_true
        }
    }

    fn outer_update(&mut self, f_n_true: f64) -> Result<(), HarnessError> {
        let window = self.window_ticks.max(1) as f64 * self.dt;
        let v_avg = PlanarVelocity::new(self.window_dp / window, 0.0, self.window_dtheta / window);
        self.window_dp = 0.0;
        self.window_dtheta = 0.0;
        self.window_ticks = 0;

        let mut fused = [PlanarVelocity::ZERO; 2];
        for finger in 0..2 {
            let raw = simulate_optical_reading(
                &v_avg,
                &self.layout,
                &self.optical_cfg,
                window,
                &self.dropout[finger],
                &mut self.rng,
            );
            let mut calibrated = [[0.0f64; 2]; 3];
            for j in 0..3 {
                for axis in 0..2 {
                    calibrated[j][axis] =
                        apply_calibration(raw.velocities[j][axis], &self.calibration[j][axis])?;
                }
            }
            let fusion = fuse(&calibrated, &self.layout);
            if let Some(idx) = fusion.rejected {
                self.event(EventKind::Rejection, format!("finger {finger} sensor {idx}"));
            }
            fused[finger] = fusion.velocity;
        }

        let mut ft = [FTReading::default(); 2];
        for finger in 0..2 {
            let mut w = self.reactions[finger];
            let f_n_meas = self.measured_fn(f_n_true);
            if self.ft_noise > 0.0 {
                w.fx += self.rng.gen_range(-self.ft_noise..self.ft_noise);
                w.fy += self.rng.gen_range(-self.ft_noise..self.ft_noise);
                w.tau += self.rng.gen_range(-self.ft_noise..self.ft_noise) * 1e-3;
            }
            ft[finger] = FTReading::new(w, f_n_meas);
            self.outer_log[finger].push(ContactSample {
                t: self.t(),
                fx: w.fx,
                fy: w.fy,
                tau: w.tau,
                fn_: ft[finger].f_n,
                vx: fused[finger].vx,
                vy: fused[finger].vy,
                omega: fused[finger].omega,
            });
        }

        let bar = AveragedSensing::from_pair(
            [ft[0].wrench, ft[1].wrench],
            fused,
            self.estimates.mu_c,
            self.estimates.r,
        );
        self.sensed = Sensed { ft, fused, bar };

        match self.mode {
            ControlMode::Direct => {}
            ControlMode::Avoidance => {
                let f_d = slip_avoidance_update(&bar, &self.slip_gains, self.slip_state.f_d_prev);
                self.slip_state.f_d_prev = f_d;
                self.slip_state.t_in_mode += self.slip_gains.t_h;
                self.f_d = f_d;
            }
            ControlMode::Hinge => {
                let f_d = hinge_update(&bar, &self.slip_gains);
                self.slip_state.f_d_prev = f_d;
                self.slip_state.t_in_mode += self.slip_gains.t_h;
                self.f_d = f_d;
            }
            ControlMode::LinearSlip | ControlMode::RotationalSlip => {
                let traj = self
                    .trajectory
                    .unwrap_or(TrajectorySpec::new(0.0, 1.0));
                let update = if self.mode == ControlMode::LinearSlip {
                    linear_slip_update(&bar, &self.slip_gains, &traj, &self.slip_state)
                } else {
                    rotational_slip_update(&bar, &self.slip_gains, &traj, &self.slip_state)
                };
                self.f_d = update.f_d;
                self.slip_state = update.state;
                let next = mode_switch(
                    self.mode,
                    &SwitchConditions {
                        reached: update.reached,
                        trajectory_elapsed: update.trajectory_elapsed,
                        approaching: update.approaching,
                    },
                );
                if next != self.mode {
                    self.enter_mode(next);
                }
            }
        }
        Ok(())
    }

    fn record_row(&mut self, f_n_true: f64) {
        let s = &self.sensed;
        self.rows.push(TraceRow {
            t: self.t(),
            f_d: self.f_d,
            f_c: self.f_c,
            v_t: self.v_t,
            f_n: f_n_true,
            f_n_meas: s.ft[0].f_n,
            x1: self.gripper.x1,
            v1: self.gripper.v1,
            x2: self.gripper.x2,
            v2: self.gripper.v2,
            p: self.object.p,
            v: self.object.v,
            theta: self.object.theta,
            omega: self.object.omega,
            rel_theta: self.rel_theta,
            stuck_lin: self.object.stuck_linear as u8,
            stuck_rot: self.object.stuck_rot as u8,
            f1x: s.ft[0].wrench.fx,
            f1y: s.ft[0].wrench.fy,
            tau1: s.ft[0].wrench.tau,
            fn1: s.ft[0].f_n,
            f2x: s.ft[1].wrench.fx,
            f2y: s.ft[1].wrench.fy,
            tau2: s.ft[1].wrench.tau,
            fn2: s.ft[1].f_n,
            v1x: s.fused[0].vx,
            v1y: s.fused[0].vy,
            omega1: s.fused[0].omega,
            v2x: s.fused[1].vx,
            v2y: s.fused[1].vy,
            omega2: s.fused[1].omega,
            p_hat: self.slip_state.p,
            mode: self.mode.code(),
        });
    }
}

/// Run a scenario to completion and return its trace.
pub fn run_scenario(scenario: &Scenario) -> Result<Trace, HarnessError> {
    let mut world = World::from_scenario(scenario)?;
    world.run_until(scenario.duration)?;
    Ok(world.into_trace())
}

/// Count of inner and outer controller executions for a run of `n` ticks.
pub fn expected_executions(n_ticks: u64, div: u32) -> u64 {
    n_ticks.div_ceil(div as u64)
}

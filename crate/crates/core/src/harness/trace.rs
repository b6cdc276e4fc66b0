//! Uniformly sampled record of all simulation, sensing and control signals
//! plus the event log.

use serde::{Deserialize, Serialize};

/// Diagnostic events emitted by the scenario runner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Object broke away from full stick.
    Slip,
    /// Object re-entered full stick.
    Stick,
    /// Grasp contact lost while a grasp force was commanded.
    Separation,
    /// Outer controller changed mode.
    ModeSwitch,
    /// Fusion rejected one optical sensor.
    Rejection,
    /// Scheduled command applied.
    Command,
}

/// One trace row. Sensed channels hold their last value between 120 Hz
/// updates; physics channels are sampled every physics step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    /// Desired grasp force commanded to the inner loop (N).
    pub f_d: f64,
    /// Inner-loop commanded force (N).
    pub f_c: f64,
    /// Motor target voltage (V).
    pub v_t: f64,
    /// True contact normal force (N).
    pub f_n: f64,
    /// Normal force as read by the F/T sensors (N).
    pub f_n_meas: f64,
    pub x1: f64,
    pub v1: f64,
    pub x2: f64,
    pub v2: f64,
    /// True object slip displacement (m).
    pub p: f64,
    /// True object slip velocity (m/s).
    pub v: f64,
    /// True object hang angle (rad).
    pub theta: f64,
    /// True object angular velocity (rad/s).
    pub omega: f64,
    /// Relative rotation of object vs gripper since start (rad).
    pub rel_theta: f64,
    pub stuck_lin: u8,
    pub stuck_rot: u8,
    pub f1x: f64,
    pub f1y: f64,
    pub tau1: f64,
    pub fn1: f64,
    pub f2x: f64,
    pub f2y: f64,
    pub tau2: f64,
    pub fn2: f64,
    /// Fused velocity estimates per finger.
    pub v1x: f64,
    pub v1y: f64,
    pub omega1: f64,
    pub v2x: f64,
    pub v2y: f64,
    pub omega2: f64,
    /// Displacement integrated by the active slip controller (m or rad).
    pub p_hat: f64,
    /// Outer control mode code.
    pub mode: u8,
}

/// Run metadata recorded alongside the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub name: String,
    pub seed: u64,
    /// Physics step (s).
    pub dt: f64,
    pub inner_div: u32,
    pub outer_div: u32,
    /// Actual outer rate, physics rate over the integer divisor (Hz).
    pub outer_rate_hz: f64,
    pub decimation: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub meta: TraceMeta,
    pub rows: Vec<TraceRow>,
    pub events: Vec<Event>,
}

impl Trace {
    /// Every `n`-th row starting from the first; `ceil(len/n)` rows.
    pub fn decimated(&self, n: usize) -> Trace {
        debug_assert!(n >= 1);
        Trace {
            meta: TraceMeta {
                decimation: self.meta.decimation * n as u32,
                ..self.meta.clone()
            },
            rows: self.rows.iter().step_by(n.max(1)).cloned().collect(),
            events: self.events.clone(),
        }
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Linear interpolation of a channel at time `t`.
    pub fn sample_at(&self, t: f64, channel: impl Fn(&TraceRow) -> f64) -> Option<f64> {
        if self.rows.is_empty() {
            return None;
        }
        let idx = self.rows.partition_point(|r| r.t < t);
        if idx == 0 {
            return Some(channel(&self.rows[0]));
        }
        if idx >= self.rows.len() {
            return Some(channel(self.rows.last().unwrap()));
        }
        let (a, b) = (&self.rows[idx - 1], &self.rows[idx]);
        let w = if b.t > a.t { (t - a.t) / (b.t - a.t) } else { 0.0 };
        Some(channel(a) * (1.0 - w) + channel(b) * w)
    }
}

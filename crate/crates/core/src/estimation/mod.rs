//! Contact-property identification.
//!
//! A short two-phase exploration at pick-up — a slow linear slide against a
//! supporting surface followed by a small rotation and back — yields enough
//! data to identify the Stribeck friction coefficients and the rim contact
//! radius per finger within two seconds of grasping, using only in-hand
//! sensing.

mod exploration;

pub use exploration::{run_exploration, ExplorationConfig, ExplorationOutcome, FingerEstimate};

use serde::{Deserialize, Serialize};

use crate::error::EstimationError;

/// Sample filters of the friction estimator.
pub const FRICTION_V_MIN: f64 = 2e-3;
pub const FRICTION_OMEGA_MAX: f64 = 0.1;
pub const FN_MIN: f64 = 1.0;
/// Sample filters of the radius estimator.
pub const RADIUS_OMEGA_MIN: f64 = 0.1;
pub const RADIUS_V_MAX: f64 = 5e-3;

/// One 120 Hz contact sample of one finger.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ContactSample {
    pub t: f64,
    pub fx: f64,
    pub fy: f64,
    pub tau: f64,
    pub fn_: f64,
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

/// Time series of contact samples for one finger at the outer-loop rate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContactSampleLog {
    pub finger_id: u8,
    pub samples: Vec<ContactSample>,
}

impl ContactSampleLog {
    pub fn new(finger_id: u8) -> Self {
        ContactSampleLog {
            finger_id,
            samples: Vec::new(),
        }
    }

    pub fn push(&mut self, sample: ContactSample) {
        self.samples.push(sample);
    }

    /// Fixed CSV column order: t, fx, fy, tau, fn, vx, vy, omega, finger_id.
    pub const CSV_HEADER: &'static str = "t,fx,fy,tau,fn,vx,vy,omega,finger_id";

    pub fn to_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for s in &self.samples {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                s.t, s.fx, s.fy, s.tau, s.fn_, s.vx, s.vy, s.omega, self.finger_id
            )?;
        }
        Ok(())
    }

    pub fn from_csv<R: std::io::Read>(r: R) -> std::io::Result<Vec<ContactSampleLog>> {
        use std::io::{BufRead, BufReader};
        let reader = BufReader::new(r);
        let mut logs: Vec<ContactSampleLog> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 9 {
                return Err(std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    format!("expected 9 columns, got {} on line {}", fields.len(), i + 1),
                ));
            }
            let parse = |s: &str| -> std::io::Result<f64> {
                s.parse::<f64>()
                    .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
            };
            let finger_id = fields[8]
                .parse::<u8>()
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            let sample = ContactSample {
                t: parse(fields[0])?,
                fx: parse(fields[1])?,
                fy: parse(fields[2])?,
                tau: parse(fields[3])?,
                fn_: parse(fields[4])?,
                vx: parse(fields[5])?,
                vy: parse(fields[6])?,
                omega: parse(fields[7])?,
            };
            match logs.iter_mut().find(|l| l.finger_id == finger_id) {
                Some(log) => log.push(sample),
                None => {
                    let mut log = ContactSampleLog::new(finger_id);
                    log.push(sample);
                    logs.push(log);
                }
            }
        }
        Ok(logs)
    }
}

/// Ordinary least-squares line fit; returns (intercept, slope).
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> Result<(f64, f64), EstimationError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(EstimationError::DegenerateRegression);
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(EstimationError::DegenerateRegression);
    }
    let slope = sxy / sxx;
    Ok((mean_y - slope * mean_x, slope))
}

/// Diagnostics of one friction estimation run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrictionEstimate {
    pub mu_c: f64,
    pub mu_s: f64,
    pub mu_v: f64,
    /// Samples used by the kinetic regression.
    pub kinetic_samples: usize,
    /// Samples contributing to the static peak.
    pub static_samples: usize,
    /// Samples dropped by the angular-velocity and normal-force filters.
    pub filtered_out: usize,
}

/// Identify (mu_c, mu_s, mu_v) from a linear-slip episode.
///
/// Samples with `|omega| > 0.1` or `f_n < 1 N` are discarded. The friction
/// ratio `mu = ||(fx, fy)||/f_n` of slow samples (`v < 2 mm/s`) feeds the
/// static peak; faster samples feed the kinetic regression
/// `mu ~ mu_c + mu_v v`. The static coefficient is the larger of the static
/// peak and `mu_c`, so `mu_s >= mu_c` always holds.
pub fn estimate_friction(log: &ContactSampleLog) -> Result<FrictionEstimate, EstimationError> {
    let mut v_list = Vec::new();
    let mut mu_list = Vec::new();
    let mut static_list: Vec<f64> = Vec::new();
    let mut filtered_out = 0usize;

    for s in &log.samples {
        if s.omega.abs() > FRICTION_OMEGA_MAX || s.fn_ < FN_MIN {
            filtered_out += 1;
            continue;
        }
        let v = s.vx.hypot(s.vy);
        let mu = s.fx.hypot(s.fy) / s.fn_;
        if v < FRICTION_V_MIN {
            static_list.push(mu);
        } else {
            v_list.push(v);
            mu_list.push(mu);
        }
    }

    if v_list.len() < 2 {
        return Err(EstimationError::InsufficientSlip(v_list.len()));
    }
    let (mu_c, mu_v) = linear_regression(&v_list, &mu_list)?;
    let static_peak = static_list.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mu_s = if static_list.is_empty() {
        mu_c
    } else {
        static_peak.max(mu_c)
    };

    Ok(FrictionEstimate {
        mu_c,
        mu_s,
        mu_v,
        kinetic_samples: v_list.len(),
        static_samples: static_list.len(),
        filtered_out,
    })
}

/// Diagnostics of one radius estimation run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RadiusEstimate {
    pub r: f64,
    /// Regression slope; identified but unused by the rim model.
    pub slope: f64,
    pub samples: usize,
}

/// Identify the rim contact radius from a rotational-slip episode.
///
/// Keeps samples with `|omega| >= 0.1`, `f_n >= 1 N` and tangential speed
/// below 5 mm/s; regresses `mu_tau = |tau|/f_n` against `|omega|` and
/// returns `r = intercept / mu_c`.
pub fn estimate_radius(log: &ContactSampleLog, mu_c: f64) -> Result<RadiusEstimate, EstimationError> {
    debug_assert!(mu_c > 0.0);
    let mut omega_list = Vec::new();
    let mut mu_tau_list = Vec::new();

    for s in &log.samples {
        if s.omega.abs() < RADIUS_OMEGA_MIN || s.fn_ < FN_MIN {
            continue;
        }
        if s.vx.hypot(s.vy) > RADIUS_V_MAX {
            continue;
        }
        mu_tau_list.push(s.tau.abs() / s.fn_);
        omega_list.push(s.omega.abs());
    }

    if omega_list.len() < 2 {
        return Err(EstimationError::InsufficientRotation(omega_list.len()));
    }
    let (intercept, slope) = linear_regression(&omega_list, &mu_tau_list)?;
    Ok(RadiusEstimate {
        r: intercept / mu_c,
        slope,
        samples: omega_list.len(),
    })
}

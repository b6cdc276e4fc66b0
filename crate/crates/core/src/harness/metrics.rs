//! Step-response and frequency-response metrics.

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::harness::trace::{Trace, TraceRow};

/// Step-response metrics against the measured normal-force channel.
/// `None` marks a metric whose threshold was never crossed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    /// 10% to 90% rise time (s).
    pub t_r: Option<f64>,
    /// Time to 50% of the change (s).
    pub t_50: Option<f64>,
    /// Peak force above the target (N), zero when no overshoot.
    pub m_p: f64,
    /// Settling time into the +-2% band of the change (s).
    pub t_s: Option<f64>,
}

/// Fraction of the step change that defines the settling band.
pub const SETTLE_BAND: f64 = 0.02;

fn crossing_time(rows: &[TraceRow], t0: f64, level: f64, rising: bool) -> Option<f64> {
    let mut prev: Option<&TraceRow> = None;
    for row in rows.iter().filter(|r| r.t >= t0) {
        if let Some(p) = prev {
            let crossed = if rising {
                p.f_n_meas < level && row.f_n_meas >= level
            } else {
                p.f_n_meas > level && row.f_n_meas <= level
            };
            if crossed {
                let df = row.f_n_meas - p.f_n_meas;
                let w = if df.abs() > 0.0 {
                    (level - p.f_n_meas) / df
                } else {
                    0.0
                };
                return Some(p.t + w * (row.t - p.t));
            }
        } else if rising && row.f_n_meas >= level {
            return Some(row.t);
        } else if !rising && row.f_n_meas <= level {
            return Some(row.t);
        }
        prev = Some(row);
    }
    None
}

/// Extract the four step metrics for a commanded step `f_from -> f_to`.
///
/// The step onset is the first sample where the command reaches `f_to`.
pub fn step_metrics(trace: &Trace, f_from: f64, f_to: f64) -> StepMetrics {
    let change = f_to - f_from;
    let onset = trace
        .rows
        .iter()
        .position(|r| (r.f_d - f_to).abs() <= 1e-9 * f_to.abs().max(1.0))
        .unwrap_or(0);
    let t0 = trace.rows.get(onset).map(|r| r.t).unwrap_or(0.0);
    let rows = &trace.rows[onset..];
    let rising = change >= 0.0;

    let level = |frac: f64| f_from + frac * change;
    let t_10 = crossing_time(rows, t0, level(0.10), rising);
    let t_50 = crossing_time(rows, t0, level(0.50), rising).map(|t| t - t0);
    let t_90 = crossing_time(rows, t0, level(0.90), rising);
    let t_r = match (t_10, t_90) {
        (Some(a), Some(b)) => Some(b - a),
        _ => None,
    };

    let m_p = rows
        .iter()
        .map(|r| if rising { r.f_n_meas - f_to } else { f_to - r.f_n_meas })
        .fold(0.0f64, f64::max);

    let band = SETTLE_BAND * change.abs();
    let mut t_s = None;
    let mut entered = false;
    for row in rows {
        let inside = (row.f_n_meas - f_to).abs() <= band;
        if inside && !entered {
            t_s = Some(row.t - t0);
            entered = true;
        } else if !inside && entered {
            t_s = None;
            entered = false;
        }
    }
    StepMetrics { t_r, t_50, m_p, t_s }
}

/// One point of the frequency response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodePoint {
    pub freq: f64,
    pub magnitude_db: f64,
    pub phase_deg: f64,
}

/// Window of one constant-frequency segment inside a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodeSegment {
    pub freq: f64,
    pub t_start: f64,
    pub t_end: f64,
}

/// Least-squares fit of `y ~ c + a sin(w t) + b cos(w t)`; returns
/// (amplitude, phase) with `phase = atan2(b, a)` so that
/// `y = c + R sin(w t + phase)`.
fn fit_sine(ts: &[f64], ys: &[f64], freq: f64) -> (f64, f64) {
    let w = 2.0 * std::f64::consts::PI * freq;
    // Normal equations for the 3-parameter fit.
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (&t, &y) in ts.iter().zip(ys) {
        let basis = [(w * t).sin(), (w * t).cos(), 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
            rhs[i] += basis[i] * y;
        }
    }
    let sol = solve3(m, rhs);
    (sol[0].hypot(sol[1]), sol[1].atan2(sol[0]))
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        b.swap(col, pivot);
        let d = m[col][col];
        for row in 0..3 {
            if row == col || m[row][col] == 0.0 {
                continue;
            }
            let f = m[row][col] / d;
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    [b[0] / m[0][0], b[1] / m[1][1], b[2] / m[2][2]]
}

fn wrap_deg(mut deg: f64) -> f64 {
    while deg > 180.0 {
        deg -= 360.0;
    }
    while deg <= -180.0 {
        deg += 360.0;
    }
    deg
}

/// Per-segment sinusoid fit of the response (`f_n_meas`) against the
/// command (`f_d`): magnitude in dB and phase offset in degrees.
pub fn bode_analysis(trace: &Trace, segments: &[BodeSegment]) -> Result<Vec<BodePoint>, HarnessError> {
    let mut points = Vec::with_capacity(segments.len());
    for seg in segments {
        if seg.t_end - seg.t_start < 2.0 / seg.freq {
            return Err(HarnessError::SegmentTooShort { freq: seg.freq });
        }
        let rows: Vec<&TraceRow> = trace
            .rows
            .iter()
            .filter(|r| r.t >= seg.t_start && r.t < seg.t_end)
            .collect();
        if rows.len() < 8 {
            return Err(HarnessError::SegmentTooShort { freq: seg.freq });
        }
        let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
        let cmd: Vec<f64> = rows.iter().map(|r| r.f_d).collect();
        let resp: Vec<f64> = rows.iter().map(|r| r.f_n_meas).collect();
        let (amp_u, ph_u) = fit_sine(&ts, &cmd, seg.freq);
        let (amp_y, ph_y) = fit_sine(&ts, &resp, seg.freq);
        points.push(BodePoint {
            freq: seg.freq,
            magnitude_db: 20.0 * (amp_y / amp_u).log10(),
            phase_deg: wrap_deg((ph_y - ph_u).to_degrees()),
        });
    }
    Ok(points)
}

/// The frequencies of the frequency-response test, octaves from 1 to 64 Hz.
pub const BODE_FREQS: [f64; 7] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];

/// Build a synthetic trace of an analytic first-order plant with transport
/// delay driven by the per-frequency sinusoid profile. Injected in place of
/// the simulator to validate the analysis pipeline: the response channel is
/// the exact steady-state output
/// `y = base + A |H| sin(w (t - delay) + angle(H))`.
pub fn synthetic_bode_trace(
    time_constant: f64,
    delay: f64,
    base: f64,
    amplitude: f64,
    freqs: &[f64],
    sample_hz: f64,
    periods: u32,
) -> (Trace, Vec<BodeSegment>) {
    let dt = 1.0 / sample_hz;
    let mut rows = Vec::new();
    let mut segments = Vec::new();
    let mut t0 = 0.0;
    for &freq in freqs {
        let w = 2.0 * std::f64::consts::PI * freq;
        let gain = 1.0 / (1.0 + (w * time_constant).powi(2)).sqrt();
        let phase = -(w * time_constant).atan();
        let seg_len = periods as f64 / freq;
        let n = (seg_len * sample_hz).round() as usize;
        for k in 0..n {
            let t = t0 + k as f64 * dt;
            let local = t - t0;
            rows.push(TraceRow {
                t,
                f_d: base + amplitude * (w * local).sin(),
                f_n_meas: base + amplitude * gain * (w * (local - delay) + phase).sin(),
                ..Default::default()
            });
        }
        segments.push(BodeSegment {
            freq,
            t_start: t0,
            t_end: t0 + seg_len,
        });
        t0 += seg_len;
    }
    let trace = Trace {
        meta: crate::harness::trace::TraceMeta {
            name: "synthetic-bode".into(),
            seed: 0,
            dt,
            inner_div: 1,
            outer_div: 1,
            outer_rate_hz: sample_hz,
            decimation: 1,
        },
        rows,
        events: vec![],
    };
    (trace, segments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::trace::TraceMeta;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn trace_from(rows: Vec<TraceRow>) -> Trace {
        Trace {
            meta: TraceMeta {
                name: "t".into(),
                seed: 0,
                dt: 1e-4,
                inner_div: 20,
                outer_div: 84,
                outer_rate_hz: 10_000.0 / 84.0,
                decimation: 1,
            },
            rows,
            events: vec![],
        }
    }

    fn first_order_step(t_const: f64) -> Trace {
        let mut rows = Vec::new();
        let dt = 1e-4;
        for k in 0..10_000 {
            let t = k as f64 * dt;
            let (f_d, f_n) = if t < 0.05 {
                (5.0, 5.0)
            } else {
                (25.0, 5.0 + 20.0 * (1.0 - (-(t - 0.05) / t_const).exp()))
            };
            rows.push(TraceRow {
                t,
                f_d,
                f_n_meas: f_n,
                ..Default::default()
            });
        }
        trace_from(rows)
    }

    #[test]
    fn first_order_metrics_match_analytic_values() {
        let t_const = 0.01;
        let m = step_metrics(&first_order_step(t_const), 5.0, 25.0);
        assert_relative_eq!(m.t_50.unwrap(), t_const * 2f64.ln(), max_relative = 1e-3);
        assert_relative_eq!(m.t_r.unwrap(), t_const * 9f64.ln(), max_relative = 1e-3);
        assert_abs_diff_eq!(m.m_p, 0.0, epsilon = 1e-9);
        assert_relative_eq!(m.t_s.unwrap(), t_const * 50f64.ln(), max_relative = 1e-2);
    }

    #[test]
    fn instantaneous_step_gives_zero_times() {
        let mut rows = Vec::new();
        for k in 0..100 {
            let t = k as f64 * 1e-4;
            let v = if k < 50 { 5.0 } else { 25.0 };
            rows.push(TraceRow {
                t,
                f_d: v,
                f_n_meas: v,
                ..Default::default()
            });
        }
        let m = step_metrics(&trace_from(rows), 5.0, 25.0);
        assert_eq!(m.t_r.unwrap(), 0.0);
        assert_eq!(m.t_50.unwrap(), 0.0);
        assert_eq!(m.m_p, 0.0);
        assert_eq!(m.t_s.unwrap(), 0.0);
    }

    #[test]
    fn never_crossing_step_reports_unattained() {
        let mut rows = Vec::new();
        for k in 0..100 {
            rows.push(TraceRow {
                t: k as f64 * 1e-4,
                f_d: 25.0,
                f_n_meas: 5.0,
                ..Default::default()
            });
        }
        let m = step_metrics(&trace_from(rows), 5.0, 25.0);
        assert!(m.t_r.is_none());
        assert!(m.t_50.is_none());
        assert!(m.t_s.is_none());
    }

    #[test]
    fn identity_response_is_zero_db_zero_phase() {
        let (mut trace, segments) =
            synthetic_bode_trace(1e-9, 0.0, 15.0, 5.0, &BODE_FREQS, 10_000.0, 8);
        for row in &mut trace.rows {
            row.f_n_meas = row.f_d;
        }
        let points = bode_analysis(&trace, &segments).unwrap();
        for p in points {
            assert_abs_diff_eq!(p.magnitude_db, 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(p.phase_deg, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn pure_delay_phase_at_64_hz() {
        let (trace, segments) =
            synthetic_bode_trace(1e-12, 2e-3, 15.0, 5.0, &[64.0], 10_000.0, 16);
        let points = bode_analysis(&trace, &segments).unwrap();
        assert_abs_diff_eq!(points[0].phase_deg, -46.08, epsilon = 0.01);
        assert_abs_diff_eq!(points[0].magnitude_db, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn first_order_magnitude_at_16_hz() {
        let t_const = 0.01;
        let (trace, segments) =
            synthetic_bode_trace(t_const, 0.0, 15.0, 5.0, &[16.0], 10_000.0, 16);
        let points = bode_analysis(&trace, &segments).unwrap();
        let expected = -20.0
            * (1.0 + (2.0 * std::f64::consts::PI * 16.0 * t_const).powi(2))
                .sqrt()
                .log10();
        assert_relative_eq!(points[0].magnitude_db, expected, max_relative = 1e-6);
    }

    #[test]
    fn short_segment_faults() {
        let (trace, mut segments) =
            synthetic_bode_trace(0.01, 0.0, 15.0, 5.0, &[1.0], 10_000.0, 8);
        segments[0].t_end = segments[0].t_start + 1.0; // < 2 periods at 1 Hz
        assert!(matches!(
            bode_analysis(&trace, &segments),
            Err(HarnessError::SegmentTooShort { .. })
        ));
    }
}

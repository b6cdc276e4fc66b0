//! Trace export and import.
//!
//! CSV carries the sample rows with a fixed, documented header; JSON mirrors
//! the same fields plus the run metadata and the event log. Floats are
//! written in shortest round-trip form so export -> import is bit-exact.

use std::io::Write;
use std::path::Path;

use crate::error::HarnessError;
use crate::harness::trace::{Trace, TraceMeta, TraceRow};

/// Fixed CSV column order of a trace row.
pub const TRACE_CSV_HEADER: &str = "t,f_d,f_c,v_t,f_n,f_n_meas,x1,v1,x2,v2,p,v,theta,omega,rel_theta,stuck_lin,stuck_rot,f1x,f1y,tau1,fn1,f2x,f2y,tau2,fn2,v1x,v1y,omega1,v2x,v2y,omega2,p_hat,mode";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv|json)")),
        }
    }
}

fn row_fields(r: &TraceRow) -> [f64; 30] {
    [
        r.t, r.f_d, r.f_c, r.v_t, r.f_n, r.f_n_meas, r.x1, r.v1, r.x2, r.v2, r.p, r.v, r.theta,
        r.omega, r.rel_theta, r.f1x, r.f1y, r.tau1, r.fn1, r.f2x, r.f2y, r.tau2, r.fn2, r.v1x,
        r.v1y, r.omega1, r.v2x, r.v2y, r.omega2, r.p_hat,
    ]
}

/// Serialize the trace rows as CSV.
pub fn write_trace_csv<W: Write>(trace: &Trace, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{TRACE_CSV_HEADER}")?;
    for r in &trace.rows {
        let f = row_fields(r);
        // Flags and mode are integer columns in the middle/end of the row.
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7], f[8], f[9], f[10], f[11], f[12],
            f[13], f[14], r.stuck_lin, r.stuck_rot, f[15], f[16], f[17], f[18], f[19], f[20],
            f[21], f[22], f[23], f[24], f[25], f[26], f[27], f[28], f[29], r.mode
        )?;
    }
    Ok(())
}

/// Parse trace rows from CSV (header required, schema fixed).
pub fn read_trace_csv<R: std::io::Read>(r: R) -> std::io::Result<Vec<TraceRow>> {
    use std::io::{BufRead, BufReader};
    let reader = BufReader::new(r);
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != TRACE_CSV_HEADER {
                return Err(std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    "unexpected trace CSV header",
                ));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 33 {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("expected 33 columns, got {} on line {}", fields.len(), i + 1),
            ));
        }
        let f = |k: usize| -> std::io::Result<f64> {
            fields[k]
                .parse::<f64>()
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
        };
        let u = |k: usize| -> std::io::Result<u8> {
            fields[k]
                .parse::<u8>()
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
        };
        rows.push(TraceRow {
            t: f(0)?,
            f_d: f(1)?,
            f_c: f(2)?,
            v_t: f(3)?,
            f_n: f(4)?,
            f_n_meas: f(5)?,
            x1: f(6)?,
            v1: f(7)?,
            x2: f(8)?,
            v2: f(9)?,
            p: f(10)?,
            v: f(11)?,
            theta: f(12)?,
            omega: f(13)?,
            rel_theta: f(14)?,
            stuck_lin: u(15)?,
            stuck_rot: u(16)?,
            f1x: f(17)?,
            f1y: f(18)?,
            tau1: f(19)?,
            fn1: f(20)?,
            f2x: f(21)?,
            f2y: f(22)?,
            tau2: f(23)?,
            fn2: f(24)?,
            v1x: f(25)?,
            v1y: f(26)?,
            omega1: f(27)?,
            v2x: f(28)?,
            v2y: f(29)?,
            omega2: f(30)?,
            p_hat: f(31)?,
            mode: u(32)?,
        });
    }
    Ok(rows)
}

/// Export a trace to a file; CSV holds the rows, JSON additionally carries
/// metadata and the event log.
pub fn export(trace: &Trace, format: ExportFormat, path: &Path) -> Result<(), HarnessError> {
    let ctx = path.display().to_string();
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(&ctx, e))?;
    let mut w = std::io::BufWriter::new(file);
    match format {
        ExportFormat::Csv => write_trace_csv(trace, &mut w).map_err(|e| HarnessError::io(&ctx, e)),
        ExportFormat::Json => {
            serde_json::to_writer(&mut w, trace)
                .map_err(|e| HarnessError::io(&ctx, std::io::Error::other(e)))?;
            w.write_all(b"\n").map_err(|e| HarnessError::io(&ctx, e))
        }
    }
}

/// Import a CSV trace (rows only; metadata defaults).
pub fn import_csv(path: &Path) -> Result<Trace, HarnessError> {
    let ctx = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(&ctx, e))?;
    let rows = read_trace_csv(std::io::BufReader::new(file)).map_err(|e| HarnessError::io(&ctx, e))?;
    Ok(Trace {
        meta: TraceMeta {
            name: path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            seed: 0,
            dt: rows
                .windows(2)
                .next()
                .map(|w| w[1].t - w[0].t)
                .unwrap_or(1e-4),
            inner_div: 20,
            outer_div: 84,
            outer_rate_hz: 10_000.0 / 84.0,
            decimation: 1,
        },
        rows,
        events: vec![],
    })
}

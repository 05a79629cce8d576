//! Output files: diagnostics and trace CSVs, snapshot and report JSON.
//!
//! CSV floats use `{:.16e}` (17 significant digits); JSON numbers are the
//! shortest representation that round-trips. Both are exact for `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::biot_savart::{VortexEnsemble, VortexParticle};
use crate::conformal::Point;
use crate::error::{FlowError, Result};
use crate::harmonic_split::TwinRunReport;
use crate::lyapunov::LyapunovTrace;
use crate::transport::{DiagnosticsRecord, SimulationOutput};
use crate::validation::RunSummary;

pub const DIAGNOSTICS_HEADER: &str = "t,total_circ,l1,linf,support_radius,min_gap,gamma,lyap_max";
pub const TRACE_HEADER: &str = "t,l1,l,dtl1_formula,dtl1_finite_diff";
pub const TWIN_HEADER: &str = "t,gap_l2,fitted_rate";

fn f(v: f64) -> String {
    format!("{v:.16e}")
}

fn row(values: &[f64]) -> String {
    values.iter().map(|v| f(*v)).collect::<Vec<_>>().join(",")
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut s = String::from(DIAGNOSTICS_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{}",
            row(&[
                r.time,
                r.total_circulation,
                r.l1_proxy,
                r.linf_proxy,
                r.support_radius,
                r.min_mapped_gap,
                r.gamma,
                r.lyapunov_max
            ])
        );
    }
    s
}

pub fn trace_csv(trace: &LyapunovTrace) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for k in 0..trace.len() {
        let _ = writeln!(
            s,
            "{}",
            row(&[
                trace.times[k],
                trace.l1_values[k],
                trace.l_values[k],
                trace.dtl1_formula[k],
                trace.dtl1_finite_diff[k]
            ])
        );
    }
    s
}

fn parse_float(cell: &str, line: usize) -> Result<f64> {
    cell.trim().parse::<f64>().map_err(|e| FlowError::Parse { location: format!("line {line}"), message: e.to_string() })
}

/// Reads a trace written by [`trace_csv`].
pub fn parse_trace_csv(text: &str, particle_id: usize) -> Result<LyapunovTrace> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        _ => {
            return Err(FlowError::Parse {
                location: "line 1".into(),
                message: format!("expected header `{TRACE_HEADER}`"),
            })
        }
    }
    let mut trace = LyapunovTrace::new(particle_id);
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 5 {
            return Err(FlowError::Parse { location: format!("line {}", i + 1), message: "expected 5 columns".into() });
        }
        let v: Vec<f64> = cells.iter().map(|c| parse_float(c, i + 1)).collect::<Result<_>>()?;
        trace.push(v[0], v[1], v[3], v[4]);
    }
    Ok(trace)
}

pub fn twin_csv(report: &TwinRunReport) -> String {
    let mut s = String::from(TWIN_HEADER);
    s.push('\n');
    for k in 0..report.times.len() {
        let _ = writeln!(s, "{}", row(&[report.times[k], report.gaps[k], report.running_rates[k]]));
    }
    s
}

/// One particle of a snapshot file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotParticle {
    pub x: f64,
    pub y: f64,
    pub gamma: f64,
    pub delta: f64,
}

pub fn snapshot_json(ens: &VortexEnsemble) -> Result<String> {
    let ps: Vec<SnapshotParticle> = ens
        .particles
        .iter()
        .map(|p| SnapshotParticle { x: p.position.re, y: p.position.im, gamma: p.circulation, delta: p.blob_radius })
        .collect();
    to_json(&ps)
}

/// Reads a snapshot. The cell area is not stored and is set to 1.
pub fn parse_snapshot_json(text: &str) -> Result<VortexEnsemble> {
    let ps: Vec<SnapshotParticle> = serde_json::from_str(text).map_err(|e| FlowError::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let particles = ps
        .into_iter()
        .map(|p| VortexParticle { position: Point::new(p.x, p.y), circulation: p.gamma, blob_radius: p.delta })
        .collect();
    Ok(VortexEnsemble::new(particles, 1.0))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| FlowError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes `diagnostics.csv`, `snapshot_NNNNN.json` per output step,
/// `trace_<id>.csv` per tracked particle and `summary.json` into `dir`.
pub fn write_run(dir: &Path, out: &SimulationOutput, summary: &RunSummary) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("diagnostics.csv"), diagnostics_csv(&out.records))?;
    for (k, (_, ens)) in out.snapshots.iter().enumerate() {
        fs::write(dir.join(format!("snapshot_{k:05}.json")), snapshot_json(ens)?)?;
    }
    for trace in &out.traces {
        fs::write(dir.join(format!("trace_{}.csv", trace.particle_id)), trace_csv(trace))?;
    }
    fs::write(dir.join("summary.json"), to_json(summary)?)?;
    Ok(())
}

//! Summary statistics of a trace and trace-to-trace comparison.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{SimTrace, TraceTable};

/// Fraction of the run after which errors are considered settled.
pub const SETTLE_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorStats {
    pub final_value: f64,
    /// Maximum over the settled part of the run.
    pub settled_max: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub steps: usize,
    pub t_end: f64,
    pub settle_from: f64,
    pub p_e: ErrorStats,
    pub psi_le: ErrorStats,
    pub u_le: ErrorStats,
    pub e_rl: ErrorStats,
    /// First time after which `u > 0` holds to the end of the trace.
    pub t_c_estimate: Option<f64>,
    /// Time the start-up window closed during the run, if tracked.
    pub t_c_detected: Option<f64>,
    pub min_barrier: f64,
    pub min_surge: f64,
    pub surge_replacements: usize,
    /// Surge replacements strictly after the detected window close.
    pub replacements_after_t_c: usize,
    pub cbf_activations: usize,
    /// Share of steps with `V2` above its envelope.
    pub envelope_violation_fraction: f64,
    /// Integral of `|tau|` over the run.
    pub effort: f64,
    pub effort_surge: f64,
    pub effort_yaw: f64,
}

fn stats(t: &[f64], x: impl Iterator<Item = f64>, settle_from: f64) -> ErrorStats {
    let mut out = ErrorStats::default();
    for (ti, xi) in t.iter().zip(x) {
        let a = xi.abs();
        if *ti >= settle_from {
            out.settled_max = out.settled_max.max(a);
        }
        out.final_value = a;
    }
    out
}

impl Metrics {
    pub fn from_trace(trace: &SimTrace) -> Self {
        let recs = &trace.records;
        if recs.is_empty() {
            return Self::default();
        }
        let t: Vec<f64> = recs.iter().map(|r| r.t).collect();
        let t_end = *t.last().unwrap();
        let settle_from = SETTLE_FRACTION * t_end;

        let t_c_estimate = match recs.iter().rposition(|r| r.state.u <= 0.0) {
            None => Some(recs[0].t),
            Some(i) if i + 1 < recs.len() => Some(recs[i + 1].t),
            Some(_) => None,
        };
        let replacements_after_t_c = trace.t_c.map_or(0, |tc| {
            recs.iter()
                .filter(|r| r.t > tc && r.flags.surge_replaced)
                .count()
        });
        let violations = recs.iter().filter(|r| r.diag.v2 > r.diag.envelope).count();
        let (mut effort, mut effort_surge, mut effort_yaw) = (0.0, 0.0, 0.0);
        // left rectangle rule: tau is held over each step
        for r in &recs[..recs.len() - 1] {
            effort += r.tau.norm() * trace.dt;
            effort_surge += r.tau.tau_u.abs() * trace.dt;
            effort_yaw += r.tau.tau_r.abs() * trace.dt;
        }

        Self {
            steps: recs.len(),
            t_end,
            settle_from,
            p_e: stats(&t, recs.iter().map(|r| r.errs.p_e), settle_from),
            psi_le: stats(&t, recs.iter().map(|r| r.errs.psi_le), settle_from),
            u_le: stats(&t, recs.iter().map(|r| r.errs.u_le), settle_from),
            e_rl: stats(&t, recs.iter().map(|r| r.errs.e_rl), settle_from),
            t_c_estimate,
            t_c_detected: trace.t_c,
            min_barrier: recs.iter().map(|r| r.h).fold(f64::INFINITY, f64::min),
            min_surge: recs.iter().map(|r| r.state.u).fold(f64::INFINITY, f64::min),
            surge_replacements: recs.iter().filter(|r| r.flags.surge_replaced).count(),
            replacements_after_t_c,
            cbf_activations: recs.iter().filter(|r| r.flags.cbf_active).count(),
            envelope_violation_fraction: violations as f64 / recs.len() as f64,
            effort,
            effort_surge,
            effort_yaw,
        }
    }
}

fn check_grid(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!(
            "{} vs {} samples",
            a.len(),
            b.len()
        )));
    }
    if let Some(i) = a.iter().zip(b).position(|(x, y)| (x - y).abs() > 1e-9) {
        return Err(Error::GridMismatch(format!(
            "sample {i}: t = {} vs {}",
            a[i], b[i]
        )));
    }
    Ok(())
}

/// RMS of the planar position difference between two traces on one grid.
pub fn position_rms_diff(a: &SimTrace, b: &SimTrace) -> Result<f64> {
    let ta: Vec<f64> = a.records.iter().map(|r| r.t).collect();
    let tb: Vec<f64> = b.records.iter().map(|r| r.t).collect();
    check_grid(&ta, &tb)?;
    if ta.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = a
        .records
        .iter()
        .zip(&b.records)
        .map(|(p, q)| (p.state.x - q.state.x).powi(2) + (p.state.y - q.state.y).powi(2))
        .sum();
    Ok((sum / ta.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalDelta {
    pub name: String,
    pub rms: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub deltas: Vec<SignalDelta>,
    pub effort_a: f64,
    pub effort_b: f64,
}

fn table_effort(t: &TraceTable) -> f64 {
    let (Some(time), Some(tu), Some(tr)) = (t.column("t"), t.column("tau_u"), t.column("tau_r"))
    else {
        return f64::NAN;
    };
    time.windows(2)
        .zip(tu.iter().zip(tr))
        .map(|(w, (u, r))| u.hypot(*r) * (w[1] - w[0]))
        .sum()
}

/// Per-signal deltas between two trace tables sharing a time grid.
pub fn compare_tables(a: &TraceTable, b: &TraceTable) -> Result<Comparison> {
    let (Some(ta), Some(tb)) = (a.column("t"), b.column("t")) else {
        return Err(Error::GridMismatch("missing t column".to_string()));
    };
    check_grid(ta, tb)?;
    let mut deltas = Vec::new();
    for name in &a.headers {
        if name == "t" || name == "event_flags" {
            continue;
        }
        let (Some(x), Some(y)) = (a.column(name), b.column(name)) else {
            continue;
        };
        let n = x.len().max(1) as f64;
        let sq: f64 = x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum();
        let max = x
            .iter()
            .zip(y)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        deltas.push(SignalDelta {
            name: name.clone(),
            rms: (sq / n).sqrt(),
            max,
        });
    }
    Ok(Comparison {
        deltas,
        effort_a: table_effort(a),
        effort_b: table_effort(b),
    })
}

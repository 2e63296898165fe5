//! Per-step simulation record and its CSV form.

use std::io::{Read, Write};
use std::path::Path;

use crate::controller::{LyapunovDiag, TrackingErrors};
use crate::emo::EmoOutput;
use crate::error::{Error, Result};
use crate::reference::ReferenceSample;
use crate::vessel::{ControlInput, VesselState};

/// CSV column order.
pub const COLUMNS: [&str; 31] = [
    "t",
    "x",
    "y",
    "psi",
    "u",
    "v",
    "r",
    "x_d",
    "y_d",
    "psi_ld",
    "u_ld",
    "p_e",
    "psi_b",
    "psi_a",
    "u_l",
    "psi_l",
    "psi_le",
    "u_le",
    "e_rl",
    "u_ld_m",
    "psi_ld_m",
    "alpha_rl",
    "tau_u_star",
    "tau_r_star",
    "tau_u",
    "tau_r",
    "V1",
    "V2",
    "envelope",
    "h",
    "event_flags",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EventFlags {
    /// Measured surge speed was non-positive and replaced during start-up.
    pub surge_replaced: bool,
    /// The barrier filter changed the surge force.
    pub cbf_active: bool,
    /// Still inside the start-up window where surge replacement is allowed.
    pub startup: bool,
}

impl EventFlags {
    pub fn encode(&self) -> String {
        let mut parts = Vec::new();
        if self.surge_replaced {
            parts.push("surge_replaced");
        }
        if self.cbf_active {
            parts.push("cbf_active");
        }
        if self.startup {
            parts.push("startup");
        }
        parts.join(";")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    /// True state (before any measurement replacement).
    pub state: VesselState,
    pub reference: ReferenceSample,
    pub psi_a: f64,
    pub u_l: f64,
    pub psi_l: f64,
    pub errs: TrackingErrors,
    pub emo: EmoOutput,
    pub alpha_rl: f64,
    pub tau_star: ControlInput,
    pub tau: ControlInput,
    pub diag: LyapunovDiag,
    /// Barrier value `u - delta`.
    pub h: f64,
    pub flags: EventFlags,
}

impl StepRecord {
    fn fields(&self) -> Vec<String> {
        let s = &self.state;
        let rf = &self.reference;
        let e = &self.errs;
        let nums = [
            self.t,
            s.x,
            s.y,
            s.psi,
            s.u,
            s.v,
            s.r,
            rf.x_d,
            rf.y_d,
            rf.psi_ld,
            rf.u_ld,
            e.p_e,
            e.psi_b,
            self.psi_a,
            self.u_l,
            self.psi_l,
            e.psi_le,
            e.u_le,
            e.e_rl,
            self.emo.u_ld_m,
            self.emo.psi_ld_m,
            self.alpha_rl,
            self.tau_star.tau_u,
            self.tau_star.tau_r,
            self.tau.tau_u,
            self.tau.tau_r,
            self.diag.v1,
            self.diag.v2,
            self.diag.envelope,
            self.h,
        ];
        let mut out: Vec<String> = nums.iter().map(|v| v.to_string()).collect();
        out.push(self.flags.encode());
        out
    }
}

/// Records on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub dt: f64,
    pub records: Vec<StepRecord>,
    /// Time the start-up window closed, when one was tracked.
    pub t_c: Option<f64>,
}

impl SimTrace {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            records: Vec::new(),
            t_c: None,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(COLUMNS)?;
        for r in &self.records {
            w.write_record(r.fields())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Column-oriented view of a trace CSV, for post-processing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceTable {
    pub headers: Vec<String>,
    /// Numeric columns in header order; `event_flags` is kept separately.
    pub columns: Vec<Vec<f64>>,
    pub flags: Vec<String>,
}

impl TraceTable {
    pub fn read<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let headers: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        if headers.is_empty() {
            return Err(Error::Validation(vec![
                "empty trace CSV: no header row".to_string()
            ]));
        }
        let flag_col = headers.iter().position(|h| h == "event_flags");
        let mut columns = vec![Vec::new(); headers.len()];
        let mut flags = Vec::new();
        for (line, rec) in rd.records().enumerate() {
            let rec = rec?;
            for (i, field) in rec.iter().enumerate() {
                if Some(i) == flag_col {
                    flags.push(field.to_string());
                } else {
                    let v = field.parse::<f64>().map_err(|_| {
                        Error::Validation(vec![format!(
                            "row {}: column {} is not numeric: {field:?}",
                            line + 2,
                            headers[i]
                        )])
                    })?;
                    columns[i].push(v);
                }
            }
        }
        Ok(Self {
            headers,
            columns,
            flags,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(std::fs::File::open(path)?)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn rows(&self) -> usize {
        self.column("t").map_or(0, <[f64]>::len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;
    use crate::sim::run_scenario;

    #[test]
    fn csv_round_trip_is_exact() {
        let tr = run_scenario(&ScenarioConfig {
            t_final: 0.5,
            ..Default::default()
        })
        .unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let table = TraceTable::read(buf.as_slice()).unwrap();
        assert_eq!(table.headers, COLUMNS);
        assert_eq!(table.rows(), tr.len());
        let x = table.column("x").unwrap();
        for (r, v) in tr.records.iter().zip(x) {
            assert_eq!(r.state.x.to_bits(), v.to_bits());
        }
        assert_eq!(table.flags.len(), tr.len());
    }

    #[test]
    fn empty_csv_is_rejected() {
        let err = TraceTable::read(&b""[..]).unwrap_err();
        assert!(err.to_string().contains("empty"), "{err}");
    }

    #[test]
    fn non_numeric_field_names_row_and_column() {
        let err = TraceTable::read(&b"t,x\n0,1\n0.1,abc\n"[..]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 3") && msg.contains("column x"), "{msg}");
    }

    #[test]
    fn flags_encode_in_fixed_order() {
        let f = EventFlags {
            surge_replaced: true,
            cbf_active: false,
            startup: true,
        };
        assert_eq!(f.encode(), "surge_replaced;startup");
        assert_eq!(EventFlags::default().encode(), "");
    }
}

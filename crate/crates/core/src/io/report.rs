//! Reports, certificates and experiment results as CSV or JSONL.
//!
//! CSV: `# key = <json>` header lines (schema version, kind, provenance,
//! summary), a column line, then one row per sample. JSONL: one
//! `{"record": "sample", ..}` object per sample and a final
//! `{"record": "summary", ..}` object carrying the schema version.
//!
//! Columns:
//!
//! * diagnostics report: `t, energy, E_1..E_N, h1_sq, a, flux_1..flux_N, min_component`
//! * pair certificate: `t, psi_1..psi_N, a, envelope, violation`
//! * experiment result: `record, name, status, value, detail` (criteria, then metrics)

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};

use super::{fmt_f64, Format, Provenance};
use crate::diagnostics::{DiagnosticsReport, PairCertificate};
use crate::error::{Error, Result};
use crate::experiments::{ExperimentResult, Status};

pub const SCHEMA_VERSION: u32 = 1;

/// Something [`emit_report`] can write.
pub trait Emit {
    fn kind(&self) -> &'static str;
    fn columns(&self) -> Vec<String>;
    fn csv_rows(&self) -> Vec<Vec<String>>;
    fn json_records(&self) -> Vec<Value>;
    fn summary(&self) -> Value;
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Emit for DiagnosticsReport {
    fn kind(&self) -> &'static str {
        "diagnostics_report"
    }

    fn columns(&self) -> Vec<String> {
        let n = self.n_shells;
        ["t", "energy"]
            .into_iter()
            .map(String::from)
            .chain(numbered("E_", n))
            .chain(["h1_sq".into(), "a".into()])
            .chain(numbered("flux_", n))
            .chain(["min_component".into()])
            .collect()
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.samples
            .iter()
            .map(|s| {
                [s.t, s.energy]
                    .into_iter()
                    .chain(s.partial_energies.iter().copied())
                    .chain([s.h1_sq, s.a_value])
                    .chain(s.flux_residuals.iter().copied())
                    .chain([s.min_component])
                    .map(fmt_f64)
                    .collect()
            })
            .collect()
    }

    fn json_records(&self) -> Vec<Value> {
        self.samples
            .iter()
            .map(|s| {
                json!({
                    "record": "sample",
                    "t": s.t,
                    "energy": s.energy,
                    "partial_energies": s.partial_energies,
                    "h1_sq": s.h1_sq,
                    "a": s.a_value,
                    "flux_residuals": s.flux_residuals,
                    "min_component": s.min_component,
                })
            })
            .collect()
    }

    fn summary(&self) -> Value {
        json!({
            "n_shells": self.n_shells,
            "flags": self.summary,
            "pass": self.summary.all_ok(),
            "nonnegative_from": self.nonnegative_from,
            "energy": self.energy,
            "signs": self.signs,
            "lemmas": self.lemmas,
            "simple_bound": self.simple_bound,
        })
    }
}

impl Emit for PairCertificate {
    fn kind(&self) -> &'static str {
        "pair_certificate"
    }

    fn columns(&self) -> Vec<String> {
        ["t".to_string()]
            .into_iter()
            .chain(numbered("psi_", self.n_shells))
            .chain(["a", "envelope", "violation"].map(String::from))
            .collect()
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        (0..self.times.len())
            .map(|k| {
                [self.times[k]]
                    .into_iter()
                    .chain(self.psi[k].iter().copied())
                    .chain([self.a[k], self.envelope[k], self.violation[k]])
                    .map(fmt_f64)
                    .collect()
            })
            .collect()
    }

    fn json_records(&self) -> Vec<Value> {
        (0..self.times.len())
            .map(|k| {
                json!({
                    "record": "sample",
                    "t": self.times[k],
                    "z": self.z[k],
                    "y": self.y[k],
                    "psi": self.psi[k],
                    "a": self.a[k],
                    "envelope": self.envelope[k],
                    "violation": self.violation[k],
                })
            })
            .collect()
    }

    fn summary(&self) -> Value {
        json!({
            "n_shells": self.n_shells,
            "k_const": self.k_const,
            "max_psi": self.max_psi,
            "max_violation": if self.max_violation.is_finite() { json!(self.max_violation) } else { Value::Null },
            "envelope_ok": self.envelope_ok,
            "envelope_witness": self.envelope_witness,
            "pass": self.envelope_ok,
        })
    }
}

fn status_str(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::Degenerate => "degenerate",
    }
}

impl Emit for ExperimentResult {
    fn kind(&self) -> &'static str {
        "experiment_result"
    }

    fn columns(&self) -> Vec<String> {
        ["record", "name", "status", "value", "detail"].map(String::from).to_vec()
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let criteria = self.criteria.iter().map(|c| {
            vec![
                "criterion".into(),
                c.name.clone(),
                status_str(c.status).into(),
                String::new(),
                csv_field(&c.detail),
            ]
        });
        let metrics = self.metrics.iter().map(|(k, v)| {
            vec!["metric".into(), k.clone(), String::new(), fmt_f64(*v), String::new()]
        });
        criteria.chain(metrics).collect()
    }

    fn json_records(&self) -> Vec<Value> {
        self.criteria
            .iter()
            .map(|c| {
                json!({
                    "record": "criterion",
                    "name": c.name,
                    "status": c.status,
                    "detail": c.detail,
                    "witness": c.witness,
                })
            })
            .chain(self.series.iter().map(|(k, v)| {
                json!({ "record": "series", "name": k, "values": v })
            }))
            .collect()
    }

    fn summary(&self) -> Value {
        json!({
            "experiment": self.name,
            "pass": self.passed(),
            "criteria": self.criteria.iter().map(|c| (c.name.clone(), status_str(c.status))).collect::<std::collections::BTreeMap<_, _>>(),
            "metrics": self.metrics,
            "notes": self.notes,
            "files": self.files,
        })
    }
}

/// Writes `obj` to `path` in `format`, embedding the schema version and provenance.
pub fn emit_report<T: Emit>(obj: &T, path: &Path, format: Format, provenance: &Provenance) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    match format {
        Format::Csv => {
            writeln!(w, "# schema_version = {SCHEMA_VERSION}").map_err(io)?;
            writeln!(w, "# kind = {}", serde_json::to_string(obj.kind())?).map_err(io)?;
            writeln!(w, "# provenance = {}", serde_json::to_string(provenance)?).map_err(io)?;
            writeln!(w, "# summary = {}", serde_json::to_string(&obj.summary())?).map_err(io)?;
            writeln!(w, "{}", obj.columns().join(",")).map_err(io)?;
            for row in obj.csv_rows() {
                writeln!(w, "{}", row.join(",")).map_err(io)?;
            }
        }
        Format::Jsonl => {
            for rec in obj.json_records() {
                serde_json::to_writer(&mut w, &rec)?;
                writeln!(w).map_err(io)?;
            }
            let mut summary = obj.summary();
            if let Value::Object(m) = &mut summary {
                m.insert("record".into(), json!("summary"));
                m.insert("kind".into(), json!(obj.kind()));
                m.insert("schema_version".into(), json!(SCHEMA_VERSION));
                m.insert("provenance".into(), serde_json::to_value(provenance)?);
            }
            serde_json::to_writer(&mut w, &summary)?;
            writeln!(w).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

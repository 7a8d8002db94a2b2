//! Trajectory files.
//!
//! CSV layout:
//!
//! ```text
//! # format_version = 1
//! # n_shells = 3
//! # scheme = {"base":2.0,"scale":1.0,"bound":1.0,"n_max":3}
//! # config = {...}
//! # config_digest = "<sha256 of the config JSON>"
//! # version = "0.1.0"
//! # provenance = {...}
//! # stats = {...}
//! # events = [...]
//! t,x1,x2,x3
//! 0.0000000000000000e0,1.0000000000000000e0,...
//! ```
//!
//! Header values are JSON. JSONL puts the same header object on the first
//! line (`{"header": {...}}`) and one `{"t": .., "x": [..]}` object per state.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{digest_json, fmt_f64, Format, Provenance, VERSION};
use crate::error::{Error, Result};
use crate::integrate::{Event, IntegratorConfig, StepStats, Trajectory};
use crate::model::{CoefficientScheme, ShellState};

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub format_version: u32,
    pub n_shells: usize,
    pub scheme: CoefficientScheme,
    pub config: IntegratorConfig,
    pub config_digest: String,
    pub version: String,
    pub provenance: Provenance,
    pub stats: StepStats,
    pub events: Vec<Event>,
}

/// A trajectory as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFile {
    pub header: TrajectoryHeader,
    pub trajectory: Trajectory,
    /// Non-fatal problems, e.g. a config digest that does not match.
    pub warnings: Vec<String>,
}

fn header_of(traj: &Trajectory, provenance: &Provenance) -> Result<TrajectoryHeader> {
    Ok(TrajectoryHeader {
        format_version: FORMAT_VERSION,
        n_shells: traj.n_shells(),
        scheme: traj.scheme.clone(),
        config: traj.config,
        config_digest: digest_json(&traj.config)?,
        version: VERSION.into(),
        provenance: provenance.clone(),
        stats: traj.stats,
        events: traj.events.clone(),
    })
}

pub fn write_trajectory(
    traj: &Trajectory,
    path: &Path,
    format: Format,
    provenance: &Provenance,
) -> Result<()> {
    traj.validate()?;
    let header = header_of(traj, provenance)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    match format {
        Format::Csv => {
            let serde_json::Value::Object(fields) = serde_json::to_value(&header)? else {
                unreachable!("header serializes to an object")
            };
            // struct field order, not alphabetical
            for key in [
                "format_version",
                "n_shells",
                "scheme",
                "config",
                "config_digest",
                "version",
                "provenance",
                "stats",
                "events",
            ] {
                writeln!(w, "# {key} = {}", serde_json::to_string(&fields[key])?).map_err(io)?;
            }
            write!(w, "t").map_err(io)?;
            for j in 1..=header.n_shells {
                write!(w, ",x{j}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
            for s in &traj.states {
                write!(w, "{}", fmt_f64(s.t)).map_err(io)?;
                for v in s.x() {
                    write!(w, ",{}", fmt_f64(*v)).map_err(io)?;
                }
                writeln!(w).map_err(io)?;
            }
        }
        Format::Jsonl => {
            serde_json::to_writer(&mut w, &serde_json::json!({ "header": header }))?;
            writeln!(w).map_err(io)?;
            for s in &traj.states {
                serde_json::to_writer(&mut w, &serde_json::json!({ "t": s.t, "x": s.x() }))?;
                writeln!(w).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}

/// Reads a trajectory written by [`write_trajectory`]; the format is taken
/// from the first character (`{` for JSONL).
pub fn read_trajectory(path: &Path) -> Result<TrajectoryFile> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = Vec::new();
    for line in BufReader::new(file).lines() {
        lines.push(line.map_err(|e| Error::io(path, e))?);
    }
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let jsonl = lines.first().is_some_and(|l| l.starts_with('{'));

    let (header, states) = if jsonl {
        #[derive(Deserialize)]
        struct HeaderLine {
            header: TrajectoryHeader,
        }
        #[derive(Deserialize)]
        struct Row {
            t: f64,
            x: Vec<f64>,
        }
        let header: HeaderLine = serde_json::from_str(&lines[0])
            .map_err(|e| parse_err(1, format!("header: {e}")))?;
        let header = header.header;
        let mut states = Vec::with_capacity(lines.len() - 1);
        for (i, line) in lines.iter().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let row: Row = serde_json::from_str(line)
                .map_err(|e| parse_err(i + 1, format!("row {i}: {e}")))?;
            states.push(
                state_of(row.t, row.x, header.n_shells)
                    .map_err(|m| parse_err(i + 1, format!("row {i}: {m}")))?,
            );
        }
        (header, states)
    } else {
        let mut fields = serde_json::Map::new();
        let mut body = 0;
        for (i, line) in lines.iter().enumerate() {
            let Some(rest) = line.strip_prefix('#') else {
                body = i;
                break;
            };
            let (key, value) = rest
                .split_once('=')
                .ok_or_else(|| parse_err(i + 1, "header line without `=`".into()))?;
            let value: serde_json::Value = serde_json::from_str(value.trim())
                .map_err(|e| parse_err(i + 1, format!("header `{}`: {e}", key.trim())))?;
            fields.insert(key.trim().to_string(), value);
            body = i + 1;
        }
        let header: TrajectoryHeader = serde_json::from_value(serde_json::Value::Object(fields))
            .map_err(|e| parse_err(1, format!("header: {e}")))?;
        let n = header.n_shells;
        match lines.get(body) {
            Some(cols) if cols.split(',').count() == n + 1 && cols.starts_with('t') => {}
            _ => return Err(parse_err(body + 1, format!("expected a column line t,x1..x{n}"))),
        }
        let mut states = Vec::with_capacity(lines.len() - body);
        for (i, line) in lines.iter().enumerate().skip(body + 1) {
            if line.trim().is_empty() {
                continue;
            }
            let row = i - body;
            let values = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| parse_err(i + 1, format!("row {row}: {e}")))?;
            if values.len() != n + 1 {
                return Err(parse_err(
                    i + 1,
                    format!("row {row}: expected {} values, found {}", n + 1, values.len()),
                ));
            }
            states.push(
                state_of(values[0], values[1..].to_vec(), n)
                    .map_err(|m| parse_err(i + 1, format!("row {row}: {m}")))?,
            );
        }
        (header, states)
    };

    if header.format_version != FORMAT_VERSION {
        return Err(parse_err(
            1,
            format!("unsupported format_version {}", header.format_version),
        ));
    }
    let mut warnings = Vec::new();
    let digest = digest_json(&header.config)?;
    if digest != header.config_digest {
        let msg = format!(
            "{}: config digest {} does not match the recorded {}",
            path.display(),
            digest,
            header.config_digest
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let trajectory = Trajectory {
        states,
        stats: header.stats,
        scheme: header.scheme.clone(),
        config: header.config,
        events: header.events.clone(),
    };
    trajectory
        .validate()
        .map_err(|e| parse_err(lines.len(), e.to_string()))?;
    Ok(TrajectoryFile {
        header,
        trajectory,
        warnings,
    })
}

fn state_of(t: f64, x: Vec<f64>, n: usize) -> std::result::Result<ShellState, String> {
    if x.len() != n {
        return Err(format!("expected {n} shells, found {}", x.len()));
    }
    ShellState::new(t, x).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::integrate;
    use crate::model::ShellState;

    fn sample() -> Trajectory {
        let scheme = CoefficientScheme::dyadic(5);
        let mut x = vec![0.0; 5];
        x[0] = -0.3;
        x[1] = 0.7;
        let ic = ShellState::new(0.0, x).unwrap();
        integrate(&ic, &scheme, &IntegratorConfig::default(), 0.3, 0.07).unwrap()
    }

    #[test]
    fn round_trip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let traj = sample();
        for format in [Format::Csv, Format::Jsonl] {
            let path = dir.path().join(format!("t.{format}"));
            write_trajectory(&traj, &path, format, &Provenance::default()).unwrap();
            let back = read_trajectory(&path).unwrap();
            assert!(back.warnings.is_empty());
            assert_eq!(back.trajectory.states.len(), traj.states.len());
            for (a, b) in back.trajectory.states.iter().zip(&traj.states) {
                assert_eq!(a.t.to_bits(), b.t.to_bits());
                for (u, v) in a.x().iter().zip(b.x()) {
                    assert_eq!(u.to_bits(), v.to_bits());
                }
            }
            assert_eq!(back.trajectory, traj);
        }
    }

    #[test]
    fn half_row_names_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trajectory(&sample(), &path, Format::Csv, &Provenance::default()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let cut = text.trim_end().rfind(',').unwrap();
        std::fs::write(&path, &text[..cut]).unwrap();
        let err = read_trajectory(&path).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Parse { .. }));
        assert!(msg.contains("row 6"), "{msg}");
    }

    #[test]
    fn digest_mismatch_is_only_a_warning() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trajectory(&sample(), &path, Format::Csv, &Provenance::default()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let tampered = text.replace("\"abs_tol\":1e-10", "\"abs_tol\":2e-10");
        assert_ne!(tampered, text);
        std::fs::write(&path, tampered).unwrap();
        let back = read_trajectory(&path).unwrap();
        assert_eq!(back.warnings.len(), 1);
        assert_eq!(back.trajectory.config.abs_tol, 2e-10);
    }
}

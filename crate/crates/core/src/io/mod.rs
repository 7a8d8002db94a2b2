//! Spec files, trajectory files and reports.
//!
//! All text output is deterministic: no timestamps, sorted maps, and floats
//! written so that reading them back gives the identical `f64` (CSV uses
//! 17 significant digits, JSON the shortest exact representation).

mod config;
mod report;
mod trajectory;

pub use config::{
    build_spec, flatten_toml, parse_spec_file, parse_spec_str, parse_value, FlatConfig, KNOWN_KEYS,
};
pub use report::{emit_report, Emit, SCHEMA_VERSION};
pub use trajectory::{read_trajectory, write_trajectory, TrajectoryFile};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::ExperimentSpec;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }

    /// Guesses the format from a file extension (`.jsonl` or anything else).
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") => Format::Jsonl,
            _ => Format::Csv,
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(Error::usage("format", format!("expected csv or jsonl, got `{other}`"))),
        }
    }
}

/// What produced a file, enough to reproduce it.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    /// sha256 of the canonical JSON of the `ExperimentSpec`.
    pub spec_digest: String,
    pub seed: u64,
    pub command: String,
    /// Keys given on the command line; they take precedence over the spec file.
    pub overrides: Vec<String>,
}

impl Provenance {
    pub fn for_spec(spec: &ExperimentSpec, command: &str, overrides: Vec<String>) -> Result<Self> {
        Ok(Self {
            version: VERSION.into(),
            spec_digest: digest_json(spec)?,
            seed: spec.seed,
            command: command.into(),
            overrides,
        })
    }
}

/// Hex sha256 of the compact JSON encoding of `value`.
pub fn digest_json<T: Serialize>(value: &T) -> Result<String> {
    let json = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&json)))
}

/// Writes a float so that parsing it back returns the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 5e-324, f64::MAX, 0.0, -0.0, 123456789.123456789] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn digest_is_stable() {
        let spec = ExperimentSpec::canned(crate::experiments::ExperimentName::InvariantSuite);
        assert_eq!(digest_json(&spec).unwrap(), digest_json(&spec.clone()).unwrap());
        let mut other = spec.clone();
        other.seed += 1;
        assert_ne!(digest_json(&spec).unwrap(), digest_json(&other).unwrap());
        assert_eq!(digest_json(&spec).unwrap().len(), 64);
    }
}

//! Spec files: flat `key = value` TOML.
//!
//! ```toml
//! name = "uniqueness_pair"
//! n_shells = 16
//! ic.family = "unit_shell"
//! ic.params = [1]
//! t_end = 2.0
//! tol.abs = 1e-10
//! tol.rel = 1e-8
//! stepper = "adaptive_rk"
//! seed = 0
//! ```
//!
//! Dotted keys may equally be written as tables (`[tol]` then `abs = ..`).
//! Values from command-line flags are layered on top of the file.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::{ExperimentName, ExperimentSpec, IcFamily};
use crate::integrate::{IntegratorConfig, StepperKind};

/// Dotted key to value.
pub type FlatConfig = BTreeMap<String, toml::Value>;

pub const KNOWN_KEYS: &[&str] = &[
    "name",
    "n_shells",
    "base",
    "scale",
    "bound",
    "ic.family",
    "ic.params",
    "t_end",
    "sample_every",
    "tol.abs",
    "tol.rel",
    "stepper",
    "dt.init",
    "dt.min",
    "dt.max",
    "stiffness_cap",
    "positivity_floor",
    "seed",
    "tol2.abs",
    "tol2.rel",
    "stepper2",
    "probe_shell",
    "refine_n",
    "growth_min",
    "psi_threshold",
    "drift_max",
    "envelope_k",
];

/// Flattens nested tables into dotted keys and rejects unknown keys.
pub fn flatten_toml(table: &toml::Table) -> Result<FlatConfig> {
    fn walk(prefix: &str, table: &toml::Table, out: &mut FlatConfig) {
        for (k, v) in table {
            let key = if prefix.is_empty() {
                k.clone()
            } else {
                format!("{prefix}.{k}")
            };
            match v {
                toml::Value::Table(t) => walk(&key, t, out),
                other => {
                    out.insert(key, other.clone());
                }
            }
        }
    }
    let mut out = FlatConfig::new();
    walk("", table, &mut out);
    if let Some(k) = out.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(Error::usage(k.clone(), "unknown key"));
    }
    Ok(out)
}

pub fn parse_spec_str(text: &str) -> Result<FlatConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::usage("spec file", e.to_string()))?;
    flatten_toml(&table)
}

pub fn parse_spec_file(path: &Path) -> Result<FlatConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spec_str(&text)
}

/// Parses a flag value: TOML syntax where it parses (numbers, arrays,
/// quoted strings), a bare string otherwise.
pub fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

struct Layered<'a> {
    file: Option<&'a FlatConfig>,
    flags: &'a FlatConfig,
}

impl Layered<'_> {
    fn get(&self, key: &str) -> Option<&toml::Value> {
        self.flags
            .get(key)
            .or_else(|| self.file.and_then(|f| f.get(key)))
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(v)) => Ok(Some(*v)),
            Some(toml::Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(other) => Err(Error::usage(key, format!("expected a number, got {other}"))),
        }
    }

    fn positive(&self, key: &str) -> Result<Option<f64>> {
        let v = self.float(key)?;
        match v {
            Some(x) if !(x.is_finite() && x > 0.0) => {
                Err(Error::usage(key, format!("must be positive, got {x}")))
            }
            _ => Ok(v),
        }
    }

    fn int(&self, key: &str) -> Result<Option<i64>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(v)) => Ok(Some(*v)),
            Some(other) => Err(Error::usage(key, format!("expected an integer, got {other}"))),
        }
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        match self.int(key)? {
            Some(v) if v < 1 => Err(Error::usage(key, format!("must be at least 1, got {v}"))),
            v => Ok(v.map(|v| v as usize)),
        }
    }

    fn string(&self, key: &str) -> Result<Option<String>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => Err(Error::usage(key, format!("expected a string, got {other}"))),
        }
    }

    fn numbers(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let one = |v: &toml::Value| match v {
            toml::Value::Float(x) => Ok(*x),
            toml::Value::Integer(x) => Ok(*x as f64),
            other => Err(Error::usage(key, format!("expected numbers, got {other}"))),
        };
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Array(a)) => a.iter().map(one).collect::<Result<_>>().map(Some),
            Some(v) => one(v).map(|x| Some(vec![x])),
        }
    }

    fn stepper(&self, key: &str) -> Result<Option<StepperKind>> {
        self.string(key)?
            .map(|s| s.parse().map_err(|e: String| Error::usage(key, e)))
            .transpose()
    }
}

/// Builds a validated spec: `defaults`, then the file, then the flags.
///
/// `defaults` supplies everything not mentioned (normally
/// [`ExperimentSpec::canned`]); a `name` key must agree with it unless a
/// flag overrides. Returns the `ExperimentSpec` and the keys set by flags.
pub fn build_spec(
    defaults: ExperimentSpec,
    file: Option<&FlatConfig>,
    flags: &FlatConfig,
) -> Result<(ExperimentSpec, Vec<String>)> {
    for layer in file.into_iter().chain([flags]) {
        if let Some(k) = layer.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(Error::usage(k.clone(), "unknown key"));
        }
    }
    let l = Layered { file, flags };
    let mut spec = defaults;

    if let Some(name) = l.string("name")? {
        let name: ExperimentName = name
            .parse()
            .map_err(|e: Error| Error::usage("name", e.to_string()))?;
        if name != spec.name {
            // a different scenario brings its own defaults
            spec = ExperimentSpec::canned(name);
        }
    }
    if let Some(n) = l.count("n_shells")? {
        spec.n_shells = n;
    }
    if let Some(v) = l.positive("base")? {
        spec.base = v;
    }
    let scale_given = l.positive("scale")?;
    if let Some(v) = scale_given {
        spec.scale = v;
    }
    match l.positive("bound")? {
        Some(v) => spec.bound = v,
        None if scale_given.is_some() => spec.bound = spec.scale,
        None => {}
    }
    if let Err(e) = spec.scheme(spec.n_shells) {
        let key = if spec.base > 2.0 { "base" } else { "scale" };
        return Err(Error::usage(key, e.to_string()));
    }

    if let Some(v) = l.int("seed")? {
        if v < 0 {
            return Err(Error::usage("seed", "must be nonnegative"));
        }
        spec.seed = v as u64;
        // the canned random family follows `seed`
        if let IcFamily::RandomPositive { seed, .. } = &mut spec.ic {
            *seed = spec.seed;
        }
    }
    let family = l.string("ic.family")?;
    let params = l.numbers("ic.params")?;
    match (family, params) {
        (Some(f), p) => {
            spec.ic = IcFamily::from_parts(&f, &p.unwrap_or_default(), spec.seed)
                .map_err(|e| Error::usage("ic.family", e.to_string()))?;
        }
        (None, Some(_)) => return Err(Error::usage("ic.params", "given without ic.family")),
        (None, None) => {}
    }
    spec.ic
        .build(spec.n_shells)
        .map_err(|e| Error::usage("ic.params", e.to_string()))?;

    if let Some(v) = l.float("t_end")? {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::usage("t_end", format!("must be >= 0, got {v}")));
        }
        spec.t_end = v;
    }
    if let Some(v) = l.positive("sample_every")? {
        spec.sample_every = v;
    }

    spec.config = integrator(&l, spec.config, "")?;
    let second = ["tol2.abs", "tol2.rel", "stepper2"]
        .iter()
        .any(|k| l.get(k).is_some());
    if second || spec.config2.is_some() {
        // the second leg shares everything but tolerances and stepper
        let mut c2 = spec.config;
        if let Some(prev) = spec.config2 {
            c2.abs_tol = prev.abs_tol;
            c2.rel_tol = prev.rel_tol;
            c2.scheme_choice = prev.scheme_choice;
        }
        spec.config2 = Some(integrator(&l, c2, "2")?);
    }

    if let Some(v) = l.count("probe_shell")? {
        if v > spec.n_shells {
            return Err(Error::usage("probe_shell", format!("exceeds n_shells = {}", spec.n_shells)));
        }
        spec.probe_shell = v;
    }
    if let Some(v) = l.count("refine_n")? {
        spec.refine_n = Some(v);
    }
    if let Some(v) = l.positive("growth_min")? {
        spec.growth_min = v;
    }
    if let Some(v) = l.positive("psi_threshold")? {
        spec.psi_threshold = v;
    }
    if let Some(v) = l.positive("drift_max")? {
        spec.drift_max = v;
    }
    if let Some(v) = l.positive("envelope_k")? {
        spec.envelope_k = Some(v);
    }
    spec.validate()
        .map_err(|e| Error::usage("spec", e.to_string()))?;

    let overrides = flags.keys().cloned().collect();
    Ok((spec, overrides))
}

fn integrator(l: &Layered, mut c: IntegratorConfig, suffix: &str) -> Result<IntegratorConfig> {
    if let Some(v) = l.positive(&format!("tol{suffix}.abs"))? {
        c.abs_tol = v;
    }
    if let Some(v) = l.positive(&format!("tol{suffix}.rel"))? {
        c.rel_tol = v;
    }
    if let Some(k) = l.stepper(&format!("stepper{suffix}"))? {
        c.scheme_choice = k;
    }
    if suffix.is_empty() {
        if let Some(v) = l.positive("dt.init")? {
            c.dt_init = v;
        }
        if let Some(v) = l.positive("dt.min")? {
            c.dt_min = v;
        }
        if let Some(v) = l.positive("dt.max")? {
            c.dt_max = v;
        }
        if let Some(v) = l.positive("stiffness_cap")? {
            c.stiffness_cap_factor = v;
        }
        if let Some(v) = l.float("positivity_floor")? {
            c.positivity_floor = v;
        }
    }
    let key = if suffix.is_empty() { "tol.abs" } else { "tol2.abs" };
    c.validate().map_err(|e| Error::usage(key, e.to_string()))?;
    Ok(c)
}

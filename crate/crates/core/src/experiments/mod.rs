//! Canned, reproducible scenarios built from the integrator and the
//! diagnostics.
//!
//! | scenario | default N | T | stepper |
//! |---|---|---|---|
//! | `uniqueness_pair` | 16 | 2 | Dormand–Prince, tolerances 1e-8 and 1e-12 |
//! | `truncation_convergence` | 12, 24, 48 | 1 | Rosenbrock, rel 1e-12 |
//! | `h1_growth` | 40 (and 48) | 5 | Rosenbrock, rel 1e-12 |
//! | `finite_negative_class_k` | 16 | 2 | Dormand–Prince, default tolerances |
//! | `invariant_suite` | 12 | 2 | Dormand–Prince, default tolerances |
//!
//! Each finishes in well under a second in an optimized build. Relative
//! tolerances come with an absolute tolerance one hundred times smaller.

mod ic;

pub use ic::IcFamily;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    class_k_bound_check, pair_certificate, pair_certificate_with_k, sign_epsilon, ClassKBound,
    DiagnosticsReport, PairCertificate, ENERGY_TOL,
};
use crate::error::{Error, Result};
use crate::integrate::{integrate, IntegratorConfig, StepperKind, Trajectory};
use crate::model::{energy, h1_norm_sq, partial_energy, CoefficientScheme, ShellState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    UniquenessPair,
    TruncationConvergence,
    H1Growth,
    FiniteNegativeClassK,
    InvariantSuite,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 5] = [
        ExperimentName::UniquenessPair,
        ExperimentName::TruncationConvergence,
        ExperimentName::H1Growth,
        ExperimentName::FiniteNegativeClassK,
        ExperimentName::InvariantSuite,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::UniquenessPair => "uniqueness_pair",
            ExperimentName::TruncationConvergence => "truncation_convergence",
            ExperimentName::H1Growth => "h1_growth",
            ExperimentName::FiniteNegativeClassK => "finite_negative_class_k",
            ExperimentName::InvariantSuite => "invariant_suite",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::Argument(format!("unknown experiment `{s}`")))
    }
}

/// `IntegratorConfig` with relative tolerance `rel` and absolute `rel / 100`.
pub fn tolerance_config(kind: StepperKind, rel: f64) -> IntegratorConfig {
    IntegratorConfig::default()
        .with_stepper(kind)
        .with_tolerances(rel * 1e-2, rel)
}

/// Everything needed to reproduce one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub n_shells: usize,
    pub base: f64,
    pub scale: f64,
    /// The constant `C` in `k_n <= C 2^n`.
    pub bound: f64,
    pub ic: IcFamily,
    pub t_end: f64,
    pub sample_every: f64,
    pub config: IntegratorConfig,
    /// Second leg of `uniqueness_pair`.
    pub config2: Option<IntegratorConfig>,
    pub seed: u64,
    /// Shell `n` whose partial energy `E_n` is compared in `truncation_convergence`.
    pub probe_shell: usize,
    /// Finer truncation compared against in `h1_growth`.
    pub refine_n: Option<usize>,
    /// Required `h1_sq(T) / h1_sq(0)`.
    pub growth_min: f64,
    /// `uniqueness_pair` passes when `max ψ_N <= psi_threshold * E(0)`.
    pub psi_threshold: f64,
    /// Largest relative energy drift accepted by `invariant_suite`.
    pub drift_max: f64,
    /// Envelope constant; `2 C sqrt(E(0))` when absent.
    pub envelope_k: Option<f64>,
}

impl ExperimentSpec {
    /// The documented default scenario for `name`.
    pub fn canned(name: ExperimentName) -> Self {
        let base = Self {
            name,
            n_shells: 16,
            base: 2.0,
            scale: 1.0,
            bound: 1.0,
            ic: IcFamily::UnitShell { j: 1 },
            t_end: 2.0,
            sample_every: 0.01,
            config: IntegratorConfig::default(),
            config2: None,
            seed: 0,
            probe_shell: 4,
            refine_n: None,
            growth_min: 10.0,
            psi_threshold: 1e-9,
            drift_max: 1e-7,
            envelope_k: None,
        };
        match name {
            ExperimentName::UniquenessPair => Self {
                config: tolerance_config(StepperKind::AdaptiveRk, 1e-8),
                config2: Some(tolerance_config(StepperKind::AdaptiveRk, 1e-12)),
                ..base
            },
            ExperimentName::TruncationConvergence => Self {
                n_shells: 12,
                t_end: 1.0,
                sample_every: 5e-4,
                config: tolerance_config(StepperKind::StiffRosenbrock, 1e-12),
                ..base
            },
            ExperimentName::H1Growth => Self {
                n_shells: 40,
                refine_n: Some(48),
                t_end: 5.0,
                config: tolerance_config(StepperKind::StiffRosenbrock, 1e-12),
                ..base
            },
            ExperimentName::FiniteNegativeClassK => Self {
                ic: IcFamily::signed(1, IcFamily::Geometric { r: 0.5, n_support: 8 }),
                ..base
            },
            ExperimentName::InvariantSuite => Self {
                n_shells: 12,
                seed: 7,
                ic: IcFamily::RandomPositive { seed: 7, n_support: 6 },
                ..base
            },
        }
    }

    /// Coefficients supporting `n_max` shells.
    pub fn scheme(&self, n_max: usize) -> Result<CoefficientScheme> {
        CoefficientScheme::new(self.base, self.scale, self.bound, n_max)
    }

    pub fn initial_state(&self) -> Result<ShellState> {
        self.ic.build(self.n_shells)
    }

    pub fn validate(&self) -> Result<()> {
        self.scheme(self.n_shells)?;
        self.config.validate()?;
        if let Some(c) = &self.config2 {
            c.validate()?;
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::Config(format!("t_end = {} must be >= 0", self.t_end)));
        }
        if !(self.sample_every.is_finite() && self.sample_every > 0.0) {
            return Err(Error::Config(format!(
                "sample_every = {} must be positive",
                self.sample_every
            )));
        }
        if self.probe_shell == 0 || self.probe_shell > self.n_shells {
            return Err(Error::Config(format!(
                "probe_shell = {} outside 1..={}",
                self.probe_shell, self.n_shells
            )));
        }
        if let Some(r) = self.refine_n {
            if r < self.n_shells {
                return Err(Error::Config(format!(
                    "refine_n = {r} is smaller than n_shells = {}",
                    self.n_shells
                )));
            }
        }
        self.initial_state()?;
        Ok(())
    }

    /// Integrates `ic` on `n_shells` shells with `config`.
    pub fn simulate(&self) -> Result<Trajectory> {
        self.validate()?;
        self.run_one(self.n_shells, &self.config)
    }

    fn run_one(&self, n_shells: usize, config: &IntegratorConfig) -> Result<Trajectory> {
        let scheme = self.scheme(n_shells)?;
        let ic = self.initial_state()?.zero_padded(n_shells);
        integrate(&ic, &scheme, config, self.t_end, self.sample_every)
    }

    fn expect(&self, name: ExperimentName) -> Result<()> {
        self.validate()?;
        if self.name != name {
            return Err(Error::Argument(format!(
                "spec is for `{}`, not `{name}`",
                self.name
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// The criterion has no meaning for this input (e.g. a 0/0 ratio).
    Degenerate,
}

/// Where a criterion failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub t: Option<f64>,
    pub shell: Option<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub status: Status,
    pub detail: String,
    pub witness: Option<Witness>,
}

impl Criterion {
    fn new(name: &str, pass: bool, detail: String, witness: Option<Witness>) -> Self {
        let status = if pass { Status::Pass } else { Status::Fail };
        // a failure always names where it happened
        let witness = match (status, witness) {
            (Status::Fail, None) => Some(Witness {
                t: None,
                shell: None,
                values: Vec::new(),
            }),
            (_, w) => w,
        };
        Self {
            name: name.into(),
            status,
            detail,
            witness,
        }
    }

    fn degenerate(name: &str, detail: String) -> Self {
        Self {
            name: name.into(),
            status: Status::Degenerate,
            detail,
            witness: None,
        }
    }
}

/// Trajectories and certificates behind a result; not serialized with it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub trajectories: Vec<(String, Trajectory)>,
    pub certificate: Option<PairCertificate>,
    pub report: Option<DiagnosticsReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: ExperimentName,
    pub criteria: Vec<Criterion>,
    pub metrics: BTreeMap<String, f64>,
    pub series: BTreeMap<String, Vec<f64>>,
    pub notes: Vec<String>,
    /// Data files written for this run, filled in by the caller.
    pub files: Vec<String>,
    #[serde(skip)]
    pub artifacts: Artifacts,
}

impl ExperimentResult {
    fn new(name: ExperimentName) -> Self {
        Self {
            name,
            criteria: Vec::new(),
            metrics: BTreeMap::new(),
            series: BTreeMap::new(),
            notes: Vec::new(),
            files: Vec::new(),
            artifacts: Artifacts::default(),
        }
    }

    /// No criterion failed (degenerate ones do not count as failures).
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.status != Status::Fail)
    }

    pub fn criterion(&self, name: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.name == name)
    }

    fn metric(&mut self, key: &str, value: f64) {
        // JSON has no representation for non-finite numbers
        if value.is_finite() {
            self.metrics.insert(key.into(), value);
        }
    }
}

/// Dispatches on `spec.name`.
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    match spec.name {
        ExperimentName::UniquenessPair => run_uniqueness_pair(spec),
        ExperimentName::TruncationConvergence => run_truncation_convergence(spec),
        ExperimentName::H1Growth => run_h1_growth(spec),
        ExperimentName::FiniteNegativeClassK => run_finite_negative_class_k(spec),
        ExperimentName::InvariantSuite => run_invariant_suite(spec),
    }
}

/// Runs independent legs on scoped threads, preserving order.
fn run_legs(spec: &ExperimentSpec, legs: &[(usize, IntegratorConfig)]) -> Vec<Result<Trajectory>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = legs
            .iter()
            .map(|(n, cfg)| scope.spawn(move || spec.run_one(*n, cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("integration thread panicked"))
            .collect()
    })
}

/// Same initial data, two integrator settings, and the Gronwall certificate
/// comparing them.
pub fn run_uniqueness_pair(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.expect(ExperimentName::UniquenessPair)?;
    let config2 = spec.config2.ok_or_else(|| {
        Error::Config("uniqueness_pair needs a second integrator configuration".into())
    })?;
    let n = spec.n_shells;
    let mut legs = run_legs(spec, &[(n, spec.config), (n, config2)]).into_iter();
    let t1 = legs.next().expect("two legs")?;
    let t2 = legs.next().expect("two legs")?;
    let scheme = spec.scheme(n)?;
    let cert = match spec.envelope_k {
        Some(k) => pair_certificate_with_k(&t1, &t2, &scheme, k)?,
        None => pair_certificate(&t1, &t2, &scheme)?,
    };

    let e0 = energy(t1.first());
    let threshold = spec.psi_threshold * e0;
    let mut res = ExperimentResult::new(spec.name);
    let (arg_max, _) = cert
        .psi_n()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(i, m), (j, v)| if v > m { (j, v) } else { (i, m) });
    res.criteria.push(Criterion::new(
        "psi_threshold",
        cert.max_psi <= threshold,
        format!("max psi_N = {:e}, threshold {:e}", cert.max_psi, threshold),
        Some(Witness {
            t: Some(cert.times[arg_max]),
            shell: Some(n),
            values: vec![cert.max_psi, threshold],
        }),
    ));
    res.criteria.push(Criterion::new(
        "gronwall_envelope",
        cert.envelope_ok,
        format!("max (psi_N - G) = {:e}", cert.max_violation),
        cert.envelope_witness.map(|t| Witness {
            t: Some(t),
            shell: Some(n),
            values: vec![cert.max_violation],
        }),
    ));
    res.metric("e0", e0);
    res.metric("max_psi", cert.max_psi);
    res.metric("max_violation", cert.max_violation);
    res.metric("envelope_k", cert.k_const);
    res.metric("final_envelope", *cert.envelope.last().expect("non-empty"));
    res.artifacts = Artifacts {
        trajectories: vec![("leg1".into(), t1), ("leg2".into(), t2)],
        certificate: Some(cert),
        report: None,
    };
    Ok(res)
}

/// Runs `N`, `2N` and `4N` shells from the same (zero-padded) initial data
/// and compares `E_n` for the probe shell.
pub fn run_truncation_convergence(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.expect(ExperimentName::TruncationConvergence)?;
    let levels = [spec.n_shells, 2 * spec.n_shells, 4 * spec.n_shells];
    let legs: Vec<_> = levels.iter().map(|n| (*n, spec.config)).collect();
    let trajs = run_legs(spec, &legs)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let p = spec.probe_shell;
    let n = spec.n_shells;

    let mut res = ExperimentResult::new(spec.name);
    let mut sups = Vec::new();
    for (i, w) in trajs.windows(2).enumerate() {
        let (coarse, fine) = (&w[0], &w[1]);
        let mut sup = 0.0f64;
        let mut at = coarse.first().t;
        let mut shell_sup = vec![0.0f64; n];
        for (a, b) in coarse.states.iter().zip(&fine.states) {
            let d = (partial_energy(a, p)? - partial_energy(b, p)?).abs();
            if d > sup {
                sup = d;
                at = a.t;
            }
            for (j, s) in shell_sup.iter_mut().enumerate() {
                *s = s.max((a.x()[j] - b.x()[j]).abs());
            }
        }
        res.metric(&format!("sup_diff_{}_{}", levels[i], levels[i + 1]), sup);
        res.metric(&format!("sup_diff_time_{}_{}", levels[i], levels[i + 1]), at);
        res.series
            .insert(format!("shell_sup_diff_{}_{}", levels[i], levels[i + 1]), shell_sup);
        sups.push((sup, at));
    }
    let (d1, t1) = sups[0];
    let (d2, t2) = sups[1];
    let name = "sup_difference_decreases";
    if d1 == 0.0 && d2 == 0.0 {
        res.criteria.push(Criterion::degenerate(
            name,
            "all differences vanish identically".into(),
        ));
    } else {
        res.criteria.push(Criterion::new(
            name,
            d2 < d1,
            format!(
                "sup |E_{p}| difference {d1:e} ({} vs {}) then {d2:e} ({} vs {})",
                levels[0], levels[1], levels[1], levels[2]
            ),
            Some(Witness {
                t: Some(if d2 < d1 { t1 } else { t2 }),
                shell: Some(p),
                values: vec![d1, d2],
            }),
        ));
    }
    if d2 > 0.0 {
        res.metric("convergence_ratio", d1 / d2);
    }
    res.artifacts.trajectories = levels
        .iter()
        .map(|n| format!("n{n}"))
        .zip(trajs)
        .collect();
    Ok(res)
}

struct Growth {
    factor: f64,
    max_factor: f64,
    time_to_threshold: Option<f64>,
    reached: f64,
}

fn h1_growth_of(traj: &Trajectory, threshold: f64) -> Result<Growth> {
    let h0 = h1_norm_sq(traj.first(), &traj.scheme)?;
    let mut max_factor = 0.0f64;
    let mut time_to_threshold = None;
    for s in &traj.states {
        let g = h1_norm_sq(s, &traj.scheme)? / h0;
        max_factor = max_factor.max(g);
        if time_to_threshold.is_none() && g >= threshold {
            time_to_threshold = Some(s.t);
        }
    }
    Ok(Growth {
        factor: h1_norm_sq(traj.last(), &traj.scheme)? / h0,
        max_factor,
        time_to_threshold,
        reached: traj.last().t,
    })
}

/// Tracks `Σ k_n² X_n²` as the cascade drives energy to high shells.
///
/// Finite `N` caps the growth at `k_N² E(0) / h1_sq(0)`, so this is an
/// indicator of blow-up, not a proof of it.
pub fn run_h1_growth(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.expect(ExperimentName::H1Growth)?;
    let ic = spec.initial_state()?;
    let mut res = ExperimentResult::new(spec.name);
    res.notes.push(format!(
        "growth threshold {} is a chosen indicator level, not a derived rate",
        spec.growth_min
    ));
    if ic.min_component() < 0.0 {
        return Err(Error::Config(
            "h1_growth needs a nonnegative initial condition".into(),
        ));
    }
    let scheme = spec.scheme(spec.n_shells)?;
    let e0 = energy(&ic);
    let h0 = h1_norm_sq(&ic, &scheme)?;
    res.metric("h1_sq_0", h0);
    res.metric("ceiling", scheme.k(spec.n_shells).powi(2) * e0);
    if h0 == 0.0 {
        res.criteria.push(Criterion::degenerate(
            "growth_factor",
            "zero initial data: h1_sq(T)/h1_sq(0) is 0/0".into(),
        ));
        return Ok(res);
    }

    let mut legs = vec![(spec.n_shells, spec.config)];
    if let Some(r) = spec.refine_n {
        legs.push((r, spec.config));
    }
    let mut growths = Vec::new();
    for ((n, _), out) in legs.iter().zip(run_legs(spec, &legs)) {
        let (traj, failure) = match out {
            Ok(t) => (t, None),
            Err(Error::Integration(e)) => {
                let t = e.t;
                (*e.partial, Some(t))
            }
            Err(e) => return Err(e),
        };
        let g = h1_growth_of(&traj, spec.growth_min)?;
        res.metric(&format!("growth_factor_n{n}"), g.factor);
        res.metric(&format!("max_growth_factor_n{n}"), g.max_factor);
        if let Some(t) = g.time_to_threshold {
            res.metric(&format!("time_to_threshold_n{n}"), t);
        }
        if let Some(t) = failure {
            res.metric(&format!("failure_time_n{n}"), t);
            res.criteria.push(Criterion::new(
                &format!("integration_n{n}"),
                false,
                format!(
                    "stopped at t = {t} with growth factor {:e}",
                    g.max_factor
                ),
                Some(Witness {
                    t: Some(t),
                    shell: None,
                    values: vec![g.max_factor],
                }),
            ));
        }
        growths.push((*n, g));
        res.artifacts.trajectories.push((format!("n{n}"), traj));
    }

    let (n, g) = &growths[0];
    let complete = g.reached == spec.t_end;
    res.criteria.push(Criterion::new(
        "growth_factor",
        complete && g.factor >= spec.growth_min,
        format!(
            "h1_sq(T)/h1_sq(0) = {:e} at N = {n}, required {}",
            g.factor, spec.growth_min
        ),
        Some(Witness {
            t: Some(g.reached),
            shell: None,
            values: vec![g.factor, spec.growth_min],
        }),
    ));
    if let Some((m, gr)) = growths.get(1) {
        res.criteria.push(Criterion::new(
            "refinement_monotone",
            gr.factor >= g.factor,
            format!("growth {:e} at N = {n}, {:e} at N = {m}", g.factor, gr.factor),
            Some(Witness {
                t: Some(gr.reached),
                shell: None,
                values: vec![g.factor, gr.factor],
            }),
        ));
    }
    Ok(res)
}

/// Initial data with finitely many negative shells: sign preservation, the
/// class-K bound with `n0` the largest initially negative index, and energy
/// monotonicity once all shells are nonnegative.
pub fn run_finite_negative_class_k(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.expect(ExperimentName::FiniteNegativeClassK)?;
    let ic = spec.initial_state()?;
    let negatives: Vec<usize> = (1..=ic.n_shells()).filter(|n| ic.get(*n) < 0.0).collect();
    if negatives.len() >= ic.n_shells() {
        return Err(Error::Config(
            "finite_negative_class_k needs at least one nonnegative shell".into(),
        ));
    }
    let n0 = negatives.last().copied().unwrap_or(1);
    let traj = spec.run_one(spec.n_shells, &spec.config)?;
    let mut res = ExperimentResult::new(spec.name);
    res.metric("negative_shells", negatives.len() as f64);
    res.metric("n0", n0 as f64);

    let signs = crate::diagnostics::check_sign_preservation(&traj)?;
    let v = signs.violations.first();
    res.criteria.push(Criterion::new(
        "sign_preservation",
        signs.ok(),
        format!("{} violation(s) at epsilon {:e}", signs.violations.len(), signs.epsilon),
        v.map(|v| Witness {
            t: Some(v.t),
            shell: Some(v.shell),
            values: vec![v.value],
        }),
    ));

    let bound = class_k_bound_check(&traj, n0)?;
    let criterion = match &bound {
        ClassKBound::Holds { bound, max_a } => {
            res.metric("max_a", *max_a);
            res.metric("a_bound", *bound);
            Criterion::new(
                "class_k_bound",
                true,
                format!("max a = {max_a:e} <= k_{n0} sqrt(E0) = {bound:e}"),
                None,
            )
        }
        ClassKBound::Violated { bound, t, a } => Criterion::new(
            "class_k_bound",
            false,
            format!("a = {a:e} exceeds {bound:e}"),
            Some(Witness {
                t: Some(*t),
                shell: Some(n0),
                values: vec![*a, *bound],
            }),
        ),
        ClassKBound::Inapplicable { t, shell, value } => Criterion::new(
            "class_k_bound",
            false,
            format!("shell {shell} above n0 = {n0} went negative"),
            Some(Witness {
                t: Some(*t),
                shell: Some(*shell),
                values: vec![*value],
            }),
        ),
    };
    res.criteria.push(criterion);

    // energy from the first all-nonnegative sample on; from t = 0 if that
    // never happens (the truncated energy is conserved either way)
    let eps = sign_epsilon(&traj);
    let nonnegative_from = traj
        .states
        .iter()
        .position(|s| s.min_component() >= -eps);
    let start = nonnegative_from.unwrap_or(0);
    let tol = ENERGY_TOL * energy(traj.first());
    let mut witness = None;
    let mut min_e = energy(&traj.states[start]);
    let mut min_t = traj.states[start].t;
    for s in &traj.states[start + 1..] {
        let e = energy(s);
        if e > min_e + tol {
            witness = Some(Witness {
                t: Some(s.t),
                shell: None,
                values: vec![min_t, min_e, e],
            });
            break;
        }
        if e < min_e {
            min_e = e;
            min_t = s.t;
        }
    }
    if let Some(i) = nonnegative_from {
        res.metric("nonnegative_from", traj.states[i].t);
    }
    res.criteria.push(Criterion::new(
        "energy_non_increasing",
        witness.is_none(),
        format!("checked from t = {}", traj.states[start].t),
        witness,
    ));
    res.artifacts.trajectories.push(("trajectory".into(), traj));
    Ok(res)
}

/// All single-trajectory diagnostics on one run.
pub fn run_invariant_suite(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.expect(ExperimentName::InvariantSuite)?;
    let traj = spec.run_one(spec.n_shells, &spec.config)?;
    let report = DiagnosticsReport::from_trajectory(&traj)?;
    let mut res = invariant_criteria(&report, spec.drift_max);
    res.metric("undershoots", traj.undershoots().count() as f64);
    res.artifacts.trajectories.push(("trajectory".into(), traj));
    res.artifacts.report = Some(report);
    Ok(res)
}

/// Criteria of the invariant suite for an existing report.
pub fn invariant_criteria(report: &DiagnosticsReport, drift_max: f64) -> ExperimentResult {
    let mut res = ExperimentResult::new(ExperimentName::InvariantSuite);
    let s = &report.summary;
    let e = &report.energy;
    let at = |t: Option<f64>| t.map(|t| Witness {
        t: Some(t),
        shell: None,
        values: Vec::new(),
    });
    res.criteria.push(Criterion::new(
        "weak_energy",
        e.weak_ok,
        format!("E(t) <= E(0) + {:e}", e.tol),
        at(e.weak_witness),
    ));
    res.criteria.push(Criterion::new(
        "strong_energy",
        e.strong_ok,
        format!("E(t) <= E(s) + {:e} for s < t", e.tol),
        e.strong_witness.map(|(s, t)| Witness {
            t: Some(t),
            shell: None,
            values: vec![s],
        }),
    ));
    res.criteria.push(Criterion::new(
        "weak_implies_strong",
        e.consistent(),
        "weak energy inequality implies the strong one".into(),
        e.strong_witness.map(|(s, t)| Witness {
            t: Some(t),
            shell: None,
            values: vec![s],
        }),
    ));
    let sign = report.signs.violations.first();
    res.criteria.push(Criterion::new(
        "sign_preservation",
        s.sign_ok,
        format!("epsilon {:e}", report.signs.epsilon),
        sign.map(|v| Witness {
            t: Some(v.t),
            shell: Some(v.shell),
            values: vec![v.value],
        }),
    ));
    for (name, ok, w) in [
        ("lemma3", s.lemma3_consistent, &report.lemmas.lemma3_witness),
        ("lemma4", s.lemma4_consistent, &report.lemmas.lemma4_witness),
    ] {
        res.criteria.push(Criterion::new(
            name,
            ok,
            format!("partial energies against the sign of the next shell, tol {:e}", report.lemmas.tol),
            w.as_ref().map(|w| Witness {
                t: Some(w.t),
                shell: Some(w.shell),
                values: vec![w.s, w.before, w.after],
            }),
        ));
    }
    let b = &report.simple_bound;
    res.criteria.push(Criterion::new(
        "simple_bound",
        b.ok,
        format!("max |X_n| = {:e}, sqrt(E0) = {:e}", b.max_abs, b.bound),
        b.witness.map(|(t, shell, v)| Witness {
            t: Some(t),
            shell: Some(shell),
            values: vec![v],
        }),
    ));
    res.criteria.push(Criterion::new(
        "flux_identity",
        s.flux_ok,
        format!("max residual / (1 + k_N E) = {:e}", s.max_flux_residual),
        None,
    ));
    let drift_at = report
        .samples
        .iter()
        .max_by(|a, b| {
            (a.energy - report.samples[0].energy)
                .abs()
                .total_cmp(&(b.energy - report.samples[0].energy).abs())
        })
        .map(|x| x.t);
    res.criteria.push(Criterion::new(
        "energy_drift",
        s.max_energy_drift <= drift_max,
        format!("max relative drift {:e}, allowed {drift_max:e}", s.max_energy_drift),
        Some(Witness {
            t: drift_at,
            shell: None,
            values: vec![s.max_energy_drift, drift_max],
        }),
    ));
    res.metric("max_energy_drift", s.max_energy_drift);
    res.metric("max_flux_residual", s.max_flux_residual);
    res.metric("samples", report.samples.len() as f64);
    res
}

/// Twenty invariant-suite specs spanning the IC families, `N = 12`, `T = 2`.
pub fn ic_family_suite() -> Vec<ExperimentSpec> {
    use IcFamily::*;
    let geo = |r: f64, s: usize| Geometric { r, n_support: s };
    let ics = vec![
        UnitShell { j: 1 },
        UnitShell { j: 2 },
        UnitShell { j: 3 },
        UnitShell { j: 6 },
        geo(0.5, 4),
        geo(0.5, 8),
        geo(0.3, 12),
        geo(0.8, 6),
        geo(1.0, 3),
        RandomPositive { seed: 1, n_support: 4 },
        RandomPositive { seed: 2, n_support: 6 },
        RandomPositive { seed: 3, n_support: 8 },
        RandomPositive { seed: 4, n_support: 12 },
        IcFamily::signed(1, UnitShell { j: 1 }),
        IcFamily::signed(1, geo(0.5, 8)),
        IcFamily::signed(2, geo(0.5, 8)),
        IcFamily::signed(3, geo(0.7, 6)),
        IcFamily::signed(1, RandomPositive { seed: 5, n_support: 6 }),
        IcFamily::signed(2, RandomPositive { seed: 6, n_support: 10 }),
        IcFamily::signed(4, geo(0.6, 12)),
    ];
    ics.into_iter()
        .map(|ic| ExperimentSpec {
            ic,
            ..ExperimentSpec::canned(ExperimentName::InvariantSuite)
        })
        .collect()
}

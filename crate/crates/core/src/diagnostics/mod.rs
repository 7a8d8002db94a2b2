//! Checks of the energy inequalities, sign structure and identities along a
//! trajectory, plus the two-trajectory uniqueness certificate.
//!
//! Every predicate is evaluated at the sample times only. Continuous-time
//! statements become "holds at every sample, up to a tolerance".

mod certificate;

pub use certificate::{pair_certificate, pair_certificate_with_k, PairCertificate};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{StepperKind, Trajectory};
use crate::model::{
    class_k_a_slice, energy, flux_identity_residuals, h1_sq_slice, partial_energies,
};

/// Relative energy tolerance: inequalities on `E` are checked up to `ENERGY_TOL * E(0)`.
pub const ENERGY_TOL: f64 = 1e-7;

/// Tolerance of the class-K bound, absolute.
pub const CLASS_K_TOL: f64 = 1e-9;

/// Flux residuals must stay below `FLUX_TOL * (1 + k_N E)`.
pub const FLUX_TOL: f64 = 1e-9;

/// Sign tolerance of a trajectory: zero for the positivity scheme, otherwise
/// ten times the absolute integrator tolerance.
pub fn sign_epsilon(traj: &Trajectory) -> f64 {
    match traj.config.scheme_choice {
        StepperKind::PositivityVoc => 0.0,
        _ => 10.0 * traj.config.abs_tol,
    }
}

fn energy_tol(traj: &Trajectory) -> f64 {
    ENERGY_TOL * energy(traj.first())
}

fn ensure_nonempty(traj: &Trajectory) -> Result<()> {
    if traj.is_empty() {
        return Err(Error::Argument("trajectory has no states".into()));
    }
    Ok(())
}

/// Outcome of the weak and strong energy inequalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyMonotonicity {
    /// `E(t) <= E(0) + tol` at every sample.
    pub weak_ok: bool,
    /// `E(t) <= E(s) + tol` for every pair of samples `s < t`.
    pub strong_ok: bool,
    pub tol: f64,
    /// First sample time with `E(t) > E(0) + tol`.
    pub weak_witness: Option<f64>,
    /// First pair `(s, t)` with `E(t) > E(s) + tol`; `s` is where the
    /// running minimum of `E` was attained.
    pub strong_witness: Option<(f64, f64)>,
}

impl EnergyMonotonicity {
    /// Weak implies strong; the converse is trivial.
    pub fn consistent(&self) -> bool {
        !self.weak_ok || self.strong_ok
    }
}

pub fn check_energy_monotonicity(traj: &Trajectory) -> Result<EnergyMonotonicity> {
    ensure_nonempty(traj)?;
    let tol = energy_tol(traj);
    let e: Vec<f64> = traj.states.iter().map(energy).collect();
    let e0 = e[0];
    let weak_witness = traj
        .states
        .iter()
        .zip(&e)
        .find(|(_, v)| **v > e0 + tol)
        .map(|(s, _)| s.t);

    // comparing against the running minimum covers every pair s < t
    let mut strong_witness = None;
    let mut min_idx = 0;
    for i in 1..e.len() {
        if e[i] > e[min_idx] + tol {
            strong_witness = Some((traj.states[min_idx].t, traj.states[i].t));
            break;
        }
        if e[i] < e[min_idx] {
            min_idx = i;
        }
    }
    Ok(EnergyMonotonicity {
        weak_ok: weak_witness.is_none(),
        strong_ok: strong_witness.is_none(),
        tol,
        weak_witness,
        strong_witness,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignViolation {
    pub shell: usize,
    /// Sample index of the violation.
    pub index: usize,
    pub t: f64,
    pub value: f64,
}

/// Per-shell sign behavior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignPreservation {
    pub epsilon: f64,
    /// Time of the first sample at which each shell is nonnegative, if any.
    pub first_nonnegative: Vec<Option<f64>>,
    /// Later samples where a shell that had been nonnegative is below `-epsilon`.
    pub violations: Vec<SignViolation>,
}

impl SignPreservation {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_sign_preservation(traj: &Trajectory) -> Result<SignPreservation> {
    ensure_nonempty(traj)?;
    let epsilon = sign_epsilon(traj);
    let n = traj.n_shells();
    let mut first_nonnegative = vec![None; n];
    let mut violations = Vec::new();
    for (idx, s) in traj.states.iter().enumerate() {
        for (j, &v) in s.x().iter().enumerate() {
            match first_nonnegative[j] {
                None if v >= 0.0 => first_nonnegative[j] = Some(s.t),
                Some(_) if v < -epsilon => violations.push(SignViolation {
                    shell: j + 1,
                    index: idx,
                    t: s.t,
                    value: v,
                }),
                _ => {}
            }
        }
    }
    Ok(SignPreservation {
        epsilon,
        first_nonnegative,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaWitness {
    /// Shell whose sign drives the flux out of the first `shell - 1` shells.
    pub shell: usize,
    pub s: f64,
    pub t: f64,
    /// `E_{shell-1}(s)` and `E_{shell-1}(t)`.
    pub before: f64,
    pub after: f64,
}

/// Finite-dimensional surrogates of the two sign lemmas for partial energies.
///
/// The flux out of the first `n - 1` shells is `2 k_{n-1} X_{n-1}² X_n`, so
/// between consecutive samples `s < t`:
///
/// * if `X_n(t) < -ε` (so `X_n` was negative all along) then `E_{n-1}` may
///   not decrease (energy can only be lost where the next shell is positive);
/// * if `X_n(s) >= 0` (so `X_n` stays nonnegative) then `E_{n-1}` may not
///   increase.
///
/// Both up to `1e-7 E(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HPlusLemmas {
    pub lemma3_consistent: bool,
    pub lemma4_consistent: bool,
    pub tol: f64,
    pub lemma3_witness: Option<LemmaWitness>,
    pub lemma4_witness: Option<LemmaWitness>,
}

pub fn check_h_plus_energy_lemmas(traj: &Trajectory) -> Result<HPlusLemmas> {
    ensure_nonempty(traj)?;
    let tol = energy_tol(traj);
    let eps = sign_epsilon(traj);
    let n = traj.n_shells();
    let mut lemma3_witness = None;
    let mut lemma4_witness = None;
    let mut prev_partial = partial_energies(&traj.states[0]);
    for w in traj.states.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let partial = partial_energies(b);
        // shell n = N + 1 is the zero boundary: E_N must not change at all
        for shell in 2..=n + 1 {
            let before = prev_partial[shell - 2];
            let after = partial[shell - 2];
            let witness = || LemmaWitness {
                shell,
                s: a.t,
                t: b.t,
                before,
                after,
            };
            if lemma3_witness.is_none() && b.get(shell) < -eps && after < before - tol {
                lemma3_witness = Some(witness());
            }
            if lemma4_witness.is_none() && a.get(shell) >= 0.0 && after > before + tol {
                lemma4_witness = Some(witness());
            }
        }
        prev_partial = partial;
    }
    Ok(HPlusLemmas {
        lemma3_consistent: lemma3_witness.is_none(),
        lemma4_consistent: lemma4_witness.is_none(),
        tol,
        lemma3_witness,
        lemma4_witness,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleBound {
    pub ok: bool,
    /// `sqrt(E(0))`.
    pub bound: f64,
    pub tol: f64,
    pub max_abs: f64,
    /// First `(t, shell, value)` with `|X_n(t)| > bound + tol`.
    pub witness: Option<(f64, usize, f64)>,
}

/// `|X_n(t)| <= sqrt(E(0))` along the trajectory, up to `1e-7 sqrt(E(0))`.
pub fn simple_bound_check(traj: &Trajectory) -> Result<SimpleBound> {
    ensure_nonempty(traj)?;
    let bound = energy(traj.first()).sqrt();
    let tol = ENERGY_TOL * bound;
    let mut max_abs = 0.0f64;
    let mut witness = None;
    for s in &traj.states {
        for (j, v) in s.x().iter().enumerate() {
            max_abs = max_abs.max(v.abs());
            if witness.is_none() && v.abs() > bound + tol {
                witness = Some((s.t, j + 1, *v));
            }
        }
    }
    Ok(SimpleBound {
        ok: witness.is_none(),
        bound,
        tol,
        max_abs,
        witness,
    })
}

/// Result of `a(t) <= k_{n0} sqrt(E(0))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ClassKBound {
    Holds { bound: f64, max_a: f64 },
    Violated { bound: f64, t: f64, a: f64 },
    /// Some shell above `n0` went negative, so the bound does not apply.
    Inapplicable { t: f64, shell: usize, value: f64 },
}

impl ClassKBound {
    pub fn holds(&self) -> bool {
        matches!(self, ClassKBound::Holds { .. })
    }
}

pub fn class_k_bound_check(traj: &Trajectory, n0: usize) -> Result<ClassKBound> {
    ensure_nonempty(traj)?;
    let n = traj.n_shells();
    if n0 == 0 || n0 > n {
        return Err(Error::Argument(format!("n0 = {n0} outside 1..={n}")));
    }
    let eps = sign_epsilon(traj);
    for s in &traj.states {
        if let Some(j) = s.x()[n0..].iter().position(|v| *v < -eps) {
            return Ok(ClassKBound::Inapplicable {
                t: s.t,
                shell: n0 + j + 1,
                value: s.x()[n0 + j],
            });
        }
    }
    let k = traj.scheme.values();
    let bound = k[n0] * energy(traj.first()).sqrt();
    let mut max_a = 0.0f64;
    for s in &traj.states {
        let a = class_k_a_slice(s.x(), k);
        if a > bound + CLASS_K_TOL {
            return Ok(ClassKBound::Violated { bound, t: s.t, a });
        }
        max_a = max_a.max(a);
    }
    Ok(ClassKBound::Holds { bound, max_a })
}

/// Diagnostics of one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDiagnostics {
    pub t: f64,
    pub energy: f64,
    pub partial_energies: Vec<f64>,
    pub h1_sq: f64,
    pub a_value: f64,
    pub flux_residuals: Vec<f64>,
    pub min_component: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub weak_energy_ok: bool,
    pub strong_energy_ok: bool,
    pub lemma3_consistent: bool,
    pub lemma4_consistent: bool,
    pub sign_ok: bool,
    pub simple_bound_ok: bool,
    pub flux_ok: bool,
    /// Largest `|E(t) - E(0)| / E(0)` (zero for the zero state).
    pub max_energy_drift: f64,
    /// Largest flux residual relative to `1 + k_N E`.
    pub max_flux_residual: f64,
}

impl ReportSummary {
    pub fn all_ok(&self) -> bool {
        self.weak_energy_ok
            && self.strong_energy_ok
            && self.lemma3_consistent
            && self.lemma4_consistent
            && self.sign_ok
            && self.simple_bound_ok
            && self.flux_ok
    }
}

/// Everything the single-trajectory checks know about a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub n_shells: usize,
    pub samples: Vec<SampleDiagnostics>,
    /// Per shell, the time from which the shell is `>= -ε` at every
    /// remaining sample (`None` if it ends below).
    pub nonnegative_from: Vec<Option<f64>>,
    pub energy: EnergyMonotonicity,
    pub signs: SignPreservation,
    pub lemmas: HPlusLemmas,
    pub simple_bound: SimpleBound,
    pub summary: ReportSummary,
}

impl DiagnosticsReport {
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        traj.validate()?;
        let n = traj.n_shells();
        let k = traj.scheme.values();
        let e0 = energy(traj.first());
        let mut samples = Vec::with_capacity(traj.len());
        let mut max_drift = 0.0f64;
        let mut max_flux = 0.0f64;
        for s in &traj.states {
            let pe = partial_energies(s);
            let e = pe[n - 1];
            let flux = flux_identity_residuals(s, &traj.scheme)?;
            let scale = 1.0 + k[n] * e;
            for r in &flux {
                max_flux = max_flux.max(r.abs() / scale);
            }
            if e0 > 0.0 {
                max_drift = max_drift.max((e - e0).abs() / e0);
            }
            samples.push(SampleDiagnostics {
                t: s.t,
                energy: e,
                partial_energies: pe,
                h1_sq: h1_sq_slice(s.x(), k),
                a_value: class_k_a_slice(s.x(), k),
                flux_residuals: flux,
                min_component: s.min_component(),
            });
        }

        let eps = sign_epsilon(traj);
        let mut nonnegative_from = vec![None; n];
        for j in 0..n {
            let mut from = None;
            for s in traj.states.iter().rev() {
                if s.x()[j] < -eps {
                    break;
                }
                from = Some(s.t);
            }
            nonnegative_from[j] = from;
        }

        let energy_check = check_energy_monotonicity(traj)?;
        let signs = check_sign_preservation(traj)?;
        let lemmas = check_h_plus_energy_lemmas(traj)?;
        let simple_bound = simple_bound_check(traj)?;
        let summary = ReportSummary {
            weak_energy_ok: energy_check.weak_ok,
            strong_energy_ok: energy_check.strong_ok,
            lemma3_consistent: lemmas.lemma3_consistent,
            lemma4_consistent: lemmas.lemma4_consistent,
            sign_ok: signs.ok(),
            simple_bound_ok: simple_bound.ok,
            flux_ok: max_flux <= FLUX_TOL,
            max_energy_drift: max_drift,
            max_flux_residual: max_flux,
        };
        Ok(Self {
            n_shells: n,
            samples,
            nonnegative_from,
            energy: energy_check,
            signs,
            lemmas,
            simple_bound,
            summary,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{integrate, IntegratorConfig};
    use crate::model::{CoefficientScheme, ShellState};

    fn hand_built(rows: &[(f64, &[f64])]) -> Trajectory {
        let n = rows[0].1.len();
        let states = rows
            .iter()
            .map(|(t, x)| ShellState::new(*t, x.to_vec()).unwrap())
            .collect();
        Trajectory::new(states, CoefficientScheme::dyadic(n), IntegratorConfig::default()).unwrap()
    }

    #[test]
    fn zero_trajectory_passes_everything() {
        let traj = hand_built(&[(0.0, &[0.0, 0.0]), (1.0, &[0.0, 0.0])]);
        let report = DiagnosticsReport::from_trajectory(&traj).unwrap();
        assert!(report.summary.all_ok());
        assert!(class_k_bound_check(&traj, 1).unwrap().holds());
    }

    #[test]
    fn energy_increase_is_caught_with_witness() {
        let traj = hand_built(&[(0.0, &[1.0, 0.0]), (0.5, &[0.9, 0.0]), (1.0, &[0.95, 0.0])]);
        let m = check_energy_monotonicity(&traj).unwrap();
        assert!(m.weak_ok);
        assert!(!m.strong_ok);
        assert_eq!(m.strong_witness, Some((0.5, 1.0)));
        assert!(!m.consistent());
    }

    #[test]
    fn slow_creep_is_caught_by_the_running_minimum() {
        // each consecutive increase is below tol, the total is not
        let step = 0.6 * ENERGY_TOL;
        let rows: Vec<(f64, Vec<f64>)> = (0..3)
            .map(|i| (i as f64, vec![(1.0 - 2.0 * step + i as f64 * step).sqrt()]))
            .collect();
        let states = rows
            .iter()
            .map(|(t, x)| ShellState::new(*t, x.clone()).unwrap())
            .collect();
        let traj =
            Trajectory::new(states, CoefficientScheme::dyadic(1), IntegratorConfig::default())
                .unwrap();
        let m = check_energy_monotonicity(&traj).unwrap();
        assert!(!m.strong_ok);
        assert_eq!(m.strong_witness, Some((0.0, 2.0)));
    }

    #[test]
    fn weak_violation() {
        let traj = hand_built(&[(0.0, &[1.0]), (1.0, &[1.1])]);
        let m = check_energy_monotonicity(&traj).unwrap();
        assert!(!m.weak_ok && !m.strong_ok);
        assert_eq!(m.weak_witness, Some(1.0));
    }

    #[test]
    fn sign_dip_reported_at_its_index() {
        let traj = hand_built(&[
            (0.0, &[-1.0, 0.5]),
            (0.1, &[-0.5, 0.4]),
            (0.2, &[0.1, -0.3]),
            (0.3, &[0.2, 0.1]),
        ]);
        let s = check_sign_preservation(&traj).unwrap();
        assert_eq!(s.first_nonnegative, vec![Some(0.2), Some(0.0)]);
        assert_eq!(
            s.violations,
            vec![SignViolation {
                shell: 2,
                index: 2,
                t: 0.2,
                value: -0.3
            }]
        );
        let report = DiagnosticsReport::from_trajectory(&traj).unwrap();
        assert_eq!(report.nonnegative_from, vec![Some(0.2), Some(0.3)]);
    }

    #[test]
    fn lemma_surrogates_flag_hand_built_violations() {
        // X_2 >= 0 but E_1 grows: energy flowed backwards across a nonnegative shell
        let traj = hand_built(&[(0.0, &[0.5, 0.5, 0.0]), (1.0, &[0.6, 0.4, 0.0])]);
        let l = check_h_plus_energy_lemmas(&traj).unwrap();
        assert!(l.lemma3_consistent);
        assert!(!l.lemma4_consistent);
        assert_eq!(l.lemma4_witness.as_ref().unwrap().shell, 2);

        // X_2 < 0 but E_1 shrinks
        let traj = hand_built(&[(0.0, &[0.6, -0.4, 0.0]), (1.0, &[0.5, -0.5, 0.0])]);
        let l = check_h_plus_energy_lemmas(&traj).unwrap();
        assert!(!l.lemma3_consistent);
        assert!(l.lemma4_consistent);
    }

    #[test]
    fn negative_first_shell_run_keeps_lemmas() {
        let n = 8;
        let scheme = CoefficientScheme::dyadic(n);
        let mut x = vec![0.0; n];
        x[0] = -1.0;
        let ic = ShellState::new(0.0, x).unwrap();
        let traj = integrate(&ic, &scheme, &IntegratorConfig::default(), 1.0, 0.01).unwrap();
        let report = DiagnosticsReport::from_trajectory(&traj).unwrap();
        assert!(report.summary.all_ok(), "{:?}", report.summary);
        // shells 2..N never go negative
        for j in 1..n {
            assert_eq!(report.nonnegative_from[j], Some(0.0));
        }
    }

    #[test]
    fn simple_bound_scales_with_state() {
        let traj = hand_built(&[(0.0, &[0.6, 0.8]), (1.0, &[0.0, 1.0])]);
        let b = simple_bound_check(&traj).unwrap();
        assert!(b.ok);
        assert_eq!(b.bound, 1.0);
        let scaled = Trajectory::new(
            traj.states.iter().map(|s| s.scaled(-3.0)).collect(),
            traj.scheme.clone(),
            traj.config,
        )
        .unwrap();
        let b3 = simple_bound_check(&scaled).unwrap();
        assert!(b3.ok);
        assert!((b3.bound - 3.0).abs() < 1e-15);

        let bad = hand_built(&[(0.0, &[0.6, 0.8]), (1.0, &[0.0, 1.5])]);
        let b = simple_bound_check(&bad).unwrap();
        assert_eq!(b.witness, Some((1.0, 2, 1.5)));
    }

    #[test]
    fn class_k_gate_and_bound() {
        let traj = hand_built(&[(0.0, &[-0.5, 0.5, 0.5]), (1.0, &[0.1, 0.5, 0.3])]);
        match class_k_bound_check(&traj, 1).unwrap() {
            ClassKBound::Holds { bound, max_a } => {
                assert_eq!(max_a, 0.0);
                assert!((bound - 2.0 * 0.75f64.sqrt()).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        let traj = hand_built(&[(0.0, &[0.5, -0.5, 0.5]), (1.0, &[0.5, 0.5, 0.5])]);
        assert!(matches!(
            class_k_bound_check(&traj, 1).unwrap(),
            ClassKBound::Inapplicable { shell: 2, .. }
        ));
        match class_k_bound_check(&traj, 2).unwrap() {
            ClassKBound::Holds { max_a, .. } => assert_eq!(max_a, 2.0 * 0.5),
            other => panic!("{other:?}"),
        }
        assert!(class_k_bound_check(&traj, 0).is_err());
    }
}

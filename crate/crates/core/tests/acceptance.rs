//! Acceptance run: nine criteria, one line each, at their stated tolerances
//! and time budgets. Exits non-zero if any criterion fails.
//!
//! ```text
//! cargo test --release --test acceptance
//! ```

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use dyadic::diagnostics::DiagnosticsReport;
use dyadic::experiments::{
    ic_family_suite, run, tolerance_config, ExperimentName, ExperimentSpec, IcFamily, Status,
};
use dyadic::integrate::{integrate, Event, IntegratorConfig, Session, StepperKind, Trajectory};
use dyadic::io::{read_trajectory, write_trajectory, Format, Provenance};
use dyadic::model::{energy, flux_identity_residuals, flux_magnitudes, CoefficientScheme, ShellState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_status(res: &dyadic::experiments::ExperimentResult, name: &str) -> (bool, String) {
    match res.criterion(name) {
        Some(c) => (c.status == Status::Pass, format!("{} {:?}: {}", c.name, c.status, c.detail)),
        None => (false, format!("{name} missing")),
    }
}

/// 1000 random signed states at N = 16: telescoping residual within
/// `1e-10 (1 + Σ|2 X_j rhs_j|)` for every n.
fn flux_identity() -> Outcome {
    let scheme = CoefficientScheme::dyadic(16);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let x = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = ShellState::new(0.0, x).map_err(|e| e.to_string())?;
        let res = flux_identity_residuals(&s, &scheme).map_err(|e| e.to_string())?;
        let mag = flux_magnitudes(&s, &scheme).map_err(|e| e.to_string())?;
        for (r, m) in res.iter().zip(&mag) {
            worst = worst.max(r.abs() / (1e-10 * (1.0 + m)));
        }
    }
    ensure(
        worst <= 1.0,
        format!("max |res| / (1e-10 (1 + scale)) = {worst:.3e} over 1000 states"),
    )
}

/// e₁, N = 20, T = 10, default tolerances: relative energy drift ≤ 1e-8.
fn energy_conservation() -> Outcome {
    let n = 20;
    let scheme = CoefficientScheme::dyadic(n);
    let cfg = IntegratorConfig::default().with_stepper(StepperKind::StiffRosenbrock);
    let traj = integrate(&ShellState::unit(n, 1).unwrap(), &scheme, &cfg, 10.0, 0.01)
        .map_err(|e| e.to_string())?;
    let e0 = energy(traj.first());
    let drift = traj
        .states
        .iter()
        .map(|s| (energy(s) - e0).abs() / e0)
        .fold(0.0, f64::max);
    ensure(
        drift <= 1e-8,
        format!(
            "max relative drift {drift:.3e} (stiff_rosenbrock, abs {:e} rel {:e}, {} steps)",
            cfg.abs_tol, cfg.rel_tol, traj.stats.accepted
        ),
    )
}

/// Positivity stepper: 10⁵ steps, every state exactly nonnegative. Adaptive
/// RK: every component ≥ -1e-9 and every sign change logged.
fn positivity() -> Outcome {
    let n = 6;
    let scheme = CoefficientScheme::dyadic(n);
    let ic = ShellState::new(0.0, vec![0.7, 0.5, 0.3, 0.2, 0.1, 0.0]).unwrap();
    let cfg = IntegratorConfig::default().with_stepper(StepperKind::PositivityVoc);
    let mut session = Session::new(ic, &scheme, cfg).map_err(|e| e.to_string())?;
    let mut voc_min = f64::INFINITY;
    for _ in 0..100_000 {
        session.step().map_err(|e| e.to_string())?;
        voc_min = voc_min.min(session.state().min_component());
    }
    let voc_t = session.state().t;

    let n = 16;
    let scheme = CoefficientScheme::dyadic(n);
    let ic = ShellState::unit(n, 1).unwrap();
    let mut session =
        Session::new(ic, &scheme, IntegratorConfig::default()).map_err(|e| e.to_string())?;
    let mut rk_min = f64::INFINITY;
    let mut unlogged = 0usize;
    let mut dips = 0usize;
    let mut prev = session.state().x().to_vec();
    while session.state().t < 2.0 {
        let seen = session.events().len();
        session.step().map_err(|e| e.to_string())?;
        let x = session.state().x();
        rk_min = rk_min.min(session.state().min_component());
        let new_events = &session.events()[seen..];
        for j in 0..n {
            if prev[j] >= 0.0 && x[j] < 0.0 {
                dips += 1;
                let logged = new_events
                    .iter()
                    .any(|e| matches!(e, Event::Undershoot { shell, .. } if *shell == j + 1));
                if !logged {
                    unlogged += 1;
                }
            }
        }
        prev = x.to_vec();
    }
    ensure(
        voc_min >= 0.0 && rk_min >= -1e-9 && unlogged == 0,
        format!(
            "positivity_voc min {voc_min:e} over 1e5 steps (t = {voc_t:.3}); adaptive_rk min {rk_min:.3e}, {dips} sign change(s), {unlogged} unlogged"
        ),
    )
}

/// Every trajectory of the 20-spec family with weak_ok also has strong_ok.
fn weak_implies_strong() -> Outcome {
    let suite = ic_family_suite();
    let (mut weak, mut both, mut bad) = (0, 0, Vec::new());
    for spec in &suite {
        let traj = spec.simulate().map_err(|e| e.to_string())?;
        let report = DiagnosticsReport::from_trajectory(&traj).map_err(|e| e.to_string())?;
        let tol_ok = (report.energy.tol - 1e-7 * energy(traj.first())).abs() <= 1e-22;
        if report.energy.weak_ok {
            weak += 1;
            if report.energy.strong_ok {
                both += 1;
            } else {
                bad.push(spec.ic.to_string());
            }
        }
        if !tol_ok {
            bad.push(format!("{} (tolerance {:e})", spec.ic, report.energy.tol));
        }
    }
    ensure(
        suite.len() == 20 && bad.is_empty(),
        format!("{} specs, weak_ok {weak}, weak and strong {both}, offending {bad:?}", suite.len()),
    )
}

/// Pair certificate at (1e-8, 1e-12) for e₁ and signed data, then a strict
/// reduction of max ψ_N at (1e-10, 1e-14).
fn uniqueness() -> Outcome {
    let base = ExperimentSpec::canned(ExperimentName::UniquenessPair);
    let mut lines = Vec::new();
    let mut ok = true;
    for ic in [
        IcFamily::UnitShell { j: 1 },
        IcFamily::signed(1, IcFamily::Geometric { r: 0.5, n_support: 8 }),
    ] {
        let mut maxes = Vec::new();
        for (loose, tight) in [(1e-8, 1e-12), (1e-10, 1e-14)] {
            let spec = ExperimentSpec {
                ic: ic.clone(),
                config: tolerance_config(StepperKind::AdaptiveRk, loose),
                config2: Some(tolerance_config(StepperKind::AdaptiveRk, tight)),
                ..base.clone()
            };
            let res = run(&spec).map_err(|e| e.to_string())?;
            for name in ["psi_threshold", "gronwall_envelope"] {
                let (pass, _) = criterion_status(&res, name);
                ok &= pass;
            }
            let cert = res.artifacts.certificate.as_ref().ok_or("no certificate")?;
            maxes.push(cert.max_psi);
        }
        ok &= maxes[1] < maxes[0];
        lines.push(format!("{ic}: max psi_N {:.3e} -> {:.3e}", maxes[0], maxes[1]));
    }
    ensure(ok, lines.join("; "))
}

/// a(t) ≤ k_{n₀} √E(0) at every sample for m = 1, 2, 3 negative shells.
fn class_k() -> Outcome {
    let base = ExperimentSpec::canned(ExperimentName::FiniteNegativeClassK);
    let mut ok = true;
    let mut parts = Vec::new();
    for m in 1..=3 {
        let spec = ExperimentSpec {
            ic: IcFamily::signed(m, IcFamily::Geometric { r: 0.5, n_support: 8 }),
            ..base.clone()
        };
        let res = run(&spec).map_err(|e| e.to_string())?;
        let (pass, detail) = criterion_status(&res, "class_k_bound");
        ok &= pass;
        parts.push(format!("m = {m}: {detail}"));
    }
    ensure(ok, parts.join("; "))
}

/// e₁, N = 40: h1 growth ≥ 10 by T = 5 and no smaller at N = 48.
fn h1_growth() -> Outcome {
    let res = run(&ExperimentSpec::canned(ExperimentName::H1Growth)).map_err(|e| e.to_string())?;
    let (a, da) = criterion_status(&res, "growth_factor");
    let (b, db) = criterion_status(&res, "refinement_monotone");
    ensure(a && b, format!("{da}; {db}"))
}

/// Sup-difference of E_4 strictly decreases over N = 12, 24, 48.
fn self_convergence() -> Outcome {
    let res = run(&ExperimentSpec::canned(ExperimentName::TruncationConvergence))
        .map_err(|e| e.to_string())?;
    let (ok, detail) = criterion_status(&res, "sup_difference_decreases");
    ensure(ok, detail)
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

/// Every experiment re-run through the binary gives byte-identical files;
/// 10⁶ arbitrary floats survive a trajectory round trip in both formats.
fn determinism_and_io() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for name in ExperimentName::ALL {
        let mut runs = Vec::new();
        for rep in 0..2 {
            let out = tmp.path().join(format!("{name}-{rep}"));
            let status = Command::new(env!("CARGO_BIN_EXE_dyadic"))
                .args(["experiment", name.as_str(), "--out", out.to_str().unwrap()])
                .output()
                .map_err(|e| e.to_string())?;
            if status.status.code() != Some(0) {
                return Err(format!("experiment {name} exited with {:?}", status.status.code()));
            }
            runs.push(dir_bytes(&out));
        }
        if runs[0] != runs[1] {
            return Err(format!("experiment {name} output differs between runs"));
        }
        compared += runs[0].len();
    }

    let n = 100;
    let rows = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut states = Vec::with_capacity(rows);
    for i in 0..rows {
        let x: Vec<f64> = (0..n)
            .map(|_| loop {
                let v = f64::from_bits(rng.random::<u64>());
                if v.is_finite() {
                    break v;
                }
            })
            .collect();
        states.push(ShellState::new(i as f64 * 0.1, x).map_err(|e| e.to_string())?);
    }
    let traj = Trajectory::new(states, CoefficientScheme::dyadic(n), IntegratorConfig::default())
        .map_err(|e| e.to_string())?;
    for format in [Format::Csv, Format::Jsonl] {
        let path = tmp.path().join(format!("floats.{format}"));
        write_trajectory(&traj, &path, format, &Provenance::default()).map_err(|e| e.to_string())?;
        let back = read_trajectory(&path).map_err(|e| e.to_string())?.trajectory;
        let same = back.states.len() == traj.states.len()
            && back.states.iter().zip(&traj.states).all(|(a, b)| {
                a.t.to_bits() == b.t.to_bits()
                    && a.x().iter().zip(b.x()).all(|(u, v)| u.to_bits() == v.to_bits())
            });
        if !same {
            return Err(format!("{format} round trip changed a value"));
        }
    }
    Ok(format!(
        "{compared} files byte-identical across 5 experiments x 2 runs; {} floats exact in csv and jsonl",
        rows * (n + 1)
    ))
}

fn main() {
    let criteria: [(u32, &str, u64, fn() -> Outcome); 9] = [
        (1, "flux identity", 1, flux_identity),
        (2, "truncated energy conservation", 10, energy_conservation),
        (3, "positivity", 30, positivity),
        (4, "weak implies strong", 60, weak_implies_strong),
        (5, "uniqueness certificate", 60, uniqueness),
        (6, "class-K bound", 30, class_k),
        (7, "H1 growth", 120, h1_growth),
        (8, "self-convergence", 60, self_convergence),
        (9, "determinism and IO", 10, determinism_and_io),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed < Duration::from_secs(budget);
        let (ok, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id} [{}] {name}: {detail} ({:.2} s, budget {budget} s{})",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Spec files, trajectory files and reports.
//!
//! Writes a trajectory as CSV and JSONL, reads both back bit for bit, and
//! emits the diagnostics report next to them.

use dyadic::diagnostics::DiagnosticsReport;
use dyadic::experiments::{ExperimentName, ExperimentSpec};
use dyadic::io::{
    build_spec, emit_report, parse_spec_str, read_trajectory, write_trajectory, Format, Provenance,
};

const SPEC: &str = r#"
n_shells = 10
ic.family = "geometric"
ic.params = [0.5, 6]
t_end = 1.0
sample_every = 0.05
tol.rel = 1e-10
"#;

fn main() -> dyadic::Result<()> {
    let file = parse_spec_str(SPEC)?;
    let mut flags = dyadic::io::FlatConfig::new();
    flags.insert("seed".into(), toml::Value::Integer(3));
    let (spec, overrides) = build_spec(
        ExperimentSpec::canned(ExperimentName::InvariantSuite),
        Some(&file),
        &flags,
    )?;
    let provenance = Provenance::for_spec(&spec, "trajectory_io example", overrides)?;
    let traj = spec.simulate()?;

    let dir = std::env::temp_dir().join("dyadic-trajectory-io");
    std::fs::create_dir_all(&dir).map_err(|e| dyadic::Error::Io { path: dir.clone(), source: e })?;
    for format in [Format::Csv, Format::Jsonl] {
        let path = dir.join(format!("trajectory.{format}"));
        write_trajectory(&traj, &path, format, &provenance)?;
        let back = read_trajectory(&path)?;
        println!(
            "{}: {} states, identical {}",
            path.display(),
            back.trajectory.len(),
            back.trajectory == traj
        );

        let report = DiagnosticsReport::from_trajectory(&back.trajectory)?;
        let rpath = dir.join(format!("report.{format}"));
        emit_report(&report, &rpath, format, &provenance)?;
        println!("{}: all checks {}", rpath.display(), report.summary.all_ok());
    }
    println!("spec digest {}", provenance.spec_digest);
    Ok(())
}

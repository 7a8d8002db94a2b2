//! Every single-trajectory invariant, on the default run and on a family of
//! twenty initial data. A deliberately sloppy tolerance shows a failure.

use dyadic::experiments::{ic_family_suite, run, ExperimentName, ExperimentSpec, Status};

fn main() -> dyadic::Result<()> {
    let spec = ExperimentSpec::canned(ExperimentName::InvariantSuite);
    let res = run(&spec)?;
    for c in &res.criteria {
        println!("{:<22} {:?}  {}", c.name, c.status, c.detail);
    }

    println!();
    for s in ic_family_suite() {
        let r = run(&s)?;
        let failed: Vec<_> = r
            .criteria
            .iter()
            .filter(|c| c.status == Status::Fail)
            .map(|c| c.name.as_str())
            .collect();
        println!("{:<40} {}", s.ic.to_string(), if failed.is_empty() { "ok".into() } else { failed.join(", ") });
    }

    println!();
    let sloppy = ExperimentSpec {
        config: spec.config.with_tolerances(1e-2, 1e-2),
        ..spec
    };
    let r = run(&sloppy)?;
    let drift = r.criterion("energy_drift").expect("suite has a drift criterion");
    println!("tolerance 1e-2: energy_drift {:?}  {}", drift.status, drift.detail);
    Ok(())
}

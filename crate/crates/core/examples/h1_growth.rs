//! Growth of the H¹ norm `Σ k_n² X_n²` from unit data in shell 1, at N = 40
//! and a refined N = 48.

use dyadic::experiments::{run, ExperimentName, ExperimentSpec};

fn main() -> dyadic::Result<()> {
    let spec = ExperimentSpec::canned(ExperimentName::H1Growth);
    let res = run(&spec)?;
    for (label, traj) in &res.artifacts.trajectories {
        println!("{label}: {} samples, {} steps", traj.len(), traj.stats.accepted);
    }
    for (k, v) in &res.metrics {
        println!("{k:<28} {v:.4e}");
    }
    for c in &res.criteria {
        println!("{:<22} {:?}  {}", c.name, c.status, c.detail);
    }
    for n in &res.notes {
        println!("note: {n}");
    }
    Ok(())
}

//! Partial energy `E_4(t)` at truncations N = 12, 24, 48: the sup-in-time
//! differences between successive levels shrink.

use dyadic::experiments::{run, ExperimentName, ExperimentSpec};

fn main() -> dyadic::Result<()> {
    let spec = ExperimentSpec::canned(ExperimentName::TruncationConvergence);
    let res = run(&spec)?;
    for (k, v) in &res.metrics {
        println!("{k:<24} {v:.6e}");
    }
    for c in &res.criteria {
        println!("{:<24} {:?}  {}", c.name, c.status, c.detail);
    }
    Ok(())
}

//! Data negative in finitely many shells: the negative part dies out and
//! `a(t) = max_n(-k_n X_{n+1})` stays below the class-K bound.

use dyadic::diagnostics::{class_k_bound_check, ClassKBound};
use dyadic::experiments::{run, ExperimentName, ExperimentSpec, IcFamily};

fn main() -> dyadic::Result<()> {
    let base = ExperimentSpec::canned(ExperimentName::FiniteNegativeClassK);
    for m in 1..=3 {
        let spec = ExperimentSpec {
            ic: IcFamily::signed(m, IcFamily::Geometric { r: 0.5, n_support: 8 }),
            ..base.clone()
        };
        let res = run(&spec)?;
        println!("{} -> passed {}", spec.ic, res.passed());
        for c in &res.criteria {
            println!("  {:<22} {:?}  {}", c.name, c.status, c.detail);
        }
        let traj = &res.artifacts.trajectories[0].1;
        match class_k_bound_check(traj, m)? {
            ClassKBound::Holds { bound, max_a } => {
                println!("  from n0 = {m}: max a = {max_a:.4}, bound {bound:.4}")
            }
            other => println!("  from n0 = {m}: {other:?}"),
        }
    }
    Ok(())
}

//! Energy starting in shell 1 cascades to higher shells while the total
//! stays put.
//!
//! ```text
//! cargo run --release --example simulate_cascade
//! ```

use dyadic::integrate::{integrate, IntegratorConfig};
use dyadic::model::{energy, norm_report, CoefficientScheme, ShellState};

fn main() -> dyadic::Result<()> {
    let n = 16;
    let scheme = CoefficientScheme::dyadic(n);
    let ic = ShellState::unit(n, 1)?;
    let traj = integrate(&ic, &scheme, &IntegratorConfig::default(), 4.0, 0.5)?;

    println!("{:>5} {:>12} {:>12} {:>12} {:>12}", "t", "E", "E_1", "E_4", "E_8");
    for s in &traj.states {
        let r = norm_report(s, &scheme)?;
        let e = &r.partial_energies;
        // tail energy beyond shell n is E - E_n
        println!(
            "{:5.2} {:12.9} {:12.4e} {:12.4e} {:12.4e}",
            s.t,
            r.energy,
            e[0],
            r.energy - e[3],
            r.energy - e[7]
        );
    }
    let drift = (energy(traj.last()) - energy(traj.first())).abs();
    println!("energy drift {drift:.2e}, {} steps", traj.stats.accepted);
    Ok(())
}

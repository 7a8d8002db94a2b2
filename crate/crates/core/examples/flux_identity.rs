//! The energy flux identity `d/dt E_n = -2 k_n X_n² X_{n+1}` checked on random
//! signed states, against the time derivative of a short integration.

use dyadic::integrate::{integrate, IntegratorConfig};
use dyadic::model::{
    flux_identity_residuals, flux_magnitudes, partial_energy, CoefficientScheme, ShellState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> dyadic::Result<()> {
    let n = 16;
    let scheme = CoefficientScheme::dyadic(n);
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let state = ShellState::new(0.0, x)?;
        let res = flux_identity_residuals(&state, &scheme)?;
        let mag = flux_magnitudes(&state, &scheme)?;
        for (r, m) in res.iter().zip(&mag) {
            worst = worst.max(r.abs() / (1.0 + m));
        }
    }
    println!("1000 random states: max |residual| / (1 + flux scale) = {worst:.2e}");

    // finite difference of E_4 along a trajectory against the flux formula
    let ic = ShellState::unit(n, 1)?;
    let h = 1e-4;
    let cfg = IntegratorConfig::default().with_tolerances(1e-14, 1e-13);
    let traj = integrate(&ic, &scheme, &cfg, 0.5 + h, h)?;
    let len = traj.len();
    let (a, mid, b) = (&traj.states[len - 3], &traj.states[len - 2], &traj.states[len - 1]);
    let de = (partial_energy(b, 4)? - partial_energy(a, 4)?) / (b.t - a.t);
    let flux = -2.0 * scheme.k(4) * mid.get(4).powi(2) * mid.get(5);
    println!("t = {:.4}: dE_4/dt ~ {de:.10e}, flux {flux:.10e}", mid.t);
    Ok(())
}

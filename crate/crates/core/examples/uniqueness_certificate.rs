//! Two integrations of the same data at different tolerances, compared with
//! the Gronwall-type certificate `ψ_N(t) <= G(t)`.

use dyadic::diagnostics::pair_certificate;
use dyadic::experiments::{run, tolerance_config, ExperimentName, ExperimentSpec};
use dyadic::integrate::StepperKind;

fn main() -> dyadic::Result<()> {
    let spec = ExperimentSpec::canned(ExperimentName::UniquenessPair);
    let res = run(&spec)?;
    for c in &res.criteria {
        println!("{:<20} {:?}  {}", c.name, c.status, c.detail);
    }

    // tightening both legs shrinks the certificate
    for (loose, tight) in [(1e-8, 1e-12), (1e-10, 1e-14)] {
        let s = ExperimentSpec {
            config: tolerance_config(StepperKind::AdaptiveRk, loose),
            config2: Some(tolerance_config(StepperKind::AdaptiveRk, tight)),
            ..spec.clone()
        };
        let r = run(&s)?;
        let cert = r.artifacts.certificate.expect("pair runs carry a certificate");
        println!(
            "rel tol {loose:e} vs {tight:e}: max psi_N {:.3e}, envelope ok {}",
            cert.max_psi, cert.envelope_ok
        );
    }

    // the certificate can also be built from any two trajectories on one grid
    let r = run(&spec)?;
    let legs = &r.artifacts.trajectories;
    let cert = pair_certificate(&legs[0].1, &legs[1].1, &spec.scheme(spec.n_shells)?)?;
    let k = cert.times.len() / 2;
    println!(
        "t = {:.2}: psi_N {:.3e}, a {:.3}, envelope {:.3e}",
        cert.times[k], cert.psi[k][spec.n_shells - 1], cert.a[k], cert.envelope[k]
    );
    Ok(())
}

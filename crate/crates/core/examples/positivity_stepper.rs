//! Sign behaviour of the three steppers from nonnegative initial data.
//!
//! The positivity stepper keeps every shell nonnegative by construction. The
//! explicit and Rosenbrock schemes may dip by roundoff; such dips are logged
//! as events rather than hidden.

use dyadic::integrate::{integrate, Event, IntegratorConfig, Session, StepperKind};
use dyadic::model::{CoefficientScheme, ShellState};

fn main() -> dyadic::Result<()> {
    let n = 8;
    let scheme = CoefficientScheme::dyadic(n);
    let ic = ShellState::new(0.0, vec![0.8, 0.5, 0.3, 0.1, 0.0, 0.0, 0.0, 0.0])?;

    for kind in [
        StepperKind::PositivityVoc,
        StepperKind::AdaptiveRk,
        StepperKind::StiffRosenbrock,
    ] {
        let cfg = IntegratorConfig::default().with_stepper(kind);
        let traj = integrate(&ic, &scheme, &cfg, 2.0, 0.01)?;
        let min = traj
            .states
            .iter()
            .map(|s| s.min_component())
            .fold(f64::INFINITY, f64::min);
        let floors = traj
            .events
            .iter()
            .filter(|e| matches!(e, Event::SignFloor { .. }))
            .count();
        println!(
            "{:<18} steps {:>6}  min component {min:+.3e}  undershoots {}  floors {floors}",
            kind.as_str(),
            traj.stats.accepted,
            traj.undershoots().count()
        );
    }

    // step by step: nothing negative ever appears
    let cfg = IntegratorConfig::default().with_stepper(StepperKind::PositivityVoc);
    let mut session = Session::new(ic, &scheme, cfg)?;
    let mut min = f64::INFINITY;
    for _ in 0..20_000 {
        session.step()?;
        min = min.min(session.state().min_component());
    }
    println!(
        "positivity_voc, 20000 single steps to t = {:.3}: min component {min:e}",
        session.state().t
    );
    Ok(())
}

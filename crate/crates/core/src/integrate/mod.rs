//! Time integration of the truncated system.
//!
//! Three single-step schemes share one adaptive driver:
//!
//! * [`StepperKind::AdaptiveRk`]: Dormand–Prince 5(4), the default. Explicit,
//!   so it is capped by the stiffness guard and becomes impractical once
//!   energy has piled up in shells with very large `k_n`.
//! * [`StepperKind::PositivityVoc`]: a frozen-coefficient step of the
//!   variation-of-constants formula. First order, but it maps nonnegative
//!   states to nonnegative states exactly.
//! * [`StepperKind::StiffRosenbrock`]: a linearly implicit fourth-order
//!   Rosenbrock method using the analytic tridiagonal Jacobian, for long
//!   horizons at large N after the cascade has reached the last shell.
//!
//! Sampling on a uniform grid uses dense output inside accepted steps:
//!
//! * Dormand–Prince: quintic Hermite from `X`, `dX/dt` and `d²X/dt² = J f` at
//!   both ends. A cubic interpolant is too coarse here, its error alone is
//!   ~1e-7 in energy at default tolerances.
//! * Rosenbrock: cubic Hermite. Steps are far beyond `1/ρ(J)`, so second
//!   derivatives at the ends are dominated by the stiff modes and useless.
//! * Positivity scheme: linear (a convex combination keeps samples nonnegative).
//!
//! The step sequence never depends on the sample grid.

mod stepper;
mod tableau;
mod tridiag;

use serde::{Deserialize, Serialize};

use crate::error::{Error, IntegrationError, Result};
use crate::model::{rhs_slice, second_derivative_slice, CoefficientScheme, ShellState};
use stepper::{Failure, Stepper};

/// Which single-step scheme the driver uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepperKind {
    AdaptiveRk,
    PositivityVoc,
    StiffRosenbrock,
}

impl StepperKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StepperKind::AdaptiveRk => "adaptive_rk",
            StepperKind::PositivityVoc => "positivity_voc",
            StepperKind::StiffRosenbrock => "stiff_rosenbrock",
        }
    }
}

impl std::str::FromStr for StepperKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "adaptive_rk" => Ok(StepperKind::AdaptiveRk),
            "positivity_voc" => Ok(StepperKind::PositivityVoc),
            "stiff_rosenbrock" => Ok(StepperKind::StiffRosenbrock),
            other => Err(format!(
                "unknown stepper `{other}` (expected adaptive_rk, positivity_voc or stiff_rosenbrock)"
            )),
        }
    }
}

impl std::fmt::Display for StepperKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub dt_init: f64,
    /// Steps shorter than this are a stiffness failure.
    pub dt_min: f64,
    pub dt_max: f64,
    /// Explicit schemes keep `dt <= stiffness_cap_factor / ρ(X)`.
    pub stiffness_cap_factor: f64,
    pub scheme_choice: StepperKind,
    /// Value written by the last-resort sign floor.
    pub positivity_floor: f64,
    /// Accepted plus rejected attempts before giving up.
    pub max_steps: u64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            dt_init: 1e-3,
            dt_min: 1e-12,
            dt_max: 0.1,
            stiffness_cap_factor: 0.5,
            scheme_choice: StepperKind::AdaptiveRk,
            positivity_floor: 0.0,
            max_steps: 100_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_stepper(mut self, kind: StepperKind) -> Self {
        self.scheme_choice = kind;
        self
    }

    pub fn with_tolerances(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        pos("abs_tol", self.abs_tol)?;
        pos("rel_tol", self.rel_tol)?;
        pos("dt_init", self.dt_init)?;
        pos("dt_min", self.dt_min)?;
        pos("dt_max", self.dt_max)?;
        pos("stiffness_cap_factor", self.stiffness_cap_factor)?;
        if !(self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return Err(Error::Config(format!(
                "need dt_min <= dt_init <= dt_max, got {} / {} / {}",
                self.dt_min, self.dt_init, self.dt_max
            )));
        }
        if !(self.positivity_floor.is_finite() && self.positivity_floor >= 0.0) {
            return Err(Error::Config(format!(
                "positivity_floor must be >= 0, got {}",
                self.positivity_floor
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Notable things that happened during an integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    /// A shell that was nonnegative became (slightly) negative.
    Undershoot { t: f64, shell: usize, value: f64 },
    /// A shell dipped below the rejection band and could not be fixed by
    /// halving the step; it was reset to `positivity_floor`.
    SignFloor { t: f64, shell: usize, value: f64 },
    /// The integration stopped early.
    Failure {
        t: f64,
        kind: crate::error::FailureKind,
        dt_required: f64,
    },
}

/// Step counts; `min_dt` and `max_dt` are zero until a step is accepted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    /// Rejections caused by the sign guard rather than the error estimate.
    pub sign_rejections: u64,
    pub min_dt: f64,
    pub max_dt: f64,
}

impl Default for StepStats {
    fn default() -> Self {
        Self {
            accepted: 0,
            rejected: 0,
            sign_rejections: 0,
            min_dt: 0.0,
            max_dt: 0.0,
        }
    }
}

impl StepStats {
    fn record_accept(&mut self, dt: f64) {
        if self.accepted == 0 {
            self.min_dt = dt;
        }
        self.accepted += 1;
        self.min_dt = self.min_dt.min(dt);
        self.max_dt = self.max_dt.max(dt);
    }
}

/// Time-ordered samples of one solution together with how they were produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<ShellState>,
    pub stats: StepStats,
    pub scheme: CoefficientScheme,
    pub config: IntegratorConfig,
    pub events: Vec<Event>,
}

impl Trajectory {
    /// Checks that times strictly increase and every state has the same dimension.
    pub fn new(
        states: Vec<ShellState>,
        scheme: CoefficientScheme,
        config: IntegratorConfig,
    ) -> Result<Self> {
        let traj = Self {
            states,
            stats: StepStats::default(),
            scheme,
            config,
            events: Vec::new(),
        };
        traj.validate()?;
        Ok(traj)
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.states.first() else {
            return Err(Error::Argument("trajectory has no states".into()));
        };
        let n = first.n_shells();
        self.scheme.check_dimension(n)?;
        for (i, w) in self.states.windows(2).enumerate() {
            if w[1].n_shells() != n {
                return Err(Error::Argument(format!(
                    "state {} has {} shells, expected {n}",
                    i + 1,
                    w[1].n_shells()
                )));
            }
            if !(w[1].t > w[0].t) {
                return Err(Error::Argument(format!(
                    "times not strictly increasing at index {}: {} then {}",
                    i + 1,
                    w[0].t,
                    w[1].t
                )));
            }
        }
        Ok(())
    }

    pub fn n_shells(&self) -> usize {
        self.states[0].n_shells()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn first(&self) -> &ShellState {
        &self.states[0]
    }

    pub fn last(&self) -> &ShellState {
        self.states.last().expect("non-empty trajectory")
    }

    /// Undershoot events, in order.
    pub fn undershoots(&self) -> impl Iterator<Item = (f64, usize, f64)> + '_ {
        self.events.iter().filter_map(|e| match e {
            Event::Undershoot { t, shell, value } => Some((*t, *shell, *value)),
            _ => None,
        })
    }
}

fn check_start(state: &ShellState, scheme: &CoefficientScheme, config: &IntegratorConfig) -> Result<()> {
    config.validate()?;
    scheme.check_dimension(state.n_shells())
}

fn failure_error(f: Failure, t: f64, partial: Trajectory) -> Error {
    Error::Integration(IntegrationError {
        kind: f.kind,
        t,
        dt_required: f.dt_required,
        partial: Box::new(partial),
    })
}

fn single_step(
    state: &ShellState,
    scheme: &CoefficientScheme,
    config: IntegratorConfig,
) -> Result<(ShellState, f64, f64)> {
    check_start(state, scheme, &config)?;
    let n = state.n_shells();
    let mut f0 = vec![0.0; n];
    rhs_slice(state.x(), scheme.values(), &mut f0);
    let mut stepper = Stepper::new(scheme, config, n);
    let mut events = Vec::new();
    match stepper.step(state.t, state.x(), &f0, f64::INFINITY, &mut events) {
        Ok(acc) => Ok((
            ShellState::from_parts_unchecked(state.t + acc.dt, stepper.x_new().to_vec()),
            acc.dt,
            acc.error,
        )),
        Err(f) => {
            let partial = Trajectory {
                states: vec![state.clone()],
                stats: *stepper.stats(),
                scheme: scheme.clone(),
                config,
                events,
            };
            Err(failure_error(f, state.t, partial))
        }
    }
}

/// One accepted Dormand–Prince step starting from `dt_init`.
///
/// Returns the new state, the step used and the max-norm of the local error
/// estimate (never above `abs_tol + rel_tol ‖X‖∞`).
pub fn step_adaptive(
    state: &ShellState,
    scheme: &CoefficientScheme,
    config: &IntegratorConfig,
) -> Result<(ShellState, f64, f64)> {
    single_step(state, scheme, config.with_stepper(StepperKind::AdaptiveRk))
}

/// One accepted positivity-preserving step starting from `dt_init`.
pub fn step_positivity(
    state: &ShellState,
    scheme: &CoefficientScheme,
    config: &IntegratorConfig,
) -> Result<(ShellState, f64)> {
    single_step(state, scheme, config.with_stepper(StepperKind::PositivityVoc))
        .map(|(s, dt, _)| (s, dt))
}

/// One accepted Rosenbrock step starting from `dt_init`.
pub fn step_rosenbrock(
    state: &ShellState,
    scheme: &CoefficientScheme,
    config: &IntegratorConfig,
) -> Result<(ShellState, f64, f64)> {
    single_step(state, scheme, config.with_stepper(StepperKind::StiffRosenbrock))
}

/// Fixed-size step without error control. Supported for the Dormand–Prince
/// core and the positivity update.
pub fn step_fixed(
    state: &ShellState,
    scheme: &CoefficientScheme,
    kind: StepperKind,
    dt: f64,
) -> Result<ShellState> {
    scheme.check_dimension(state.n_shells())?;
    let k = scheme.values();
    let x = match kind {
        StepperKind::AdaptiveRk => stepper::dp5_fixed(state.x(), k, dt),
        StepperKind::PositivityVoc => {
            let mut out = vec![0.0; state.n_shells()];
            stepper::voc_update(state.x(), k, dt, &mut out);
            out
        }
        StepperKind::StiffRosenbrock => {
            return Err(Error::Argument(
                "fixed-step mode is not offered for the Rosenbrock scheme".into(),
            ))
        }
    };
    ShellState::new(state.t + dt, x)
}

/// Persistent stepping session: keeps the controller state between steps.
pub struct Session<'a> {
    stepper: Stepper<'a>,
    state: ShellState,
    f: Vec<f64>,
    k: &'a [f64],
    events: Vec<Event>,
}

impl<'a> Session<'a> {
    pub fn new(
        initial: ShellState,
        scheme: &'a CoefficientScheme,
        config: IntegratorConfig,
    ) -> Result<Self> {
        check_start(&initial, scheme, &config)?;
        let n = initial.n_shells();
        let mut f = vec![0.0; n];
        rhs_slice(initial.x(), scheme.values(), &mut f);
        Ok(Self {
            stepper: Stepper::new(scheme, config, n),
            state: initial,
            f,
            k: scheme.values(),
            events: Vec::new(),
        })
    }

    /// Advances by one accepted step and returns the step size.
    pub fn step(&mut self) -> Result<f64> {
        let t = self.state.t;
        match self
            .stepper
            .step(t, self.state.x(), &self.f, f64::INFINITY, &mut self.events)
        {
            Ok(acc) => {
                self.state =
                    ShellState::from_parts_unchecked(t + acc.dt, self.stepper.x_new().to_vec());
                self.f.copy_from_slice(self.stepper.f_new());
                Ok(acc.dt)
            }
            Err(f) => Err(Error::Config(format!(
                "step failed at t = {t}: {:?}, required dt {:e}",
                f.kind, f.dt_required
            ))),
        }
    }

    pub fn state(&self) -> &ShellState {
        &self.state
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn stats(&self) -> &StepStats {
        self.stepper.stats()
    }

    pub fn coefficients(&self) -> &[f64] {
        self.k
    }
}

/// Uniform sample grid `t0, t0 + Δ, ..` ending exactly at `t_end`.
struct SampleGrid {
    t0: f64,
    every: f64,
    t_end: f64,
    next: u64,
    done: bool,
}

impl SampleGrid {
    fn new(t0: f64, every: f64, t_end: f64) -> Self {
        Self {
            t0,
            every,
            t_end,
            next: 1,
            done: false,
        }
    }

    fn peek(&self) -> Option<f64> {
        if self.done {
            return None;
        }
        let t = self.t0 + self.next as f64 * self.every;
        if t >= self.t_end - 1e-9 * self.every {
            Some(self.t_end)
        } else {
            Some(t)
        }
    }

    fn advance(&mut self) {
        if self.peek() == Some(self.t_end) {
            self.done = true;
        }
        self.next += 1;
    }
}

/// Integrates from `initial` to `t_end`, sampling every `sample_every`.
///
/// Deterministic: identical inputs give bit-identical trajectories. On a
/// stiffness failure the error carries the trajectory sampled so far.
pub fn integrate(
    initial: &ShellState,
    scheme: &CoefficientScheme,
    config: &IntegratorConfig,
    t_end: f64,
    sample_every: f64,
) -> Result<Trajectory> {
    check_start(initial, scheme, config)?;
    if !(t_end.is_finite() && t_end >= initial.t) {
        return Err(Error::Argument(format!(
            "t_end = {t_end} must be finite and not before the initial time {}",
            initial.t
        )));
    }
    if !(sample_every.is_finite() && sample_every > 0.0) {
        return Err(Error::Argument(format!(
            "sample_every must be positive, got {sample_every}"
        )));
    }

    let n = initial.n_shells();
    let k = scheme.values();
    let mut traj = Trajectory {
        states: vec![initial.clone()],
        stats: StepStats::default(),
        scheme: scheme.clone(),
        config: *config,
        events: Vec::new(),
    };
    if t_end == initial.t {
        return Ok(traj);
    }

    let linear = config.scheme_choice == StepperKind::PositivityVoc;
    let mut stepper = Stepper::new(scheme, *config, n);
    let mut grid = SampleGrid::new(initial.t, sample_every, t_end);
    let mut t = initial.t;
    let mut x = initial.x().to_vec();
    let mut f = vec![0.0; n];
    rhs_slice(&x, k, &mut f);
    let mut last_sample = x.clone();
    let mut g0 = vec![0.0; n];
    let mut g1 = vec![0.0; n];

    while t < t_end {
        let acc = match stepper.step(t, &x, &f, t_end - t, &mut traj.events) {
            Ok(acc) => acc,
            Err(fail) => {
                traj.stats = *stepper.stats();
                traj.events.push(Event::Failure {
                    t,
                    kind: fail.kind,
                    dt_required: fail.dt_required,
                });
                return Err(failure_error(fail, t, traj));
            }
        };
        let t_new = if acc.clipped { t_end } else { t + acc.dt };
        let x_new = stepper.x_new();
        let f_new = stepper.f_new();
        let mut have_g = false;
        while let Some(ts) = grid.peek() {
            if ts > t_new {
                break;
            }
            let sample = if ts == t_new {
                x_new.to_vec()
            } else {
                let theta = (ts - t) / (t_new - t);
                if linear {
                    lerp(&x, x_new, theta)
                } else {
                    if config.scheme_choice == StepperKind::StiffRosenbrock {
                        cubic_hermite(&x, &f, x_new, f_new, t_new - t, theta)
                    } else {
                    if !have_g {
                        second_derivative_slice(&x, k, &f, &mut g0);
                        second_derivative_slice(x_new, k, f_new, &mut g1);
                        have_g = true;
                    }
                    hermite([&x, &f, &g0, x_new, f_new, &g1], t_new - t, theta)
                    }
                }
            };
            for (i, (prev, cur)) in last_sample.iter().zip(&sample).enumerate() {
                if *prev >= 0.0 && *cur < 0.0 {
                    traj.events.push(Event::Undershoot {
                        t: ts,
                        shell: i + 1,
                        value: *cur,
                    });
                }
            }
            last_sample.clone_from(&sample);
            traj.states.push(ShellState::from_parts_unchecked(ts, sample));
            grid.advance();
        }
        x.copy_from_slice(x_new);
        f.copy_from_slice(f_new);
        t = t_new;
    }
    traj.stats = *stepper.stats();
    Ok(traj)
}

fn lerp(x0: &[f64], x1: &[f64], theta: f64) -> Vec<f64> {
    x0.iter()
        .zip(x1)
        .map(|(a, b)| (1.0 - theta) * a + theta * b)
        .collect()
}

/// Cubic Hermite interpolant through values and first derivatives.
fn cubic_hermite(x0: &[f64], f0: &[f64], x1: &[f64], f1: &[f64], dt: f64, theta: f64) -> Vec<f64> {
    let s = 1.0 - theta;
    let h00 = (1.0 + 2.0 * theta) * s * s;
    let h10 = theta * s * s;
    let h01 = theta * theta * (3.0 - 2.0 * theta);
    let h11 = -theta * theta * s;
    (0..x0.len())
        .map(|i| h00 * x0[i] + h10 * dt * f0[i] + h01 * x1[i] + h11 * dt * f1[i])
        .collect()
}

/// Quintic Hermite interpolant through values, first and second derivatives
/// at both ends of the step.
fn hermite(ends: [&[f64]; 6], dt: f64, theta: f64) -> Vec<f64> {
    let [x0, f0, g0, x1, f1, g1] = ends;
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let t4 = t3 * theta;
    let t5 = t4 * theta;
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let d0 = dt * (theta - 6.0 * t3 + 8.0 * t4 - 3.0 * t5);
    let d1 = dt * (-4.0 * t3 + 7.0 * t4 - 3.0 * t5);
    let s0 = dt * dt * 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let s1 = dt * dt * 0.5 * (t3 - 2.0 * t4 + t5);
    (0..x0.len())
        .map(|i| h0 * x0[i] + h1 * x1[i] + d0 * f0[i] + d1 * f1[i] + s0 * g0[i] + s1 * g1[i])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::energy;

    fn dyadic(n: usize) -> CoefficientScheme {
        CoefficientScheme::dyadic(n)
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::default().validate().is_ok());
        let mut c = IntegratorConfig::default();
        c.dt_min = 1.0;
        assert!(c.validate().is_err());
        let c = IntegratorConfig::default().with_tolerances(0.0, 1e-8);
        assert!(c.validate().is_err());
        let mut c = IntegratorConfig::default();
        c.positivity_floor = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn stepper_names_round_trip() {
        for k in [
            StepperKind::AdaptiveRk,
            StepperKind::PositivityVoc,
            StepperKind::StiffRosenbrock,
        ] {
            assert_eq!(k.as_str().parse::<StepperKind>().unwrap(), k);
        }
        assert!("rk4".parse::<StepperKind>().is_err());
    }

    #[test]
    fn zero_state_is_unchanged() {
        let scheme = dyadic(6);
        let zero = ShellState::zeros(6);
        let cfg = IntegratorConfig::default();
        let (s, dt, err) = step_adaptive(&zero, &scheme, &cfg).unwrap();
        assert_eq!(s.x(), zero.x());
        assert_eq!(dt, cfg.dt_init);
        assert_eq!(err, 0.0);
        let (s, _) = step_positivity(&zero, &scheme, &cfg).unwrap();
        assert_eq!(s.x(), zero.x());
        let (s, _, _) = step_rosenbrock(&zero, &scheme, &cfg).unwrap();
        assert_eq!(s.x(), zero.x());
    }

    #[test]
    fn first_step_feeds_second_shell() {
        let scheme = dyadic(2);
        let s0 = ShellState::unit(2, 1).unwrap();
        let cfg = IntegratorConfig {
            dt_init: 1e-4,
            dt_min: 1e-12,
            ..IntegratorConfig::default()
        };
        let (s, dt, err) = step_adaptive(&s0, &scheme, &cfg).unwrap();
        // dX2/dt(0) = k_1 X_1^2 = 2
        let slope = s.x()[1] / dt;
        assert!((slope - 2.0).abs() < 1e-3, "slope {slope}");
        assert!(err <= cfg.abs_tol + cfg.rel_tol * 1.0);
    }

    #[test]
    fn nonnegative_stays_nonnegative_for_positivity_step() {
        let scheme = dyadic(5);
        let s0 = ShellState::new(0.0, vec![0.9, 0.0, 0.3, 1e-300, 0.0]).unwrap();
        let (s, _) = step_positivity(&s0, &scheme, &IntegratorConfig::default()).unwrap();
        assert!(s.x().iter().all(|v| *v >= 0.0));
        let big = step_fixed(&s0, &scheme, StepperKind::PositivityVoc, 10.0).unwrap();
        assert!(big.x().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn dimension_checked() {
        let scheme = dyadic(3);
        let s = ShellState::zeros(4);
        assert!(step_adaptive(&s, &scheme, &IntegratorConfig::default()).is_err());
        assert!(integrate(&s, &scheme, &IntegratorConfig::default(), 1.0, 0.1).is_err());
    }

    #[test]
    fn zero_length_integration_gives_single_state() {
        let scheme = dyadic(4);
        let s = ShellState::unit(4, 1).unwrap();
        let traj = integrate(&s, &scheme, &IntegratorConfig::default(), 0.0, 0.1).unwrap();
        assert_eq!(traj.len(), 1);
        assert!(integrate(&s, &scheme, &IntegratorConfig::default(), -1.0, 0.1).is_err());
        assert!(integrate(&s, &scheme, &IntegratorConfig::default(), 1.0, 0.0).is_err());
    }

    #[test]
    fn sample_grid_is_uniform_and_ends_at_t_end() {
        let scheme = dyadic(4);
        let s = ShellState::unit(4, 1).unwrap();
        let traj = integrate(&s, &scheme, &IntegratorConfig::default(), 1.05, 0.1).unwrap();
        let times = traj.times();
        assert_eq!(times.len(), 12);
        assert_eq!(times[3], 0.30000000000000004);
        assert_eq!(*times.last().unwrap(), 1.05);
        traj.validate().unwrap();
    }

    #[test]
    fn dt_min_failure_carries_partial_trajectory() {
        let scheme = dyadic(30);
        let s = ShellState::unit(30, 1).unwrap();
        let cfg = IntegratorConfig {
            dt_min: 1e-4,
            ..IntegratorConfig::default()
        };
        let err = integrate(&s, &scheme, &cfg, 2.0, 0.01).unwrap_err();
        match err {
            Error::Integration(e) => {
                assert_eq!(e.kind, crate::error::FailureKind::Stiffness);
                assert!(e.t > 0.1 && e.t < 2.0);
                assert!(e.partial.len() > 1);
                assert!(matches!(e.partial.events.last(), Some(Event::Failure { .. })));
                e.partial.validate().unwrap();
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn step_budget_failure() {
        let scheme = dyadic(8);
        let s = ShellState::unit(8, 1).unwrap();
        let cfg = IntegratorConfig {
            max_steps: 10,
            ..IntegratorConfig::default()
        };
        match integrate(&s, &scheme, &cfg, 2.0, 0.01) {
            Err(Error::Integration(e)) => {
                assert_eq!(e.kind, crate::error::FailureKind::StepBudget)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rosenbrock_conserves_truncated_energy_at_moderate_n() {
        let scheme = dyadic(10);
        let s = ShellState::unit(10, 1).unwrap();
        let cfg = IntegratorConfig::default()
            .with_stepper(StepperKind::StiffRosenbrock)
            .with_tolerances(1e-12, 1e-10);
        let traj = integrate(&s, &scheme, &cfg, 3.0, 0.05).unwrap();
        let drift = (energy(traj.last()) - 1.0).abs();
        assert!(drift < 1e-8, "drift {drift}");
    }
}

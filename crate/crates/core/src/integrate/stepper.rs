use super::tableau::{dp5, ros4};
use super::tridiag::TridiagLu;
use super::{Event, IntegratorConfig, StepStats, StepperKind};
use crate::error::FailureKind;
use crate::model::{jacobian_bound, max_abs, rhs_slice, CoefficientScheme};

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const PI_BETA: f64 = 0.04;

/// Result of one accepted step. The new state and its derivative are read
/// from [`Stepper::x_new`] and [`Stepper::f_new`].
#[derive(Debug, Clone, Copy)]
pub(crate) struct Accepted {
    pub dt: f64,
    /// Max-norm of the local error estimate.
    pub error: f64,
    /// True when the step was shortened to land on the requested limit.
    pub clipped: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Failure {
    pub kind: FailureKind,
    pub dt_required: f64,
}

/// Adaptive single-step engine shared by all three schemes.
///
/// Step size control is a PI controller (safety 0.9, growth clamped to
/// [0.2, 5]) on the ratio `‖err‖∞ / (abs_tol + rel_tol ‖X‖∞)`. The explicit
/// schemes are additionally capped by `stiffness_cap_factor / ρ(X)`, where
/// `ρ` is the Gershgorin bound on the Jacobian of the right-hand side.
pub(crate) struct Stepper<'a> {
    k: &'a [f64],
    config: IntegratorConfig,
    n: usize,
    dt_next: f64,
    ratio_prev: f64,
    stats: StepStats,
    stages: Vec<Vec<f64>>,
    arg: Vec<f64>,
    err: Vec<f64>,
    x_new: Vec<f64>,
    f_new: Vec<f64>,
    lu: TridiagLu,
}

impl<'a> Stepper<'a> {
    pub fn new(scheme: &'a CoefficientScheme, config: IntegratorConfig, n: usize) -> Self {
        let n_stages = match config.scheme_choice {
            StepperKind::AdaptiveRk => 7,
            StepperKind::StiffRosenbrock => 5,
            StepperKind::PositivityVoc => 2,
        };
        Self {
            k: &scheme.values()[..=n],
            n,
            dt_next: config.dt_init,
            ratio_prev: 1e-4,
            stats: StepStats::default(),
            stages: vec![vec![0.0; n]; n_stages],
            arg: vec![0.0; n],
            err: vec![0.0; n],
            x_new: vec![0.0; n],
            f_new: vec![0.0; n],
            lu: TridiagLu::with_size(n),
            config,
        }
    }

    pub fn stats(&self) -> &StepStats {
        &self.stats
    }

    pub fn x_new(&self) -> &[f64] {
        &self.x_new
    }

    pub fn f_new(&self) -> &[f64] {
        &self.f_new
    }

    fn error_exponent(&self) -> f64 {
        let q = match self.config.scheme_choice {
            StepperKind::AdaptiveRk => dp5::ORDER,
            StepperKind::StiffRosenbrock => ros4::ORDER,
            StepperKind::PositivityVoc => 2,
        } as f64;
        1.0 / q - 0.75 * PI_BETA
    }

    fn capped(&self) -> bool {
        self.config.scheme_choice != StepperKind::StiffRosenbrock
    }

    /// Takes one accepted step from `(t, x)` with derivative `f0 = rhs(x)`,
    /// never longer than `dt_limit`.
    pub fn step(
        &mut self,
        t: f64,
        x: &[f64],
        f0: &[f64],
        dt_limit: f64,
        events: &mut Vec<Event>,
    ) -> Result<Accepted, Failure> {
        let cfg = self.config;
        if self.stats.accepted + self.stats.rejected >= cfg.max_steps {
            return Err(Failure {
                kind: FailureKind::StepBudget,
                dt_required: self.dt_next,
            });
        }
        let mut dt = self.dt_next.min(cfg.dt_max);
        if self.capped() {
            let rho = jacobian_bound(x, self.k);
            if rho > 0.0 {
                dt = dt.min(cfg.stiffness_cap_factor / rho);
            }
        }
        let dt_floor = cfg.dt_min.min(dt_limit);
        if dt < dt_floor {
            return Err(Failure {
                kind: FailureKind::Stiffness,
                dt_required: dt,
            });
        }
        let intended = dt;
        let mut clipped = false;
        if dt >= dt_limit {
            dt = dt_limit;
            clipped = true;
        }
        let x_scale = max_abs(x);
        let exponent = self.error_exponent();
        let mut rejected_here = false;

        loop {
            let error = self.attempt(x, f0, dt);
            let tol = cfg.abs_tol + cfg.rel_tol * x_scale.max(max_abs(&self.x_new));
            let ratio = error / tol;
            if !ratio.is_finite() || ratio > 1.0 {
                self.stats.rejected += 1;
                rejected_here = true;
                let fac = if ratio.is_finite() {
                    (SAFETY * ratio.powf(-exponent)).clamp(FAC_MIN, 1.0)
                } else {
                    FAC_MIN
                };
                dt *= fac;
                clipped = false;
                if dt < dt_floor {
                    return Err(Failure {
                        kind: FailureKind::Stiffness,
                        dt_required: dt,
                    });
                }
                continue;
            }

            if cfg.scheme_choice != StepperKind::PositivityVoc {
                let band = -10.0 * cfg.abs_tol;
                let dips = x
                    .iter()
                    .zip(&self.x_new)
                    .any(|(old, new)| *old >= 0.0 && *new < band);
                if dips {
                    if 0.5 * dt >= dt_floor {
                        self.stats.rejected += 1;
                        self.stats.sign_rejections += 1;
                        rejected_here = true;
                        dt *= 0.5;
                        clipped = false;
                        continue;
                    }
                    self.apply_floor(t + dt, x, events);
                }
            }

            for (i, (old, new)) in x.iter().zip(&self.x_new).enumerate() {
                if *old >= 0.0 && *new < 0.0 {
                    events.push(Event::Undershoot {
                        t: t + dt,
                        shell: i + 1,
                        value: *new,
                    });
                }
            }

            self.stats.record_accept(dt);
            let mut fac = SAFETY
                * ratio.max(1e-10).powf(-exponent)
                * self.ratio_prev.powf(PI_BETA);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if rejected_here {
                fac = fac.min(1.0);
            }
            self.ratio_prev = ratio.max(1e-4);
            self.dt_next = if clipped {
                (fac * dt).max(intended.min(cfg.dt_max))
            } else {
                fac * dt
            };
            return Ok(Accepted { dt, error, clipped });
        }
    }

    fn apply_floor(&mut self, t: f64, x: &[f64], events: &mut Vec<Event>) {
        let band = -10.0 * self.config.abs_tol;
        let floor = self.config.positivity_floor;
        for i in 0..self.n {
            if x[i] >= 0.0 && self.x_new[i] < band {
                events.push(Event::SignFloor {
                    t,
                    shell: i + 1,
                    value: self.x_new[i],
                });
                self.x_new[i] = floor;
            }
        }
        rhs_slice(&self.x_new, self.k, &mut self.f_new);
    }

    /// Computes a candidate step into `x_new`/`f_new` and returns the
    /// max-norm of the error estimate.
    fn attempt(&mut self, x: &[f64], f0: &[f64], dt: f64) -> f64 {
        match self.config.scheme_choice {
            StepperKind::AdaptiveRk => self.attempt_dp5(x, f0, dt),
            StepperKind::StiffRosenbrock => self.attempt_rosenbrock(x, f0, dt),
            StepperKind::PositivityVoc => self.attempt_voc(x, dt),
        }
    }

    fn attempt_dp5(&mut self, x: &[f64], f0: &[f64], dt: f64) -> f64 {
        let n = self.n;
        self.stages[0].copy_from_slice(f0);
        for s in 1..7 {
            let row = &dp5::A[s];
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in row.iter().enumerate().take(s) {
                    acc += a * self.stages[j][i];
                }
                self.arg[i] = x[i] + dt * acc;
            }
            if s == 6 {
                // last row of A equals B: the argument is the new state
                self.x_new.copy_from_slice(&self.arg);
            }
            let (_, rest) = self.stages.split_at_mut(s);
            rhs_slice(&self.arg, self.k, &mut rest[0]);
        }
        self.f_new.copy_from_slice(&self.stages[6]);
        let mut error = 0.0f64;
        for i in 0..n {
            let mut e = 0.0;
            for (s, c) in dp5::E.iter().enumerate() {
                e += c * self.stages[s][i];
            }
            self.err[i] = dt * e;
            error = error.max(self.err[i].abs());
        }
        if self.x_new.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        error
    }

    fn attempt_rosenbrock(&mut self, x: &[f64], f0: &[f64], dt: f64) -> f64 {
        use ros4::*;
        let n = self.n;
        let k = self.k;
        {
            // M = I/(γ dt) - J, J tridiagonal
            let (dl, d, du) = self.lu.bands_mut();
            let shift = 1.0 / (GAMMA * dt);
            for i in 0..n {
                let next = if i + 1 < n { x[i + 1] } else { 0.0 };
                d[i] = shift + k[i + 1] * next;
                if i + 1 < n {
                    // row i+1, column i: -(2 k_{i+1} X_{i+1}) in 1-based shells
                    dl[i] = -2.0 * k[i + 1] * x[i];
                    // row i, column i+1: +k_{i+1} X_{i+1}
                    du[i] = k[i + 1] * x[i];
                }
            }
        }
        if self.lu.factor().is_err() {
            return f64::INFINITY;
        }
        let inv_dt = 1.0 / dt;
        let [g1, g2, g3, g4, work] = &mut self.stages[..] else {
            unreachable!("rosenbrock uses five buffers")
        };

        g1.copy_from_slice(f0);
        self.lu.solve(g1);

        for i in 0..n {
            self.arg[i] = x[i] + A21 * g1[i];
        }
        rhs_slice(&self.arg, k, g2);
        for i in 0..n {
            g2[i] += C21 * g1[i] * inv_dt;
        }
        self.lu.solve(g2);

        for i in 0..n {
            self.arg[i] = x[i] + A31 * g1[i] + A32 * g2[i];
        }
        rhs_slice(&self.arg, k, work);
        for i in 0..n {
            g3[i] = work[i] + (C31 * g1[i] + C32 * g2[i]) * inv_dt;
        }
        self.lu.solve(g3);
        for i in 0..n {
            g4[i] = work[i] + (C41 * g1[i] + C42 * g2[i] + C43 * g3[i]) * inv_dt;
        }
        self.lu.solve(g4);

        let mut error = 0.0f64;
        for i in 0..n {
            self.x_new[i] = x[i] + B[0] * g1[i] + B[1] * g2[i] + B[2] * g3[i] + B[3] * g4[i];
            self.err[i] = E[0] * g1[i] + E[1] * g2[i] + E[2] * g3[i] + E[3] * g4[i];
            error = error.max(self.err[i].abs());
        }
        if self.x_new.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        rhs_slice(&self.x_new, k, &mut self.f_new);
        error
    }

    /// Step doubling: the state advances with two half steps, the difference
    /// to one full step is the error estimate. Every update is a sum of
    /// nonnegative terms when its inputs are nonnegative.
    fn attempt_voc(&mut self, x: &[f64], dt: f64) -> f64 {
        let [full, half] = &mut self.stages[..] else {
            unreachable!("positivity stepper uses two buffers")
        };
        voc_update(x, self.k, dt, full);
        voc_update(x, self.k, 0.5 * dt, half);
        voc_update(half, self.k, 0.5 * dt, &mut self.x_new);
        let mut error = 0.0f64;
        for i in 0..self.n {
            self.err[i] = self.x_new[i] - full[i];
            error = error.max(self.err[i].abs());
        }
        if self.x_new.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        rhs_slice(&self.x_new, self.k, &mut self.f_new);
        error
    }
}

/// One frozen-coefficient step of the variation-of-constants formula:
///
/// ```text
/// X_j(t+dt) = e^{â_j dt} X_j(t) + dt e^{â_j dt/2} k_{j-1} X_{j-1}(t)^2,   â_j = -k_j X_{j+1}(t).
/// ```
pub(crate) fn voc_update(x: &[f64], k: &[f64], dt: f64, out: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let prev = if i == 0 { 0.0 } else { x[i - 1] };
        let next = if i + 1 < n { x[i + 1] } else { 0.0 };
        let rate = -k[i + 1] * next;
        out[i] = (rate * dt).exp() * x[i] + dt * (0.5 * rate * dt).exp() * (k[i] * prev * prev);
    }
}

/// Single fixed-size DP5 step (no error control), used for convergence-order checks.
pub(crate) fn dp5_fixed(x: &[f64], k: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    let mut stages = vec![vec![0.0; n]; 7];
    let mut arg = vec![0.0; n];
    rhs_slice(x, k, &mut stages[0]);
    for s in 1..7 {
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..s {
                acc += dp5::A[s][j] * stages[j][i];
            }
            arg[i] = x[i] + dt * acc;
        }
        if s == 6 {
            return arg;
        }
        let (_, rest) = stages.split_at_mut(s);
        rhs_slice(&arg, k, &mut rest[0]);
    }
    unreachable!()
}

//! Coefficients, truncated state, the right-hand side of the dyadic system and
//! the pointwise functionals of a single state.
//!
//! The truncated system with N shells evolves
//!
//! ```text
//! dX_n/dt = k_{n-1} X_{n-1}^2 - k_n X_n X_{n+1},   n = 1..N,
//! ```
//!
//! with the boundary conventions `k_0 = 0`, `X_0 = 0` and `X_{N+1} = 0`. The
//! last convention is the Galerkin truncation: it makes `dX_N/dt =
//! k_{N-1} X_{N-1}^2` and conserves `E_N = Σ X_j²` exactly.
//!
//! Slices handed to the `*_slice` helpers are 0-based (`x[i]` is `X_{i+1}`),
//! while every public operation taking a shell index uses the 1-based index of
//! the model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

/// Relative slack allowed when checking `k_n <= C 2^n`.
const BOUND_SLACK: f64 = 1e-12;

/// The coefficient sequence `k_n = scale * base^n`, `k_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemeParams", into = "SchemeParams")]
pub struct CoefficientScheme {
    base: f64,
    scale: f64,
    bound: f64,
    n_max: usize,
    values: Vec<f64>,
}

/// Serialized form of a [`CoefficientScheme`]; the values are re-derived on load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub base: f64,
    pub scale: f64,
    pub bound: f64,
    pub n_max: usize,
}

impl CoefficientScheme {
    /// Builds `k_n = scale * base^n` for `1 <= n <= n_max` and checks the growth
    /// constraint `0 <= k_n <= bound * 2^n` for every supported shell.
    pub fn new(base: f64, scale: f64, bound: f64, n_max: usize) -> Result<Self> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(base) {
            return Err(Error::Config(format!("base must be positive, got {base}")));
        }
        if !positive(scale) {
            return Err(Error::Config(format!("scale must be positive, got {scale}")));
        }
        if !positive(bound) {
            return Err(Error::Config(format!(
                "bound constant C must be positive, got {bound}"
            )));
        }
        if n_max == 0 {
            return Err(Error::Config("n_max must be at least 1".into()));
        }
        let mut values = Vec::with_capacity(n_max + 1);
        values.push(0.0);
        for n in 1..=n_max {
            let k = scale * base.powi(n as i32);
            let limit = bound * 2f64.powi(n as i32);
            if !k.is_finite() || k > limit * (1.0 + BOUND_SLACK) {
                return Err(Error::Config(format!(
                    "k_{n} = {k:e} exceeds C*2^{n} = {limit:e} (base {base}, scale {scale}, C {bound})"
                )));
            }
            values.push(k);
        }
        Ok(Self {
            base,
            scale,
            bound,
            n_max,
            values,
        })
    }

    /// The canonical choice `k_n = 2^n` with `C = 1`.
    pub fn dyadic(n_max: usize) -> Self {
        Self::new(2.0, 1.0, 1.0, n_max).expect("k_n = 2^n satisfies its own bound")
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// The constant `C` in `k_n <= C 2^n`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `k_n` for `0 <= n <= n_max`.
    pub fn k(&self, n: usize) -> f64 {
        self.values[n]
    }

    /// `[k_0, k_1, .., k_{n_max}]`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same parameters, supporting shells up to `n_max`.
    pub fn with_n_max(&self, n_max: usize) -> Result<Self> {
        Self::new(self.base, self.scale, self.bound, n_max)
    }

    pub fn params(&self) -> SchemeParams {
        SchemeParams {
            base: self.base,
            scale: self.scale,
            bound: self.bound,
            n_max: self.n_max,
        }
    }

    pub(crate) fn check_dimension(&self, n_shells: usize) -> Result<()> {
        if n_shells > self.n_max {
            return Err(Error::Config(format!(
                "state has {n_shells} shells but the coefficient scheme supports only {}",
                self.n_max
            )));
        }
        Ok(())
    }
}

impl TryFrom<SchemeParams> for CoefficientScheme {
    type Error = Error;

    fn try_from(p: SchemeParams) -> Result<Self> {
        Self::new(p.base, p.scale, p.bound, p.n_max)
    }
}

impl From<CoefficientScheme> for SchemeParams {
    fn from(s: CoefficientScheme) -> Self {
        s.params()
    }
}

/// Truncated shell vector `(X_1, .., X_N)` at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellState {
    pub t: f64,
    x: Vec<f64>,
}

impl ShellState {
    pub fn new(t: f64, x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Argument("a state needs at least one shell".into()));
        }
        if !t.is_finite() {
            return Err(Error::Argument(format!("non-finite time {t}")));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!(
                "non-finite value {} in shell {}",
                x[i],
                i + 1
            )));
        }
        Ok(Self { t, x })
    }

    pub fn zeros(n_shells: usize) -> Self {
        assert!(n_shells > 0, "a state needs at least one shell");
        Self {
            t: 0.0,
            x: vec![0.0; n_shells],
        }
    }

    /// `e_j`: one in shell `j` (1-based), zero elsewhere.
    pub fn unit(n_shells: usize, j: usize) -> Result<Self> {
        if j == 0 || j > n_shells {
            return Err(Error::Argument(format!(
                "unit shell {j} outside 1..={n_shells}"
            )));
        }
        let mut s = Self::zeros(n_shells);
        s.x[j - 1] = 1.0;
        Ok(s)
    }

    pub(crate) fn from_parts_unchecked(t: f64, x: Vec<f64>) -> Self {
        debug_assert!(!x.is_empty());
        Self { t, x }
    }

    pub fn n_shells(&self) -> usize {
        self.x.len()
    }

    /// Shell values, 0-based.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn into_x(self) -> Vec<f64> {
        self.x
    }

    /// `X_n` with the boundary conventions: index 0 and N+1 read as zero.
    pub fn get(&self, n: usize) -> f64 {
        if n == 0 || n > self.x.len() {
            0.0
        } else {
            self.x[n - 1]
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            t: self.t,
            x: self.x.iter().map(|v| c * v).collect(),
        }
    }

    /// Same state padded with zero shells up to `n_shells`.
    pub fn zero_padded(&self, n_shells: usize) -> Self {
        let mut x = self.x.clone();
        if n_shells > x.len() {
            x.resize(n_shells, 0.0);
        }
        Self { t: self.t, x }
    }

    pub fn min_component(&self) -> f64 {
        self.x.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.x)
    }
}

/// Pointwise functionals of one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub energy: f64,
    /// `partial_energies[n-1] = E_n`.
    pub partial_energies: Vec<f64>,
    pub h1_sq: f64,
    /// Finite-N value of `a`; a lower bound for the supremum of the full system.
    pub a_value: f64,
}

#[inline]
pub(crate) fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Right-hand side on a raw slice. `k` must hold at least `x.len() + 1` values.
#[inline]
pub(crate) fn rhs_slice(x: &[f64], k: &[f64], out: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let prev = if i == 0 { 0.0 } else { x[i - 1] };
        let next = if i + 1 < n { x[i + 1] } else { 0.0 };
        out[i] = k[i] * prev * prev - k[i + 1] * x[i] * next;
    }
}

/// `d²X/dt² = J(X) f` given `f = rhs(X)`; the Jacobian is tridiagonal.
#[inline]
pub(crate) fn second_derivative_slice(x: &[f64], k: &[f64], f: &[f64], out: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let (xp, fp) = if i == 0 { (0.0, 0.0) } else { (x[i - 1], f[i - 1]) };
        let (xn, fn_) = if i + 1 < n { (x[i + 1], f[i + 1]) } else { (0.0, 0.0) };
        out[i] = 2.0 * k[i] * xp * fp - k[i + 1] * (xn * f[i] + x[i] * fn_);
    }
}

/// Gershgorin bound on the spectral radius of the Jacobian of the right-hand side.
///
/// Row n of the Jacobian holds `2 k_{n-1} X_{n-1}`, `-k_n X_{n+1}` and `-k_n X_n`.
#[inline]
pub(crate) fn jacobian_bound(x: &[f64], k: &[f64]) -> f64 {
    let n = x.len();
    let mut rho = 0.0f64;
    for i in 0..n {
        let prev = if i == 0 { 0.0 } else { x[i - 1].abs() };
        let next = if i + 1 < n { x[i + 1].abs() } else { 0.0 };
        let row = 2.0 * k[i] * prev + k[i + 1] * (next + x[i].abs());
        rho = rho.max(row);
    }
    rho
}

/// `dX/dt` of the truncated system.
pub fn rhs(state: &ShellState, scheme: &CoefficientScheme) -> Result<Vec<f64>> {
    scheme.check_dimension(state.n_shells())?;
    let mut out = vec![0.0; state.n_shells()];
    rhs_slice(state.x(), scheme.values(), &mut out);
    Ok(out)
}

/// `E = Σ X_j²`.
pub fn energy(state: &ShellState) -> f64 {
    energy_slice(state.x())
}

pub(crate) fn energy_slice(x: &[f64]) -> f64 {
    let mut acc = NeumaierSum::new();
    for v in x {
        acc.add(v * v);
    }
    acc.value()
}

/// `E_n = Σ_{j<=n} X_j²` for `1 <= n <= N`.
pub fn partial_energy(state: &ShellState, n: usize) -> Result<f64> {
    if n == 0 || n > state.n_shells() {
        return Err(Error::Argument(format!(
            "partial energy index {n} outside 1..={}",
            state.n_shells()
        )));
    }
    Ok(energy_slice(&state.x()[..n]))
}

/// All partial energies `[E_1, .., E_N]`.
pub fn partial_energies(state: &ShellState) -> Vec<f64> {
    let mut acc = NeumaierSum::new();
    state
        .x()
        .iter()
        .map(|v| {
            acc.add(v * v);
            acc.value()
        })
        .collect()
}

/// `Σ k_n² X_n²`.
pub fn h1_norm_sq(state: &ShellState, scheme: &CoefficientScheme) -> Result<f64> {
    scheme.check_dimension(state.n_shells())?;
    Ok(h1_sq_slice(state.x(), scheme.values()))
}

pub(crate) fn h1_sq_slice(x: &[f64], k: &[f64]) -> f64 {
    let mut acc = NeumaierSum::new();
    for (i, v) in x.iter().enumerate() {
        let w = k[i + 1] * v;
        acc.add(w * w);
    }
    acc.value()
}

/// `max_{1<=n<=N} (-k_n X_{n+1})` with `X_{N+1} = 0`, hence never negative.
pub fn class_k_a(state: &ShellState, scheme: &CoefficientScheme) -> Result<f64> {
    scheme.check_dimension(state.n_shells())?;
    Ok(class_k_a_slice(state.x(), scheme.values()))
}

pub(crate) fn class_k_a_slice(x: &[f64], k: &[f64]) -> f64 {
    // the n = N term is -k_N * 0
    let mut a = 0.0f64;
    for n in 1..x.len() {
        a = a.max(-k[n] * x[n]);
    }
    a
}

/// Floating-point residual of `Σ_{j<=n} 2 X_j rhs_j = -2 k_n X_n² X_{n+1}`.
pub fn flux_identity_residual(
    state: &ShellState,
    scheme: &CoefficientScheme,
    n: usize,
) -> Result<f64> {
    let residuals = flux_identity_residuals(state, scheme)?;
    if n == 0 || n > residuals.len() {
        return Err(Error::Argument(format!(
            "flux index {n} outside 1..={}",
            residuals.len()
        )));
    }
    Ok(residuals[n - 1])
}

/// Residuals of the flux identity for every `n = 1..N`.
pub fn flux_identity_residuals(
    state: &ShellState,
    scheme: &CoefficientScheme,
) -> Result<Vec<f64>> {
    let f = rhs(state, scheme)?;
    let k = scheme.values();
    let mut acc = NeumaierSum::new();
    let residuals = (1..=state.n_shells())
        .map(|n| {
            acc.add(2.0 * state.get(n) * f[n - 1]);
            let xn = state.get(n);
            let flux = -2.0 * k[n] * xn * xn * state.get(n + 1);
            acc.value() - flux
        })
        .collect();
    Ok(residuals)
}

/// `Σ_{j<=n} |2 X_j rhs_j|` for every n, the natural scale of the flux residual.
pub fn flux_magnitudes(state: &ShellState, scheme: &CoefficientScheme) -> Result<Vec<f64>> {
    let f = rhs(state, scheme)?;
    let mut acc = NeumaierSum::new();
    Ok(state
        .x()
        .iter()
        .zip(&f)
        .map(|(x, r)| {
            acc.add((2.0 * x * r).abs());
            acc.value()
        })
        .collect())
}

pub fn norm_report(state: &ShellState, scheme: &CoefficientScheme) -> Result<NormReport> {
    scheme.check_dimension(state.n_shells())?;
    let partial_energies = partial_energies(state);
    Ok(NormReport {
        energy: *partial_energies.last().expect("non-empty state"),
        partial_energies,
        h1_sq: h1_sq_slice(state.x(), scheme.values()),
        a_value: class_k_a_slice(state.x(), scheme.values()),
    })
}

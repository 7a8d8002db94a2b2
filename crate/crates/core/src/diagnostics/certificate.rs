//! The uniqueness certificate for two trajectories from the same initial data.
//!
//! With `Z = X¹ - X²` and `Y = X¹ + X²`, the weighted discrepancy
//! `ψ_n = Σ_{i<=n} Z_i² / 2^i` obeys a differential inequality whose
//! Gronwall form is
//!
//! ```text
//! ψ_N(t) <= G(t) = ∫_0^t exp(∫_s^t 2 a(r) dr) K (X¹_N(s)² + X²_N(s)²) ds,
//! ```
//!
//! where `a` is the larger of the two class-K functions. The constant comes
//! from bounding the boundary term `k_N/2^N · Y_N Z_N Z_{N+1}`: with `k_n <=
//! C 2^n` and `|X_n| <= sqrt(E(0))` for energy-monotone solutions, `|Y_N| <=
//! 2 sqrt(E(0))`, hence `K = 2 C sqrt(E(0))`.
//!
//! Both integrals use the trapezoidal rule on the shared sample grid and the
//! exponential factor is accumulated step by step:
//!
//! ```text
//! G_{k+1} = e^{ΔA} G_k + Δt/2 (e^{ΔA} K S_k + K S_{k+1}),   ΔA = Δt (a_k + a_{k+1}).
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::model::{class_k_a_slice, energy, CoefficientScheme};

/// Slack of the envelope comparison: `ψ_N <= G + SLACK (1 + G)`.
pub const ENVELOPE_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCertificate {
    pub n_shells: usize,
    pub times: Vec<f64>,
    pub z: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    /// `psi[k][n-1] = ψ_n(t_k)`.
    pub psi: Vec<Vec<f64>>,
    pub a: Vec<f64>,
    pub envelope: Vec<f64>,
    /// `ψ_N(t) - G(t)`.
    pub violation: Vec<f64>,
    /// The envelope constant `K`.
    pub k_const: f64,
    pub max_psi: f64,
    pub max_violation: f64,
    /// `ψ_N <= G + 1e-8 (1 + G)` at every sample.
    pub envelope_ok: bool,
    /// First sample time where the envelope comparison fails.
    pub envelope_witness: Option<f64>,
}

impl PairCertificate {
    pub fn psi_n(&self) -> impl Iterator<Item = f64> + '_ {
        self.psi.iter().map(|p| *p.last().expect("N >= 1"))
    }
}

/// Certificate with the default constant `K = 2 C sqrt(E(0))`, `E(0)` the
/// larger of the two initial energies.
pub fn pair_certificate(
    traj1: &Trajectory,
    traj2: &Trajectory,
    scheme: &CoefficientScheme,
) -> Result<PairCertificate> {
    let e0 = energy(traj1.first()).max(energy(traj2.first()));
    let k = 2.0 * scheme.bound() * e0.sqrt();
    pair_certificate_with_k(traj1, traj2, scheme, k)
}

pub fn pair_certificate_with_k(
    traj1: &Trajectory,
    traj2: &Trajectory,
    scheme: &CoefficientScheme,
    k_const: f64,
) -> Result<PairCertificate> {
    traj1.validate()?;
    traj2.validate()?;
    if !(k_const.is_finite() && k_const >= 0.0) {
        return Err(Error::Argument(format!("envelope constant K = {k_const}")));
    }
    let n = traj1.n_shells();
    if traj2.n_shells() != n {
        return Err(Error::Argument(format!(
            "dimension mismatch: {} vs {} shells",
            n,
            traj2.n_shells()
        )));
    }
    if traj1.scheme != *scheme || traj2.scheme != *scheme {
        return Err(Error::Argument(
            "both trajectories must use the given coefficient scheme".into(),
        ));
    }
    if traj1.len() != traj2.len()
        || traj1
            .states
            .iter()
            .zip(&traj2.states)
            .any(|(a, b)| a.t != b.t)
    {
        return Err(Error::Argument("sample grids differ".into()));
    }
    scheme.check_dimension(n)?;
    let kv = scheme.values();

    let len = traj1.len();
    let mut cert = PairCertificate {
        n_shells: n,
        times: traj1.times(),
        z: Vec::with_capacity(len),
        y: Vec::with_capacity(len),
        psi: Vec::with_capacity(len),
        a: Vec::with_capacity(len),
        envelope: Vec::with_capacity(len),
        violation: Vec::with_capacity(len),
        k_const,
        max_psi: 0.0,
        max_violation: f64::NEG_INFINITY,
        envelope_ok: true,
        envelope_witness: None,
    };

    let mut g = 0.0f64;
    let mut prev: Option<(f64, f64, f64)> = None; // (t, a, K S)
    for (s1, s2) in traj1.states.iter().zip(&traj2.states) {
        let (x1, x2) = (s1.x(), s2.x());
        let z: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a + b).collect();
        let mut psi = Vec::with_capacity(n);
        let mut acc = 0.0f64;
        let mut weight = 1.0f64;
        for zi in &z {
            weight *= 0.5;
            acc += zi * zi * weight;
            psi.push(acc);
        }
        let a = class_k_a_slice(x1, kv).max(class_k_a_slice(x2, kv));
        let source = k_const * (x1[n - 1] * x1[n - 1] + x2[n - 1] * x2[n - 1]);
        if let Some((t_prev, a_prev, source_prev)) = prev {
            let dt = s1.t - t_prev;
            let growth = (dt * (a_prev + a)).exp();
            g = growth * g + 0.5 * dt * (growth * source_prev + source);
        }
        prev = Some((s1.t, a, source));

        let psi_n = acc;
        let violation = psi_n - g;
        cert.max_psi = cert.max_psi.max(psi_n);
        cert.max_violation = cert.max_violation.max(violation);
        if cert.envelope_ok && psi_n > g + ENVELOPE_SLACK * (1.0 + g) {
            cert.envelope_ok = false;
            cert.envelope_witness = Some(s1.t);
        }
        cert.z.push(z);
        cert.y.push(y);
        cert.psi.push(psi);
        cert.a.push(a);
        cert.envelope.push(g);
        cert.violation.push(violation);
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::IntegratorConfig;
    use crate::model::ShellState;

    fn traj(rows: &[(f64, Vec<f64>)]) -> Trajectory {
        let n = rows[0].1.len();
        Trajectory::new(
            rows.iter()
                .map(|(t, x)| ShellState::new(*t, x.clone()).unwrap())
                .collect(),
            CoefficientScheme::dyadic(n),
            IntegratorConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn identical_inputs_give_zero_psi() {
        let a = traj(&[(0.0, vec![1.0, 0.0, 0.0]), (0.5, vec![0.8, 0.5, 0.3])]);
        let c = pair_certificate(&a, &a, &a.scheme).unwrap();
        assert!(c.psi.iter().flatten().all(|v| *v == 0.0));
        assert!(c.envelope.iter().all(|g| *g >= 0.0));
        assert!(c.max_violation <= 0.0);
        assert!(c.envelope_ok);
    }

    #[test]
    fn unit_discrepancy_in_first_shell() {
        let a = traj(&[(0.0, vec![1.0, 0.0, 0.0, 0.0])]);
        let b = traj(&[(0.0, vec![0.0, 0.0, 0.0, 0.0])]);
        let c = pair_certificate(&a, &b, &a.scheme).unwrap();
        assert_eq!(c.psi[0], vec![0.5; 4]);
    }

    #[test]
    fn envelope_matches_closed_form_for_constant_data() {
        // a ≡ 2 and S ≡ 2 X_N² constant: G(t) = K S (e^{4t} - 1)/4 up to
        // the trapezoidal error
        let rows: Vec<(f64, Vec<f64>)> = (0..=1000)
            .map(|i| (i as f64 * 1e-3, vec![0.6, -1.0, 0.5]))
            .collect();
        let a = traj(&rows);
        let c = pair_certificate_with_k(&a, &a, &a.scheme, 1.0).unwrap();
        assert!(c.a.iter().all(|v| *v == 2.0));
        let exact = 0.5 * ((4.0f64).exp() - 1.0) / 4.0;
        let g = *c.envelope.last().unwrap();
        assert!((g - exact).abs() < 1e-5 * exact, "{g} vs {exact}");
    }

    #[test]
    fn psi_monotone_in_n_and_scales_quadratically() {
        let a = traj(&[(0.0, vec![1.0, 0.2, -0.3]), (1.0, vec![0.5, 0.7, 0.1])]);
        let b = traj(&[(0.0, vec![0.9, 0.1, 0.3]), (1.0, vec![0.4, 0.9, -0.2])]);
        let c = pair_certificate(&a, &b, &a.scheme).unwrap();
        for p in &c.psi {
            assert!(p.windows(2).all(|w| w[0] <= w[1]));
        }
        let scale = |t: &Trajectory| {
            Trajectory::new(
                t.states.iter().map(|s| s.scaled(3.0)).collect(),
                t.scheme.clone(),
                t.config,
            )
            .unwrap()
        };
        let c3 = pair_certificate(&scale(&a), &scale(&b), &a.scheme).unwrap();
        for (p, p3) in c.psi.iter().flatten().zip(c3.psi.iter().flatten()) {
            assert!((p3 - 9.0 * p).abs() <= 1e-14 * (1.0 + p3.abs()));
        }
        for (x, x3) in c.a.iter().zip(&c3.a) {
            assert!((x3 - 3.0 * x).abs() <= 1e-14 * (1.0 + x3.abs()));
        }
    }

    #[test]
    fn grid_mismatch_is_an_argument_error() {
        let a = traj(&[(0.0, vec![1.0]), (1.0, vec![1.0])]);
        let b = traj(&[(0.0, vec![1.0]), (0.5, vec![1.0])]);
        assert!(matches!(
            pair_certificate(&a, &b, &a.scheme),
            Err(Error::Argument(_))
        ));
        let c = traj(&[(0.0, vec![1.0])]);
        assert!(pair_certificate(&a, &c, &a.scheme).is_err());
        let other = CoefficientScheme::new(2.0, 0.5, 1.0, 1).unwrap();
        assert!(pair_certificate(&a, &a, &other).is_err());
    }
}

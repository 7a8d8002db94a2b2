//! Model functionals against independent oracles: a direct transcription of
//! the equations, exact rational arithmetic, and double-double sums.

use dyadic::model::{
    class_k_a, energy, flux_identity_residuals, flux_magnitudes, h1_norm_sq, partial_energies,
    rhs, CoefficientScheme, ShellState,
};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(rng: &mut ChaCha8Rng, n: usize, signed: bool) -> ShellState {
    let lo = if signed { -1.0 } else { 0.0 };
    let x = (0..n).map(|_| rng.random_range(lo..1.0)).collect();
    ShellState::new(0.0, x).unwrap()
}

/// `dX_n/dt = k_{n-1} X_{n-1}² - k_n X_n X_{n+1}` with 1-based shells and
/// `X_0 = X_{N+1} = 0`.
fn rhs_oracle(x: &[f64], k: impl Fn(usize) -> f64) -> Vec<f64> {
    let n_shells = x.len();
    let xs = |n: usize| if n == 0 || n > n_shells { 0.0 } else { x[n - 1] };
    (1..=n_shells)
        .map(|n| k(n - 1) * xs(n - 1) * xs(n - 1) - k(n) * xs(n) * xs(n + 1))
        .collect()
}

fn rat(v: f64) -> BigRational {
    BigRational::from_float(v).unwrap()
}

fn rhs_exact(x: &[BigRational], k: &[BigRational]) -> Vec<BigRational> {
    let n = x.len();
    let zero = BigRational::zero();
    (0..n)
        .map(|i| {
            let prev = if i == 0 { &zero } else { &x[i - 1] };
            let next = if i + 1 < n { &x[i + 1] } else { &zero };
            &k[i] * prev * prev - &k[i + 1] * &x[i] * next
        })
        .collect()
}

#[test]
fn rhs_matches_direct_transcription_bit_for_bit() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [1, 2, 3, 7, 16, 40] {
        for (base, scale, bound) in [(2.0, 1.0, 1.0), (1.5, 0.7, 1.0), (2.0, 3.0, 3.0)] {
            let scheme = CoefficientScheme::new(base, scale, bound, n).unwrap();
            for _ in 0..50 {
                let s = random_state(&mut rng, n, true);
                let got = rhs(&s, &scheme).unwrap();
                let want = rhs_oracle(s.x(), |m| if m == 0 { 0.0 } else { scale * base.powi(m as i32) });
                for (g, w) in got.iter().zip(&want) {
                    assert_eq!(g.to_bits(), w.to_bits(), "N = {n}, base {base}");
                }
            }
        }
    }
}

#[test]
fn coefficients_follow_the_power_law() {
    let scheme = CoefficientScheme::new(1.5, 0.7, 1.0, 20).unwrap();
    assert_eq!(scheme.k(0), 0.0);
    for n in 1..=20 {
        assert_eq!(scheme.k(n), 0.7 * 1.5f64.powi(n as i32));
    }
}

#[test]
fn rhs_is_correctly_rounded_up_to_a_few_ulp() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let scheme = CoefficientScheme::dyadic(12);
    let k: Vec<BigRational> = scheme.values().iter().map(|&v| rat(v)).collect();
    for _ in 0..100 {
        let s = random_state(&mut rng, 12, true);
        let x: Vec<BigRational> = s.x().iter().map(|&v| rat(v)).collect();
        let exact = rhs_exact(&x, &k);
        for (g, e) in rhs(&s, &scheme).unwrap().iter().zip(&exact) {
            let e = e.to_f64().unwrap();
            // two products and a difference: a handful of roundings of terms of size |k X²|
            let scale = 8.0 * f64::EPSILON * (scheme.k(12) * 2.0);
            assert!((g - e).abs() <= scale, "{g} vs {e}");
        }
    }
}

#[test]
fn flux_identity_telescopes_exactly_in_rationals() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let scheme = CoefficientScheme::dyadic(9);
    let k: Vec<BigRational> = scheme.values().iter().map(|&v| rat(v)).collect();
    let two = rat(2.0);
    for _ in 0..30 {
        let s = random_state(&mut rng, 9, true);
        let x: Vec<BigRational> = s.x().iter().map(|&v| rat(v)).collect();
        let f = rhs_exact(&x, &k);
        let mut acc = BigRational::zero();
        for n in 0..9 {
            acc += &two * &x[n] * &f[n];
            let next = if n + 1 < 9 { x[n + 1].clone() } else { BigRational::zero() };
            let flux = -(&two * &k[n + 1] * &x[n] * &x[n] * next);
            assert_eq!(acc, flux, "shell {}", n + 1);
        }
        // the full sum vanishes: energy is conserved by the truncation
        assert!(acc.is_zero());
    }
}

#[test]
fn flux_residuals_are_roundoff_sized() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let scheme = CoefficientScheme::dyadic(16);
    for _ in 0..1000 {
        let s = random_state(&mut rng, 16, true);
        let res = flux_identity_residuals(&s, &scheme).unwrap();
        let mag = flux_magnitudes(&s, &scheme).unwrap();
        for (r, m) in res.iter().zip(&mag) {
            assert!(r.abs() <= 8.0 * f64::EPSILON * m + 1e-300, "{r} vs scale {m}");
        }
    }
}

/// Error-free transformations for a double-double accumulator.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn dd_sum_of_squares(x: &[f64]) -> f64 {
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    for &v in x {
        let p = v * v;
        let pe = v.mul_add(v, -p);
        let (s, e) = two_sum(hi, p);
        hi = s;
        lo += e + pe;
    }
    hi + lo
}

#[test]
fn energy_agrees_with_double_double_and_exact_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for n in [1, 5, 16, 48] {
        for _ in 0..100 {
            // widely spread magnitudes stress the summation
            let x: Vec<f64> = (0..n)
                .map(|i| rng.random_range(-1.0..1.0) * 10f64.powi(-(i as i32 % 9)))
                .collect();
            let s = ShellState::new(0.0, x.clone()).unwrap();
            let e = energy(&s);
            let dd = dd_sum_of_squares(&x);
            let exact: BigRational = x.iter().map(|&v| rat(v) * rat(v)).sum();
            let exact = exact.to_f64().unwrap();
            assert!((e - dd).abs() <= 1e-15 * dd, "{e} vs {dd}");
            assert!((e - exact).abs() <= 1e-15 * exact, "{e} vs {exact}");
            let pe = partial_energies(&s);
            assert!((pe[n - 1] - exact).abs() <= 1e-15 * exact);
        }
    }
}

#[test]
fn h1_and_class_k_functionals() {
    let scheme = CoefficientScheme::dyadic(4);
    let s = ShellState::new(0.0, vec![1.0, -0.5, 0.25, -2.0]).unwrap();
    // Σ (2^n X_n)² = 4 + 4 + 4 + 1024
    assert_eq!(h1_norm_sq(&s, &scheme).unwrap(), 1036.0);
    // -k_n X_{n+1}: 2*0.5, -4*0.25, 8*2, -16*0
    assert_eq!(class_k_a(&s, &scheme).unwrap(), 16.0);
    let pos = ShellState::new(0.0, vec![1.0, 0.5, 0.0, 0.1]).unwrap();
    assert_eq!(class_k_a(&pos, &scheme).unwrap(), 0.0);
}

proptest! {
    #[test]
    fn rhs_conserves_energy_to_roundoff(x in prop::collection::vec(-1.0f64..1.0, 1..24)) {
        let n = x.len();
        let scheme = CoefficientScheme::dyadic(n);
        let s = ShellState::new(0.0, x).unwrap();
        let f = rhs(&s, &scheme).unwrap();
        let de: f64 = s.x().iter().zip(&f).map(|(a, b)| 2.0 * a * b).sum();
        let scale: f64 = s.x().iter().zip(&f).map(|(a, b)| (2.0 * a * b).abs()).sum();
        prop_assert!(de.abs() <= 4.0 * n as f64 * f64::EPSILON * scale + 1e-300);
    }

    #[test]
    fn nonnegative_data_drains_shell_one(x in prop::collection::vec(0.0f64..1.0, 2..16)) {
        let n = x.len();
        let scheme = CoefficientScheme::dyadic(n);
        let s = ShellState::new(0.0, x).unwrap();
        let f = rhs(&s, &scheme).unwrap();
        prop_assert!(f[0] <= 0.0);
        prop_assert_eq!(class_k_a(&s, &scheme).unwrap(), 0.0);
    }
}

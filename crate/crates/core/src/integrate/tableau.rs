//! Fixed coefficients of the two multi-stage methods.

/// Dormand–Prince 5(4): seven stages, first-same-as-last. The solution is
/// propagated with the fifth-order weights (`B`, equal to the last row of `A`),
/// the difference to the embedded fourth-order weights gives `E`.
pub(crate) mod dp5 {
    #[allow(dead_code)]
    pub const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

    pub const A: [[f64; 6]; 7] = [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];

    #[allow(dead_code)]
    pub const B: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];

    /// `B - B*` with `B*` the fourth-order weights
    /// `[5179/57600, 0, 7571/16695, 393/640, -92097/339200, 187/2100, 1/40]`.
    pub const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];

    pub const ORDER: i32 = 5;
}

/// Shampine's four-stage Rosenbrock method of order 4 with an embedded
/// third-order estimate, in the form that solves for
/// `g_i` with `(I/(γh) - J) g_i = f(y + Σ a_ij g_j) + Σ c_ij g_j / h`.
///
/// The fourth stage reuses the argument of the third. A-stable; the stability
/// function tends to 1/3 as `hλ → -∞`.
pub(crate) mod ros4 {
    pub const GAMMA: f64 = 0.5;
    pub const A21: f64 = 2.0;
    pub const A31: f64 = 48.0 / 25.0;
    pub const A32: f64 = 6.0 / 25.0;
    pub const C21: f64 = -8.0;
    pub const C31: f64 = 372.0 / 25.0;
    pub const C32: f64 = 12.0 / 5.0;
    pub const C41: f64 = -112.0 / 125.0;
    pub const C42: f64 = -54.0 / 125.0;
    pub const C43: f64 = -2.0 / 5.0;
    pub const B: [f64; 4] = [19.0 / 9.0, 1.0 / 2.0, 25.0 / 108.0, 125.0 / 108.0];
    pub const E: [f64; 4] = [17.0 / 54.0, 7.0 / 36.0, 0.0, 125.0 / 108.0];

    pub const ORDER: i32 = 4;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dp5_row_sums_match_nodes() {
        for (row, c) in dp5::A.iter().zip(dp5::C) {
            let s: f64 = row.iter().sum();
            assert!((s - c).abs() < 1e-14, "{s} vs {c}");
        }
        let b: f64 = dp5::B.iter().sum();
        assert!((b - 1.0).abs() < 1e-14);
        let e: f64 = dp5::E.iter().sum();
        assert!(e.abs() < 1e-15);
    }

    #[test]
    fn dp5_fifth_order_conditions_sample() {
        // Σ b_i c_i^k = 1/(k+1) for k <= 4
        for k in 0..5 {
            let s: f64 = dp5::B
                .iter()
                .zip(dp5::C)
                .map(|(b, c)| b * c.powi(k))
                .sum();
            assert!((s - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "k={k}: {s}");
        }
    }
}

//! LU factorization of a tridiagonal matrix with partial pivoting (the
//! LAPACK `gttrf`/`gtts2` scheme). Row interchanges create one extra
//! super-diagonal of fill.

#[derive(Debug, Clone, Default)]
pub(crate) struct TridiagLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Singular;

impl TridiagLu {
    pub fn with_size(n: usize) -> Self {
        Self {
            dl: vec![0.0; n.saturating_sub(1)],
            d: vec![0.0; n],
            du: vec![0.0; n.saturating_sub(1)],
            du2: vec![0.0; n.saturating_sub(2)],
            swapped: vec![false; n.saturating_sub(1)],
        }
    }

    /// Mutable access to (sub, diagonal, super) before factoring.
    pub fn bands_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64]) {
        (&mut self.dl, &mut self.d, &mut self.du)
    }

    /// Factors the bands in place.
    pub fn factor(&mut self) -> Result<(), Singular> {
        let n = self.d.len();
        if n == 0 {
            return Ok(());
        }
        for v in self.du2.iter_mut() {
            *v = 0.0;
        }
        for i in 0..n - 1 {
            if self.d[i].abs() >= self.dl[i].abs() {
                self.swapped[i] = false;
                if self.d[i] != 0.0 {
                    let fact = self.dl[i] / self.d[i];
                    self.dl[i] = fact;
                    self.d[i + 1] -= fact * self.du[i];
                }
            } else {
                self.swapped[i] = true;
                let fact = self.d[i] / self.dl[i];
                self.d[i] = self.dl[i];
                self.dl[i] = fact;
                let temp = self.du[i];
                self.du[i] = self.d[i + 1];
                self.d[i + 1] = temp - fact * self.d[i + 1];
                if i + 1 < n - 1 {
                    self.du2[i] = self.du[i + 1];
                    self.du[i + 1] *= -fact;
                }
            }
        }
        if self.d.iter().any(|v| *v == 0.0 || !v.is_finite()) {
            return Err(Singular);
        }
        Ok(())
    }

    /// Solves `A x = b` in place using the factorization.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

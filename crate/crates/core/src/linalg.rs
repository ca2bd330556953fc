//! Small dense symmetric positive-definite solves used by the Gaussian
//! reductions.

/// Cholesky factor of an `N x N` symmetric matrix with Jacobi pre-scaling.
///
/// The matrix is rescaled to unit diagonal before factoring, which keeps
/// blocks that differ by many orders of magnitude well conditioned.
#[derive(Debug, Clone)]
pub struct Cholesky<const N: usize> {
    l: [[f64; N]; N],
    scale: [f64; N],
}

impl<const N: usize> Cholesky<N> {
    /// Returns `None` when the matrix is not positive definite.
    pub fn new(m: &[[f64; N]; N]) -> Option<Self> {
        let mut scale = [0.0; N];
        for i in 0..N {
            if !(m[i][i] > 0.0) || !m[i][i].is_finite() {
                return None;
            }
            scale[i] = m[i][i].sqrt().recip();
        }
        let mut l = [[0.0; N]; N];
        for j in 0..N {
            let mut d = m[j][j] * scale[j] * scale[j];
            for k in 0..j {
                d -= l[j][k] * l[j][k];
            }
            if !(d > 0.0) {
                return None;
            }
            let d = d.sqrt();
            l[j][j] = d;
            for i in (j + 1)..N {
                let mut s = m[i][j] * scale[i] * scale[j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                l[i][j] = s / d;
            }
        }
        Some(Self { l, scale })
    }

    /// `ln det M`.
    pub fn log_det(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..N {
            s += 2.0 * self.l[i][i].ln() - 2.0 * self.scale[i].ln();
        }
        s
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &[f64; N]) -> [f64; N] {
        let mut y = [0.0; N];
        for i in 0..N {
            let mut s = b[i] * self.scale[i];
            for k in 0..i {
                s -= self.l[i][k] * y[k];
            }
            y[i] = s / self.l[i][i];
        }
        let mut x = [0.0; N];
        for i in (0..N).rev() {
            let mut s = y[i];
            for k in (i + 1)..N {
                s -= self.l[k][i] * x[k];
            }
            x[i] = s / self.l[i][i];
        }
        for i in 0..N {
            x[i] *= self.scale[i];
        }
        x
    }

    /// `b^T M^-1 b`.
    pub fn quad_inv(&self, b: &[f64; N]) -> f64 {
        let x = self.solve(b);
        (0..N).map(|i| b[i] * x[i]).sum()
    }

    /// Diagonal element `(M^-1)_{ii}`.
    pub fn inv_diag(&self, i: usize) -> f64 {
        let mut e = [0.0; N];
        e[i] = 1.0;
        self.solve(&e)[i]
    }
}

//! Lower-triangular Cholesky factor of a symmetric positive-definite matrix,
//! with an O(t^2) append of one new row/column so a posterior over t points
//! can absorb a new observation without refactorizing.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Extra diagonal jitter attempted (scaled by the mean diagonal) when a
/// factorization fails outright.
const JITTER_LADDER: [f64; 5] = [0.0, 1e-12, 1e-10, 1e-8, 1e-6];
pub const MAX_JITTER: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct CholFactor {
    l: DMatrix<f64>,
    jitter: f64,
}

impl CholFactor {
    /// Factor `a` (symmetric, PD up to jitter). Retries along a fixed jitter
    /// ladder scaled by the mean diagonal before giving up.
    pub fn factor(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        debug_assert_eq!(n, a.ncols());
        let diag_scale = (0..n).map(|i| a[(i, i)].abs()).sum::<f64>() / n.max(1) as f64;
        let scale = if diag_scale > 0.0 { diag_scale } else { 1.0 };
        for &j in &JITTER_LADDER {
            let jitter = j * scale;
            let mut m = a.clone();
            for i in 0..n {
                m[(i, i)] += jitter;
            }
            if let Some(ch) = m.cholesky() {
                return Ok(CholFactor { l: ch.unpack(), jitter });
            }
        }
        Err(Error::NotPositiveDefinite { max_jitter: MAX_JITTER * scale })
    }

    pub fn empty() -> Self {
        CholFactor { l: DMatrix::zeros(0, 0), jitter: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Append one row: `cross` holds k(x_new, x_i) for existing points and
    /// `diag` is k(x_new, x_new) plus noise. Fails if the extended matrix is
    /// not PD, in which case the factor is left unchanged.
    pub fn extend(&mut self, cross: &[f64], diag: f64) -> Result<()> {
        let n = self.dim();
        debug_assert_eq!(cross.len(), n);
        let c = self.forward(cross);
        let d2 = diag + self.jitter - c.iter().map(|v| v * v).sum::<f64>();
        if d2 <= 0.0 || !d2.is_finite() {
            return Err(Error::NotPositiveDefinite { max_jitter: self.jitter });
        }
        let mut l = DMatrix::zeros(n + 1, n + 1);
        l.view_mut((0, 0), (n, n)).copy_from(&self.l);
        for j in 0..n {
            l[(n, j)] = c[j];
        }
        l[(n, n)] = d2.sqrt();
        self.l = l;
        Ok(())
    }

    /// Solve `L v = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut v = b.to_vec();
        for i in 0..n {
            let mut s = v[i];
            for j in 0..i {
                s -= self.l[(i, j)] * v[j];
            }
            v[i] = s / self.l[(i, i)];
        }
        v
    }

    /// Solve `L^T x = b`.
    pub fn backward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut v = b.to_vec();
        for i in (0..n).rev() {
            let mut s = v[i];
            for j in (i + 1)..n {
                s -= self.l[(j, i)] * v[j];
            }
            v[i] = s / self.l[(i, i)];
        }
        v
    }

    /// Solve `L L^T x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }

    /// `sum_i ln L_ii`, i.e. half the log-determinant of `L L^T`.
    pub fn half_log_det(&self) -> f64 {
        (0..self.dim()).map(|i| self.l[(i, i)].ln()).sum()
    }
}

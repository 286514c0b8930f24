//! Periodic tridiagonal systems.

use crate::error::{Error, Result};

/// Factorized cyclic tridiagonal matrix. Row `i` reads
/// `lower[i] x[i−1] + diag[i] x[i] + upper[i] x[i+1]` with indices mod `n`.
///
/// The wrap-around corners are removed by a Sherman–Morrison update, so each
/// solve costs two Thomas sweeps.
#[derive(Clone, Debug)]
pub struct CyclicTridiagonal {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    // Thomas factors of the corner-free matrix.
    c_prime: Vec<f64>,
    denom: Vec<f64>,
    z: Vec<f64>,
    gamma: f64,
    beta: f64,
    vz: f64,
}

impl CyclicTridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n < 3 || lower.len() != n || upper.len() != n {
            return Err(Error::invalid("cyclic tridiagonal system needs three bands of equal length ≥ 3"));
        }
        let gamma = -diag[0];
        let alpha = upper[n - 1];
        let beta = lower[0];
        let mut d = diag.clone();
        d[0] -= gamma;
        d[n - 1] -= alpha * beta / gamma;
        let mut c_prime = vec![0.0; n];
        let mut denom = vec![0.0; n];
        for i in 0..n {
            let m = if i == 0 { d[0] } else { d[i] - lower[i] * c_prime[i - 1] };
            if m == 0.0 || !m.is_finite() {
                return Err(Error::invalid(format!("singular tridiagonal pivot at row {i}")));
            }
            denom[i] = m;
            c_prime[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        }
        let mut out = CyclicTridiagonal { lower, diag, upper, c_prime, denom, z: Vec::new(), gamma, beta, vz: 0.0 };
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = alpha;
        out.z = out.thomas(&u);
        out.vz = out.z[0] + beta / gamma * out.z[n - 1];
        if (1.0 + out.vz).abs() < f64::EPSILON {
            return Err(Error::invalid("singular cyclic system"));
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    fn thomas(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut x = vec![0.0; n];
        x[0] = rhs[0] / self.denom[0];
        for i in 1..n {
            x[i] = (rhs[i] - self.lower[i] * x[i - 1]) / self.denom[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.c_prime[i] * x[i + 1];
        }
        x
    }

    fn solve_once(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut x = self.thomas(rhs);
        let vx = x[0] + self.beta / self.gamma * x[n - 1];
        let f = vx / (1.0 + self.vz);
        x.iter_mut().zip(&self.z).for_each(|(xi, zi)| *xi -= f * zi);
        x
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n).map(|i| self.lower[i] * x[(i + n - 1) % n] + self.diag[i] * x[i] + self.upper[i] * x[(i + 1) % n]).collect()
    }

    /// Solves `A x = rhs` with one step of iterative refinement.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.len(), "right-hand side length mismatch");
        let mut x = self.solve_once(rhs);
        let r: Vec<f64> = self.apply(&x).iter().zip(rhs).map(|(ax, b)| b - ax).collect();
        let dx = self.solve_once(&r);
        x.iter_mut().zip(dx).for_each(|(xi, d)| *xi += d);
        x
    }
}

//! Cyclic tridiagonal solves: Sherman–Morrison reduction to two Thomas sweeps.

use crate::error::{Error, Result};

const PIVOT_FLOOR: f64 = 1e-300;

/// Periodic tridiagonal system. Row `j` reads
/// `lower[j] x[j-1] + diag[j] x[j] + upper[j] x[j+1] = rhs[j]`, indices mod `n`.
#[derive(Debug, Clone)]
pub struct CyclicTridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl CyclicTridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Self {
        assert!(lower.len() == diag.len() && diag.len() == upper.len());
        assert!(diag.len() >= 3, "cyclic system needs at least three rows");
        Self { lower, diag, upper }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `A x`, used by tests and residual checks.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|j| {
                let jm = (j + n - 1) % n;
                let jp = (j + 1) % n;
                self.lower[j] * x[jm] + self.diag[j] * x[j] + self.upper[j] * x[jp]
            })
            .collect()
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        let alpha = self.upper[n - 1]; // A[n-1][0]
        let beta = self.lower[0]; // A[0][n-1]
        // gamma is free; -diag[0] keeps the modified corner well away from zero
        let gamma = if self.diag[0] != 0.0 { -self.diag[0] } else { 1.0 };

        let mut diag = self.diag.clone();
        diag[0] -= gamma;
        diag[n - 1] -= alpha * beta / gamma;

        let x = thomas(&self.lower, &diag, &self.upper, rhs)?;
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = alpha;
        let z = thomas(&self.lower, &diag, &self.upper, &u)?;

        let denom = 1.0 + z[0] + beta * z[n - 1] / gamma;
        if denom.abs() < PIVOT_FLOOR || !denom.is_finite() {
            return Err(Error::SolverSingular { pivot: denom });
        }
        let fact = (x[0] + beta * x[n - 1] / gamma) / denom;
        Ok(x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect())
    }
}

/// Thomas algorithm on the non-periodic part; `lower[0]` and `upper[n-1]` are ignored.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv.abs() < PIVOT_FLOOR || !piv.is_finite() {
        return Err(Error::SolverSingular { pivot: piv });
    }
    c[0] = upper[0] / piv;
    d[0] = rhs[0] / piv;
    for j in 1..n {
        piv = diag[j] - lower[j] * c[j - 1];
        if piv.abs() < PIVOT_FLOOR || !piv.is_finite() {
            return Err(Error::SolverSingular { pivot: piv });
        }
        c[j] = upper[j] / piv;
        d[j] = (rhs[j] - lower[j] * d[j - 1]) / piv;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for j in (0..n - 1).rev() {
        x[j] = d[j] - c[j] * x[j + 1];
    }
    Ok(x)
}

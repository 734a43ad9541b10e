//! Uniform periodic grid on the unit torus and the discrete calculus shared
//! by every solver.
//!
//! Nodes sit at `x_j = j / m` for `j = 0..m`. All stencils wrap modulo `m`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible number of nodes.
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    m: usize,
}

impl PeriodicGrid {
    pub fn new(m: usize) -> Result<Self> {
        if m < MIN_NODES {
            return Err(Error::GridTooSmall { m, min: MIN_NODES });
        }
        Ok(Self { m })
    }

    /// Grid with mesh width closest to `dx`.
    pub fn with_spacing(dx: f64) -> Result<Self> {
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::InvalidConfig(format!("mesh width must be positive, got {dx}")));
        }
        Self::new((1.0 / dx).round() as usize)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        1.0 / self.m as f64
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        j as f64 / self.m as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.m).map(|j| self.x(j)).collect()
    }

    /// Node coordinate in the centred chart `[-1/2, 1/2)`.
    pub fn centered_x(&self, j: usize) -> f64 {
        let x = self.x(j);
        if 2 * j >= self.m {
            x - 1.0
        } else {
            x
        }
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.m).map(|j| f(self.x(j))).collect()
    }

    #[inline]
    fn prev(&self, j: usize) -> usize {
        if j == 0 {
            self.m - 1
        } else {
            j - 1
        }
    }

    #[inline]
    fn next(&self, j: usize) -> usize {
        if j + 1 == self.m {
            0
        } else {
            j + 1
        }
    }

    /// Centred first difference `(f_{j+1} - f_{j-1}) / (2 dx)`.
    pub fn d1(&self, f: &[f64]) -> Vec<f64> {
        debug_assert_eq!(f.len(), self.m);
        let inv = 0.5 * self.m as f64;
        (0..self.m)
            .map(|j| (f[self.next(j)] - f[self.prev(j)]) * inv)
            .collect()
    }

    /// Three-point Laplacian `(f_{j+1} + f_{j-1} - 2 f_j) / dx^2`.
    pub fn d2(&self, f: &[f64]) -> Vec<f64> {
        debug_assert_eq!(f.len(), self.m);
        let inv = (self.m * self.m) as f64;
        (0..self.m)
            .map(|j| (f[self.next(j)] + f[self.prev(j)] - 2.0 * f[j]) * inv)
            .collect()
    }

    /// Periodic trapezoid rule, which on a uniform grid is the node mean.
    pub fn integral(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.m);
        f.iter().sum::<f64>() / self.m as f64
    }

    /// Running trapezoid integral from `x_0`, with `g_0 = 0`.
    ///
    /// Closing the last interval `[x_{m-1}, 1]` would reproduce `integral(f)`.
    pub fn cumulative(&self, f: &[f64]) -> Vec<f64> {
        debug_assert_eq!(f.len(), self.m);
        let half_dx = 0.5 * self.dx();
        let mut out = Vec::with_capacity(self.m);
        let mut acc = 0.0;
        out.push(0.0);
        for j in 1..self.m {
            acc += half_dx * (f[j - 1] + f[j]);
            out.push(acc);
        }
        out
    }

    pub fn max_abs(f: &[f64]) -> f64 {
        f.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Discrete L2 norm on the torus.
    pub fn l2(&self, f: &[f64]) -> f64 {
        (f.iter().map(|v| v * v).sum::<f64>() / self.m as f64).sqrt()
    }

    /// `max f - min f`.
    pub fn oscillation(f: &[f64]) -> f64 {
        let (lo, hi) = f
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi - lo
    }
}

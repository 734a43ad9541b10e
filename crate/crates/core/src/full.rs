//! Eulerian Crank–Nicolson solver for the resistive system
//! `∂_t b + ∂_x(u b) = ε ∂_x² b` with `∂_x u = ½(|b|² − ∫|b|²)`.
//!
//! The velocity is frozen at the old time level; each component then
//! needs one cyclic tridiagonal solve per step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{reconstruct_velocity, Gauge, MagneticState};
use crate::linalg::CyclicTridiagonal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullRunConfig {
    pub epsilon: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub gauge: Gauge,
    pub record_every: usize,
    /// Lower bound on `|b₀|²` the caller expects; `None` skips the check.
    #[serde(default)]
    pub c0_expected: Option<f64>,
}

impl FullRunConfig {
    /// Default step `0.1 δx²`.
    pub fn with_parabolic_dt(epsilon: f64, dx: f64, t_end: f64) -> Self {
        Self { epsilon, dt: 0.1 * dx * dx, t_end, gauge: Gauge::ZeroAtOrigin, record_every: 1, c0_expected: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(self.dt > 0.0) || !(self.t_end >= self.dt) {
            return Err(Error::InvalidConfig(format!(
                "need dt > 0 and t_end >= dt (dt = {}, t_end = {})",
                self.dt, self.t_end
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be >= 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Matrix `I + (dt/2) A` with `A b = D(u b) − ε L b`.
fn implicit_matrix(u: &[f64], epsilon: f64, dt: f64, dx: f64) -> CyclicTridiagonal {
    let m = u.len();
    let adv = dt / (4.0 * dx);
    let dif = epsilon * dt / (2.0 * dx * dx);
    let lower = (0..m).map(|j| -adv * u[(j + m - 1) % m] - dif).collect();
    let upper = (0..m).map(|j| adv * u[(j + 1) % m] - dif).collect();
    CyclicTridiagonal::new(lower, vec![1.0 + 2.0 * dif; m], upper)
}

/// `b − (dt/2) A b`.
fn explicit_side(b: &[f64], u: &[f64], epsilon: f64, dt: f64, dx: f64) -> Vec<f64> {
    let m = b.len();
    let adv = dt / (4.0 * dx);
    let dif = epsilon * dt / (2.0 * dx * dx);
    (0..m)
        .map(|j| {
            let (l, r) = ((j + m - 1) % m, (j + 1) % m);
            b[j] - adv * (u[r] * b[r] - u[l] * b[l]) + dif * (b[r] + b[l] - 2.0 * b[j])
        })
        .collect()
}

/// One Crank–Nicolson step with the velocity frozen at `bⁿ`.
pub fn step_full(b: &MagneticState, dt: f64, gauge: Gauge) -> Result<MagneticState> {
    let dx = b.grid.dx();
    let u = reconstruct_velocity(b, gauge).u;
    let mat = implicit_matrix(&u, b.epsilon, dt, dx);
    let b1 = mat.solve(&explicit_side(&b.b1, &u, b.epsilon, dt, dx))?;
    let b2 = mat.solve(&explicit_side(&b.b2, &u, b.epsilon, dt, dx))?;
    Ok(MagneticState { grid: b.grid, b1, b2, t: b.t + dt, epsilon: b.epsilon })
}

/// Advances `b0` to `cfg.t_end`, returning the initial state, every
/// `record_every`-th state and the final one.
pub fn run_full(b0: &MagneticState, cfg: &FullRunConfig) -> Result<Vec<MagneticState>> {
    cfg.validate()?;
    if let Some(c0) = cfg.c0_expected {
        let min = b0.min_modulus_sq();
        if min < c0 {
            return Err(Error::InvalidConfig(format!("min |b0|^2 = {min} is below c0 = {c0}")));
        }
    }
    let mut b = b0.clone();
    b.epsilon = cfg.epsilon;
    let t0 = b.t;
    let steps = cfg.steps();
    let mut out = vec![b.clone()];
    for n in 1..=steps {
        b = step_full(&b, cfg.dt, cfg.gauge)?;
        b.t = t0 + n as f64 * cfg.dt;
        if !b.is_finite() {
            return Err(Error::NumericalInstability { t: b.t, reason: "non-finite field values".into() });
        }
        if n % cfg.record_every == 0 || n == steps {
            out.push(b.clone());
        }
    }
    Ok(out)
}

/// Pairs each frame with the slow time `τ = ε t`.
pub fn rescaled(frames: &[MagneticState]) -> Vec<(f64, &MagneticState)> {
    frames.iter().map(|b| (b.epsilon * b.t, b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use crate::initial::relaxation_datum;
    use std::f64::consts::PI;

    fn max_dev(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn constant_vector_is_fixed() {
        let g = PeriodicGrid::new(32).unwrap();
        let b = MagneticState::from_fn(g, 0.1, |_| (0.3, -1.2)).unwrap();
        let next = step_full(&b, 1e-3, Gauge::ZeroAtOrigin).unwrap();
        assert!(max_dev(&next.b1, &b.b1) < 1e-15);
        assert!(max_dev(&next.b2, &b.b2) < 1e-15);
    }

    #[test]
    fn unit_circle_decays_by_cn_factor() {
        let g = PeriodicGrid::new(64).unwrap();
        let dx = g.dx();
        for eps in [0.01, 0.3, 2.0] {
            let b = MagneticState::from_fn(g, eps, |x| ((2.0 * PI * x).cos(), (2.0 * PI * x).sin())).unwrap();
            let dt = 1e-3;
            let kappa = eps * dt * (2.0 - 2.0 * (2.0 * PI * dx).cos()) / (dx * dx);
            let rho = (1.0 - kappa / 2.0) / (1.0 + kappa / 2.0);
            let next = step_full(&b, dt, Gauge::ZeroAtOrigin).unwrap();
            let e1: Vec<f64> = b.b1.iter().map(|v| rho * v).collect();
            let e2: Vec<f64> = b.b2.iter().map(|v| rho * v).collect();
            assert!(max_dev(&next.b1, &e1) <= 1e-12);
            assert!(max_dev(&next.b2, &e2) <= 1e-12);
        }
    }

    #[test]
    fn energy_never_increases() {
        let g = PeriodicGrid::new(100).unwrap();
        let b = MagneticState::from_fn(g, 0.05, relaxation_datum).unwrap();
        let cfg = FullRunConfig { record_every: 1, ..FullRunConfig::with_parabolic_dt(0.05, g.dx(), 0.05) };
        let frames = run_full(&b, &cfg).unwrap();
        for w in frames.windows(2) {
            assert!(w[1].energy() <= w[0].energy() + 1e-14);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let g = PeriodicGrid::new(16).unwrap();
        let b = MagneticState::from_fn(g, 0.0, relaxation_datum).unwrap();
        let bad = FullRunConfig { epsilon: 0.0, ..FullRunConfig::with_parabolic_dt(0.1, 0.1, 1.0) };
        assert!(matches!(run_full(&b, &bad), Err(Error::InvalidConfig(_))));
        let c0 = FullRunConfig { c0_expected: Some(10.0), ..FullRunConfig::with_parabolic_dt(0.1, 0.1, 1.0) };
        assert!(matches!(run_full(&b, &c0), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn records_endpoints_and_rescales() {
        let g = PeriodicGrid::new(32).unwrap();
        let b = MagneticState::from_fn(g, 0.1, relaxation_datum).unwrap();
        let cfg = FullRunConfig { epsilon: 0.1, dt: 1e-3, t_end: 0.01, gauge: Gauge::ZeroMean, record_every: 3, c0_expected: Some(0.4) };
        let frames = run_full(&b, &cfg).unwrap();
        let ts: Vec<f64> = frames.iter().map(|f| f.t).collect();
        assert_eq!(ts.len(), 5);
        assert!((ts[4] - 0.01).abs() < 1e-15);
        let r = rescaled(&frames);
        assert!((r[4].0 - 1e-3).abs() < 1e-15);
    }
}

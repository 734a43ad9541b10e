//! State types for the three systems, velocity reconstruction, and the polar
//! (radius, angle) view of a magnetic field.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;

/// Polar decomposition refuses fields whose modulus dips below this.
pub const DEFAULT_MODULUS_FLOOR: f64 = 1e-8;

/// Largest unwrapped increment between neighbouring nodes accepted before
/// the angle is considered under-resolved.
pub const UNWRAP_LIMIT: f64 = 0.75 * PI;

/// How the free additive constant in the velocity is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// `u(t, 0) = 0`: the origin is a fixed point of the flow.
    #[default]
    ZeroAtOrigin,
    /// `∫ u dx = 0`.
    ZeroMean,
}

impl Gauge {
    /// Shifts a velocity known up to a constant into this gauge.
    pub fn fix(self, grid: &PeriodicGrid, mut u: Vec<f64>) -> Vec<f64> {
        let shift = match self {
            Gauge::ZeroAtOrigin => u[0],
            Gauge::ZeroMean => grid.integral(&u),
        };
        u.iter_mut().for_each(|v| *v -= shift);
        u
    }
}

/// Two-component magnetic field sampled on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagneticState {
    pub grid: PeriodicGrid,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub t: f64,
    pub epsilon: f64,
}

impl MagneticState {
    pub fn new(grid: PeriodicGrid, b1: Vec<f64>, b2: Vec<f64>, epsilon: f64) -> Result<Self> {
        if b1.len() != grid.len() || b2.len() != grid.len() {
            return Err(Error::InvalidConfig(format!(
                "field length {}/{} does not match grid of {} nodes",
                b1.len(),
                b2.len(),
                grid.len()
            )));
        }
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon must be >= 0, got {epsilon}")));
        }
        if b1.iter().chain(&b2).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("field contains non-finite values".into()));
        }
        Ok(Self { grid, b1, b2, t: 0.0, epsilon })
    }

    /// Samples `b(x) = (f1(x), f2(x))`.
    pub fn from_fn(
        grid: PeriodicGrid,
        epsilon: f64,
        f: impl Fn(f64) -> (f64, f64),
    ) -> Result<Self> {
        let (b1, b2) = grid.nodes().into_iter().map(f).unzip();
        Self::new(grid, b1, b2, epsilon)
    }

    pub fn modulus_sq(&self) -> Vec<f64> {
        self.b1.iter().zip(&self.b2).map(|(a, b)| a * a + b * b).collect()
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.b1.iter().zip(&self.b2).map(|(a, b)| a.hypot(*b)).collect()
    }

    /// `∫ |b| dx`.
    pub fn mass_l1(&self) -> f64 {
        self.grid.integral(&self.modulus())
    }

    /// `∫ |b|^2 dx`.
    pub fn energy(&self) -> f64 {
        self.grid.integral(&self.modulus_sq())
    }

    /// `ψ = ½(|b|² − ∫|b|²)`, the velocity gradient.
    pub fn psi(&self) -> Vec<f64> {
        let m2 = self.modulus_sq();
        let mean = self.grid.integral(&m2);
        m2.iter().map(|v| 0.5 * (v - mean)).collect()
    }

    pub fn min_modulus_sq(&self) -> f64 {
        self.modulus_sq().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_modulus_sq(&self) -> f64 {
        self.modulus_sq().into_iter().fold(0.0, f64::max)
    }

    /// `max_x |d1 b|`.
    pub fn dxb_inf(&self) -> f64 {
        let d1 = self.grid.d1(&self.b1);
        let d2 = self.grid.d1(&self.b2);
        d1.iter().zip(&d2).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max)
    }

    /// `∫ |d1 b|^2 dx`.
    pub fn gradient_energy(&self) -> f64 {
        let d1 = self.grid.d1(&self.b1);
        let d2 = self.grid.d1(&self.b2);
        let s: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| a * a + b * b).collect();
        self.grid.integral(&s)
    }

    pub fn is_finite(&self) -> bool {
        self.b1.iter().chain(&self.b2).all(|v| v.is_finite())
    }
}

/// Velocity together with the gauge that fixed its additive constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityField {
    pub u: Vec<f64>,
    pub gauge: Gauge,
}

impl VelocityField {
    /// Re-expresses the velocity in another gauge (a constant shift).
    pub fn regauge(&self, grid: &PeriodicGrid, gauge: Gauge) -> VelocityField {
        VelocityField { u: gauge.fix(grid, self.u.clone()), gauge }
    }
}

/// Antiderivative of `ψ = ½(|b|² − ∫|b|²)` in the requested gauge.
pub fn reconstruct_velocity(b: &MagneticState, gauge: Gauge) -> VelocityField {
    let u = b.grid.cumulative(&b.psi());
    VelocityField { u: gauge.fix(&b.grid, u), gauge }
}

/// Angle `θ(x) = ζ(x) + 2πNx` with periodic part `ζ`, plus the radius `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleState {
    pub grid: PeriodicGrid,
    pub zeta: Vec<f64>,
    pub n_turns: i64,
    pub radius: f64,
    pub t: f64,
}

impl AngleState {
    pub fn new(grid: PeriodicGrid, zeta: Vec<f64>, n_turns: i64, radius: f64) -> Result<Self> {
        if zeta.len() != grid.len() {
            return Err(Error::InvalidConfig(format!(
                "angle length {} does not match grid of {} nodes",
                zeta.len(),
                grid.len()
            )));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidConfig(format!("radius must be positive, got {radius}")));
        }
        Ok(Self { grid, zeta, n_turns, radius, t: 0.0 })
    }

    /// Builds the state from covering-line samples of `θ` with known winding.
    pub fn from_theta(grid: PeriodicGrid, theta: &[f64], n_turns: i64, radius: f64) -> Result<Self> {
        let w = 2.0 * PI * n_turns as f64;
        let zeta = theta.iter().enumerate().map(|(j, v)| v - w * grid.x(j)).collect();
        Self::new(grid, zeta, n_turns, radius)
    }

    /// Samples `θ₀` (on the covering line) and reads the winding from the samples.
    pub fn from_fn(grid: PeriodicGrid, radius: f64, theta: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = grid.sample(&theta);
        let n = winding_number(&samples)?;
        Self::from_theta(grid, &samples, n, radius)
    }

    /// Covering-line angle `θ_j = ζ_j + 2πN x_j`.
    pub fn theta(&self) -> Vec<f64> {
        let w = 2.0 * PI * self.n_turns as f64;
        self.zeta.iter().enumerate().map(|(j, z)| z + w * self.grid.x(j)).collect()
    }

    /// Centred `∂_x θ`: `d1 ζ + 2πN`.
    pub fn dtheta(&self) -> Vec<f64> {
        let w = 2.0 * PI * self.n_turns as f64;
        self.grid.d1(&self.zeta).into_iter().map(|v| v + w).collect()
    }

    /// Rotates the field by a constant angle.
    pub fn rotated(&self, angle: f64) -> AngleState {
        let mut s = self.clone();
        s.zeta.iter_mut().for_each(|z| *z += angle);
        s
    }
}

/// `u(x) = −∫₀ˣ (∂θ)² + x ∫ (∂θ)²`, then shifted into `gauge`.
pub fn velocity_from_angle(theta: &AngleState, gauge: Gauge) -> VelocityField {
    let grid = theta.grid;
    let f: Vec<f64> = theta.dtheta().into_iter().map(|v| v * v).collect();
    let total = grid.integral(&f);
    let cum = grid.cumulative(&f);
    let u = cum.iter().enumerate().map(|(j, c)| -c + grid.x(j) * total).collect();
    VelocityField { u: gauge.fix(&grid, u), gauge }
}

/// Unwraps angle samples by nearest-branch selection from `j = 0` onward.
pub fn unwrap(samples: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(samples.len());
    let Some(&first) = samples.first() else {
        return Ok(out);
    };
    out.push(first);
    for j in 1..samples.len() {
        let prev = out[j - 1];
        let raw = samples[j] - prev;
        let jump = raw - 2.0 * PI * (raw / (2.0 * PI)).round();
        if jump.abs() > UNWRAP_LIMIT {
            return Err(Error::UnwrapAmbiguous { index: j, jump, limit: UNWRAP_LIMIT });
        }
        out.push(prev + jump);
    }
    Ok(out)
}

/// Number of turns `(θ(1) − θ(0)) / 2π` of sampled angle data.
///
/// The closing increment from `x_{m-1}` to `x_m = 1` is chosen on the
/// nearest branch, so both wrapped (`atan2`) and covering-line samples work.
pub fn winding_number(theta: &[f64]) -> Result<i64> {
    let un = unwrap(theta)?;
    let (first, last) = (un[0], un[un.len() - 1]);
    let n = ((last - first) / (2.0 * PI)).round();
    let closing = first + 2.0 * PI * n - last;
    if closing.abs() > UNWRAP_LIMIT {
        return Err(Error::UnwrapAmbiguous { index: un.len(), jump: closing, limit: UNWRAP_LIMIT });
    }
    Ok(n as i64)
}

/// Polar view `b = R e^{iθ}` with `R` the mean modulus.
///
/// Lossy when `|b|` is not constant: the modulus profile is flattened.
pub fn to_angle(b: &MagneticState) -> Result<AngleState> {
    to_angle_with_floor(b, DEFAULT_MODULUS_FLOOR)
}

pub fn to_angle_with_floor(b: &MagneticState, floor: f64) -> Result<AngleState> {
    let modulus = b.modulus();
    let min = modulus.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= floor {
        return Err(Error::ZeroModulus { min_modulus: min, floor });
    }
    let raw: Vec<f64> = b.b1.iter().zip(&b.b2).map(|(x, y)| y.atan2(*x)).collect();
    let theta = unwrap(&raw)?;
    let n = winding_number(&theta)?;
    let radius = b.grid.integral(&modulus);
    let mut s = AngleState::from_theta(b.grid, &theta, n, radius)?;
    s.t = b.t;
    Ok(s)
}

/// `b = R e^{iθ}`.
pub fn from_angle(theta: &AngleState, epsilon: f64) -> MagneticState {
    let th = theta.theta();
    let b1 = th.iter().map(|v| theta.radius * v.cos()).collect();
    let b2 = th.iter().map(|v| theta.radius * v.sin()).collect();
    MagneticState { grid: theta.grid, b1, b2, t: theta.t, epsilon }
}

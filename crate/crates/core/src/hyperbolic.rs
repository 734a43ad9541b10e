//! Perfectly conducting system (`ε = 0`) solved along characteristics, and
//! the relaxation operator `S(b₀) = lim_{t→∞} b(t)`.
//!
//! Labels `ξ` live on a periodic grid. Each label carries its position
//! `Φ(ξ)`, the field value `Z(ξ) = b(Φ(ξ))` and the Jacobian `J = ∂_ξΦ`:
//!
//! ```text
//! Φ' = u∘Φ,   Z' = −(ψ∘Φ) Z,   J' = (ψ∘Φ) J,
//! ψ∘Φ = ½(|Z|² − ∫|Z|² J dξ),   u∘Φ(ξ) = ∫₀^ξ (ψ∘Φ) J dξ' + const.
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{self, Gauge, MagneticState, DEFAULT_MODULUS_FLOOR};
use crate::grid::PeriodicGrid;
use crate::interp::periodic_pchip;

pub const DEFAULT_JACOBIAN_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianState {
    pub xi: PeriodicGrid,
    pub phi: Vec<f64>,
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
    pub jac: Vec<f64>,
    pub t: f64,
}

/// Time derivatives of every carried quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianRates {
    pub dphi: Vec<f64>,
    pub dz1: Vec<f64>,
    pub dz2: Vec<f64>,
    pub djac: Vec<f64>,
}

impl LagrangianState {
    /// Labels coincide with positions at `t = 0`.
    pub fn from_eulerian(b: &MagneticState) -> Self {
        Self {
            xi: b.grid,
            phi: b.grid.nodes(),
            z1: b.b1.clone(),
            z2: b.b2.clone(),
            jac: vec![1.0; b.grid.len()],
            t: b.t,
        }
    }

    pub fn modulus_sq(&self) -> Vec<f64> {
        self.z1.iter().zip(&self.z2).map(|(a, b)| a * a + b * b).collect()
    }

    /// `∫ |b|² dx = ∫ |Z|² J dξ`.
    pub fn energy(&self) -> f64 {
        let w: Vec<f64> = self.modulus_sq().iter().zip(&self.jac).map(|(m, j)| m * j).collect();
        self.xi.integral(&w)
    }

    /// `∫ |b| dx = ∫ |Z| J dξ`.
    pub fn mass_l1(&self) -> f64 {
        let w: Vec<f64> =
            self.z1.iter().zip(&self.z2).zip(&self.jac).map(|((a, b), j)| a.hypot(*b) * j).collect();
        self.xi.integral(&w)
    }

    /// `ψ∘Φ` on the labels.
    pub fn psi(&self) -> Vec<f64> {
        let m2 = self.modulus_sq();
        let mean = self.energy();
        m2.iter().map(|v| 0.5 * (v - mean)).collect()
    }

    pub fn psi_inf(&self) -> f64 {
        PeriodicGrid::max_abs(&self.psi())
    }

    /// `(∫ ψ² dx)^{1/2}`.
    pub fn psi_l2(&self) -> f64 {
        let w: Vec<f64> = self.psi().iter().zip(&self.jac).map(|(p, j)| p * p * j).collect();
        self.xi.integral(&w).sqrt()
    }

    /// `∫ ψ² dx`.
    pub fn dissipation(&self) -> f64 {
        self.psi_l2().powi(2)
    }

    pub fn min_jacobian(&self) -> f64 {
        self.jac.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Resamples `Z∘Φ⁻¹` onto the label grid.
    ///
    /// Modulus and unwrapped angle are interpolated separately as monotone
    /// cubics in `Φ`, so a field of constant modulus stays exactly constant.
    pub fn to_eulerian(&self, epsilon: f64) -> Result<MagneticState> {
        let grid = self.xi;
        let m = grid.len();
        let modulus: Vec<f64> = self.z1.iter().zip(&self.z2).map(|(a, b)| a.hypot(*b)).collect();
        let min = modulus.iter().cloned().fold(f64::INFINITY, f64::min);
        if min <= DEFAULT_MODULUS_FLOOR {
            return Err(Error::ZeroModulus { min_modulus: min, floor: DEFAULT_MODULUS_FLOOR });
        }
        let raw: Vec<f64> = self.z1.iter().zip(&self.z2).map(|(a, b)| b.atan2(*a)).collect();
        let angle = fields::unwrap(&raw)?;
        let turns = fields::winding_number(&angle)?;
        let drift = 2.0 * std::f64::consts::PI * turns as f64;
        let p_mod = periodic_pchip(&self.phi, &modulus, 0.0);
        let p_ang = periodic_pchip(&self.phi, &angle, drift);
        let origin = self.phi[0];
        let (mut b1, mut b2) = (Vec::with_capacity(m), Vec::with_capacity(m));
        for j in 0..m {
            let x = grid.x(j);
            let k = (x - origin).floor();
            let xr = x - k;
            let r = p_mod.eval(xr);
            let a = p_ang.eval(xr) + k * drift;
            b1.push(r * a.cos());
            b2.push(r * a.sin());
        }
        Ok(MagneticState { grid, b1, b2, t: self.t, epsilon })
    }
}

/// Right-hand side of the characteristic system.
pub fn lagrangian_rhs(s: &LagrangianState, gauge: Gauge) -> Result<LagrangianRates> {
    lagrangian_rhs_with_floor(s, gauge, DEFAULT_JACOBIAN_FLOOR)
}

pub fn lagrangian_rhs_with_floor(s: &LagrangianState, gauge: Gauge, floor: f64) -> Result<LagrangianRates> {
    let min_jac = s.min_jacobian();
    if !(min_jac >= floor) {
        return Err(Error::JacobianCollapse { min_jacobian: min_jac, floor, t: s.t });
    }
    let psi = s.psi();
    let djac: Vec<f64> = psi.iter().zip(&s.jac).map(|(p, j)| p * j).collect();
    let mut dphi = s.xi.cumulative(&djac);
    if gauge == Gauge::ZeroMean {
        let weighted: Vec<f64> = dphi.iter().zip(&s.jac).map(|(u, j)| u * j).collect();
        let shift = s.xi.integral(&weighted) / s.xi.integral(&s.jac);
        dphi.iter_mut().for_each(|u| *u -= shift);
    }
    let dz1 = psi.iter().zip(&s.z1).map(|(p, z)| -p * z).collect();
    let dz2 = psi.iter().zip(&s.z2).map(|(p, z)| -p * z).collect();
    Ok(LagrangianRates { dphi, dz1, dz2, djac })
}

fn advance(s: &LagrangianState, k: &LagrangianRates, h: f64) -> LagrangianState {
    let add = |a: &[f64], d: &[f64]| a.iter().zip(d).map(|(x, y)| x + h * y).collect();
    LagrangianState {
        xi: s.xi,
        phi: add(&s.phi, &k.dphi),
        z1: add(&s.z1, &k.dz1),
        z2: add(&s.z2, &k.dz2),
        jac: add(&s.jac, &k.djac),
        t: s.t + h,
    }
}

/// One classical RK4 step.
pub fn step_hyperbolic(s: &LagrangianState, dt: f64, gauge: Gauge) -> Result<LagrangianState> {
    let k1 = lagrangian_rhs(s, gauge)?;
    let k2 = lagrangian_rhs(&advance(s, &k1, 0.5 * dt), gauge)?;
    let k3 = lagrangian_rhs(&advance(s, &k2, 0.5 * dt), gauge)?;
    let k4 = lagrangian_rhs(&advance(s, &k3, dt), gauge)?;
    let comb = |a: &[f64], d1: &[f64], d2: &[f64], d3: &[f64], d4: &[f64]| -> Vec<f64> {
        (0..a.len()).map(|i| a[i] + dt / 6.0 * (d1[i] + 2.0 * d2[i] + 2.0 * d3[i] + d4[i])).collect()
    };
    let out = LagrangianState {
        xi: s.xi,
        phi: comb(&s.phi, &k1.dphi, &k2.dphi, &k3.dphi, &k4.dphi),
        z1: comb(&s.z1, &k1.dz1, &k2.dz1, &k3.dz1, &k4.dz1),
        z2: comb(&s.z2, &k1.dz2, &k2.dz2, &k3.dz2, &k4.dz2),
        jac: comb(&s.jac, &k1.djac, &k2.djac, &k3.djac, &k4.djac),
        t: s.t + dt,
    };
    let min_jac = out.min_jacobian();
    if !(min_jac >= DEFAULT_JACOBIAN_FLOOR) {
        return Err(Error::JacobianCollapse { min_jacobian: min_jac, floor: DEFAULT_JACOBIAN_FLOOR, t: out.t });
    }
    Ok(out)
}

/// Default step `min(0.1 δx, 0.01 / ‖b₀‖²_∞)`.
pub fn default_dt(b0: &MagneticState) -> f64 {
    (0.1 * b0.grid.dx()).min(0.01 / b0.max_modulus_sq().max(1e-300))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub gauge: Gauge,
}

/// Integrates to `t_end`, keeping every `record_every`-th state (and the last).
pub fn run_hyperbolic(b0: &MagneticState, cfg: &HyperbolicConfig) -> Result<Vec<LagrangianState>> {
    if !(cfg.dt > 0.0) || !(cfg.t_end >= cfg.dt) || cfg.record_every == 0 {
        return Err(Error::InvalidConfig(format!(
            "need dt > 0, t_end >= dt and record_every >= 1 (dt = {}, t_end = {}, record_every = {})",
            cfg.dt, cfg.t_end, cfg.record_every
        )));
    }
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut s = LagrangianState::from_eulerian(b0);
    let t0 = s.t;
    let mut out = vec![s.clone()];
    for n in 1..=steps {
        s = step_hyperbolic(&s, cfg.dt, cfg.gauge)?;
        s.t = t0 + n as f64 * cfg.dt;
        if n % cfg.record_every == 0 || n == steps {
            out.push(s.clone());
        }
    }
    Ok(out)
}

/// Relaxed field together with the observed decay of `‖ψ‖_∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relaxation {
    pub state: MagneticState,
    /// Least-squares rate of `log ‖ψ‖_∞` over the second half of the run;
    /// `None` when the datum was already relaxed.
    pub decay_rate: Option<f64>,
    pub t_final: f64,
    pub psi_history: Vec<(f64, f64)>,
}

/// Runs the characteristic system until `‖ψ‖_∞ < tol`.
pub fn relax(b0: &MagneticState, tol: f64, t_max: f64) -> Result<Relaxation> {
    relax_with(b0, tol, t_max, default_dt(b0))
}

pub fn relax_with(b0: &MagneticState, tol: f64, t_max: f64, dt: f64) -> Result<Relaxation> {
    let min_mod = b0.min_modulus_sq().sqrt();
    if !(min_mod > DEFAULT_MODULUS_FLOOR) {
        return Err(Error::ModulusVanishes { min_modulus: min_mod, floor: DEFAULT_MODULUS_FLOOR });
    }
    let mut s = LagrangianState::from_eulerian(b0);
    let mut psi = s.psi_inf();
    let mut history = vec![(0.0, psi)];
    if psi < tol {
        return Ok(Relaxation { state: b0.clone(), decay_rate: None, t_final: 0.0, psi_history: history });
    }
    let mut n = 0usize;
    while psi >= tol {
        if n as f64 * dt >= t_max {
            return Err(Error::NoConvergence { tol, t_max, residual: psi });
        }
        s = step_hyperbolic(&s, dt, Gauge::ZeroAtOrigin)?;
        n += 1;
        s.t = n as f64 * dt;
        psi = s.psi_inf();
        history.push((s.t, psi));
    }
    let tail = &history[history.len() / 2..];
    let decay_rate = log_slope(tail).map(|s| -s);
    let mut state = s.to_eulerian(b0.epsilon)?;
    state.t = b0.t;
    Ok(Relaxation { state, decay_rate, t_final: s.t, psi_history: history })
}

/// Ordinary least-squares slope of `log y` against `t`.
pub(crate) fn log_slope(samples: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = samples.iter().filter(|(_, y)| *y > 0.0).map(|(t, y)| (*t, y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::{polar_field, relaxation_datum};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn max_dev(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    fn state_dev(a: &LagrangianState, b: &LagrangianState) -> f64 {
        max_dev(&a.phi, &b.phi)
            .max(max_dev(&a.z1, &b.z1))
            .max(max_dev(&a.z2, &b.z2))
            .max(max_dev(&a.jac, &b.jac))
    }

    fn datum(m: usize) -> MagneticState {
        MagneticState::from_fn(PeriodicGrid::new(m).unwrap(), 0.0, relaxation_datum).unwrap()
    }

    #[test]
    fn constant_modulus_is_a_fixed_point() {
        let g = PeriodicGrid::new(64).unwrap();
        let b = MagneticState::from_fn(g, 0.0, |x| (2.0 * (2.0 * PI * x).cos(), 2.0 * (2.0 * PI * x).sin()))
            .unwrap();
        let s = LagrangianState::from_eulerian(&b);
        let r = lagrangian_rhs(&s, Gauge::ZeroAtOrigin).unwrap();
        for d in [&r.dphi, &r.dz1, &r.dz2, &r.djac] {
            assert!(PeriodicGrid::max_abs(d) < 1e-14);
        }
        let next = step_hyperbolic(&s, 0.01, Gauge::ZeroAtOrigin).unwrap();
        assert!(state_dev(&next, &s) <= 1e-13);
    }

    #[test]
    fn rhs_on_cosine_modulus() {
        let g = PeriodicGrid::new(128).unwrap();
        let b = MagneticState::from_fn(g, 0.0, |x| ((1.0 + (2.0 * PI * x).cos()).sqrt(), 0.0)).unwrap();
        let s = LagrangianState::from_eulerian(&b);
        let psi = s.psi();
        let expect = g.sample(|x| 0.5 * (2.0 * PI * x).cos());
        assert!(max_dev(&psi, &expect) < 1e-13);
        let r = lagrangian_rhs(&s, Gauge::ZeroAtOrigin).unwrap();
        let dz: Vec<f64> = expect.iter().zip(&s.z1).map(|(p, z)| -p * z).collect();
        assert!(max_dev(&r.dz1, &dz) < 1e-13);
        assert!(max_dev(&r.djac, &expect) < 1e-13);
    }

    #[test]
    fn zero_field_is_static() {
        let g = PeriodicGrid::new(32).unwrap();
        let b = MagneticState::from_fn(g, 0.0, |_| (0.0, 0.0)).unwrap();
        let s = LagrangianState::from_eulerian(&b);
        let next = step_hyperbolic(&s, 0.1, Gauge::ZeroMean).unwrap();
        assert_eq!(next.phi, s.phi);
        assert_eq!(next.z1, s.z1);
        assert_eq!(next.jac, s.jac);
    }

    #[test]
    fn collapsed_jacobian_is_reported() {
        let mut s = LagrangianState::from_eulerian(&datum(32));
        s.jac[5] = 1e-9;
        assert!(matches!(lagrangian_rhs(&s, Gauge::ZeroAtOrigin), Err(Error::JacobianCollapse { .. })));
    }

    #[test]
    fn gauges_shift_positions_only() {
        let s = LagrangianState::from_eulerian(&datum(64));
        let a = lagrangian_rhs(&s, Gauge::ZeroAtOrigin).unwrap();
        let b = lagrangian_rhs(&s, Gauge::ZeroMean).unwrap();
        assert_eq!(a.dz1, b.dz1);
        assert_eq!(a.djac, b.djac);
        let shift = a.dphi[0] - b.dphi[0];
        assert!(a.dphi.iter().zip(&b.dphi).all(|(x, y)| (x - y - shift).abs() < 1e-14));
        let w: Vec<f64> = b.dphi.iter().zip(&s.jac).map(|(u, j)| u * j).collect();
        assert!(s.xi.integral(&w).abs() < 1e-14);
    }

    #[test]
    fn rk4_self_convergence() {
        let b = datum(64);
        let t_end = 0.4;
        let run = |dt: f64| {
            let cfg = HyperbolicConfig { dt, t_end, record_every: 1_000_000, gauge: Gauge::ZeroAtOrigin };
            run_hyperbolic(&b, &cfg).unwrap().pop().unwrap()
        };
        let reference = run(0.1 / 8.0);
        let e1 = state_dev(&run(0.1), &reference);
        let e2 = state_dev(&run(0.05), &reference);
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn single_step_conserves_mass() {
        let s = LagrangianState::from_eulerian(&datum(100));
        let dt = default_dt(&datum(100));
        let next = step_hyperbolic(&s, dt, Gauge::ZeroAtOrigin).unwrap();
        assert!((next.mass_l1() - s.mass_l1()).abs() <= 1e-10);
        assert!((s.xi.integral(&next.jac) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn relax_constant_modulus_returns_input() {
        let g = PeriodicGrid::new(64).unwrap();
        let b = MagneticState::from_fn(g, 0.0, |x| ((2.0 * PI * x).cos(), (2.0 * PI * x).sin())).unwrap();
        let r = relax(&b, 1e-8, 10.0).unwrap();
        assert_eq!(r.state, b);
        assert_eq!(r.decay_rate, None);
    }

    #[test]
    fn relax_reaches_l1_modulus_and_decays_fast_enough() {
        let b = datum(200);
        let c0 = b.min_modulus_sq();
        let l1 = b.mass_l1();
        let r = relax(&b, 1e-8, 200.0).unwrap();
        let modulus = r.state.modulus();
        for v in &modulus {
            assert!((v - l1).abs() / l1 <= 1e-4, "{v} vs {l1}");
        }
        let rate = r.decay_rate.unwrap();
        assert!(rate >= 0.8 * c0, "rate {rate} vs c0 {c0}");
    }

    #[test]
    fn relax_rejects_vanishing_modulus() {
        let g = PeriodicGrid::new(64).unwrap();
        let b = MagneticState::from_fn(g, 0.0, |x| ((2.0 * PI * x).cos(), 0.0)).unwrap();
        assert!(matches!(relax(&b, 1e-8, 10.0), Err(Error::ModulusVanishes { .. })));
    }

    #[test]
    fn relax_reports_no_convergence() {
        assert!(matches!(relax(&datum(64), 1e-12, 0.5), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn trajectory_estimates() {
        let b = datum(128);
        let c0 = b.min_modulus_sq();
        let sup0 = b.max_modulus_sq();
        let l1 = b.mass_l1();
        let cfg = HyperbolicConfig { dt: default_dt(&b), t_end: 8.0, record_every: 10, gauge: Gauge::ZeroAtOrigin };
        let traj = run_hyperbolic(&b, &cfg).unwrap();
        let (m0, p0) = (traj[0].mass_l1(), traj[0].psi_l2());
        let mut prev_energy = traj[0].energy();
        for s in &traj {
            let m2 = s.modulus_sq();
            assert!(m2.iter().all(|v| *v >= c0 * (1.0 - 1e-10)));
            assert!(m2.iter().all(|v| *v <= sup0 * (1.0 + 1e-10)));
            assert!((s.mass_l1() - m0).abs() / m0 <= 1e-8);
            assert!(s.energy() <= prev_energy + 1e-12);
            prev_energy = s.energy();
            assert!(s.psi_l2() <= 1.1 * p0 * (-l1 * l1 * s.t / 2.0).exp(), "t = {}", s.t);
        }
    }

    #[test]
    fn winding_field_resamples() {
        let g = PeriodicGrid::new(128).unwrap();
        let b = MagneticState::from_fn(
            g,
            0.0,
            polar_field(|x| 1.0 + 0.2 * (2.0 * PI * x).sin(), |x| 2.0 * PI * x + 0.3 * (2.0 * PI * x).cos()),
        )
        .unwrap();
        let s = LagrangianState::from_eulerian(&b);
        let back = s.to_eulerian(0.0).unwrap();
        assert!(max_dev(&back.b1, &b.b1) < 1e-12);
        assert!(max_dev(&back.b2, &b.b2) < 1e-12);
        let r = relax(&b, 1e-9, 200.0).unwrap();
        assert_eq!(fields::to_angle(&r.state).unwrap().n_turns, 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn mass_is_conserved(a in 0.0..0.4f64, k in 1u32..3, w in -1.0..1.0f64, turns in -1i32..=1) {
            let g = PeriodicGrid::new(64).unwrap();
            let b = MagneticState::from_fn(g, 0.0, polar_field(
                move |x| 1.0 + a * (2.0 * PI * k as f64 * x).cos(),
                move |x| 2.0 * PI * turns as f64 * x + w * (2.0 * PI * x).sin(),
            )).unwrap();
            let cfg = HyperbolicConfig { dt: default_dt(&b), t_end: 2.0, record_every: 20, gauge: Gauge::ZeroMean };
            let traj = run_hyperbolic(&b, &cfg).unwrap();
            let m0 = traj[0].mass_l1();
            for s in &traj {
                prop_assert!((s.mass_l1() - m0).abs() / m0 <= 1e-8);
            }
        }
    }
}

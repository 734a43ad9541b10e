//! Semi-implicit finite-difference scheme for the limit angle dynamics
//!
//! ```text
//! ∂_τθ + u ∂_xθ = ∂_x²θ,   u(x) = −∫₀ˣ (∂_xθ)² + x ∫ (∂_xθ)²,
//! R' = −R ∫ (∂_xθ)²,
//! ```
//!
//! with blow-up detection, plus the flux-form solver for `φ = ∂_xθ` used by
//! the virial experiments.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::AngleState;
use crate::grid::PeriodicGrid;
use crate::linalg::CyclicTridiagonal;

/// Velocity by the two-stencil trapezoid sum of the published scheme.
///
/// With `f_k = ((θ_{k+1} − θ_{k−1}) / 2δx)²`,
/// `u_j = −(δx/2) Σ_{k=1}^{j} (f_k + f_{k−1}) + x_j (δx/2) Σ_{k=1}^{m} (f_k + f_{k−1})`.
/// The empty sum at `j = 0` gives `u_0 = 0`; the second sum runs over the
/// whole period so that `u_m = u_0`.
pub fn scheme_velocity(theta: &AngleState) -> Vec<f64> {
    let grid = theta.grid;
    let m = grid.len();
    let dx = grid.dx();
    let f: Vec<f64> = theta.dtheta().into_iter().map(|v| v * v).collect();
    let pair = |k: usize| f[k % m] + f[(k + m - 1) % m];
    let total: f64 = 0.5 * dx * (1..=m).map(pair).sum::<f64>();
    let mut u = Vec::with_capacity(m);
    let mut acc = 0.0;
    u.push(0.0);
    for j in 1..m {
        acc += pair(j);
        u.push(-0.5 * dx * acc + grid.x(j) * total);
    }
    u
}

/// One Crank–Nicolson step of the angle equation with frozen velocity `u`.
///
/// Works on the periodic part `ζ`; the linear part `2πN x` contributes the
/// constant `2πN` to the centred difference and nothing to the Laplacian.
pub fn cn_step(theta: &AngleState, u: &[f64], dt: f64) -> Result<AngleState> {
    let grid = theta.grid;
    let m = grid.len();
    let dx = grid.dx();
    let z = &theta.zeta;
    let adv = dt / (4.0 * dx);
    let dif = dt / (2.0 * dx * dx);
    let slope = 2.0 * PI * theta.n_turns as f64;
    let lower = u.iter().map(|uj| -adv * uj - dif).collect();
    let upper = u.iter().map(|uj| adv * uj - dif).collect();
    let mat = CyclicTridiagonal::new(lower, vec![1.0 + 2.0 * dif; m], upper);
    let rhs: Vec<f64> = (0..m)
        .map(|j| {
            let (l, r) = ((j + m - 1) % m, (j + 1) % m);
            z[j] - adv * u[j] * (z[r] - z[l]) + dif * (z[r] + z[l] - 2.0 * z[j]) - dt * u[j] * slope
        })
        .collect();
    let zeta = mat.solve(&rhs)?;
    Ok(AngleState { grid, zeta, n_turns: theta.n_turns, radius: theta.radius, t: theta.t + dt })
}

/// `R e^{−dt ∫(d1θ)²}`.
pub fn radius_step(radius: f64, theta: &AngleState, dt: f64) -> f64 {
    let f: Vec<f64> = theta.dtheta().into_iter().map(|v| v * v).collect();
    radius * (-dt * theta.grid.integral(&f)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRunConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Detection fires once `‖d1θ‖_∞` exceeds this.
    #[serde(default = "default_threshold")]
    pub blowup_threshold: f64,
    /// Detection also fires once a single cell carries this fraction of the
    /// initial oscillation, `δx ‖d1θ‖_∞ ≥ fraction · osc(θ₀)`: the profile is
    /// then a numerical jump and the grid can no longer follow the slope.
    #[serde(default = "default_resolution_fraction")]
    pub resolution_fraction: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_threshold() -> f64 {
    1e6
}

fn default_resolution_fraction() -> f64 {
    0.25
}

fn default_record_every() -> usize {
    1
}

impl LimitRunConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            blowup_threshold: default_threshold(),
            resolution_fraction: default_resolution_fraction(),
            record_every: default_record_every(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_end >= self.dt) {
            return Err(Error::InvalidConfig(format!(
                "need dt > 0 and t_end >= dt (dt = {}, t_end = {})",
                self.dt, self.t_end
            )));
        }
        if !(self.blowup_threshold > 0.0) || !(self.resolution_fraction > 0.0) {
            return Err(Error::InvalidConfig("blow-up thresholds must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// Scalars tracked at every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitSample {
    pub t: f64,
    pub dtheta_inf: f64,
    pub dtheta_l2: f64,
    /// Trapezoid-in-time `∫₀ᵗ ‖d1θ‖⁴_{L²}`.
    pub l4_accumulator: f64,
    pub oscillation: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupCriterion {
    Threshold,
    Resolution,
    NonFinite,
}

/// Linear fit `1/‖d1θ‖²_∞ ≈ alpha + beta t` over the approach to detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub alpha: f64,
    pub beta: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub t_detect: f64,
    pub step: usize,
    pub criterion: BlowupCriterion,
    pub dtheta_inf: f64,
    pub radius: f64,
    pub growth_fit: Option<GrowthFit>,
    /// Zero of the growth fit, `−alpha/beta`.
    pub t_star_estimate: Option<f64>,
    /// Ratio of the L⁴ accumulator at detection to its value at 90% of the
    /// detection time.
    pub l4_growth: Option<f64>,
    /// Set when `l4_growth` exceeds 10³.
    pub l4_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRun {
    pub frames: Vec<AngleState>,
    pub series: Vec<LimitSample>,
    pub blowup: Option<BlowupReport>,
}

fn sample(theta: &AngleState, l4: f64) -> LimitSample {
    let d = theta.dtheta();
    LimitSample {
        t: theta.t,
        dtheta_inf: PeriodicGrid::max_abs(&d),
        dtheta_l2: theta.grid.l2(&d),
        l4_accumulator: l4,
        oscillation: PeriodicGrid::oscillation(&theta.theta()),
        radius: theta.radius,
    }
}

/// Advances to `t_end` or until blow-up is detected.
///
/// The frame at detection is kept, so the last frame always shows the
/// profile that triggered the report.
pub fn run_limit(theta0: &AngleState, cfg: &LimitRunConfig) -> Result<LimitRun> {
    cfg.validate()?;
    let dx = theta0.grid.dx();
    let osc0 = PeriodicGrid::oscillation(&theta0.theta());
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let t0 = theta0.t;
    let mut theta = theta0.clone();
    let mut l4 = 0.0;
    let first = sample(&theta, 0.0);
    let mut series = vec![first];
    let mut frames = vec![theta.clone()];
    let mut blowup = None;
    for n in 1..=steps {
        let u = scheme_velocity(&theta);
        let radius = radius_step(theta.radius, &theta, cfg.dt);
        let mut next = cn_step(&theta, &u, cfg.dt)?;
        next.radius = radius;
        next.t = t0 + n as f64 * cfg.dt;
        let finite = next.zeta.iter().all(|v| v.is_finite());
        let mut s = if finite {
            sample(&next, 0.0)
        } else {
            LimitSample { t: next.t, dtheta_inf: f64::INFINITY, dtheta_l2: f64::INFINITY, l4_accumulator: f64::INFINITY, oscillation: f64::INFINITY, radius }
        };
        let prev = series[series.len() - 1];
        l4 += 0.5 * cfg.dt * (prev.dtheta_l2.powi(4) + s.dtheta_l2.powi(4));
        s.l4_accumulator = l4;
        series.push(s);
        let criterion = if !finite {
            Some(BlowupCriterion::NonFinite)
        } else if s.dtheta_inf > cfg.blowup_threshold {
            Some(BlowupCriterion::Threshold)
        } else if dx * s.dtheta_inf >= cfg.resolution_fraction * osc0 {
            Some(BlowupCriterion::Resolution)
        } else {
            None
        };
        theta = next;
        if let Some(criterion) = criterion {
            frames.push(theta.clone());
            blowup = Some(blowup_report(&series, n, criterion));
            break;
        }
        if n % cfg.record_every == 0 || n == steps {
            frames.push(theta.clone());
        }
    }
    Ok(LimitRun { frames, series, blowup })
}

fn blowup_report(series: &[LimitSample], step: usize, criterion: BlowupCriterion) -> BlowupReport {
    let last = series[series.len() - 1];
    let t0 = series[0].t;
    // approach window: the final fifth of the pre-detection samples
    let pre = &series[..series.len() - 1];
    let start = pre.len() - (pre.len() / 5).max(2).min(pre.len());
    let pts: Vec<(f64, f64)> = pre[start..]
        .iter()
        .filter(|s| s.dtheta_inf.is_finite() && s.dtheta_inf > 0.0)
        .map(|s| (s.t, 1.0 / (s.dtheta_inf * s.dtheta_inf)))
        .collect();
    let growth_fit = linear_fit(&pts).map(|(alpha, beta)| GrowthFit { alpha, beta, samples: pts.len() });
    let t_star_estimate = growth_fit.filter(|g| g.beta < 0.0).map(|g| -g.alpha / g.beta);
    let t90 = t0 + 0.9 * (last.t - t0);
    let at90 = series.iter().take_while(|s| s.t <= t90).last().map(|s| s.l4_accumulator);
    let l4_growth = at90.filter(|v| *v > 0.0).map(|v| last.l4_accumulator / v);
    BlowupReport {
        t_detect: last.t,
        step,
        criterion,
        dtheta_inf: last.dtheta_inf,
        radius: last.radius,
        growth_fit,
        t_star_estimate,
        l4_growth,
        l4_flag: l4_growth.is_some_and(|g| g > 1e3),
    }
}

/// Least-squares line `y = a + b t`.
pub(crate) fn linear_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let b = sxy / sxx;
    Some((my - b * mt, b))
}

/// Slope field `φ = ∂_xθ` on the grid, with its time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiState {
    pub grid: PeriodicGrid,
    pub phi: Vec<f64>,
    pub t: f64,
}

impl PhiState {
    pub fn new(grid: PeriodicGrid, phi: Vec<f64>) -> Result<Self> {
        if phi.len() != grid.len() {
            return Err(Error::InvalidConfig(format!(
                "slope length {} does not match grid of {} nodes",
                phi.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, phi, t: 0.0 })
    }

    /// `M = ∫ φ`.
    pub fn mass(&self) -> f64 {
        self.grid.integral(&self.phi)
    }

    /// `V = ∫ x² φ` on the chart `[−½, ½)`.
    pub fn second_moment(&self) -> f64 {
        let w: Vec<f64> = (0..self.grid.len()).map(|j| self.grid.centered_x(j).powi(2) * self.phi[j]).collect();
        self.grid.integral(&w)
    }

    /// `max_j |φ_j − φ_{m−j}|`.
    pub fn evenness_defect(&self) -> f64 {
        let m = self.grid.len();
        (1..m).map(|j| (self.phi[j] - self.phi[m - j]).abs()).fold(0.0, f64::max)
    }
}

/// `u` with `∂_x u = ∫φ² − φ²` and `u(0) = 0`.
pub fn phi_velocity(s: &PhiState) -> Vec<f64> {
    let sq: Vec<f64> = s.phi.iter().map(|v| v * v).collect();
    let mean = s.grid.integral(&sq);
    let g: Vec<f64> = sq.iter().map(|v| mean - v).collect();
    s.grid.cumulative(&g)
}

/// Crank–Nicolson step of `∂_tφ + ∂_x(uφ) = ∂_x²φ` in conservative form.
pub fn phi_step(s: &PhiState, dt: f64) -> Result<PhiState> {
    let m = s.grid.len();
    let dx = s.grid.dx();
    let u = phi_velocity(s);
    let adv = dt / (4.0 * dx);
    let dif = dt / (2.0 * dx * dx);
    let lower = (0..m).map(|j| -adv * u[(j + m - 1) % m] - dif).collect();
    let upper = (0..m).map(|j| adv * u[(j + 1) % m] - dif).collect();
    let mat = CyclicTridiagonal::new(lower, vec![1.0 + 2.0 * dif; m], upper);
    let p = &s.phi;
    let rhs: Vec<f64> = (0..m)
        .map(|j| {
            let (l, r) = ((j + m - 1) % m, (j + 1) % m);
            p[j] - adv * (u[r] * p[r] - u[l] * p[l]) + dif * (p[r] + p[l] - 2.0 * p[j])
        })
        .collect();
    Ok(PhiState { grid: s.grid, phi: mat.solve(&rhs)?, t: s.t + dt })
}

/// Runs the slope system, stopping early once `‖φ‖_∞` exceeds `cap`.
pub fn run_phi(phi0: &PhiState, dt: f64, t_end: f64, record_every: usize, cap: f64) -> Result<Vec<PhiState>> {
    if !(dt > 0.0) || !(t_end >= dt) || record_every == 0 {
        return Err(Error::InvalidConfig(format!("need dt > 0, t_end >= dt, record_every >= 1 (dt = {dt}, t_end = {t_end})")));
    }
    let steps = (t_end / dt).round() as usize;
    let mut s = phi0.clone();
    let t0 = s.t;
    let mut out = vec![s.clone()];
    for n in 1..=steps {
        s = phi_step(&s, dt)?;
        s.t = t0 + n as f64 * dt;
        let big = PeriodicGrid::max_abs(&s.phi);
        if n % record_every == 0 || n == steps || !(big <= cap) {
            out.push(s.clone());
        }
        if !(big <= cap) {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{velocity_from_angle, Gauge};
    use crate::initial::{even_bump, moffatt_global};
    use proptest::prelude::*;

    fn max_dev(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    fn grid(m: usize) -> PeriodicGrid {
        PeriodicGrid::new(m).unwrap()
    }

    #[test]
    fn velocity_examples() {
        let g = grid(200);
        let c = AngleState::new(g, vec![1.3; 200], 0, 1.0).unwrap();
        assert!(PeriodicGrid::max_abs(&scheme_velocity(&c)) == 0.0);
        let lin = AngleState::new(g, vec![0.0; 200], 1, 1.0).unwrap();
        assert!(PeriodicGrid::max_abs(&scheme_velocity(&lin)) <= 1e-12);
        let s = AngleState::from_fn(g, 1.0, |x| (2.0 * PI * x).sin()).unwrap();
        let u = scheme_velocity(&s);
        let exact = g.sample(|x| -(PI / 2.0) * (4.0 * PI * x).sin());
        assert!(max_dev(&u, &exact) < 200.0 * g.dx() * g.dx());
        let v = velocity_from_angle(&s, Gauge::ZeroAtOrigin).u;
        assert!(max_dev(&u, &v) <= 5.0 * g.dx() * g.dx());
        assert!(max_dev(&u, &v) <= 1e-12);
    }

    #[test]
    fn constant_angle_is_unchanged() {
        let g = grid(64);
        let c = AngleState::new(g, vec![0.4; 64], 0, 2.0).unwrap();
        let next = cn_step(&c, &scheme_velocity(&c), 1e-3).unwrap();
        assert!(max_dev(&next.zeta, &c.zeta) < 1e-15);
        assert_eq!(radius_step(2.0, &c, 1e-3), 2.0);
    }

    #[test]
    fn frozen_zero_velocity_gives_cn_factor() {
        let g = grid(100);
        let dx = g.dx();
        let s = AngleState::from_fn(g, 1.0, |x| (2.0 * PI * x).sin()).unwrap();
        for dt in [1e-5, 1e-3, 0.1] {
            let kappa = dt * (2.0 - 2.0 * (2.0 * PI * dx).cos()) / (dx * dx);
            let rho = (1.0 - kappa / 2.0) / (1.0 + kappa / 2.0);
            let next = cn_step(&s, &vec![0.0; 100], dt).unwrap();
            let expect: Vec<f64> = s.zeta.iter().map(|v| rho * v).collect();
            assert!(max_dev(&next.zeta, &expect) <= 1e-12);
        }
    }

    #[test]
    fn radius_update_for_linear_angle() {
        let lin = AngleState::new(grid(50), vec![0.0; 50], 1, 1.0).unwrap();
        let r = radius_step(1.0, &lin, 0.01);
        assert!((r - (-0.01 * 4.0 * PI * PI).exp()).abs() < 1e-12);
        assert!((r - 0.6738).abs() < 1e-4);
    }

    #[test]
    fn winding_and_radius_along_run() {
        let g = grid(100);
        let s = AngleState::from_fn(g, 1.5, |x| 2.0 * PI * x + 0.5 * (2.0 * PI * x).sin()).unwrap();
        let run = run_limit(&s, &LimitRunConfig { record_every: 10, ..LimitRunConfig::new(1e-5, 5e-3) }).unwrap();
        assert!(run.blowup.is_none());
        for f in &run.frames {
            assert_eq!(crate::fields::winding_number(&f.theta()).unwrap(), 1);
        }
        for w in run.series.windows(2) {
            assert!(w[1].radius > 0.0 && w[1].radius <= w[0].radius);
        }
    }

    #[test]
    fn self_convergence_before_blowup() {
        let run = |m: usize, dt: f64| {
            let s = AngleState::from_fn(grid(m), 1.0, moffatt_global).unwrap();
            run_limit(&s, &LimitRunConfig::new(dt, 1e-3)).unwrap().frames.pop().unwrap()
        };
        let a = run(100, 4e-5);
        let b = run(200, 1e-5);
        let c = run(400, 2.5e-6);
        let coarse = |f: &AngleState, step: usize| f.theta().into_iter().step_by(step).collect::<Vec<_>>();
        let e1 = max_dev(&coarse(&a, 1), &coarse(&c, 4));
        let e2 = max_dev(&coarse(&b, 2), &coarse(&c, 4));
        // Richardson: with c as reference, e1/e2 = (1 - 1/16)/(1/4 - 1/16) = 5
        let ratio = e1 / e2;
        assert!(ratio > 3.5 && ratio < 6.5, "ratio {ratio}");
    }

    #[test]
    fn phi_velocity_is_odd_for_even_data() {
        let s = PhiState::new(grid(128), even_bump(4.0, 0.2, 128)).unwrap();
        let u = phi_velocity(&s);
        for j in 1..128 {
            assert!((u[j] + u[128 - j]).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_slope_is_steady() {
        let s = PhiState::new(grid(64), vec![3.0; 64]).unwrap();
        let next = phi_step(&s, 1e-3).unwrap();
        assert!(max_dev(&next.phi, &s.phi) < 1e-13);
        assert!((s.second_moment() - 3.0 / 12.0).abs() < 3.0 / (64.0 * 64.0));
    }

    #[test]
    fn phi_mass_conserved() {
        let s = PhiState::new(grid(200), even_bump(5.0, 0.15, 200)).unwrap();
        let traj = run_phi(&s, 1e-5, 5e-3, 50, 1e6).unwrap();
        let m0 = s.mass();
        for f in &traj {
            assert!((f.mass() - m0).abs() / m0 <= 1e-8);
            assert!(f.evenness_defect() < 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn oscillation_never_grows(a1 in -1.0..1.0f64, a2 in -1.0..1.0f64, a3 in -1.0..1.0f64) {
            let s = AngleState::from_fn(grid(100), 1.0, |x| {
                a1 * (2.0 * PI * x).sin() + a2 * (4.0 * PI * x).cos() + a3 * (6.0 * PI * x).sin()
            }).unwrap();
            let run = run_limit(&s, &LimitRunConfig::new(1e-5, 2e-3)).unwrap();
            prop_assert!(run.blowup.is_none());
            for w in run.series.windows(2) {
                prop_assert!(w[1].oscillation <= w[0].oscillation + 1e-10);
            }
        }

        #[test]
        fn winding_is_structural(n in -3i64..=3, a in 0.0..0.5f64) {
            let g = grid(128);
            let s = AngleState::from_fn(g, 1.0, |x| 2.0 * PI * n as f64 * x + a * (2.0 * PI * x).cos()).unwrap();
            let run = run_limit(&s, &LimitRunConfig { record_every: 20, ..LimitRunConfig::new(1e-5, 1e-3) }).unwrap();
            for f in &run.frames {
                prop_assert_eq!(crate::fields::winding_number(&f.theta()).unwrap(), n);
            }
        }
    }
}

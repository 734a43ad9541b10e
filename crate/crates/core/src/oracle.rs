//! Reference solvers used to validate the finite-difference schemes: a
//! Fourier–Galerkin truncation of the resistive system and an explicit
//! pseudo-spectral integrator for the angle dynamics.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{AngleState, MagneticState};
use crate::grid::PeriodicGrid;

/// Fourier coefficients `b̂_k`, `|k| ≤ n_modes`, stored at index `k + n_modes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralState {
    pub n_modes: usize,
    pub c1: Vec<Complex64>,
    pub c2: Vec<Complex64>,
    pub t: f64,
    pub epsilon: f64,
}

struct Transforms {
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Transforms {
    fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { len, fwd: planner.plan_fft_forward(len), inv: planner.plan_fft_inverse(len) }
    }

    /// Values at `j / len` of `Σ_{|k|≤n} c_k e^{2πikx}` (real part).
    fn to_physical(&self, c: &[Complex64]) -> Vec<f64> {
        let n = (c.len() - 1) / 2;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        for (i, v) in c.iter().enumerate() {
            let k = i as i64 - n as i64;
            buf[k.rem_euclid(self.len as i64) as usize] += v;
        }
        self.inv.process(&mut buf);
        buf.into_iter().map(|v| v.re).collect()
    }

    /// Coefficients `|k| ≤ n` of samples at `j / len`.
    fn to_spectral(&self, f: &[f64], n: usize) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = f.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        self.fwd.process(&mut buf);
        let scale = 1.0 / self.len as f64;
        (-(n as i64)..=n as i64).map(|k| buf[k.rem_euclid(self.len as i64) as usize] * scale).collect()
    }
}

fn wavenumber(i: usize, n: usize) -> f64 {
    2.0 * PI * (i as f64 - n as f64)
}

/// Evaluates a coefficient vector at arbitrary points by direct summation.
fn evaluate(c: &[Complex64], x: f64) -> f64 {
    let n = (c.len() - 1) / 2;
    c.iter()
        .enumerate()
        .map(|(i, v)| (v * Complex64::from_polar(1.0, wavenumber(i, n) * x)).re)
        .sum()
}

/// Coefficients `|k| ≤ n` of `f` from a periodic sampling fine enough to be
/// alias-free for band-limited data up to wavenumber `samples − n − 1`.
fn project(f: impl Fn(f64) -> f64, n: usize, samples: usize) -> Vec<Complex64> {
    let tr = Transforms::new(samples);
    let vals: Vec<f64> = (0..samples).map(|j| f(j as f64 / samples as f64)).collect();
    tr.to_spectral(&vals, n)
}

impl SpectralState {
    pub fn from_fn(n_modes: usize, epsilon: f64, f: impl Fn(f64) -> (f64, f64)) -> Result<Self> {
        if n_modes < 4 {
            return Err(Error::InvalidConfig(format!("n_modes must be >= 4, got {n_modes}")));
        }
        let samples = 8 * n_modes + 8;
        let c1 = project(|x| f(x).0, n_modes, samples);
        let c2 = project(|x| f(x).1, n_modes, samples);
        Ok(Self { n_modes, c1, c2, t: 0.0, epsilon })
    }

    /// Projection of grid samples; modes the grid cannot resolve are zero.
    pub fn from_state(b: &MagneticState, n_modes: usize) -> Result<Self> {
        if n_modes < 4 {
            return Err(Error::InvalidConfig(format!("n_modes must be >= 4, got {n_modes}")));
        }
        let m = b.grid.len();
        let keep = n_modes.min((m - 1) / 2);
        let tr = Transforms::new(m);
        let pad = |c: Vec<Complex64>| {
            let mut out = vec![Complex64::new(0.0, 0.0); 2 * n_modes + 1];
            out[n_modes - keep..=n_modes + keep].copy_from_slice(&c);
            out
        };
        Ok(Self {
            n_modes,
            c1: pad(tr.to_spectral(&b.b1, keep)),
            c2: pad(tr.to_spectral(&b.b2, keep)),
            t: b.t,
            epsilon: b.epsilon,
        })
    }

    /// `∫|b_n|² = Σ |b̂_k|²`.
    pub fn energy(&self) -> f64 {
        self.c1.iter().chain(&self.c2).map(|v| v.norm_sqr()).sum()
    }

    /// `∫|∂_x b_n|²`.
    pub fn gradient_energy(&self) -> f64 {
        let n = self.n_modes;
        (0..self.c1.len()).map(|i| wavenumber(i, n).powi(2) * (self.c1[i].norm_sqr() + self.c2[i].norm_sqr())).sum()
    }

    /// Samples the truncated series on `grid`.
    pub fn to_grid(&self, grid: PeriodicGrid) -> MagneticState {
        let b1 = grid.sample(|x| evaluate(&self.c1, x));
        let b2 = grid.sample(|x| evaluate(&self.c2, x));
        MagneticState { grid, b1, b2, t: self.t, epsilon: self.epsilon }
    }

    /// `P_n` applied to the coefficient vector: keep `|k| ≤ n`.
    pub fn truncate(&self, n: usize) -> SpectralState {
        let n = n.min(self.n_modes);
        let mut out = self.clone();
        for i in 0..self.c1.len() {
            if (i as i64 - self.n_modes as i64).unsigned_abs() as usize > n {
                out.c1[i] = Complex64::new(0.0, 0.0);
                out.c2[i] = Complex64::new(0.0, 0.0);
            }
        }
        out
    }
}

/// Evaluator of the Galerkin right-hand side on a padded grid.
///
/// The product `u b` is cubic in `b`, so the padded grid has at least
/// `4n + 1` points; every retained coefficient is then alias-free.
pub struct Galerkin {
    n: usize,
    tr: Transforms,
}

/// Derivatives of both coefficient vectors, and `∫ψ²` of the current state.
pub struct GalerkinRates {
    pub d1: Vec<Complex64>,
    pub d2: Vec<Complex64>,
    pub dissipation: f64,
}

impl Galerkin {
    pub fn new(n_modes: usize) -> Self {
        Self { n: n_modes, tr: Transforms::new((4 * n_modes + 1).next_power_of_two()) }
    }

    pub fn rhs(&self, c1: &[Complex64], c2: &[Complex64], epsilon: f64) -> GalerkinRates {
        let n = self.n;
        let b1 = self.tr.to_physical(c1);
        let b2 = self.tr.to_physical(c2);
        let m2: Vec<f64> = b1.iter().zip(&b2).map(|(a, b)| a * a + b * b).collect();
        let m2_hat = self.tr.to_spectral(&m2, 2 * n);
        // 2 ∂_x u = |b|² − ∫|b|², zero-mean gauge
        let zero = Complex64::new(0.0, 0.0);
        let u_hat: Vec<Complex64> = m2_hat
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let k = wavenumber(i, 2 * n);
                if i == 2 * n { zero } else { v / Complex64::new(0.0, 2.0 * k) }
            })
            .collect();
        let dissipation: f64 =
            m2_hat.iter().enumerate().filter(|(i, _)| *i != 2 * n).map(|(_, v)| 0.25 * v.norm_sqr()).sum();
        let u = self.tr.to_physical(&u_hat);
        let flux = |b: &[f64], c: &[Complex64]| -> Vec<Complex64> {
            let ub: Vec<f64> = u.iter().zip(b).map(|(x, y)| x * y).collect();
            let ub_hat = self.tr.to_spectral(&ub, n);
            ub_hat
                .iter()
                .zip(c)
                .enumerate()
                .map(|(i, (f, b))| {
                    let k = wavenumber(i, n);
                    -Complex64::new(0.0, k) * f - epsilon * k * k * b
                })
                .collect()
        };
        GalerkinRates { d1: flux(&b1, c1), d2: flux(&b2, c2), dissipation }
    }
}

/// Convenience wrapper: the Galerkin derivative of `s`.
pub fn galerkin_rhs(s: &SpectralState) -> (Vec<Complex64>, Vec<Complex64>) {
    let r = Galerkin::new(s.n_modes).rhs(&s.c1, &s.c2, s.epsilon);
    (r.d1, r.d2)
}

/// Explicit diffusion bound `2.5 / (ε (2π n)²)`.
pub fn spectral_dt_bound(epsilon: f64, n_modes: usize) -> f64 {
    2.5 / (epsilon * (2.0 * PI * n_modes as f64).powi(2))
}

fn axpy(a: &[Complex64], h: f64, d: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(d).map(|(x, y)| x + y * h).collect()
}

/// Classical RK4 in coefficient space.
pub fn run_spectral(
    b0: &SpectralState,
    dt: f64,
    t_end: f64,
    record_every: usize,
) -> Result<Vec<SpectralState>> {
    if !(dt > 0.0) || !(t_end >= dt) || record_every == 0 {
        return Err(Error::InvalidConfig(format!("need dt > 0, t_end >= dt, record_every >= 1 (dt = {dt}, t_end = {t_end})")));
    }
    let bound = spectral_dt_bound(b0.epsilon, b0.n_modes);
    if dt > bound {
        return Err(Error::StabilityViolated { dt, bound });
    }
    let g = Galerkin::new(b0.n_modes);
    let eps = b0.epsilon;
    let steps = (t_end / dt).round() as usize;
    let mut s = b0.clone();
    let t0 = s.t;
    let mut out = vec![s.clone()];
    for n in 1..=steps {
        let k1 = g.rhs(&s.c1, &s.c2, eps);
        let k2 = g.rhs(&axpy(&s.c1, 0.5 * dt, &k1.d1), &axpy(&s.c2, 0.5 * dt, &k1.d2), eps);
        let k3 = g.rhs(&axpy(&s.c1, 0.5 * dt, &k2.d1), &axpy(&s.c2, 0.5 * dt, &k2.d2), eps);
        let k4 = g.rhs(&axpy(&s.c1, dt, &k3.d1), &axpy(&s.c2, dt, &k3.d2), eps);
        for i in 0..s.c1.len() {
            s.c1[i] += (k1.d1[i] + (k2.d1[i] + k3.d1[i]) * 2.0 + k4.d1[i]) * (dt / 6.0);
            s.c2[i] += (k1.d2[i] + (k2.d2[i] + k3.d2[i]) * 2.0 + k4.d2[i]) * (dt / 6.0);
        }
        s.t = t0 + n as f64 * dt;
        if !s.c1.iter().chain(&s.c2).all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NumericalInstability { t: s.t, reason: "non-finite coefficients".into() });
        }
        if n % record_every == 0 || n == steps {
            out.push(s.clone());
        }
    }
    Ok(out)
}

/// Trigonometric interpolation of periodic samples onto `m_out` nodes.
pub fn fourier_resample(values: &[f64], m_out: usize) -> Vec<f64> {
    let m = values.len();
    let tr = Transforms::new(m);
    let n = (m - 1) / 2;
    let mut c = tr.to_spectral(values, n);
    if m % 2 == 0 {
        // split the Nyquist mode symmetrically
        let mut buf: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        tr.fwd.process(&mut buf);
        let nyq = buf[m / 2] / (2.0 * m as f64);
        c.insert(0, nyq);
        c.push(nyq);
    }
    (0..m_out).map(|j| evaluate(&c, j as f64 / m_out as f64)).collect()
}

/// Explicit RK4 reference for the angle equation with spectral derivatives
/// on an `m_fine`-point grid.
///
/// `θ₀` is carried over by trigonometric interpolation of its periodic part.
/// Returns the states at every `record_every` steps, on the fine grid.
pub fn run_limit_explicit(
    theta0: &AngleState,
    m_fine: usize,
    dt_fine: f64,
    t_end: f64,
    record_every: usize,
) -> Result<Vec<AngleState>> {
    let grid = PeriodicGrid::new(m_fine)?;
    let dx = grid.dx();
    let bound = 0.25 * dx * dx;
    if dt_fine > bound {
        return Err(Error::StabilityViolated { dt: dt_fine, bound });
    }
    if !(dt_fine > 0.0) || !(t_end >= dt_fine) || record_every == 0 {
        return Err(Error::InvalidConfig(format!("need dt > 0, t_end >= dt, record_every >= 1 (dt = {dt_fine}, t_end = {t_end})")));
    }
    let tr = Transforms::new(m_fine);
    let n = (m_fine - 1) / 2;
    let slope = 2.0 * PI * theta0.n_turns as f64;
    let rhs = |z: &[f64]| -> Vec<f64> {
        let c = tr.to_spectral(z, n);
        let ik = |i: usize| Complex64::new(0.0, wavenumber(i, n));
        let dz: Vec<Complex64> = c.iter().enumerate().map(|(i, v)| v * ik(i)).collect();
        let d2z: Vec<Complex64> = c.iter().enumerate().map(|(i, v)| -v * wavenumber(i, n).powi(2)).collect();
        let zx = tr.to_physical(&dz);
        let zxx = tr.to_physical(&d2z);
        let f: Vec<f64> = zx.iter().map(|v| (v + slope).powi(2)).collect();
        // u = −(F(x) − F(0)) with F the periodic antiderivative of f − ∫f
        let fh = tr.to_spectral(&f, n);
        let anti: Vec<Complex64> = fh
            .iter()
            .enumerate()
            .map(|(i, v)| if i == n { Complex64::new(0.0, 0.0) } else { v / ik(i) })
            .collect();
        let big_f = tr.to_physical(&anti);
        (0..m_fine)
            .map(|j| {
                let u = big_f[0] - big_f[j];
                -u * (zx[j] + slope) + zxx[j]
            })
            .collect()
    };
    let mut z = fourier_resample(&theta0.zeta, m_fine);
    let steps = (t_end / dt_fine).round() as usize;
    let state = |z: &[f64], t: f64| AngleState { grid, zeta: z.to_vec(), n_turns: theta0.n_turns, radius: theta0.radius, t };
    let mut out = vec![state(&z, theta0.t)];
    let add = |a: &[f64], h: f64, d: &[f64]| -> Vec<f64> { a.iter().zip(d).map(|(x, y)| x + h * y).collect() };
    for s in 1..=steps {
        let k1 = rhs(&z);
        let k2 = rhs(&add(&z, 0.5 * dt_fine, &k1));
        let k3 = rhs(&add(&z, 0.5 * dt_fine, &k2));
        let k4 = rhs(&add(&z, dt_fine, &k3));
        for j in 0..m_fine {
            z[j] += dt_fine / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if s % record_every == 0 || s == steps {
            out.push(state(&z, theta0.t + s as f64 * dt_fine));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::relaxation_datum;
    use proptest::prelude::*;

    fn max_cdev(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn max_dev(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn unit_circle_diffuses() {
        let eps = 0.3;
        let s = SpectralState::from_fn(8, eps, |x| ((2.0 * PI * x).cos(), (2.0 * PI * x).sin())).unwrap();
        let (d1, d2) = galerkin_rhs(&s);
        let k2 = (2.0 * PI).powi(2);
        let e1: Vec<Complex64> = s.c1.iter().map(|c| -eps * k2 * c).collect();
        let e2: Vec<Complex64> = s.c2.iter().map(|c| -eps * k2 * c).collect();
        assert!(max_cdev(&d1, &e1) < 1e-12);
        assert!(max_cdev(&d2, &e2) < 1e-12);
    }

    #[test]
    fn constant_has_zero_rhs() {
        let s = SpectralState::from_fn(6, 0.1, |_| (0.5, 2.0)).unwrap();
        let (d1, d2) = galerkin_rhs(&s);
        assert!(d1.iter().chain(&d2).all(|v| v.norm() < 1e-13));
    }

    /// Direct-sum evaluation of `P_n[−∂_x(u b)] + ε∂_x²b` with `q` quadrature nodes.
    fn direct_rhs(s: &SpectralState, q: usize) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = s.n_modes as i64;
        let xs: Vec<f64> = (0..q).map(|j| j as f64 / q as f64).collect();
        let eval = |c: &[Complex64], x: f64| -> f64 {
            (-n..=n).map(|k| (c[(k + n) as usize] * Complex64::from_polar(1.0, 2.0 * PI * k as f64 * x)).re).sum()
        };
        let coef = |vals: &[f64], k: i64| -> Complex64 {
            xs.iter().zip(vals).map(|(x, v)| Complex64::from_polar(*v, -2.0 * PI * k as f64 * x)).sum::<Complex64>()
                / q as f64
        };
        let b1: Vec<f64> = xs.iter().map(|x| eval(&s.c1, *x)).collect();
        let b2: Vec<f64> = xs.iter().map(|x| eval(&s.c2, *x)).collect();
        let m2: Vec<f64> = b1.iter().zip(&b2).map(|(a, b)| a * a + b * b).collect();
        let u: Vec<f64> = xs
            .iter()
            .map(|x| {
                (1..=2 * n)
                    .map(|k| {
                        let c = coef(&m2, k) / Complex64::new(0.0, 4.0 * PI * k as f64);
                        2.0 * (c * Complex64::from_polar(1.0, 2.0 * PI * k as f64 * x)).re
                    })
                    .sum()
            })
            .collect();
        let side = |b: &[f64], c: &[Complex64]| -> Vec<Complex64> {
            let ub: Vec<f64> = u.iter().zip(b).map(|(x, y)| x * y).collect();
            (-n..=n)
                .map(|k| {
                    let w = 2.0 * PI * k as f64;
                    -Complex64::new(0.0, w) * coef(&ub, k) - s.epsilon * w * w * c[(k + n) as usize]
                })
                .collect()
        };
        (side(&b1, &s.c1), side(&b2, &s.c2))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn rhs_matches_direct_quadrature(
            re in prop::collection::vec(-0.5..0.5f64, 18),
            im in prop::collection::vec(-0.5..0.5f64, 18),
            n in 4usize..=8,
        ) {
            let mut s = SpectralState::from_fn(n, 0.07, |_| (1.0, 0.0)).unwrap();
            // Hermitian coefficients for real fields
            for k in 1..=n {
                let a = Complex64::new(re[k], im[k]) / (k * k) as f64;
                let b = Complex64::new(re[k + 8], im[k + 8]) / (k * k) as f64;
                s.c1[n + k] = a;
                s.c1[n - k] = a.conj();
                s.c2[n + k] = b;
                s.c2[n - k] = b.conj();
            }
            let (d1, d2) = galerkin_rhs(&s);
            let (e1, e2) = direct_rhs(&s, 4 * n + 1);
            prop_assert!(max_cdev(&d1, &e1) <= 1e-10);
            prop_assert!(max_cdev(&d2, &e2) <= 1e-10);
        }

        #[test]
        fn projection_is_idempotent_and_symmetric(
            a in prop::collection::vec(-1.0..1.0f64, 17),
            b in prop::collection::vec(-1.0..1.0f64, 17),
            n in 0usize..8,
        ) {
            let mk = |v: &[f64]| SpectralState {
                n_modes: 8,
                c1: v.iter().map(|x| Complex64::new(*x, 0.5 * x)).collect(),
                c2: v.iter().map(|x| Complex64::new(-x, 0.0)).collect(),
                t: 0.0,
                epsilon: 0.0,
            };
            let (sa, sb) = (mk(&a), mk(&b));
            let pa = sa.truncate(n);
            prop_assert_eq!(pa.truncate(n), pa.clone());
            let inner = |x: &SpectralState, y: &SpectralState| -> Complex64 {
                x.c1.iter().zip(&y.c1).chain(x.c2.iter().zip(&y.c2)).map(|(p, q)| p * q.conj()).sum()
            };
            prop_assert!((inner(&pa, &sb) - inner(&sa, &sb.truncate(n))).norm() == 0.0);
        }
    }

    #[test]
    fn energy_law_along_run() {
        let eps = 0.05;
        let n = 16;
        let s = SpectralState::from_fn(n, eps, relaxation_datum).unwrap();
        let dt = 1e-4;
        let traj = run_spectral(&s, dt, 0.05, 1).unwrap();
        let g = Galerkin::new(n);
        for w in traj.windows(3) {
            assert!(w[2].energy() <= w[1].energy());
            let de = (w[2].energy() - w[0].energy()) / (2.0 * dt);
            let mid = &w[1];
            let d = g.rhs(&mid.c1, &mid.c2, eps).dissipation;
            let balance = 0.5 * de + d + eps * mid.gradient_energy();
            assert!(balance.abs() < 1e-6, "{balance}");
        }
    }

    #[test]
    fn spectral_self_convergence() {
        let run = |n: usize| {
            let s = SpectralState::from_fn(n, 0.05, relaxation_datum).unwrap();
            run_spectral(&s, 2e-4, 0.02, 1000).unwrap().pop().unwrap().to_grid(PeriodicGrid::new(64).unwrap())
        };
        let (a, b) = (run(24), run(48));
        assert!(max_dev(&a.b1, &b.b1).max(max_dev(&a.b2, &b.b2)) < 1e-8);
    }

    #[test]
    fn stability_bound_enforced() {
        let s = SpectralState::from_fn(32, 0.1, relaxation_datum).unwrap();
        let bound = spectral_dt_bound(0.1, 32);
        assert!(matches!(run_spectral(&s, 1.01 * bound, 1.0, 1), Err(Error::StabilityViolated { .. })));
    }

    #[test]
    fn grid_projection_round_trip() {
        let g = PeriodicGrid::new(64).unwrap();
        let b = MagneticState::from_fn(g, 0.0, relaxation_datum).unwrap();
        let s = SpectralState::from_state(&b, 40).unwrap();
        let back = s.to_grid(g);
        assert!(max_dev(&back.b1, &b.b1) < 1e-12);
    }

    #[test]
    fn resample_trigonometric() {
        let vals: Vec<f64> = (0..40).map(|j| (2.0 * PI * 3.0 * j as f64 / 40.0).sin() + 0.5).collect();
        let out = fourier_resample(&vals, 97);
        let exact: Vec<f64> = (0..97).map(|j| (2.0 * PI * 3.0 * j as f64 / 97.0).sin() + 0.5).collect();
        assert!(max_dev(&out, &exact) < 1e-12);
    }

    #[test]
    fn explicit_limit_constant_and_heat_mode() {
        let g = PeriodicGrid::new(32).unwrap();
        let c = AngleState::new(g, vec![0.3; 32], 0, 1.0).unwrap();
        let out = run_limit_explicit(&c, 64, 5e-5, 1e-3, 1000).unwrap();
        assert!(out.last().unwrap().zeta.iter().all(|v| (v - 0.3).abs() < 1e-13));

        let a = 1e-4;
        let s = AngleState::from_fn(g, 1.0, |x| a * (2.0 * PI * x).sin()).unwrap();
        let t = 1e-2;
        let out = run_limit_explicit(&s, 64, 5e-5, t, 1000).unwrap();
        let last = out.last().unwrap();
        let decay = (-4.0 * PI * PI * t).exp();
        let exact: Vec<f64> = last.grid.sample(|x| a * decay * (2.0 * PI * x).sin());
        assert!(max_dev(&last.zeta, &exact) < 1e-10 * a + a * a);
    }

    #[test]
    fn explicit_limit_stability_bound() {
        let g = PeriodicGrid::new(32).unwrap();
        let c = AngleState::new(g, vec![0.0; 32], 0, 1.0).unwrap();
        let dx = 1.0 / 64.0;
        assert!(matches!(
            run_limit_explicit(&c, 64, 0.3 * dx * dx, 1e-3, 1),
            Err(Error::StabilityViolated { .. })
        ));
    }
}

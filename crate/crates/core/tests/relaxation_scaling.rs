//! Fast relaxation of `ψ = ∂_x u` in the resistive system and the size of
//! its ε-floor.

use std::f64::consts::PI;

use magrelax::diagnostics::{check_psi_decay, PsiDecayFit};
use magrelax::full::step_full;
use magrelax::initial::{polar_field, relaxation_datum};
use magrelax::{Gauge, MagneticState, PeriodicGrid};

/// `‖ψ‖_∞` after every step.
fn psi_series(b0: &MagneticState, dt: f64, t_end: f64) -> Vec<(f64, f64)> {
    let steps = (t_end / dt).round() as usize;
    let mut b = b0.clone();
    let mut out = vec![(0.0, PeriodicGrid::max_abs(&b.psi()))];
    for n in 1..=steps {
        b = step_full(&b, dt, Gauge::ZeroAtOrigin).unwrap();
        out.push((n as f64 * dt, PeriodicGrid::max_abs(&b.psi())));
    }
    out
}

/// Strong field `a(1 + 0.3 cos 2πx) e^{i sin 2πx}`: relaxation is over
/// before the angle has time to diffuse, so the floor reflects a nearly
/// frozen angle profile.
fn fit_floor(a: f64, eps: f64) -> PsiDecayFit {
    let g = PeriodicGrid::new(200).unwrap();
    let b0 = MagneticState::from_fn(g, eps, polar_field(move |x| a * (1.0 + 0.3 * (2.0 * PI * x).cos()), |x| (2.0 * PI * x).sin()))
        .unwrap();
    let c0 = b0.min_modulus_sq();
    let t_end = 8.0 / c0 * (1.0 / eps).ln();
    let dt = (0.1 * g.dx()).min(0.01 / b0.max_modulus_sq());
    check_psi_decay(&psi_series(&b0, dt, t_end), c0, eps, b0.dxb_inf(), 0.2).unwrap()
}

#[test]
fn psi_below_epsilon_floor_after_log_time() {
    let eps = 1e-3;
    let g = PeriodicGrid::new(200).unwrap();
    let b0 = MagneticState::from_fn(g, eps, relaxation_datum).unwrap();
    let c0 = b0.min_modulus_sq();
    let t_end = 4.0 * (1.0 / eps).ln() / c0;
    let series = psi_series(&b0, 0.1 * g.dx(), t_end);
    let k = b0.dxb_inf().powi(2) / c0;
    let last = series.last().unwrap().1;
    assert!(last <= k * eps, "{last:e} > {:e}", k * eps);
}

#[test]
fn floor_is_linear_in_epsilon_across_sweep() {
    let fits: Vec<PsiDecayFit> = [1e-1, 3e-2, 1e-2].iter().map(|&e| fit_floor(40.0, e)).collect();
    let per_eps: Vec<f64> = fits.iter().zip([1e-1, 3e-2, 1e-2]).map(|(f, e)| f.floor / e).collect();
    let (lo, hi) = per_eps.iter().fold((f64::INFINITY, 0.0f64), |(l, h), v| (l.min(*v), h.max(*v)));
    assert!(hi / lo <= 2.0, "{per_eps:?}");
    assert!(fits.iter().all(|f| f.rate_ok && f.floor_ok));
}

#[test]
fn floor_per_epsilon_agrees_between_two_decades() {
    let a = fit_floor(20.0, 1e-2);
    let b = fit_floor(20.0, 1e-3);
    let r = (a.floor / 1e-2) / (b.floor / 1e-3);
    assert!((1.0 / 3.0..=3.0).contains(&r), "{r}");
}

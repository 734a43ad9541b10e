//! Built-in initial data used by the experiments and tests.

use std::f64::consts::PI;

/// Angle datum that develops a singularity under the limit dynamics.
pub fn moffatt_blowup(x: f64) -> f64 {
    let s = (2.0 * PI * x).sin();
    let c = (2.0 * PI * x).cos();
    0.6 * s * (6.0 * PI * x).cos() * c - 2.4 * (4.0 * PI * x).cos() * c + 3.0 * s
}

/// Exact derivative of [`moffatt_blowup`].
pub fn moffatt_blowup_dx(x: f64) -> f64 {
    let w = 2.0 * PI;
    let (s1, c1) = (w * x).sin_cos();
    let (s2, c2) = (2.0 * w * x).sin_cos();
    let (s3, c3) = (3.0 * w * x).sin_cos();
    // d/dx [0.6 s1 c3 c1] = 0.6 w [c1 c3 c1 - 3 s1 s3 c1 - s1 c3 s1]
    let a = 0.6 * w * (c1 * c3 * c1 - 3.0 * s1 * s3 * c1 - s1 * c3 * s1);
    // d/dx [-2.4 c2 c1] = -2.4 w [-2 s2 c1 - c2 s1]
    let b = -2.4 * w * (-2.0 * s2 * c1 - c2 * s1);
    a + b + 3.0 * w * c1
}

/// Scaled datum `θ₀/3` whose solution stays smooth.
pub fn moffatt_global(x: f64) -> f64 {
    moffatt_blowup(x) / 3.0
}

/// `θ₀/3 + sin(40πx)`: large `H^{1/2}` norm, small oscillation.
pub fn moffatt_oscillation(x: f64) -> f64 {
    moffatt_global(x) + (40.0 * PI * x).sin()
}

/// Magnetic datum `ρ(x) e^{iα(x)}` given as its two components.
pub fn polar_field(rho: impl Fn(f64) -> f64, alpha: impl Fn(f64) -> f64) -> impl Fn(f64) -> (f64, f64) {
    move |x| {
        let (s, c) = alpha(x).sin_cos();
        (rho(x) * c, rho(x) * s)
    }
}

/// `(1 + 0.3 cos 2πx) e^{i sin 2πx}`.
pub fn relaxation_datum(x: f64) -> (f64, f64) {
    polar_field(|x| 1.0 + 0.3 * (2.0 * PI * x).cos(), |x| (2.0 * PI * x).sin())(x)
}

/// Smooth even non-negative bump on the chart `[-1/2, 1/2)` with total
/// mass `mass`: `φ(x) = mass · c_w · exp(-sin²(πx)/w²)`, normalised by quadrature
/// on `m` nodes so the discrete mass is exact.
pub fn even_bump(mass: f64, width: f64, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m)
        .map(|j| {
            let s = (PI * j as f64 / m as f64).sin();
            (-(s * s) / (width * width)).exp()
        })
        .collect();
    let mean = raw.iter().sum::<f64>() / m as f64;
    raw.into_iter().map(|v| mass * v / mean).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blowup_datum_derivative_matches_differences() {
        let h = 1e-6;
        for i in 0..50 {
            let x = i as f64 / 50.0;
            let fd = (moffatt_blowup(x + h) - moffatt_blowup(x - h)) / (2.0 * h);
            assert!((fd - moffatt_blowup_dx(x)).abs() < 1e-5);
        }
    }

    #[test]
    fn blowup_datum_slope_peak() {
        let peak = (0..200_000)
            .map(|i| moffatt_blowup_dx(i as f64 / 200_000.0).abs())
            .fold(0.0, f64::max);
        assert!((peak - 38.57).abs() < 0.05, "{peak}");
    }

    #[test]
    fn bump_is_even_with_exact_mass() {
        let b = even_bump(3.0, 0.1, 64);
        assert!((b.iter().sum::<f64>() / 64.0 - 3.0).abs() < 1e-12);
        for j in 1..64 {
            assert!((b[j] - b[64 - j]).abs() < 1e-12);
        }
        assert!(b.iter().all(|v| *v > 0.0));
    }
}

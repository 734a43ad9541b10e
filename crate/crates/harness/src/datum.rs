//! Initial data, either from a named formula or from a CSV sample file.
//!
//! Names: `moffatt_blowup`, `moffatt_global`, `moffatt_oscillation` and
//! `relaxation`. Angle data are scaled by `lambda`; a magnetic datum built
//! from an angle is `amplitude · e^{iλθ}`. `relaxation` is
//! `amplitude (1 + 0.3 cos 2πx) e^{iλ sin 2πx}`.

use std::f64::consts::PI;
use std::path::Path;

use magrelax::initial::{moffatt_blowup, moffatt_global, moffatt_oscillation};
use magrelax::interp::periodic_pchip;
use magrelax::{AngleState, MagneticState, PeriodicGrid};

use crate::config::DatumSection;
use crate::error::{HarnessError, Result};

pub const DATUM_NAMES: [&str; 4] = ["moffatt_blowup", "moffatt_global", "moffatt_oscillation", "relaxation"];

fn angle_formula(name: &str) -> Result<fn(f64) -> f64> {
    match name {
        "moffatt_blowup" => Ok(moffatt_blowup),
        "moffatt_global" => Ok(moffatt_global),
        "moffatt_oscillation" => Ok(moffatt_oscillation),
        "relaxation" => Ok(|x| (2.0 * PI * x).sin()),
        other => Err(HarnessError::Config(format!(
            "datum: unknown name `{other}` (expected one of {})",
            DATUM_NAMES.join(", ")
        ))),
    }
}

pub fn angle_datum(d: &DatumSection, grid: PeriodicGrid, default_name: &str) -> Result<AngleState> {
    if let Some(file) = &d.file {
        let (xs, cols) = read_samples(file, 1)?;
        let theta = resample_angle(&xs, &cols[0], grid);
        let lam: Vec<f64> = theta.iter().map(|t| d.lambda * t).collect();
        let turns = file_winding(&xs, &cols[0], d.lambda)?;
        return Ok(AngleState::from_theta(grid, &lam, turns, d.radius)?);
    }
    let f = angle_formula(d.name.as_deref().unwrap_or(default_name))?;
    let lam = d.lambda;
    Ok(AngleState::from_fn(grid, d.radius, move |x| lam * f(x))?)
}

pub fn magnetic_datum(d: &DatumSection, grid: PeriodicGrid, epsilon: f64, default_name: &str) -> Result<MagneticState> {
    let amp = d.amplitude;
    if let Some(file) = &d.file {
        let (xs, cols) = read_samples(file, 2)?;
        let b1 = resample(&xs, &cols[0], 0.0, grid);
        let b2 = resample(&xs, &cols[1], 0.0, grid);
        let scale = |v: Vec<f64>| v.into_iter().map(|x| amp * x).collect();
        return Ok(MagneticState::new(grid, scale(b1), scale(b2), epsilon)?);
    }
    let name = d.name.as_deref().unwrap_or(default_name);
    let theta = angle_formula(name)?;
    let lam = d.lambda;
    let rho: Box<dyn Fn(f64) -> f64> =
        if name == "relaxation" { Box::new(move |x| amp * (1.0 + 0.3 * (2.0 * PI * x).cos())) } else { Box::new(move |_| amp) };
    Ok(MagneticState::from_fn(grid, epsilon, move |x| {
        let (r, a) = (rho(x), lam * theta(x));
        (r * a.cos(), r * a.sin())
    })?)
}

/// Reads a CSV with a header row, `x` in the first column and at least
/// `ncols` value columns. Abscissae must increase within one period.
pub fn read_samples(path: &Path, ncols: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    let mut xs = Vec::new();
    let mut cols = vec![Vec::new(); ncols];
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| HarnessError::Config(format!("{}:{line}: {e}", path.display())))?;
        if rec.len() < ncols + 1 {
            return Err(HarnessError::Config(format!(
                "{}:{line}: expected {} columns, found {}",
                path.display(),
                ncols + 1,
                rec.len()
            )));
        }
        let num = |k: usize| -> Result<f64> {
            rec[k].trim().parse::<f64>().map_err(|e| HarnessError::Config(format!("{}:{line}: `{}`: {e}", path.display(), &rec[k])))
        };
        xs.push(num(0)?);
        for (k, c) in cols.iter_mut().enumerate() {
            c.push(num(k + 1)?);
        }
    }
    if xs.len() < 4 {
        return Err(HarnessError::Config(format!("{}: need at least 4 samples, found {}", path.display(), xs.len())));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) || xs[xs.len() - 1] - xs[0] >= 1.0 {
        return Err(HarnessError::Config(format!("{}: x must increase strictly within one period", path.display())));
    }
    Ok((xs, cols))
}

/// Number of turns implied by samples of an angle over one period, found by
/// extrapolating the last interval to `x₀ + 1`.
fn file_winding(xs: &[f64], theta: &[f64], lambda: f64) -> Result<i64> {
    let n = xs.len();
    let slope = (theta[n - 1] - theta[n - 2]) / (xs[n - 1] - xs[n - 2]);
    let end = theta[n - 1] + slope * (xs[0] + 1.0 - xs[n - 1]);
    let turns = lambda * (end - theta[0]) / (2.0 * PI);
    let r = turns.round();
    if (turns - r).abs() > 0.25 {
        return Err(HarnessError::Config(format!(
            "angle samples do not close up: {turns:.3} turns per period (lambda = {lambda})"
        )));
    }
    Ok(r as i64)
}

fn resample_angle(xs: &[f64], theta: &[f64], grid: PeriodicGrid) -> Vec<f64> {
    let n = xs.len();
    let slope = (theta[n - 1] - theta[n - 2]) / (xs[n - 1] - xs[n - 2]);
    let end = theta[n - 1] + slope * (xs[0] + 1.0 - xs[n - 1]);
    let drift = 2.0 * PI * ((end - theta[0]) / (2.0 * PI)).round();
    resample(xs, theta, drift, grid)
}

fn resample(xs: &[f64], ys: &[f64], drift: f64, grid: PeriodicGrid) -> Vec<f64> {
    let p = periodic_pchip(xs, ys, drift);
    let x0 = xs[0];
    grid.nodes()
        .into_iter()
        .map(|x| {
            // bring x into [x0, x0 + 1) and account for the drift
            let k = (x - x0).div_euclid(1.0);
            p.eval(x - k) + k * drift
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn section(name: Option<&str>) -> DatumSection {
        DatumSection { name: name.map(str::to_string), ..DatumSection::default() }
    }

    #[test]
    fn named_data_build() {
        let g = PeriodicGrid::new(64).unwrap();
        let a = angle_datum(&section(Some("moffatt_global")), g, "moffatt_blowup").unwrap();
        assert_eq!(a.n_turns, 0);
        let b = magnetic_datum(&section(None), g, 0.1, "relaxation").unwrap();
        assert!((b.min_modulus_sq().sqrt() - 0.7).abs() < 1e-12);
        assert!(angle_datum(&section(Some("nope")), g, "x").is_err());
    }

    #[test]
    fn csv_angle_with_winding_resamples() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("theta.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "x,theta").unwrap();
        for j in 0..400 {
            let x = j as f64 / 400.0;
            writeln!(f, "{x},{}", 2.0 * PI * x + 0.2 * (2.0 * PI * x).sin()).unwrap();
        }
        drop(f);
        let d = DatumSection { file: Some(path), ..DatumSection::default() };
        let g = PeriodicGrid::new(50).unwrap();
        let a = angle_datum(&d, g, "").unwrap();
        assert_eq!(a.n_turns, 1);
        let th = a.theta();
        for j in 0..50 {
            let x = g.x(j);
            assert!((th[j] - 2.0 * PI * x - 0.2 * (2.0 * PI * x).sin()).abs() < 1e-5);
        }
    }

    #[test]
    fn malformed_csv_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x,theta\n0,1\n0.25,zz\n0.5,1\n0.75,1\n").unwrap();
        let d = DatumSection { file: Some(path), ..DatumSection::default() };
        let err = angle_datum(&d, PeriodicGrid::new(16).unwrap(), "").unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains(":3:"), "{err}");
    }
}

//! Named desk-scale experiments. Each writes its CSV/JSON artifacts and a
//! `manifest.json` with every effective parameter into its output
//! directory. Independent runs inside a sweep are spread over the rayon
//! pool; each run is itself sequential, so outputs do not depend on the
//! number of threads.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use magrelax::diagnostics::{check_psi_decay, check_virial, monitor_limit, PsiDecayFit};
use magrelax::fields::to_angle;
use magrelax::full::{step_full, FullRunConfig, run_full};
use magrelax::hyperbolic::relax;
use magrelax::initial::{even_bump, moffatt_blowup, polar_field};
use magrelax::limit::{run_limit, run_phi, BlowupReport, LimitRun, LimitRunConfig, PhiState};
use magrelax::{AngleState, Error, Gauge, MagneticState, PeriodicGrid};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::output::{write_csv, write_field, write_json, Artifacts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ExperimentName {
    BlowupFig4,
    GlobalFig5_6,
    OscillationFig7,
    TwoTimescale,
    FastRelaxation,
    VirialSweep,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 6] = [
        ExperimentName::BlowupFig4,
        ExperimentName::GlobalFig5_6,
        ExperimentName::OscillationFig7,
        ExperimentName::TwoTimescale,
        ExperimentName::FastRelaxation,
        ExperimentName::VirialSweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::BlowupFig4 => "blowup_fig4",
            ExperimentName::GlobalFig5_6 => "global_fig5_6",
            ExperimentName::OscillationFig7 => "oscillation_fig7",
            ExperimentName::TwoTimescale => "two_timescale",
            ExperimentName::FastRelaxation => "fast_relaxation",
            ExperimentName::VirialSweep => "virial_sweep",
        }
    }

    /// Documented parameters and their defaults.
    pub fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            ExperimentName::BlowupFig4 => &[
                ("dx", 2.5e-3),
                ("dt", 6.25e-7),
                ("t_end", 1e-3),
                ("lambda", 1.0),
                ("record_every", 16.0),
                ("blowup_threshold", 1e6),
                ("resolution_fraction", 0.25),
            ],
            ExperimentName::GlobalFig5_6 => &[
                ("dx", 5e-3),
                ("dt", 2.5e-6),
                ("t_end", 1e-2),
                ("lambda", 1.0 / 3.0),
                ("record_every", 40.0),
            ],
            ExperimentName::OscillationFig7 => &[
                ("dx", 2.5e-3),
                ("dt", 6.25e-7),
                ("t_end", 3e-4),
                ("lambda", 1.0 / 3.0),
                ("frequency", 20.0),
                ("record_every", 8.0),
            ],
            ExperimentName::TwoTimescale => &[
                ("m", 200.0),
                ("tau_bar", 0.5),
                ("dtau", 1e-5),
                ("record_tau", 5e-3),
                ("eps_1", 1e-1),
                ("eps_2", 3e-2),
                ("eps_3", 1e-2),
                ("amplitude", 1.0),
                ("contrast", 0.3),
                ("angle", 1.0),
                ("relax_tol", 1e-10),
                ("relax_t_max", 500.0),
            ],
            ExperimentName::FastRelaxation => &[
                ("m", 200.0),
                ("eps_1", 1e-2),
                ("eps_2", 1e-3),
                ("amplitude", 20.0),
                ("contrast", 0.3),
                ("angle", 1.0),
                ("slack", 0.2),
            ],
            ExperimentName::VirialSweep => &[
                ("m", 800.0),
                ("width", 0.08),
                ("dt", 1e-8),
                ("t_end", 1e-5),
                ("record_every", 10.0),
                ("mass_1", 0.5),
                ("mass_2", 2.0),
                ("mass_3", 10.0),
                ("mass_4", 20.0),
                ("cap_fraction", 0.25),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: ExperimentName,
    pub parameters: BTreeMap<String, f64>,
    pub files: Vec<String>,
    pub summary: serde_json::Value,
}

/// Defaults merged with overrides; unknown keys are a configuration error.
pub fn effective_parameters(spec: &ExperimentSpec) -> Result<BTreeMap<String, f64>> {
    let mut p: BTreeMap<String, f64> = spec.name.defaults().iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in &spec.overrides {
        match p.get_mut(k) {
            Some(slot) => {
                if !v.is_finite() {
                    return Err(HarnessError::Config(format!("{}: `{k}` must be finite", spec.name.as_str())));
                }
                *slot = *v
            }
            None => {
                let keys: Vec<&str> = spec.name.defaults().iter().map(|(k, _)| *k).collect();
                return Err(HarnessError::Config(format!(
                    "{}: unknown parameter `{k}` (known: {})",
                    spec.name.as_str(),
                    keys.join(", ")
                )));
            }
        }
    }
    Ok(p)
}

struct Params<'a>(&'a BTreeMap<String, f64>);

impl Params<'_> {
    fn f(&self, k: &str) -> f64 {
        self.0[k]
    }

    fn count(&self, k: &str) -> Result<usize> {
        let v = self.0[k];
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(HarnessError::Config(format!("`{k}` must be a positive integer, got {v}")))
        }
    }

    fn grid_dx(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::with_spacing(self.f("dx")).map_err(|e| HarnessError::Config(format!("dx: {e}")))
    }

    fn grid_m(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(self.count("m")?).map_err(|e| HarnessError::Config(format!("m: {e}")))
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Manifest> {
    let params = effective_parameters(spec)?;
    let mut art = Artifacts::new(&spec.output_dir)?;
    let p = Params(&params);
    let summary = match spec.name {
        ExperimentName::BlowupFig4 => blowup_fig4(&p, &mut art)?,
        ExperimentName::GlobalFig5_6 => global_fig5_6(&p, &mut art)?,
        ExperimentName::OscillationFig7 => oscillation_fig7(&p, &mut art)?,
        ExperimentName::TwoTimescale => two_timescale(&p, &mut art)?,
        ExperimentName::FastRelaxation => fast_relaxation(&p, &mut art)?,
        ExperimentName::VirialSweep => virial_sweep(&p, &mut art)?,
    };
    let manifest_path = art.path("manifest.json");
    let manifest = Manifest { experiment: spec.name, parameters: params, files: art.files.clone(), summary };
    write_json(&manifest_path, &manifest)?;
    Ok(manifest)
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("plain data serializes")
}

// ---------------------------------------------------------------- limit runs

fn limit_config(p: &Params, dt: f64, t_end: f64) -> LimitRunConfig {
    let mut cfg = LimitRunConfig::new(dt, t_end);
    if let Some(v) = p.0.get("blowup_threshold") {
        cfg.blowup_threshold = *v;
    }
    if let Some(v) = p.0.get("resolution_fraction") {
        cfg.resolution_fraction = *v;
    }
    cfg
}

/// Trajectory (every `every`-th frame plus the last), scalar series and
/// diagnostics report of a limit run.
pub fn write_limit_outputs(run: &LimitRun, every: usize, art: &mut Artifacts) -> Result<()> {
    let m = run.frames[0].grid.len();
    let last = run.frames.len() - 1;
    let thetas: Vec<(f64, Vec<f64>)> = run
        .frames
        .iter()
        .enumerate()
        .filter(|(i, _)| i % every == 0 || *i == last)
        .map(|(_, f)| (f.t, f.theta()))
        .collect();
    write_field(&art.path("trajectory.csv"), "theta", m, thetas.iter().map(|(t, v)| (*t, v.as_slice())))?;
    let header: Vec<String> =
        ["t", "dtheta_inf", "dtheta_l2", "l4_accumulator", "oscillation", "radius"].iter().map(|s| s.to_string()).collect();
    write_csv(
        &art.path("series.csv"),
        &header,
        run.series.iter().map(|s| [s.t, s.dtheta_inf, s.dtheta_l2, s.l4_accumulator, s.oscillation, s.radius]),
    )?;
    write_json(&art.path("report.json"), &monitor_limit(run))
}

/// Profile `x, theta, dtheta` of the recorded frame nearest to `target`.
fn write_snapshot(run: &LimitRun, target: f64, name: &str, art: &mut Artifacts) -> Result<f64> {
    let f = run
        .frames
        .iter()
        .min_by(|a, b| (a.t - target).abs().total_cmp(&(b.t - target).abs()))
        .expect("a run has at least one frame");
    let th = f.theta();
    let d = f.dtheta();
    let header: Vec<String> = ["x", "theta", "dtheta"].iter().map(|s| s.to_string()).collect();
    write_csv(&art.path(name), &header, (0..f.grid.len()).map(|j| [f.grid.x(j), th[j], d[j]]))?;
    Ok(f.t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupSummary {
    pub detected: bool,
    pub report: Option<BlowupReport>,
    /// `‖d1θ₀‖_∞` on the grid.
    pub phi0_inf: f64,
    /// `1 / (2 ‖φ₀‖²_∞)`.
    pub heuristic_time: f64,
    /// `t_detect / heuristic_time`.
    pub heuristic_ratio: Option<f64>,
    pub snapshot_times: Vec<f64>,
}

fn blowup_fig4(p: &Params, art: &mut Artifacts) -> Result<serde_json::Value> {
    let grid = p.grid_dx()?;
    let lam = p.f("lambda");
    let theta0 = AngleState::from_fn(grid, 1.0, move |x| lam * moffatt_blowup(x))?;
    let run = run_limit(&theta0, &limit_config(p, p.f("dt"), p.f("t_end")))?;
    write_limit_outputs(&run, p.count("record_every")?, art)?;
    let mut snapshot_times = Vec::new();
    for (i, target) in [0.0, 5.625e-4, 6.619e-4].into_iter().enumerate() {
        snapshot_times.push(write_snapshot(&run, target, &format!("fig4_t{i}.csv"), art)?);
    }
    let phi0_inf = PeriodicGrid::max_abs(&theta0.dtheta());
    let heuristic_time = 1.0 / (2.0 * phi0_inf * phi0_inf);
    let summary = BlowupSummary {
        detected: run.blowup.is_some(),
        heuristic_ratio: run.blowup.as_ref().map(|b| b.t_detect / heuristic_time),
        report: run.blowup.clone(),
        phi0_inf,
        heuristic_time,
        snapshot_times,
    };
    write_json(&art.path("blowup_report.json"), &summary)?;
    Ok(to_value(&summary))
}

fn global_fig5_6(p: &Params, art: &mut Artifacts) -> Result<serde_json::Value> {
    let grid = p.grid_dx()?;
    let lam = p.f("lambda");
    let theta0 = AngleState::from_fn(grid, 1.0, move |x| lam * moffatt_blowup(x))?;
    let run = run_limit(&theta0, &LimitRunConfig::new(p.f("dt"), p.f("t_end")))?;
    write_limit_outputs(&run, p.count("record_every")?, art)?;
    let mut times = vec![write_snapshot(&run, 0.0, "fig5_t0.csv", art)?];
    for (i, target) in [2.5e-4, 5e-3, 1e-2].into_iter().enumerate() {
        times.push(write_snapshot(&run, target, &format!("fig6_t{}.csv", i + 1), art)?);
    }
    let after: Vec<f64> = run.series.iter().filter(|s| s.t >= 1e-4).map(|s| s.dtheta_l2).collect();
    let strictly_decreasing = after.windows(2).all(|w| w[1] < w[0]);
    Ok(serde_json::json!({
        "blowup_flag": run.blowup.is_some(),
        "t_final": run.series.last().map(|s| s.t),
        "dtheta_l2_initial": run.series[0].dtheta_l2,
        "dtheta_l2_final": run.series.last().map(|s| s.dtheta_l2),
        "dtheta_l2_strictly_decreasing_after_1e-4": strictly_decreasing,
        "snapshot_times": times,
    }))
}

/// `2 |(1/m) Σ ζ_j e^{−2πikx_j}|`.
pub fn mode_amplitude(values: &[f64], k: usize) -> f64 {
    let m = values.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (j, v) in values.iter().enumerate() {
        let a = 2.0 * PI * (k * j) as f64 / m;
        re += v * a.cos();
        im -= v * a.sin();
    }
    2.0 * (re * re + im * im).sqrt() / m
}

fn oscillation_fig7(p: &Params, art: &mut Artifacts) -> Result<serde_json::Value> {
    let grid = p.grid_dx()?;
    let lam = p.f("lambda");
    let k = p.count("frequency")?;
    let kf = k as f64;
    let theta0 = AngleState::from_fn(grid, 1.0, move |x| lam * moffatt_blowup(x) + (2.0 * PI * kf * x).sin())?;
    let run = run_limit(&theta0, &LimitRunConfig::new(p.f("dt"), p.f("t_end")))?;
    write_limit_outputs(&run, p.count("record_every")?, art)?;
    let mut times = Vec::new();
    for (i, target) in [0.0, 5e-5, 9.375e-5].into_iter().enumerate() {
        times.push(write_snapshot(&run, target, &format!("fig7_t{i}.csv"), art)?);
    }
    let a0 = mode_amplitude(&run.frames[0].zeta, k);
    let wk = 2.0 * PI * kf;
    let rows: Vec<[f64; 3]> =
        run.frames.iter().map(|f| [f.t, mode_amplitude(&f.zeta, k), a0 * (-wk * wk * f.t).exp()]).collect();
    let header: Vec<String> = ["t", "amplitude", "heat_estimate"].iter().map(|s| s.to_string()).collect();
    write_csv(&art.path("mode.csv"), &header, rows.iter())?;
    let last = rows.last().expect("non-empty");
    Ok(serde_json::json!({
        "blowup_flag": run.blowup.is_some(),
        "mode": k,
        "amplitude_initial": a0,
        "amplitude_final": last[1],
        "drop_factor": a0 / last[1],
        "heat_drop_factor": a0 / last[2],
        "t_final": last[0],
        "snapshot_times": times,
    }))
}

// ------------------------------------------------------- multiscale sweeps

fn polar_datum(p: &Params, grid: PeriodicGrid, epsilon: f64) -> Result<MagneticState> {
    let (a, c, s) = (p.f("amplitude"), p.f("contrast"), p.f("angle"));
    Ok(MagneticState::from_fn(
        grid,
        epsilon,
        polar_field(move |x| a * (1.0 + c * (2.0 * PI * x).cos()), move |x| s * (2.0 * PI * x).sin()),
    )?)
}

/// Pointwise angle distance modulo 2π.
pub fn angle_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).rem_euclid(2.0 * PI);
            d.min(2.0 * PI - d)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleComparison {
    pub epsilon: f64,
    pub dt: f64,
    pub sup_distance: f64,
    /// `10 (dt + δx²)`.
    pub discretization_scale: f64,
    pub taus: Vec<f64>,
    pub distances: Vec<f64>,
}

fn two_timescale(p: &Params, art: &mut Artifacts) -> Result<serde_json::Value> {
    let grid = p.grid_m()?;
    let dx = grid.dx();
    let (tau_bar, dtau, record_tau) = (p.f("tau_bar"), p.f("dtau"), p.f("record_tau"));
    let per_record = (record_tau / dtau).round();
    let records = (tau_bar / record_tau).round();
    if (per_record * dtau - record_tau).abs() > 1e-9 * record_tau || (records * record_tau - tau_bar).abs() > 1e-9 * tau_bar {
        return Err(HarnessError::Config("record_tau must be a multiple of dtau and divide tau_bar".into()));
    }
    let b0 = polar_datum(p, grid, 0.0)?;
    let relaxed = relax(&b0, p.f("relax_tol"), p.f("relax_t_max"))?;
    let l1 = b0.mass_l1();
    let modulus = relaxed.state.modulus();
    let (lo, hi) = modulus.iter().fold((f64::INFINITY, 0.0f64), |(l, h), v| (l.min(*v), h.max(*v)));
    let relaxation = serde_json::json!({
        "l1_norm": l1,
        "modulus_min": lo,
        "modulus_max": hi,
        "modulus_spread_rel": (hi - lo) / l1,
        "modulus_vs_l1_rel": (hi - l1).abs().max((lo - l1).abs()) / l1,
        "decay_rate": relaxed.decay_rate,
        "c0": b0.min_modulus_sq(),
        "t_relax": relaxed.t_final,
    });
    write_json(&art.path("relaxation.json"), &relaxation)?;

    let theta_s = to_angle(&relaxed.state)?;
    let mut lcfg = LimitRunConfig::new(dtau, tau_bar);
    lcfg.record_every = per_record as usize;
    let lim = run_limit(&theta_s, &lcfg)?;
    if let Some(b) = &lim.blowup {
        return Err(Error::WindowTooShort { requested: tau_bar, lifespan: b.t_detect }.into());
    }
    write_limit_outputs(&lim, 1, art)?;

    let eps_list = [p.f("eps_1"), p.f("eps_2"), p.f("eps_3")];
    let results: Vec<ScaleComparison> = eps_list
        .par_iter()
        .map(|&eps| -> Result<ScaleComparison> {
            let rec_t = record_tau / eps;
            let dt0 = (0.1 * dx * dx / eps).min(0.02 * dx);
            let k = (rec_t / dt0).ceil();
            let dt = rec_t / k;
            let cfg = FullRunConfig {
                epsilon: eps,
                dt,
                t_end: tau_bar / eps,
                gauge: Gauge::ZeroAtOrigin,
                record_every: k as usize,
                c0_expected: None,
            };
            let frames = run_full(&b0, &cfg)?;
            let (mut taus, mut distances) = (Vec::new(), Vec::new());
            for (f, l) in frames.iter().zip(&lim.frames) {
                let tau = eps * f.t;
                if tau < 0.1 * tau_bar * (1.0 - 1e-9) {
                    continue;
                }
                debug_assert!((tau - l.t).abs() < 1e-9);
                taus.push(tau);
                distances.push(angle_distance(&to_angle(f)?.theta(), &l.theta()));
            }
            let sup_distance = distances.iter().copied().fold(0.0, f64::max);
            Ok(ScaleComparison { epsilon: eps, dt, sup_distance, discretization_scale: 10.0 * (dt + dx * dx), taus, distances })
        })
        .collect::<Result<_>>()?;

    let header: Vec<String> =
        ["epsilon", "dt", "sup_distance", "discretization_scale"].iter().map(|s| s.to_string()).collect();
    write_csv(
        &art.path("distances.csv"),
        &header,
        results.iter().map(|r| [r.epsilon, r.dt, r.sup_distance, r.discretization_scale]),
    )?;
    for (i, r) in results.iter().enumerate() {
        let header: Vec<String> = ["tau", "distance"].iter().map(|s| s.to_string()).collect();
        write_csv(
            &art.path(&format!("distance_eps{}.csv", i + 1)),
            &header,
            r.taus.iter().zip(&r.distances).map(|(t, d)| [*t, *d]),
        )?;
    }
    let monotone = results.windows(2).all(|w| w[1].sup_distance < w[0].sup_distance);
    Ok(serde_json::json!({
        "relaxation": relaxation,
        "sup_distances": results.iter().map(|r| [r.epsilon, r.sup_distance]).collect::<Vec<_>>(),
        "discretization_scales": results.iter().map(|r| r.discretization_scale).collect::<Vec<_>>(),
        "monotone_decrease": monotone,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationFit {
    pub epsilon: f64,
    pub c0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub fit: PsiDecayFit,
}

/// `‖ψ(t)‖_∞` at every step of a full run from `b0`.
pub fn psi_series(b0: &MagneticState, dt: f64, t_end: f64) -> Result<Vec<(f64, f64)>> {
    let steps = (t_end / dt).round() as usize;
    let mut b = b0.clone();
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, PeriodicGrid::max_abs(&b.psi())));
    for n in 1..=steps {
        b = step_full(&b, dt, Gauge::ZeroAtOrigin)?;
        b.t = n as f64 * dt;
        if !b.is_finite() {
            return Err(Error::NumericalInstability { t: b.t, reason: "non-finite field values".into() }.into());
        }
        out.push((b.t, PeriodicGrid::max_abs(&b.psi())));
    }
    Ok(out)
}

fn fast_relaxation(p: &Params, art: &mut Artifacts) -> Result<serde_json::Value> {
    let grid = p.grid_m()?;
    let dx = grid.dx();
    let slack = p.f("slack");
    let eps_list = [p.f("eps_1"), p.f("eps_2")];
    let runs: Vec<(RelaxationFit, Vec<(f64, f64)>)> = eps_list
        .par_iter()
        .map(|&eps| -> Result<_> {
            let b0 = polar_datum(p, grid, eps)?;
            let c0 = b0.min_modulus_sq();
            let t_end = 8.0 / c0 * (1.0 / eps).ln();
            let dt = (0.1 * dx).min(0.01 / b0.max_modulus_sq());
            let series = psi_series(&b0, dt, t_end)?;
            let fit = check_psi_decay(&series, c0, eps, b0.dxb_inf(), slack)?;
            Ok((RelaxationFit { epsilon: eps, c0, t_end, dt, fit }, series))
        })
        .collect::<Result<_>>()?;
    for (i, (_, series)) in runs.iter().enumerate() {
        let header: Vec<String> = ["t", "psi_inf"].iter().map(|s| s.to_string()).collect();
        write_csv(&art.path(&format!("psi_eps{}.csv", i + 1)), &header, series.iter().map(|(t, v)| [*t, *v]))?;
    }
    let header: Vec<String> = ["epsilon", "c0", "t_end", "rate", "amplitude", "floor", "floor_bound"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    write_csv(
        &art.path("fits.csv"),
        &header,
        runs.iter().map(|(r, _)| [r.epsilon, r.c0, r.t_end, r.fit.rate, r.fit.amplitude, r.fit.floor, r.fit.floor_bound]),
    )?;
    let fits: Vec<&RelaxationFit> = runs.iter().map(|(r, _)| r).collect();
    let (a, b) = (fits[0], fits[1]);
    let floor_ratio = a.fit.floor / b.fit.floor;
    let slope = (a.fit.floor.ln() - b.fit.floor.ln()) / (a.epsilon.ln() - b.epsilon.ln());
    Ok(serde_json::json!({
        "fits": fits,
        "floor_ratio": floor_ratio,
        "floor_vs_epsilon_slope": slope,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirialRun {
    pub mass: f64,
    pub v0: f64,
    pub bound0: f64,
    pub v_prime0: f64,
    /// A quarter of the mass sat in one cell before `t_end`.
    pub collapsed: bool,
    pub t_final: f64,
    pub first_violation_t: Option<f64>,
}

fn virial_sweep(p: &Params, art: &mut Artifacts) -> Result<serde_json::Value> {
    let grid = p.grid_m()?;
    let m = grid.len();
    let (width, dt, t_end) = (p.f("width"), p.f("dt"), p.f("t_end"));
    let every = p.count("record_every")?;
    let masses = [p.f("mass_1"), p.f("mass_2"), p.f("mass_3"), p.f("mass_4")];
    let cap_fraction = p.f("cap_fraction");
    let runs: Vec<_> = masses
        .par_iter()
        .map(|&mass| -> Result<_> {
            let phi0 = PhiState::new(grid, even_bump(mass, width, m))?;
            let cap = cap_fraction * mass / grid.dx();
            let frames = run_phi(&phi0, dt, t_end, every, cap)?;
            let check = check_virial(&frames)?;
            let last = frames.last().expect("non-empty");
            let run = VirialRun {
                mass,
                v0: check.v[0],
                bound0: check.bound[0],
                v_prime0: check.v_prime[0],
                collapsed: PeriodicGrid::max_abs(&last.phi) > cap,
                t_final: last.t,
                first_violation_t: check.first_violation.map(|i| check.times[i]),
            };
            Ok((run, check))
        })
        .collect::<Result<_>>()?;
    for (i, (_, c)) in runs.iter().enumerate() {
        let header: Vec<String> = ["t", "V", "M", "V_prime", "bound", "holds"].iter().map(|s| s.to_string()).collect();
        write_csv(
            &art.path(&format!("virial_mass{}.csv", i + 1)),
            &header,
            (0..c.times.len()).map(|k| [c.times[k], c.v[k], c.mass, c.v_prime[k], c.bound[k], c.holds[k] as u8 as f64]),
        )?;
    }
    let header: Vec<String> = ["mass", "V0", "bound0", "V_prime0", "collapsed", "t_final", "first_violation_t"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    write_csv(
        &art.path("summary.csv"),
        &header,
        runs.iter().map(|(r, _)| {
            [r.mass, r.v0, r.bound0, r.v_prime0, r.collapsed as u8 as f64, r.t_final, r.first_violation_t.unwrap_or(f64::NAN)]
        }),
    )?;
    let runs: Vec<VirialRun> = runs.into_iter().map(|(r, _)| r).collect();
    Ok(serde_json::json!({ "runs": runs }))
}

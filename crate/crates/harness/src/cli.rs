//! Command-line front end. Exit status: 0 on success (including runs that
//! record a blow-up), 1 on configuration errors, 2 on solver errors or when
//! `check` finds violations.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use magrelax::diagnostics::{monitor, DiagnosticsReport, Trajectory};
use magrelax::full::{run_full, FullRunConfig};
use magrelax::hyperbolic::{default_dt, run_hyperbolic, HyperbolicConfig};
use magrelax::limit::{run_limit, LimitRunConfig};
use serde::Serialize;

use crate::config::Config;
use crate::datum::{angle_datum, magnetic_datum};
use crate::error::{HarnessError, Result};
use crate::experiments::{run_experiment, write_limit_outputs, ExperimentName, ExperimentSpec};
use crate::output::{write_field, write_json, Artifacts};

#[derive(Debug, Parser)]
#[command(name = "magrelax", version, about = "Magnetic relaxation solvers and experiments")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a configuration value, `section.key=value` (repeatable).
    /// For `experiment`, keys are the experiment's parameter names.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub dx: Option<f64>,
    /// Built-in initial datum.
    #[arg(long)]
    pub datum: Option<String>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    #[arg(long = "record-every")]
    pub record_every: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resistive system on the Eulerian grid.
    RunFull {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        epsilon: Option<f64>,
        /// CSV with columns x, b1, b2.
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Inviscid system along characteristics.
    RunHyperbolic {
        #[command(flatten)]
        grid: GridArgs,
        /// CSV with columns x, b1, b2.
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Angle equation.
    RunLimit {
        #[command(flatten)]
        grid: GridArgs,
        /// CSV with columns x, theta.
        #[arg(long)]
        theta0: Option<PathBuf>,
    },
    /// Named experiment.
    Experiment { name: ExperimentName },
    /// Reads a diagnostics report and lists its violations.
    Check { report: PathBuf },
}

/// Parses `args` and runs the command, returning the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Experiment { name } => {
            let spec = experiment_spec(cli, *name)?;
            let m = run_experiment(&spec)?;
            println!("{}: wrote {} files to {}", name.as_str(), m.files.len(), spec.output_dir.display());
            Ok(())
        }
        Command::Check { report } => check(report),
        Command::RunFull { grid, epsilon, init } => {
            let mut set = grid_overrides(grid, "full");
            push(&mut set, "full.epsilon", *epsilon);
            if let Some(p) = init {
                set.push(format!("datum.file={}", toml_string(p)));
            }
            let cfg = load(cli, &set)?;
            run_full_cmd(&cfg, &out_dir(cli, &cfg))
        }
        Command::RunHyperbolic { grid, init } => {
            let mut set = grid_overrides(grid, "hyperbolic");
            if let Some(p) = init {
                set.push(format!("datum.file={}", toml_string(p)));
            }
            let cfg = load(cli, &set)?;
            run_hyperbolic_cmd(&cfg, &out_dir(cli, &cfg))
        }
        Command::RunLimit { grid, theta0 } => {
            let mut set = grid_overrides(grid, "limit");
            if let Some(p) = theta0 {
                set.push(format!("datum.file={}", toml_string(p)));
            }
            let cfg = load(cli, &set)?;
            run_limit_cmd(&cfg, &out_dir(cli, &cfg))
        }
    }
}

fn toml_string(p: &Path) -> String {
    toml::Value::String(p.display().to_string()).to_string()
}

fn push(set: &mut Vec<String>, key: &str, v: Option<impl ToString>) {
    if let Some(v) = v {
        set.push(format!("{key}={}", v.to_string()));
    }
}

fn grid_overrides(g: &GridArgs, section: &str) -> Vec<String> {
    let mut set = Vec::new();
    push(&mut set, "grid.m", g.m);
    push(&mut set, "grid.dx", g.dx.map(fmt_toml_float));
    if let Some(d) = &g.datum {
        set.push(format!("datum.name={}", toml::Value::String(d.clone())));
    }
    push(&mut set, &format!("{section}.dt"), g.dt.map(fmt_toml_float));
    push(&mut set, &format!("{section}.t_end"), g.t_end.map(fmt_toml_float));
    push(&mut set, &format!("{section}.record_every"), g.record_every);
    set
}

/// TOML needs a decimal point or exponent for floats.
fn fmt_toml_float(v: f64) -> String {
    format!("{v:e}")
}

/// Config file overrides come from `--set` first, then from dedicated flags.
fn load(cli: &Cli, flags: &[String]) -> Result<Config> {
    let mut all = cli.set.clone();
    all.extend_from_slice(flags);
    Config::load(cli.config.as_deref(), &all)
}

fn out_dir(cli: &Cli, cfg: &Config) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone())
}

fn experiment_spec(cli: &Cli, name: ExperimentName) -> Result<ExperimentSpec> {
    let mut overrides = BTreeMap::new();
    for s in &cli.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("override `{s}`: expected key=value")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| HarnessError::Config(format!("override `{s}`: value must be a number")))?;
        overrides.insert(k.trim().to_string(), v);
    }
    if let Some(o) = &cli.out {
        return Ok(ExperimentSpec { name, overrides, output_dir: o.clone() });
    }
    // `--set` carries experiment parameters here, not config keys
    let base = Config::load(cli.config.as_deref(), &[])?.output.dir;
    Ok(ExperimentSpec { name, overrides, output_dir: base.join(name.as_str()) })
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    config: &'a Config,
    files: &'a [String],
}

fn finish(cmd: &str, cfg: &Config, mut art: Artifacts) -> Result<()> {
    let path = art.path("manifest.json");
    write_json(&path, &RunManifest { command: cmd, config: cfg, files: &art.files })?;
    println!("{cmd}: wrote {} files to {}", art.files.len(), art.dir.display());
    Ok(())
}

fn run_full_cmd(cfg: &Config, dir: &Path) -> Result<()> {
    let grid = cfg.grid()?;
    let b0 = magnetic_datum(&cfg.datum, grid, cfg.full.epsilon, "relaxation")?;
    let f = &cfg.full;
    let run_cfg = FullRunConfig {
        epsilon: f.epsilon,
        dt: f.dt.unwrap_or(0.1 * grid.dx() * grid.dx()),
        t_end: f.t_end,
        gauge: f.gauge,
        record_every: f.record_every,
        c0_expected: None,
    };
    let frames = run_full(&b0, &run_cfg)?;
    let mut art = Artifacts::new(dir)?;
    let m = grid.len();
    write_field(&art.path("b1.csv"), "b1", m, frames.iter().map(|s| (s.t, s.b1.as_slice())))?;
    write_field(&art.path("b2.csv"), "b2", m, frames.iter().map(|s| (s.t, s.b2.as_slice())))?;
    write_json(&art.path("report.json"), &monitor(Trajectory::Magnetic(&frames)))?;
    finish("run-full", cfg, art)
}

fn run_hyperbolic_cmd(cfg: &Config, dir: &Path) -> Result<()> {
    let grid = cfg.grid()?;
    let b0 = magnetic_datum(&cfg.datum, grid, 0.0, "relaxation")?;
    let h = &cfg.hyperbolic;
    let run_cfg =
        HyperbolicConfig { dt: h.dt.unwrap_or_else(|| default_dt(&b0)), t_end: h.t_end, record_every: h.record_every, gauge: h.gauge };
    let frames = run_hyperbolic(&b0, &run_cfg)?;
    let eulerian = frames.iter().map(|s| s.to_eulerian(0.0)).collect::<magrelax::Result<Vec<_>>>()?;
    let mut art = Artifacts::new(dir)?;
    let m = grid.len();
    write_field(&art.path("b1.csv"), "b1", m, eulerian.iter().map(|s| (s.t, s.b1.as_slice())))?;
    write_field(&art.path("b2.csv"), "b2", m, eulerian.iter().map(|s| (s.t, s.b2.as_slice())))?;
    write_field(&art.path("characteristics.csv"), "phi", m, frames.iter().map(|s| (s.t, s.phi.as_slice())))?;
    write_json(&art.path("report.json"), &monitor(Trajectory::Lagrangian(&frames)))?;
    finish("run-hyperbolic", cfg, art)
}

fn run_limit_cmd(cfg: &Config, dir: &Path) -> Result<()> {
    let grid = cfg.grid()?;
    let theta0 = angle_datum(&cfg.datum, grid, "moffatt_blowup")?;
    let l = &cfg.limit;
    let run_cfg = LimitRunConfig {
        dt: l.dt,
        t_end: l.t_end,
        blowup_threshold: l.blowup_threshold,
        resolution_fraction: l.resolution_fraction,
        record_every: 1,
    };
    let run = run_limit(&theta0, &run_cfg)?;
    let mut art = Artifacts::new(dir)?;
    write_limit_outputs(&run, l.record_every, &mut art)?;
    write_json(&art.path("blowup_report.json"), &serde_json::json!({ "blowup_flag": run.blowup.is_some(), "report": run.blowup }))?;
    if let Some(b) = &run.blowup {
        println!("blow-up detected at t = {} ({:?})", b.t_detect, b.criterion);
    }
    finish("run-limit", cfg, art)
}

fn check(path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let report: DiagnosticsReport = serde_json::from_str(&text).map_err(|e| HarnessError::format(path, e))?;
    println!("{}: {} records, {} violation(s)", report.kind, report.records.len(), report.violations.len());
    for v in &report.violations {
        println!("  {} at t = {}: {} (limit {})", v.check, v.t, v.value, v.limit);
    }
    if report.violations.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::Violations(report.violations.len()))
    }
}

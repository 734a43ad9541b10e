//! Run configuration: a versioned TOML file with one section per solver,
//! optionally patched by `section.key=value` overrides from the command line.

use std::path::{Path, PathBuf};

use magrelax::{Gauge, PeriodicGrid};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub version: u32,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub datum: DatumSection,
    #[serde(default)]
    pub full: FullSection,
    #[serde(default)]
    pub hyperbolic: HyperbolicSection,
    #[serde(default)]
    pub limit: LimitSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Either `m` or `dx`; `m = 200` when neither is given.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub m: Option<usize>,
    pub dx: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumSection {
    /// Built-in formula; see [`crate::datum`].
    pub name: Option<String>,
    /// CSV samples, resampled onto the grid.
    pub file: Option<PathBuf>,
    /// Multiplies the angle.
    #[serde(default = "one")]
    pub lambda: f64,
    /// Multiplies the modulus of magnetic data.
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Initial radius for the angle equation.
    #[serde(default = "one")]
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullSection {
    #[serde(default = "FullSection::default_epsilon")]
    pub epsilon: f64,
    /// Defaults to `0.1 δx²`.
    pub dt: Option<f64>,
    #[serde(default = "FullSection::default_t_end")]
    pub t_end: f64,
    #[serde(default = "ten")]
    pub record_every: usize,
    #[serde(default)]
    pub gauge: Gauge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperbolicSection {
    /// Defaults to `min(0.1 δx, 0.01 / max|b₀|²)`.
    pub dt: Option<f64>,
    #[serde(default = "HyperbolicSection::default_t_end")]
    pub t_end: f64,
    #[serde(default = "ten")]
    pub record_every: usize,
    #[serde(default)]
    pub gauge: Gauge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSection {
    #[serde(default = "LimitSection::default_dt")]
    pub dt: f64,
    #[serde(default = "LimitSection::default_t_end")]
    pub t_end: f64,
    #[serde(default = "ten")]
    pub record_every: usize,
    #[serde(default = "LimitSection::default_threshold")]
    pub blowup_threshold: f64,
    #[serde(default = "LimitSection::default_resolution")]
    pub resolution_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "OutputSection::default_dir")]
    pub dir: PathBuf,
}

fn one() -> f64 {
    1.0
}

fn ten() -> usize {
    10
}

impl FullSection {
    fn default_epsilon() -> f64 {
        0.05
    }
    fn default_t_end() -> f64 {
        0.1
    }
}

impl HyperbolicSection {
    fn default_t_end() -> f64 {
        10.0
    }
}

impl LimitSection {
    fn default_dt() -> f64 {
        6.25e-7
    }
    fn default_t_end() -> f64 {
        1e-3
    }
    fn default_threshold() -> f64 {
        1e6
    }
    fn default_resolution() -> f64 {
        0.25
    }
}

impl OutputSection {
    fn default_dir() -> PathBuf {
        PathBuf::from("out")
    }
}

macro_rules! default_from_empty {
    ($($t:ty),*) => {$(
        impl Default for $t {
            fn default() -> Self {
                toml::from_str("").expect("all fields have defaults")
            }
        }
    )*};
}
default_from_empty!(DatumSection, FullSection, HyperbolicSection, LimitSection, OutputSection);

impl Default for Config {
    fn default() -> Self {
        Config {
            version: CONFIG_VERSION,
            grid: GridSection::default(),
            datum: DatumSection::default(),
            full: FullSection::default(),
            hyperbolic: HyperbolicSection::default(),
            limit: LimitSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl Config {
    /// Reads `path` (if any), applies `overrides` and validates the result.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Config> {
        let (text, origin) = match path {
            Some(p) => (
                std::fs::read_to_string(p).map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?,
                p.display().to_string(),
            ),
            None => (format!("version = {CONFIG_VERSION}\n"), "<default>".to_string()),
        };
        Self::parse(&text, &origin, overrides)
    }

    pub fn parse(text: &str, origin: &str, overrides: &[String]) -> Result<Config> {
        // Parse once as the typed struct so that errors carry a position.
        let cfg: Config = toml::from_str(text).map_err(|e| located(text, origin, &e))?;
        let cfg = if overrides.is_empty() {
            cfg
        } else {
            let mut table: toml::Table = toml::from_str(text).map_err(|e| located(text, origin, &e))?;
            for o in overrides {
                apply_override(&mut table, o)?;
            }
            Config::deserialize(toml::Value::Table(table))
                .map_err(|e| HarnessError::Config(format!("{origin} (after overrides): {}", e.message())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(HarnessError::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.grid.m.is_some() && self.grid.dx.is_some() {
            return Err(HarnessError::Config("grid: give either m or dx, not both".into()));
        }
        if self.datum.name.is_some() && self.datum.file.is_some() {
            return Err(HarnessError::Config("datum: give either name or file, not both".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<PeriodicGrid> {
        let g = match (self.grid.m, self.grid.dx) {
            (_, Some(dx)) => PeriodicGrid::with_spacing(dx),
            (m, None) => PeriodicGrid::new(m.unwrap_or(200)),
        };
        g.map_err(|e| HarnessError::Config(format!("grid: {e}")))
    }
}

fn located(text: &str, origin: &str, e: &toml::de::Error) -> HarnessError {
    let msg = e.message().trim_end();
    match e.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
            HarnessError::Config(format!("{origin}:{line}: {msg}"))
        }
        None => HarnessError::Config(format!("{origin}: {msg}")),
    }
}

/// `section.key=value`, with `value` read as a TOML literal and falling
/// back to a bare string.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let bad = || HarnessError::Config(format!("override `{spec}`: expected section.key=value"));
    let (key, raw) = spec.split_once('=').ok_or_else(bad)?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(bad());
    }
    let value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => t.remove("v").ok_or_else(bad)?,
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let mut cur = table;
    for p in &path[..path.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| HarnessError::Config(format!("override `{spec}`: `{p}` is not a section")))?;
    }
    cur.insert(path[path.len() - 1].to_string(), value);
    Ok(())
}

//! Experiment configuration, read from a single TOML file. Unknown keys are
//! rejected at every level.

use std::fs;
use std::path::{Path, PathBuf};

use frontlab::harness::{DiffuseScaling, InitialDatum};
use frontlab::model::{ForcingDescriptor, TabulatedA, WellConstantOptions, WellDescriptor};
use frontlab::sharp::SharpRunParams;
use serde::Deserialize;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    well: WellDescriptor,
    forcing: toml::Table,
    grid: GridConfig,
    #[serde(default)]
    eps: Vec<f64>,
    #[serde(default)]
    sharp: SharpRunParams,
    #[serde(default)]
    diffuse: DiffuseScaling,
    #[serde(default)]
    sweep: SweepOptions,
    #[serde(default)]
    assumptions: AssumptionOptions,
    simulate: Option<SimulateOptions>,
    density: Option<DensityOptions>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Width of the cross-section `Ω = [0, length]`.
    pub length: f64,
    /// Nodes of the sharp-interface cross-section.
    pub sharp_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    pub window: Option<f64>,
    pub cross_check: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            window: None,
            cross_check: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssumptionOptions {
    /// Poincaré-type constant of the cross-section in the uniqueness test.
    pub c_omega: f64,
    pub well: WellConstantOptions,
}

impl Default for AssumptionOptions {
    fn default() -> Self {
        Self {
            c_omega: 1.0,
            well: WellConstantOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateOptions {
    pub eps: f64,
    pub initial: InitialDatum,
    #[serde(default = "default_pad")]
    pub pad: f64,
    pub max_time: f64,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    #[serde(default = "default_plateau_tol")]
    pub plateau_tol: f64,
    #[serde(default)]
    pub window: Option<f64>,
    #[serde(default = "default_admissibility")]
    pub admissibility_delta: f64,
    #[serde(default)]
    pub c_dagger_eps: Option<f64>,
}

fn default_pad() -> f64 {
    1.5
}
fn default_checkpoints() -> usize {
    20
}
fn default_plateau_tol() -> f64 {
    1e-2
}
fn default_admissibility() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityOptions {
    pub eps: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Radii of the level-set audit, in stretched units.
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_r0")]
    pub r0: usize,
    #[serde(default = "default_r1", rename = "R0")]
    pub r1: usize,
    /// Every `stride`-th interface point is a ball center.
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Density threshold; the fitted value when absent.
    #[serde(default)]
    pub alpha: Option<f64>,
}

fn default_beta() -> f64 {
    0.5
}
fn default_radii() -> Vec<f64> {
    (1..=8).map(f64::from).collect()
}
fn default_r0() -> usize {
    2
}
fn default_r1() -> usize {
    10
}
fn default_stride() -> usize {
    4
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub well: WellDescriptor,
    pub forcing: ForcingDescriptor,
    pub grid: GridConfig,
    pub eps: Vec<f64>,
    pub sharp: SharpRunParams,
    pub diffuse: DiffuseScaling,
    pub sweep: SweepOptions,
    pub assumptions: AssumptionOptions,
    pub simulate: Option<SimulateOptions>,
    pub density: Option<DensityOptions>,
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// `kind = "tabulated_csv"` names a `y,u,a` CSV relative to the config file;
/// every other kind is an inline forcing descriptor.
fn resolve_forcing(table: toml::Table, base: &Path) -> Result<ForcingDescriptor, CliError> {
    if table.get("kind").and_then(|k| k.as_str()) == Some("tabulated_csv") {
        let keys: Vec<&String> = table.keys().filter(|k| *k != "kind" && *k != "path").collect();
        if !keys.is_empty() {
            return Err(config_error(format!("forcing: unknown keys {keys:?}")));
        }
        let path = table
            .get("path")
            .and_then(|p| p.as_str())
            .ok_or_else(|| config_error("forcing: tabulated_csv needs a string `path`"))?;
        let path: PathBuf = base.join(path);
        let file = fs::File::open(&path).map_err(|e| config_error(format!("forcing table {}: {e}", path.display())))?;
        let table = TabulatedA::from_csv(file).map_err(|e| config_error(format!("forcing table {}: {e}", path.display())))?;
        return Ok(ForcingDescriptor::Tabulated { table });
    }
    ForcingDescriptor::deserialize(toml::Value::Table(table)).map_err(|e| config_error(format!("forcing: {e}")))
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_error(format!("{name} must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        if raw.schema_version != SCHEMA_VERSION {
            return Err(config_error(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                raw.schema_version
            )));
        }
        let cfg = Self {
            well: raw.well,
            forcing: resolve_forcing(raw.forcing, base)?,
            grid: raw.grid,
            eps: raw.eps,
            sharp: raw.sharp,
            diffuse: raw.diffuse,
            sweep: raw.sweep,
            assumptions: raw.assumptions,
            simulate: raw.simulate,
            density: raw.density,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = fs::read(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Ok((Self::parse(text, base)?, bytes))
    }

    fn validate(&self) -> Result<(), CliError> {
        positive("grid.length", self.grid.length)?;
        if self.grid.sharp_nodes < 3 {
            return Err(config_error("grid.sharp_nodes must be at least 3"));
        }
        for e in &self.eps {
            positive("eps", *e)?;
        }
        self.sharp.validate().map_err(|e| config_error(format!("sharp: {e}")))?;
        let d = &self.diffuse;
        for (name, v) in [
            ("diffuse.dt_over_eps2", d.dt_over_eps2),
            ("diffuse.max_time_over_eps2", d.max_time_over_eps2),
            ("diffuse.dz_over_eps", d.dz_over_eps),
            ("diffuse.dy_over_eps", d.dy_over_eps),
            ("diffuse.half_window_over_eps", d.half_window_over_eps),
            ("diffuse.drift_tol", d.drift_tol),
            ("diffuse.slope_tol", d.slope_tol),
            ("diffuse.tol_c", d.tol_c),
        ] {
            positive(name, v)?;
        }
        if let Some(m) = self.sweep.window {
            positive("sweep.window", m)?;
        }
        positive("assumptions.c_omega", self.assumptions.c_omega)?;
        if let Some(s) = &self.simulate {
            positive("simulate.eps", s.eps)?;
            positive("simulate.max_time", s.max_time)?;
            positive("simulate.plateau_tol", s.plateau_tol)?;
            positive("simulate.admissibility_delta", s.admissibility_delta)?;
        }
        if let Some(d) = &self.density {
            positive("density.eps", d.eps)?;
            positive("density.beta", d.beta)?;
            if d.stride == 0 {
                return Err(config_error("density.stride must be at least 1"));
            }
        }
        Ok(())
    }

    /// The ε list, required non-empty by the diffuse commands.
    pub fn eps_list(&self) -> Result<&[f64], CliError> {
        if self.eps.is_empty() {
            return Err(config_error("this command needs a non-empty `eps` list"));
        }
        Ok(&self.eps)
    }
}

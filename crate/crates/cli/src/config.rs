//! Run configuration: built-in defaults, then a TOML file (or a previous
//! run's manifest), then command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qbattery::ergotropy::Quantity;
use qbattery::{FitModel, FitSettings, ModelParams, OptimizerSettings};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seeds every optimizer; required for all simulation commands.
    pub seed: Option<u64>,
    pub model: ModelParams,
    pub optimizer: SearchConfig,
    pub sweep: SweepConfig,
    pub trajectory: TrajectoryConfig,
    pub blp: BlpConfig,
    pub fit: FitConfig,
}

/// Multi-start search settings; the seed comes from [`RunConfig::seed`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub starts: usize,
    pub max_evals: usize,
    pub tolerance: f64,
    pub agreement: f64,
    pub initial_step: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        let d = OptimizerSettings::default();
        Self {
            starts: d.starts,
            max_evals: d.max_evals,
            tolerance: d.tolerance,
            agreement: d.agreement,
            initial_step: d.initial_step,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub quantity: Quantity,
    pub phase_sweep: bool,
    pub entanglement: Vec<f64>,
    pub collisions: Vec<usize>,
    /// Defaults to the model's `k`.
    pub couplings: Option<Vec<f64>>,
    /// Defaults to the model's `delta_t`.
    pub delta_t: Option<Vec<f64>>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            quantity: Quantity::Gp,
            phase_sweep: false,
            entanglement: vec![0.0, 0.2, 0.4, 0.6, 0.8],
            collisions: vec![0, 2, 4, 7, 30],
            couplings: None,
            delta_t: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryConfig {
    pub quantity: Quantity,
    pub phase_sweep: bool,
    pub entanglement: f64,
    pub collisions: usize,
    pub substeps: usize,
    pub delta_t: Vec<f64>,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            quantity: Quantity::Gp,
            phase_sweep: false,
            entanglement: 0.6,
            collisions: 3,
            substeps: 200,
            delta_t: vec![0.4, 1.2, 1.4, 1.6],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlpConfig {
    pub delta_t: Vec<f64>,
    pub grid_points: usize,
    /// Consecutive collisions spanned by each trace; 1 is the single-spin map.
    pub collisions: usize,
    /// Coupling used for the scan, independent of the model's `k`.
    pub k: f64,
    /// Optional per-pair `delta_t,t,D` dump.
    pub trace_output: Option<PathBuf>,
}

impl Default for BlpConfig {
    fn default() -> Self {
        Self {
            delta_t: (1..=9).map(|i| 0.2 * i as f64).collect(),
            grid_points: qbattery::nonmarkov::DEFAULT_GRID_POINTS,
            collisions: 1,
            k: 1.0,
            trace_output: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub model: FitModel,
    pub input: Option<PathBuf>,
    /// Named starting parameters; defaults to endpoint anchoring.
    pub init: Option<BTreeMap<String, f64>>,
    /// Row filters applied when the input holds several curves.
    pub quantity: Option<Quantity>,
    pub collisions: Option<usize>,
    pub k: Option<f64>,
    pub delta_t: Option<f64>,
    pub settings: FitSettings,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            model: FitModel::M1,
            input: None,
            init: None,
            quantity: None,
            collisions: None,
            k: None,
            delta_t: None,
            settings: FitSettings::default(),
        }
    }
}

impl RunConfig {
    /// Reads a TOML config, or the `config` member of a JSON manifest.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        if path.extension().is_some_and(|x| x == "json") {
            let manifest: crate::manifest::Manifest = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("invalid manifest {}: {e}", path.display())))?;
            return Ok(manifest.config);
        }
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn optimizer_settings(&self) -> OptimizerSettings {
        let o = &self.optimizer;
        OptimizerSettings {
            starts: o.starts,
            seed: self.seed.unwrap_or_default(),
            max_evals: o.max_evals,
            tolerance: o.tolerance,
            agreement: o.agreement,
            initial_step: o.initial_step,
        }
    }

    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Usage("a seed is required: pass --seed or set `seed` in the config".into()))
    }

    pub fn validate_model(&self) -> Result<(), CliError> {
        self.model.validate().map_err(|e| CliError::Usage(format!("invalid model parameters: {e}")))?;
        if self.optimizer.starts == 0 || self.optimizer.max_evals == 0 {
            return Err(CliError::Usage("optimizer needs at least one start and one evaluation".into()));
        }
        Ok(())
    }
}

fn parse_item<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.trim().parse::<T>().map_err(|_| format!("'{s}' is not a valid number"))
}

/// Comma-separated numbers; `a:b:step` expands to `a, a+step, …, ≤ b`.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in s.split(',').filter(|x| !x.trim().is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(parse_item(x)?),
            [a, b, step] => {
                let (a, b, step): (f64, f64, f64) = (parse_item(a)?, parse_item(b)?, parse_item(step)?);
                if step.is_nan() || step <= 0.0 || b < a {
                    return Err(format!("range '{item}' needs start <= end and a positive step"));
                }
                let count = ((b - a) / step + 1e-9).floor() as usize;
                out.extend((0..=count).map(|i| a + i as f64 * step));
            }
            _ => return Err(format!("'{item}' is neither a number nor a start:end:step range")),
        }
    }
    Ok(out)
}

/// Comma-separated counts; `a:b` expands to the inclusive range.
pub fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for item in s.split(',').filter(|x| !x.trim().is_empty()) {
        match item.split_once(':') {
            None => out.push(parse_item(item)?),
            Some((a, b)) => {
                let (a, b): (usize, usize) = (parse_item(a)?, parse_item(b)?);
                if b < a {
                    return Err(format!("range '{item}' is empty"));
                }
                out.extend(a..=b);
            }
        }
    }
    Ok(out)
}

/// `name=value` pairs separated by commas.
pub fn parse_named_params(s: &str) -> Result<BTreeMap<String, f64>, String> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| format!("'{kv}' is not name=value"))?;
            Ok((k.trim().to_string(), parse_item(v)?))
        })
        .collect()
}

//! Run configuration: built-in defaults, overlaid by a `--config` JSON file,
//! overlaid by command-line flags.

use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use magicsim_core::metrics::UnitMode;
use magicsim_core::{MechanismConfig, PriorityUpdate, RzHandling, SimConfig, SimulationMode};

use crate::CliError;

/// Keys accepted in a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub mechanism: Option<MechanismConfig>,
    #[serde(rename = "F")]
    pub units: Option<u32>,
    pub mode: Option<SimulationMode>,
    pub rz_handling: Option<RzHandling>,
    pub priority_update: Option<PriorityUpdate>,
    pub max_cycles: Option<u64>,
    pub handoff_latency: Option<u32>,
    pub fixup_duration: Option<u32>,
    pub cost_mode: Option<UnitMode>,
    pub trials: Option<u32>,
    pub seed: Option<u64>,
    pub f_min: Option<u32>,
    pub f_max: Option<u32>,
    pub eps: Option<f64>,
    pub per_list: Option<Vec<f64>>,
    pub d_list: Option<Vec<u32>>,
    pub f_list: Option<Vec<u32>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))
            .map_err(CliError::Input)?;
        serde_json::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))
            .map_err(CliError::Input)
    }
}

/// Every setting a command used, with defaults filled in. Stored in the run
/// manifest and sufficient to repeat the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedConfig {
    pub sim: SimConfig,
    pub trials: u32,
    pub base_seed: u64,
    pub f_min: u32,
    pub f_max: u32,
    pub eps: f64,
    pub per_list: Vec<f64>,
    pub d_list: Vec<u32>,
    pub f_list: Vec<u32>,
    /// Write per-cycle demand traces.
    pub trace: bool,
}

impl Default for ResolvedConfig {
    fn default() -> Self {
        ResolvedConfig {
            sim: SimConfig::default(),
            trials: 1,
            base_seed: 0,
            f_min: 1,
            f_max: 100,
            eps: 0.01,
            per_list: Vec::new(),
            d_list: Vec::new(),
            f_list: Vec::new(),
            trace: false,
        }
    }
}

/// Flag values; `None` leaves the lower layer in place.
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub mechanism: Option<String>,
    pub mode: Option<SimulationMode>,
    pub units: Option<u32>,
    pub trials: Option<u32>,
    pub seed: Option<u64>,
    pub rz_handling: Option<RzHandling>,
    pub priority_update: Option<PriorityUpdate>,
    pub cost_mode: Option<UnitMode>,
    pub max_cycles: Option<u64>,
    pub f_min: Option<u32>,
    pub f_max: Option<u32>,
    pub eps: Option<f64>,
    pub per_list: Option<Vec<f64>>,
    pub d_list: Option<Vec<u32>>,
    pub f_list: Option<Vec<u32>>,
    pub trace: bool,
}

pub fn resolve(file: &FileConfig, flags: &FlagOverrides) -> anyhow::Result<ResolvedConfig> {
    let mut r = ResolvedConfig::default();
    let s = &mut r.sim;

    if let Some(m) = &file.mechanism {
        s.mechanism = m.clone();
    }
    macro_rules! layer {
        ($dst:expr, $($src:expr),+) => {
            $( if let Some(v) = $src.clone() { $dst = v; } )+
        };
    }
    layer!(s.units, file.units, flags.units);
    layer!(s.mode, file.mode, flags.mode);
    layer!(s.rz_handling, file.rz_handling);
    layer!(
        s.priority_update,
        file.priority_update,
        flags.priority_update
    );
    layer!(s.max_cycles, file.max_cycles, flags.max_cycles);
    layer!(s.handoff_latency, file.handoff_latency);
    layer!(s.fixup_duration, file.fixup_duration);
    layer!(s.cost_mode, file.cost_mode, flags.cost_mode);

    if let Some(name) = &flags.mechanism {
        // A flag naming the file's mechanism keeps the file's parameters.
        if s.mechanism.name() != name {
            s.mechanism = MechanismConfig::from_name(name).with_context(|| {
                format!("unknown mechanism `{name}` (expected distillation, cultivation or rz)")
            })?;
        }
    }
    if let Some(h) = flags.rz_handling {
        if s.mechanism.is_rz() {
            bail!("--rz-handling applies to distillation and cultivation, not to --mechanism rz");
        }
        s.rz_handling = h;
    }
    if s.mechanism.is_rz() && s.rz_handling != RzHandling::AsOneState {
        bail!(
            "rz_handling `{}` cannot be combined with the rz mechanism",
            s.rz_handling
        );
    }

    layer!(r.trials, file.trials, flags.trials);
    layer!(r.base_seed, file.seed, flags.seed);
    layer!(r.f_min, file.f_min, flags.f_min);
    layer!(r.f_max, file.f_max, flags.f_max);
    layer!(r.eps, file.eps, flags.eps);
    layer!(r.per_list, file.per_list, flags.per_list);
    layer!(r.d_list, file.d_list, flags.d_list);
    layer!(r.f_list, file.f_list, flags.f_list);
    r.trace = flags.trace;
    r.sim.trial_seed = r.base_seed;
    r.sim.validate()?;
    Ok(r)
}

/// Parses `a,b,c`; an empty list is an error.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    let items: Vec<&str> = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .collect();
    if items.is_empty() {
        return Err("list must not be empty".into());
    }
    items
        .iter()
        .map(|x| {
            x.parse::<T>()
                .map_err(|e| format!("bad list item `{x}`: {e}"))
        })
        .collect()
}

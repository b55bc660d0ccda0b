//! Cycle-stepped critical-path list scheduling against a production bank.
//!
//! Each cycle the bank advances first. Ready nodes are then visited by
//! priority (longest path to a sink) descending, ties to the smaller id.
//! Clifford, measurement and fixup nodes start at once. Injection nodes
//! request one state and stall when none is granted. Stalled nodes hold no
//! reservation and compete again the next cycle. When an injection finishes
//! in Modes C and D a fair coin decides whether it failed. A failed T
//! injection is followed by an S-type fixup. A failed `rz(θ)` injection under
//! Rz synthesis is followed by `rz(2θ)`, or by an S-type fixup once the
//! doubled angle is Clifford.
//!
//! A node occupies cycles `s ..= s + d - 1`. Its successors can start at
//! `s + d` at the earliest. The cycle count `C` is the cycle in which the last
//! node completes.

mod engine;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::circuit_ir::PriorityUpdate;
use crate::circuit_ir::{CircuitDag, CircuitError, GateKind, NodeId};
use crate::metrics::UnitMode;
use crate::production::{ConfigError, MechanismConfig, ProductionBank};

pub use engine::sample_injection;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SimulationMode {
    /// No production errors, no injection errors.
    A,
    /// Production errors only.
    B,
    /// Injection errors only.
    C,
    /// Both.
    #[default]
    D,
}

impl SimulationMode {
    pub const ALL: [SimulationMode; 4] = [
        SimulationMode::A,
        SimulationMode::B,
        SimulationMode::C,
        SimulationMode::D,
    ];

    pub fn production_errors(self) -> bool {
        matches!(self, SimulationMode::B | SimulationMode::D)
    }

    pub fn injection_errors(self) -> bool {
        matches!(self, SimulationMode::C | SimulationMode::D)
    }
}

impl fmt::Display for SimulationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for SimulationMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(SimulationMode::A),
            "B" | "b" => Ok(SimulationMode::B),
            "C" | "c" => Ok(SimulationMode::C),
            "D" | "d" => Ok(SimulationMode::D),
            _ => Err(format!("unknown mode `{s}` (expected A, B, C or D)")),
        }
    }
}

/// How non-Clifford `rz` gates consume T states under distillation and
/// cultivation. Serialized as `"as-one-state"` or `"expand:n"`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RzHandling {
    /// One T state per rotation, with T fixup semantics.
    #[default]
    AsOneState,
    /// `n` serial T gates per rotation.
    Expand(u32),
}

impl fmt::Display for RzHandling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RzHandling::AsOneState => f.write_str("as-one-state"),
            RzHandling::Expand(n) => write!(f, "expand:{n}"),
        }
    }
}

impl FromStr for RzHandling {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "as-one-state" {
            return Ok(RzHandling::AsOneState);
        }
        let n = s
            .strip_prefix("expand:")
            .and_then(|n| n.parse::<u32>().ok())
            .ok_or_else(|| format!("bad rz handling `{s}` (expected as-one-state or expand:n)"))?;
        if n == 0 {
            return Err("expand:n needs n >= 1".into());
        }
        Ok(RzHandling::Expand(n))
    }
}

impl TryFrom<String> for RzHandling {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<RzHandling> for String {
    fn from(r: RzHandling) -> String {
        r.to_string()
    }
}

fn default_max_cycles() -> u64 {
    100_000_000
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub mechanism: MechanismConfig,
    #[serde(rename = "F")]
    pub units: u32,
    pub mode: SimulationMode,
    #[serde(default)]
    pub rz_handling: RzHandling,
    #[serde(default)]
    pub priority_update: PriorityUpdate,
    #[serde(default)]
    pub trial_seed: u64,
    #[serde(default = "default_max_cycles")]
    pub max_cycles: u64,
    /// Cycles between production and first possible consumption.
    #[serde(default = "one")]
    pub handoff_latency: u32,
    /// Duration of S-type fixups.
    #[serde(default = "one")]
    pub fixup_duration: u32,
    #[serde(default)]
    pub cost_mode: UnitMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            mechanism: MechanismConfig::default(),
            units: 1,
            mode: SimulationMode::default(),
            rz_handling: RzHandling::default(),
            priority_update: PriorityUpdate::default(),
            trial_seed: 0,
            max_cycles: default_max_cycles(),
            handoff_latency: 1,
            fixup_duration: 1,
            cost_mode: UnitMode::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.mechanism.validate()?;
        if self.fixup_duration == 0 {
            return Err(SimError::Config("fixup_duration must be at least 1".into()));
        }
        if self.max_cycles == 0 {
            return Err(SimError::Config("max_cycles must be positive".into()));
        }
        Ok(())
    }

    /// The mechanism as the bank sees it in this mode.
    pub fn effective_mechanism(&self) -> MechanismConfig {
        if self.mode.production_errors() {
            self.mechanism.clone()
        } else {
            self.mechanism.deterministic()
        }
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub cycles: u64,
    pub q_total: u64,
    pub volume: u64,
    /// States consumed per cycle, cycles `1..=C`.
    pub demand_trace: Vec<u32>,
    /// Denied state requests per cycle.
    pub stall_trace: Vec<u32>,
    pub fixup_count: u64,
    pub injection_count: u64,
    /// Failed production rounds or attempts.
    pub abort_count: u64,
    pub max_concurrent_rz_units: u32,
    pub peak_demand: u32,
    pub trial_seed: u64,
}

impl SimResult {
    pub fn stall_total(&self) -> u64 {
        self.stall_trace.iter().map(|&s| u64::from(s)).sum()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("deadlock at cycle {cycle}: node {node} ({kind}) stalled since cycle {since} and no production unit can ever supply it")]
    Deadlock {
        node: NodeId,
        kind: GateKind,
        since: u64,
        cycle: u64,
    },
    #[error("exceeded max_cycles = {max_cycles}; oldest stalled node: {}", describe_stalled(.node, .since))]
    MaxCycles {
        max_cycles: u64,
        node: Option<NodeId>,
        since: Option<u64>,
    },
    #[error("invariant violated at cycle {cycle}: {message}")]
    Invariant { cycle: u64, message: String },
}

fn describe_stalled(node: &Option<NodeId>, since: &Option<u64>) -> String {
    match (node, since) {
        (Some(n), Some(s)) => format!("{n} (since cycle {s})"),
        _ => "none".into(),
    }
}

impl From<ConfigError> for SimError {
    fn from(e: ConfigError) -> Self {
        SimError::Config(e.0)
    }
}

/// The circuit the engine runs for `cfg`: Rz expansion applied when asked.
fn prepared_dag(dag: &CircuitDag, cfg: &SimConfig) -> Result<CircuitDag, SimError> {
    let mut work = match cfg.rz_handling {
        RzHandling::Expand(n) if !cfg.mechanism.is_rz() => dag.with_rz_expanded(n)?,
        _ => dag.clone(),
    };
    work.refresh_priorities()?;
    Ok(work)
}

/// Runs one trial.
pub fn simulate(dag: &CircuitDag, cfg: &SimConfig) -> Result<SimResult, SimError> {
    cfg.validate()?;
    let work = prepared_dag(dag, cfg)?;
    let bank = ProductionBank::new(
        &cfg.effective_mechanism(),
        cfg.units,
        cfg.trial_seed,
        cfg.handoff_latency,
    );
    engine::run(work, cfg, bank, cfg.mode)
}

/// Mode-A cycle count with unconstrained production: the reference for
/// overhead ratios.
pub fn c_static(dag: &CircuitDag, cfg: &SimConfig) -> Result<u64, SimError> {
    cfg.validate()?;
    let work = prepared_dag(dag, cfg)?;
    let bank = ProductionBank::unlimited(&cfg.mechanism, cfg.handoff_latency);
    Ok(engine::run(work, cfg, bank, SimulationMode::A)?.cycles)
}

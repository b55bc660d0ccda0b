//! Stochastic simulation of magic-state supply and demand in fault-tolerant
//! circuits.
//!
//! The crate couples a critical-path list scheduler with three stochastic
//! magic-state production models (15-to-1 distillation, cultivation and direct
//! Rz synthesis) and a 50% injection-failure model that splices fixup gates
//! into the circuit while it runs. On top of single-trial simulation it
//! provides the space-time metrics and factory-count sweeps used to locate the
//! volume-optimal number of production units.
//!
//! Pipeline:
//!
//! 1. [`circuit_ir`] parses OpenQASM 2.0, lowers gates to the Clifford+T+Rz
//!    core set and builds a [`CircuitDag`].
//! 2. [`production`] models the producers feeding magic-state buffers.
//! 3. [`scheduler::simulate`] runs one trial cycle by cycle.
//! 4. [`metrics`] and [`sweep`] turn trials into volumes, plateaus and `F*`.

pub mod circuit_ir;
pub mod metrics;
pub mod production;
pub mod rng;
pub mod scheduler;
pub mod sweep;

pub use circuit_ir::{
    parse_qasm, parse_qasm_with, static_profile, CircuitDag, CircuitError, CliffordGate,
    DecompositionTable, GateKind, GateNode, NodeId, Origin, ParseOptions, StaticProfile,
};
pub use metrics::{CostModel, UnitMode};
pub use production::{
    CultivationConfig, DistillationConfig, MechanismConfig, ProductionBank, RzSynthConfig,
};
pub use scheduler::{
    simulate, PriorityUpdate, RzHandling, SimConfig, SimError, SimResult, SimulationMode,
};
pub use sweep::{SweepConfig, SweepResult};

/// Runtime conservation and exclusivity checks are compiled into debug and
/// test builds, and into release builds with the `invariant-checks` feature.
pub(crate) const CHECK_INVARIANTS: bool =
    cfg!(debug_assertions) || cfg!(feature = "invariant-checks");

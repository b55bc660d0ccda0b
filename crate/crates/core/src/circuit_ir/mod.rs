//! Circuit intermediate representation.
//!
//! OpenQASM 2.0 text is parsed into a flat [`Program`] of gate applications,
//! lowered to the core gate set with a [`DecompositionTable`], and turned into
//! a [`CircuitDag`] with per-qubit last-writer dependency edges.

pub mod angle;
mod dag;
mod decompose;
mod expr;
mod lexer;
mod profile;
mod qasm;
pub mod synthetic;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dag::{longest_path_priorities, CircuitDag, PriorityUpdate};
pub use decompose::{lower_gates, DecompEntry, DecompositionTable};
pub use profile::{static_profile, Burstiness, StaticProfile};
pub use qasm::{parse_program, Op, Program};

/// Logical Clifford gates in the core gate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CliffordGate {
    Id,
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    Cx,
    Cz,
}

impl CliffordGate {
    pub fn name(self) -> &'static str {
        match self {
            CliffordGate::Id => "id",
            CliffordGate::X => "x",
            CliffordGate::Y => "y",
            CliffordGate::Z => "z",
            CliffordGate::H => "h",
            CliffordGate::S => "s",
            CliffordGate::Sdg => "sdg",
            CliffordGate::Cx => "cx",
            CliffordGate::Cz => "cz",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "x" => CliffordGate::X,
            "y" => CliffordGate::Y,
            "z" => CliffordGate::Z,
            "h" => CliffordGate::H,
            "s" => CliffordGate::S,
            "sdg" => CliffordGate::Sdg,
            "cx" | "CX" => CliffordGate::Cx,
            "cz" => CliffordGate::Cz,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            CliffordGate::Cx | CliffordGate::Cz => 2,
            _ => 1,
        }
    }

    /// The Clifford equal (up to phase) to `rz(k·π/2)`.
    pub fn from_quarter_turns(k: u8) -> Self {
        match k % 4 {
            0 => CliffordGate::Id,
            1 => CliffordGate::S,
            2 => CliffordGate::Z,
            _ => CliffordGate::Sdg,
        }
    }
}

/// What a DAG node does.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    Clifford(CliffordGate),
    /// Consumes one |T> state. `dagger` marks a `tdg`, which is modeled
    /// identically to `t`.
    TInjection {
        dagger: bool,
    },
    /// Consumes one rotation state; the angle is canonical in `[0, 2π)` and
    /// never Clifford-equivalent.
    RzInjection {
        angle: f64,
    },
    /// S/S† correction spliced in after a failed injection.
    FixupClifford,
    Measure,
    Barrier,
}

impl GateKind {
    pub fn is_injection(&self) -> bool {
        matches!(
            self,
            GateKind::TInjection { .. } | GateKind::RzInjection { .. }
        )
    }

    /// Key into a [`DurationTable`].
    pub fn duration_key(&self) -> &'static str {
        match self {
            GateKind::Clifford(g) => g.name(),
            GateKind::TInjection { dagger: false } => "t",
            GateKind::TInjection { dagger: true } => "tdg",
            GateKind::RzInjection { .. } => "rz",
            GateKind::FixupClifford => "fixup",
            GateKind::Measure => "measure",
            GateKind::Barrier => "barrier",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateKind::RzInjection { angle } => write!(f, "rz({angle})"),
            other => f.write_str(other.duration_key()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Static,
    Fixup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateNode {
    pub id: NodeId,
    pub kind: GateKind,
    pub qubits: Vec<u32>,
    /// Cycles; 0 only for barriers.
    pub duration: u32,
    /// Longest path to a sink, in cycles, including this node.
    pub priority: u64,
    pub origin: Origin,
}

/// Per-kind gate durations in cycles. Keys are gate names (`h`, `cx`, ...),
/// `t`, `tdg`, `rz`, `measure` and `fixup`. Barriers always take 0 cycles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DurationTable {
    #[serde(default = "one")]
    pub default: u32,
    #[serde(default)]
    pub overrides: std::collections::BTreeMap<String, u32>,
}

fn one() -> u32 {
    1
}

impl Default for DurationTable {
    fn default() -> Self {
        DurationTable {
            default: 1,
            overrides: Default::default(),
        }
    }
}

impl DurationTable {
    pub fn get(&self, kind: &GateKind) -> u32 {
        if matches!(kind, GateKind::Barrier) {
            return 0;
        }
        self.overrides
            .get(kind.duration_key())
            .copied()
            .unwrap_or(self.default)
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        if self.default == 0 || self.overrides.values().any(|&d| d == 0) {
            return Err(CircuitError::Config(
                "gate durations must be at least one cycle".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    pub table: DecompositionTable,
    pub durations: DurationTable,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax {
        line: u32,
        col: u32,
        message: String,
    },
    #[error("line {line}: unsupported gate `{name}` (no decomposition entry)")]
    UnsupportedGate { name: String, line: u32 },
    #[error("line {line}: {what} is not supported")]
    UnsupportedStatement { what: String, line: u32 },
    #[error("line {line}: unknown register `{name}`")]
    UnknownRegister { name: String, line: u32 },
    #[error("line {line}: index {index} out of range for register `{register}` of size {size}")]
    QubitOutOfRange {
        register: String,
        index: u64,
        size: u32,
        line: u32,
    },
    #[error("line {line}: duplicate qubit operand {qubit} in `{gate}`")]
    DuplicateQubit { gate: String, qubit: u32, line: u32 },
    #[error("line {line}: `{gate}` expects {expected} {what}, got {got}")]
    Arity {
        gate: String,
        what: &'static str,
        expected: usize,
        got: usize,
        line: u32,
    },
    #[error("line {line}: {message}")]
    Expr { message: String, line: u32 },
    #[error("decomposition of `{0}` recurses too deeply")]
    RecursiveDecomposition(String),
    #[error("invalid decomposition table: {0}")]
    Table(String),
    #[error("{0}")]
    Config(String),
    #[error("dependency cycle through node {0}")]
    Cycle(NodeId),
}

/// Parses, lowers with the built-in decomposition table and builds the DAG.
pub fn parse_qasm(text: &str) -> Result<CircuitDag, CircuitError> {
    parse_qasm_with(text, &ParseOptions::default())
}

pub fn parse_qasm_with(text: &str, opts: &ParseOptions) -> Result<CircuitDag, CircuitError> {
    opts.durations.validate()?;
    let program = parse_program(text)?;
    let lowered = lower_gates(&program, &opts.table)?;
    CircuitDag::from_program(&lowered, &opts.durations)
}

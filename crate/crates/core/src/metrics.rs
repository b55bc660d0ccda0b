//! Space-time cost metrics.
//!
//! Costs are in abstract qubit units. The logical-tiles preset counts one
//! unit per logical qubit; the physical preset counts `2d²` physical qubits
//! per logical patch. Per-mechanism unit costs come from
//! [`MechanismConfig::unit_cost`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit_ir::{Burstiness, CircuitDag, StaticProfile};
use crate::production::MechanismConfig;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitMode {
    #[default]
    LogicalTiles,
    Physical,
}

impl UnitMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "logical-tiles" => Some(UnitMode::LogicalTiles),
            "physical" => Some(UnitMode::Physical),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub unit_mode: UnitMode,
    pub cost_per_logical_qubit: u64,
    pub cost_per_production_unit: u64,
}

impl CostModel {
    pub fn for_mechanism(mech: &MechanismConfig, unit_mode: UnitMode) -> Self {
        CostModel {
            unit_mode,
            cost_per_logical_qubit: mech.logical_qubit_cost(unit_mode),
            cost_per_production_unit: mech.unit_cost(unit_mode),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("demand trace is empty")]
    EmptyTrace,
    #[error("static cycle count is zero")]
    ZeroStatic,
    #[error("circuit has no gates")]
    EmptyCircuit,
}

pub fn q_total(logical_qubits: u32, units: u32, cm: &CostModel) -> u64 {
    u64::from(logical_qubits) * cm.cost_per_logical_qubit
        + u64::from(units) * cm.cost_per_production_unit
}

pub fn space_time_volume(cycles: u64, q: u64) -> u64 {
    cycles * q
}

pub fn overhead_ratio(cycles: u64, c_static: u64) -> Result<f64, MetricsError> {
    if c_static == 0 {
        return Err(MetricsError::ZeroStatic);
    }
    Ok(cycles as f64 / c_static as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandStats {
    pub peak: u32,
    pub mean: f64,
}

pub fn demand_stats(trace: &[u32]) -> Result<DemandStats, MetricsError> {
    if trace.is_empty() {
        return Err(MetricsError::EmptyTrace);
    }
    let sum: u64 = trace.iter().map(|&d| u64::from(d)).sum();
    Ok(DemandStats {
        peak: trace.iter().copied().max().unwrap_or(0),
        mean: sum as f64 / trace.len() as f64,
    })
}

/// `(peak_det - peak_stoch) / peak_det`; 0 when the deterministic peak is 0.
pub fn peak_reduction(peak_det: u32, peak_stoch: u32) -> f64 {
    if peak_det == 0 {
        return 0.0;
    }
    (f64::from(peak_det) - f64::from(peak_stoch)) / f64::from(peak_det)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralPredictors {
    pub critical_path_ncd: f64,
    pub burstiness: Burstiness,
}

pub fn structural_predictors(
    dag: &CircuitDag,
    profile: &StaticProfile,
) -> Result<StructuralPredictors, MetricsError> {
    if dag.is_empty() {
        return Err(MetricsError::EmptyCircuit);
    }
    Ok(StructuralPredictors {
        critical_path_ncd: profile.critical_path_ncd,
        burstiness: profile.burstiness,
    })
}

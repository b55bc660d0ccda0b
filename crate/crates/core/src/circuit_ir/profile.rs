//! Deterministic non-Clifford demand profile of a circuit.

use serde::{Deserialize, Serialize};

use super::{longest_path_priorities, CircuitDag, CircuitError, GateKind, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Burstiness {
    /// `gamma_peak / gamma_avg`; 0 for a circuit without demand.
    pub peak_to_mean: f64,
    /// Population coefficient of variation of `per_layer_demand`.
    pub cv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticProfile {
    pub qubit_count: u32,
    pub gate_count: usize,
    /// Non-Clifford nodes per ASAP layer; one layer per cycle of depth.
    pub per_layer_demand: Vec<u32>,
    pub gamma_peak: u32,
    pub gamma_avg: f64,
    pub t_count: usize,
    pub rz_count: usize,
    pub depth_cycles: u64,
    pub critical_path_ncd: f64,
    pub critical_path_len: usize,
    pub burstiness: Burstiness,
}

pub fn static_profile(dag: &CircuitDag) -> Result<StaticProfile, CircuitError> {
    let starts = dag.asap_starts()?;
    let prio = longest_path_priorities(dag)?;
    let depth = prio.iter().copied().max().unwrap_or(0);

    let mut per_layer = vec![0u32; depth as usize];
    for node in dag.nodes() {
        if node.kind.is_injection() {
            per_layer[starts[node.id.index()] as usize] += 1;
        }
    }
    let demand: u64 = per_layer.iter().map(|&d| d as u64).sum();
    let gamma_peak = per_layer.iter().copied().max().unwrap_or(0);
    let gamma_avg = if depth == 0 {
        0.0
    } else {
        demand as f64 / depth as f64
    };

    let (path_len, path_nc) = critical_path(dag, &prio);
    let critical_path_ncd = if path_len == 0 {
        0.0
    } else {
        path_nc as f64 / path_len as f64
    };

    Ok(StaticProfile {
        qubit_count: dag.qubit_count(),
        gate_count: dag.len(),
        gamma_peak,
        gamma_avg,
        t_count: dag.t_count(),
        rz_count: dag.rz_count(),
        depth_cycles: depth,
        critical_path_ncd,
        critical_path_len: path_len,
        burstiness: burstiness(&per_layer),
        per_layer_demand: per_layer,
    })
}

/// Follows the highest-priority successor from the highest-priority node,
/// ties to the smaller id. Returns (non-barrier nodes, non-Clifford nodes).
fn critical_path(dag: &CircuitDag, prio: &[u64]) -> (usize, usize) {
    let best = |ids: &mut dyn Iterator<Item = NodeId>| {
        ids.fold(None::<NodeId>, |acc, n| match acc {
            Some(a) if prio[a.index()] >= prio[n.index()] => Some(a),
            _ => Some(n),
        })
    };
    let mut cur = best(&mut (0..dag.len() as u32).map(NodeId));
    let (mut len, mut nc) = (0, 0);
    while let Some(n) = cur {
        let kind = dag.node(n).kind;
        if kind != GateKind::Barrier {
            len += 1;
            if kind.is_injection() {
                nc += 1;
            }
        }
        let mut succ: Vec<NodeId> = dag.succs(n).to_vec();
        succ.sort();
        cur = best(&mut succ.into_iter());
    }
    (len, nc)
}

pub(crate) fn burstiness(per_layer: &[u32]) -> Burstiness {
    if per_layer.is_empty() {
        return Burstiness {
            peak_to_mean: 0.0,
            cv: 0.0,
        };
    }
    let n = per_layer.len() as f64;
    let mean = per_layer.iter().map(|&d| d as f64).sum::<f64>() / n;
    if mean == 0.0 {
        return Burstiness {
            peak_to_mean: 0.0,
            cv: 0.0,
        };
    }
    let var = per_layer
        .iter()
        .map(|&d| (d as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    let peak = per_layer.iter().copied().max().unwrap_or(0) as f64;
    Burstiness {
        peak_to_mean: peak / mean,
        cv: var.sqrt() / mean,
    }
}

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::f64::consts::FRAC_PI_4;

use rand::RngCore;

use super::{SimConfig, SimError, SimResult, SimulationMode};
use crate::circuit_ir::angle::{fixup_angle, is_clifford_angle};
use crate::circuit_ir::{CircuitDag, GateKind, NodeId};
use crate::metrics::{q_total, space_time_volume, CostModel};
use crate::production::ProductionBank;
use crate::rng::{bernoulli, node_stream};
use crate::CHECK_INVARIANTS;

/// Whether an injection succeeded: a fair coin.
pub fn sample_injection(rng: &mut impl RngCore) -> bool {
    !bernoulli(rng, 0.5)
}

/// Ready-set key: priority descending, then id ascending.
type ReadyKey = (Reverse<u64>, NodeId);

struct Engine<'a> {
    dag: CircuitDag,
    cfg: &'a SimConfig,
    bank: ProductionBank,
    injection_errors: bool,
    rz_semantics: bool,
    waiting: Vec<u32>,
    done: Vec<bool>,
    ready_since: Vec<u64>,
    ready_plain: Vec<NodeId>,
    ready_inj: BTreeSet<ReadyKey>,
    in_flight: BinaryHeap<Reverse<(u64, NodeId)>>,
    busy_until: Vec<u64>,
    completed: usize,
    fixups: u64,
    injections: u64,
}

pub(super) fn run(
    dag: CircuitDag,
    cfg: &SimConfig,
    bank: ProductionBank,
    mode: SimulationMode,
) -> Result<SimResult, SimError> {
    let n = dag.len();
    let waiting = dag
        .nodes()
        .iter()
        .map(|x| dag.preds(x.id).len() as u32)
        .collect();
    let qubits = dag.qubit_count() as usize;
    let e = Engine {
        cfg,
        bank,
        injection_errors: mode.injection_errors(),
        rz_semantics: cfg.mechanism.is_rz(),
        waiting,
        done: vec![false; n],
        ready_since: vec![0; n],
        ready_plain: Vec::new(),
        ready_inj: BTreeSet::new(),
        in_flight: BinaryHeap::new(),
        busy_until: vec![0; qubits],
        completed: 0,
        fixups: 0,
        injections: 0,
        dag,
    };
    e.run()
}

impl Engine<'_> {
    fn run(mut self) -> Result<SimResult, SimError> {
        let sources: Vec<NodeId> = (0..self.dag.len() as u32)
            .map(NodeId)
            .filter(|&id| self.waiting[id.index()] == 0)
            .collect();
        for id in sources {
            self.make_ready(id, 0)?;
        }

        let mut demand = Vec::new();
        let mut stalls = Vec::new();
        let mut cycle = 0u64;
        while self.completed < self.dag.len() {
            cycle += 1;
            if cycle > self.cfg.max_cycles {
                let oldest = self.oldest_stalled();
                return Err(SimError::MaxCycles {
                    max_cycles: self.cfg.max_cycles,
                    node: oldest.map(|(_, n)| n),
                    since: oldest.map(|(s, _)| s),
                });
            }
            self.bank
                .step(cycle)
                .map_err(|message| SimError::Invariant { cycle, message })?;

            for id in std::mem::take(&mut self.ready_plain) {
                self.start(id, cycle)?;
            }
            let (granted, denied) = self.grant_injections(cycle)?;
            demand.push(granted);
            stalls.push(denied);

            while let Some(&Reverse((end, id))) = self.in_flight.peek() {
                if end > cycle {
                    break;
                }
                debug_assert_eq!(end, cycle);
                self.in_flight.pop();
                self.complete(id, cycle)?;
            }

            if CHECK_INVARIANTS {
                self.bank
                    .check_invariants()
                    .map_err(|message| SimError::Invariant { cycle, message })?;
            }
            if self.in_flight.is_empty() && !self.ready_inj.is_empty() && !self.bank.can_produce() {
                let (since, node) = self.oldest_stalled().expect("stalled set is non-empty");
                return Err(SimError::Deadlock {
                    node,
                    kind: self.dag.node(node).kind,
                    since,
                    cycle,
                });
            }
        }

        if CHECK_INVARIANTS {
            self.dag
                .topological_order()
                .map_err(|e| SimError::Invariant {
                    cycle,
                    message: e.to_string(),
                })?;
            let consumed: u64 = demand.iter().map(|&d| u64::from(d)).sum();
            if consumed != self.injections {
                return Err(SimError::Invariant {
                    cycle,
                    message: format!(
                        "{consumed} states consumed by {} injections",
                        self.injections
                    ),
                });
            }
        }

        let cost = CostModel::for_mechanism(&self.cfg.mechanism, self.cfg.cost_mode);
        let q = q_total(self.dag.qubit_count(), self.cfg.units, &cost);
        let stats = self.bank.stats();
        Ok(SimResult {
            cycles: cycle,
            q_total: q,
            volume: space_time_volume(cycle, q),
            peak_demand: demand.iter().copied().max().unwrap_or(0),
            demand_trace: demand,
            stall_trace: stalls,
            fixup_count: self.fixups,
            injection_count: self.injections,
            abort_count: stats.aborts,
            max_concurrent_rz_units: stats.peak_busy_units,
            trial_seed: self.cfg.trial_seed,
        })
    }

    fn oldest_stalled(&self) -> Option<(u64, NodeId)> {
        self.ready_inj
            .iter()
            .map(|&(_, id)| (self.ready_since[id.index()], id))
            .min()
    }

    /// Angle a node requests from an Rz-synthesis bank.
    fn rz_angle(&self, id: NodeId) -> Option<f64> {
        if !self.rz_semantics {
            return None;
        }
        match self.dag.node(id).kind {
            GateKind::RzInjection { angle } => Some(angle),
            GateKind::TInjection { .. } => Some(FRAC_PI_4),
            _ => None,
        }
    }

    /// All predecessors of `id` completed during `cycle`.
    fn make_ready(&mut self, id: NodeId, cycle: u64) -> Result<(), SimError> {
        let node = self.dag.node(id);
        match node.kind {
            GateKind::Barrier => self.complete(id, cycle),
            kind if kind.is_injection() => {
                self.ready_since[id.index()] = cycle + 1;
                if let Some(angle) = self.rz_angle(id) {
                    self.bank.register_rz(angle, cycle);
                }
                self.ready_inj.insert((Reverse(node.priority), id));
                Ok(())
            }
            _ => {
                self.ready_since[id.index()] = cycle + 1;
                self.ready_plain.push(id);
                Ok(())
            }
        }
    }

    fn start(&mut self, id: NodeId, cycle: u64) -> Result<(), SimError> {
        let node = self.dag.node(id);
        let end = cycle + u64::from(node.duration) - 1;
        if CHECK_INVARIANTS {
            for &q in &node.qubits {
                if self.busy_until[q as usize] >= cycle {
                    return Err(SimError::Invariant {
                        cycle,
                        message: format!("qubit {q} is busy when node {id} starts"),
                    });
                }
                self.busy_until[q as usize] = end;
            }
        }
        self.in_flight.push(Reverse((end, id)));
        Ok(())
    }

    /// Visits stalled and newly ready injections in priority order.
    fn grant_injections(&mut self, cycle: u64) -> Result<(u32, u32), SimError> {
        let mut granted = Vec::new();
        let mut denied = 0u32;
        let mut exhausted_keys: Vec<u64> = Vec::new();
        let mut exhausted = false;
        for &(prio, id) in &self.ready_inj {
            let angle = self.rz_angle(id);
            let key = angle.map(f64::to_bits);
            let blocked = match key {
                None => exhausted,
                Some(k) => exhausted_keys.contains(&k),
            };
            if !blocked && self.bank.request(cycle, 1, angle) == 1 {
                granted.push((prio, id));
                continue;
            }
            denied += 1;
            match key {
                None => exhausted = true,
                Some(k) if !blocked => exhausted_keys.push(k),
                Some(_) => {}
            }
        }
        for key in &granted {
            self.ready_inj.remove(key);
            self.start(key.1, cycle)?;
        }
        self.injections += granted.len() as u64;
        Ok((granted.len() as u32, denied))
    }

    fn complete(&mut self, id: NodeId, cycle: u64) -> Result<(), SimError> {
        self.done[id.index()] = true;
        self.completed += 1;
        let kind = self.dag.node(id).kind;
        if self.injection_errors && kind.is_injection() {
            let mut rng = node_stream(self.cfg.trial_seed, id.0);
            if !sample_injection(&mut rng) {
                self.insert_fixup(id, kind, cycle)?;
            }
        }
        let succs = self.dag.succs(id).to_vec();
        for s in succs {
            let w = &mut self.waiting[s.index()];
            *w -= 1;
            if *w == 0 {
                self.make_ready(s, cycle)?;
            }
        }
        Ok(())
    }

    fn insert_fixup(&mut self, after: NodeId, kind: GateKind, cycle: u64) -> Result<(), SimError> {
        self.fixups += 1;
        let (fix_kind, duration) = match kind {
            GateKind::RzInjection { angle } if self.rz_semantics => {
                let doubled = fixup_angle(angle);
                if is_clifford_angle(doubled) {
                    (GateKind::FixupClifford, self.cfg.fixup_duration)
                } else {
                    (
                        GateKind::RzInjection { angle: doubled },
                        self.dag.node(after).duration,
                    )
                }
            }
            _ => (GateKind::FixupClifford, self.cfg.fixup_duration),
        };
        let f = self
            .dag
            .insert_fixup(after, fix_kind, duration, self.cfg.priority_update);
        self.waiting.push(1);
        self.done.push(false);
        self.ready_since.push(0);
        if CHECK_INVARIANTS {
            // `after` is complete and every node below `f` is not, so no new
            // edge can close a cycle.
            let bad = self.dag.succs(f).iter().find(|s| self.done[s.index()]);
            if let Some(s) = bad {
                return Err(SimError::Invariant {
                    cycle,
                    message: format!("fixup {f} precedes completed node {s}"),
                });
            }
        }
        Ok(())
    }
}

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::angle::{canonicalize, clifford_quarter_turns};
use super::{
    CircuitError, CliffordGate, DurationTable, GateKind, GateNode, NodeId, Origin, Program,
};

/// How priorities react to a fixup insertion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorityUpdate {
    /// The fixup gets `duration + max successor priority`; ancestors keep
    /// their old values.
    Static,
    /// Ancestors of the fixup are recomputed as well.
    #[default]
    Full,
}

/// Gate dependency DAG. Node ids are dense and equal to indices; static
/// nodes are numbered in source order, fixups are appended.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircuitDag {
    nodes: Vec<GateNode>,
    succs: Vec<Vec<NodeId>>,
    preds: Vec<Vec<NodeId>>,
    qubit_count: u32,
    #[serde(skip)]
    last_on_qubit: Vec<Option<NodeId>>,
}

impl CircuitDag {
    pub fn new(qubit_count: u32) -> Self {
        CircuitDag {
            nodes: Vec::new(),
            succs: Vec::new(),
            preds: Vec::new(),
            qubit_count,
            last_on_qubit: vec![None; qubit_count as usize],
        }
    }

    /// Builds the DAG of a lowered program and fills in priorities.
    pub fn from_program(
        program: &Program,
        durations: &DurationTable,
    ) -> Result<Self, CircuitError> {
        let mut dag = CircuitDag::new(program.qubit_count);
        for op in &program.ops {
            let kind = match op.name.as_str() {
                "t" => GateKind::TInjection { dagger: false },
                "tdg" => GateKind::TInjection { dagger: true },
                "measure" => GateKind::Measure,
                "barrier" => GateKind::Barrier,
                "id" => GateKind::Clifford(CliffordGate::Id),
                "rz" => rz_kind(op.params[0]),
                name => GateKind::Clifford(CliffordGate::from_name(name).ok_or_else(|| {
                    CircuitError::UnsupportedGate {
                        name: name.to_string(),
                        line: op.line,
                    }
                })?),
            };
            dag.push_gate(kind, op.qubits.clone(), durations.get(&kind));
        }
        dag.refresh_priorities()?;
        Ok(dag)
    }

    /// Appends a static gate after the current last gate on each of its
    /// qubits. Priorities are stale until [`refresh_priorities`] runs.
    ///
    /// [`refresh_priorities`]: CircuitDag::refresh_priorities
    pub fn push_gate(&mut self, kind: GateKind, qubits: Vec<u32>, duration: u32) -> NodeId {
        debug_assert!(qubits.iter().all(|&q| q < self.qubit_count));
        debug_assert!(matches!(kind, GateKind::Barrier) == (duration == 0));
        let id = NodeId(self.nodes.len() as u32);
        let mut preds: Vec<NodeId> = Vec::with_capacity(qubits.len());
        for &q in &qubits {
            if let Some(p) = self.last_on_qubit[q as usize] {
                if !preds.contains(&p) {
                    preds.push(p);
                }
            }
            self.last_on_qubit[q as usize] = Some(id);
        }
        for &p in &preds {
            self.succs[p.index()].push(id);
        }
        self.nodes.push(GateNode {
            id,
            kind,
            qubits,
            duration,
            priority: 0,
            origin: Origin::Static,
        });
        self.succs.push(Vec::new());
        self.preds.push(preds);
        id
    }

    pub fn refresh_priorities(&mut self) -> Result<(), CircuitError> {
        let prio = longest_path_priorities(self)?;
        for (node, p) in self.nodes.iter_mut().zip(prio) {
            node.priority = p;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn qubit_count(&self) -> u32 {
        self.qubit_count
    }

    /// The id the next inserted node will receive.
    pub fn next_id(&self) -> NodeId {
        NodeId(self.nodes.len() as u32)
    }

    pub fn nodes(&self) -> &[GateNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &GateNode {
        &self.nodes[id.index()]
    }

    pub fn succs(&self, id: NodeId) -> &[NodeId] {
        &self.succs[id.index()]
    }

    pub fn preds(&self, id: NodeId) -> &[NodeId] {
        &self.preds[id.index()]
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.succs
            .iter()
            .enumerate()
            .flat_map(|(a, ss)| ss.iter().map(move |&b| (NodeId(a as u32), b)))
    }

    pub fn edge_count(&self) -> usize {
        self.succs.iter().map(Vec::len).sum()
    }

    pub fn t_count(&self) -> usize {
        self.count(|k| matches!(k, GateKind::TInjection { .. }))
    }

    pub fn rz_count(&self) -> usize {
        self.count(|k| matches!(k, GateKind::RzInjection { .. }))
    }

    fn count(&self, f: impl Fn(&GateKind) -> bool) -> usize {
        self.nodes.iter().filter(|n| f(&n.kind)).count()
    }

    /// Kahn order, ties broken by smaller id.
    pub fn topological_order(&self) -> Result<Vec<NodeId>, CircuitError> {
        let mut indeg: Vec<usize> = self.preds.iter().map(Vec::len).collect();
        let mut queue: VecDeque<NodeId> = (0..self.nodes.len())
            .filter(|&i| indeg[i] == 0)
            .map(|i| NodeId(i as u32))
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(n) = queue.pop_front() {
            order.push(n);
            for &s in &self.succs[n.index()] {
                indeg[s.index()] -= 1;
                if indeg[s.index()] == 0 {
                    queue.push_back(s);
                }
            }
        }
        if order.len() != self.nodes.len() {
            let stuck = indeg
                .iter()
                .position(|&d| d > 0)
                .expect("some node is on a cycle");
            return Err(CircuitError::Cycle(NodeId(stuck as u32)));
        }
        Ok(order)
    }

    /// ASAP start offsets with unlimited resources, 0-based.
    pub fn asap_starts(&self) -> Result<Vec<u64>, CircuitError> {
        let mut start = vec![0u64; self.nodes.len()];
        for n in self.topological_order()? {
            let end = start[n.index()] + self.nodes[n.index()].duration as u64;
            for &s in &self.succs[n.index()] {
                start[s.index()] = start[s.index()].max(end);
            }
        }
        Ok(start)
    }

    /// Weighted longest path, in cycles.
    pub fn depth_cycles(&self) -> Result<u64, CircuitError> {
        Ok(longest_path_priorities(self)?
            .into_iter()
            .max()
            .unwrap_or(0))
    }

    /// Splices a fixup node in after `after`: every outgoing edge of `after`
    /// now leaves the fixup instead, and `after → fixup` is added.
    pub fn insert_fixup(
        &mut self,
        after: NodeId,
        kind: GateKind,
        duration: u32,
        update: PriorityUpdate,
    ) -> NodeId {
        debug_assert!(duration >= 1);
        let f = self.next_id();
        let moved = std::mem::replace(&mut self.succs[after.index()], vec![f]);
        for &s in &moved {
            for p in self.preds[s.index()].iter_mut() {
                if *p == after {
                    *p = f;
                }
            }
        }
        let priority = duration as u64
            + moved
                .iter()
                .map(|s| self.nodes[s.index()].priority)
                .max()
                .unwrap_or(0);
        self.nodes.push(GateNode {
            id: f,
            kind,
            qubits: self.nodes[after.index()].qubits.clone(),
            duration,
            priority,
            origin: Origin::Fixup,
        });
        self.succs.push(moved);
        self.preds.push(vec![after]);
        if update == PriorityUpdate::Full {
            self.raise_ancestors(after);
        }
        f
    }

    /// Priorities only grow after an insertion, so a worklist that stops at
    /// unchanged nodes reaches the fixed point.
    fn raise_ancestors(&mut self, start: NodeId) {
        let mut work = vec![start];
        while let Some(n) = work.pop() {
            let i = n.index();
            let best = self.succs[i]
                .iter()
                .map(|s| self.nodes[s.index()].priority)
                .max()
                .unwrap_or(0);
            let p = self.nodes[i].duration as u64 + best;
            if p != self.nodes[i].priority {
                self.nodes[i].priority = p;
                work.extend_from_slice(&self.preds[i]);
            }
        }
    }

    /// Replaces every Rz injection by `n` serial T injections of the same
    /// duration. Only valid before any fixup has been inserted.
    pub fn with_rz_expanded(&self, n: u32) -> Result<CircuitDag, CircuitError> {
        debug_assert!(self.nodes.iter().all(|x| x.origin == Origin::Static));
        let mut out = CircuitDag::new(self.qubit_count);
        for node in &self.nodes {
            match node.kind {
                GateKind::RzInjection { .. } => {
                    for _ in 0..n {
                        out.push_gate(
                            GateKind::TInjection { dagger: false },
                            node.qubits.clone(),
                            node.duration,
                        );
                    }
                }
                kind => {
                    out.push_gate(kind, node.qubits.clone(), node.duration);
                }
            }
        }
        out.refresh_priorities()?;
        Ok(out)
    }
}

fn rz_kind(theta: f64) -> GateKind {
    match clifford_quarter_turns(theta) {
        Some(k) => GateKind::Clifford(CliffordGate::from_quarter_turns(k)),
        None => GateKind::RzInjection {
            angle: canonicalize(theta),
        },
    }
}

/// `priority(n) = duration(n) + max priority over successors`, indexed by id.
pub fn longest_path_priorities(dag: &CircuitDag) -> Result<Vec<u64>, CircuitError> {
    let order = dag.topological_order()?;
    let mut prio = vec![0u64; dag.len()];
    for &n in order.iter().rev() {
        let best = dag
            .succs(n)
            .iter()
            .map(|s| prio[s.index()])
            .max()
            .unwrap_or(0);
        prio[n.index()] = dag.node(n).duration as u64 + best;
    }
    Ok(prio)
}

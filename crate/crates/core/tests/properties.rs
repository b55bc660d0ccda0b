use std::collections::BTreeSet;

use proptest::prelude::*;

use magicsim_core::circuit_ir::{longest_path_priorities, GateKind};
use magicsim_core::{
    parse_qasm, simulate, static_profile, CircuitDag, MechanismConfig, NodeId, PriorityUpdate,
    SimConfig, SimulationMode,
};

const GATES: &[&str] = &[
    "h", "s", "x", "t", "tdg", "rz", "cx", "cz", "measure", "barrier",
];

/// Random circuit text over `n` qubits.
fn circuit() -> impl Strategy<Value = String> {
    (1u32..6).prop_flat_map(|n| {
        prop::collection::vec((0..GATES.len(), 0..n, 0..n, -4.0f64..4.0), 0..40).prop_map(
            move |ops| {
                let mut s = format!("OPENQASM 2.0;\nqreg q[{n}];\ncreg c[{n}];\n");
                for (g, a, b, angle) in ops {
                    match GATES[g] {
                        "cx" | "cz" if a != b => s += &format!("{} q[{a}], q[{b}];\n", GATES[g]),
                        "cx" | "cz" => s += &format!("h q[{a}];\n"),
                        "rz" => s += &format!("rz({angle:?}) q[{a}];\n"),
                        "measure" => s += &format!("measure q[{a}] -> c[{a}];\n"),
                        "barrier" => s += &format!("barrier q[{a}], q[{b}];\n"),
                        g => s += &format!("{g} q[{a}];\n"),
                    }
                }
                s
            },
        )
    })
}

fn reachable(dag: &CircuitDag, from: NodeId) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![from];
    while let Some(n) = stack.pop() {
        for &s in dag.succs(n) {
            if seen.insert(s) {
                stack.push(s);
            }
        }
    }
    seen
}

fn check_structure(dag: &CircuitDag) -> Result<(), TestCaseError> {
    let order = dag
        .topological_order()
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(order.len(), dag.len());
    let mut pos = vec![0usize; dag.len()];
    for (i, n) in order.iter().enumerate() {
        pos[n.index()] = i;
    }
    for (a, b) in dag.edges() {
        prop_assert!(pos[a.index()] < pos[b.index()]);
        prop_assert!(dag.preds(b).contains(&a));
    }
    let prio = longest_path_priorities(dag).unwrap();
    for node in dag.nodes() {
        prop_assert_eq!(node.priority, prio[node.id.index()]);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dag_is_acyclic_with_consistent_priorities(src in circuit()) {
        let dag = parse_qasm(&src).unwrap();
        check_structure(&dag)?;
    }

    #[test]
    fn gates_on_a_qubit_are_totally_ordered(src in circuit()) {
        let dag = parse_qasm(&src).unwrap();
        for q in 0..dag.qubit_count() {
            let on_q: Vec<NodeId> = dag
                .nodes()
                .iter()
                .filter(|n| n.qubits.contains(&q))
                .map(|n| n.id)
                .collect();
            for w in on_q.windows(2) {
                prop_assert!(reachable(&dag, w[0]).contains(&w[1]), "{} !-> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn profile_accounts_for_every_injection(src in circuit()) {
        let dag = parse_qasm(&src).unwrap();
        let p = static_profile(&dag).unwrap();
        let total: u64 = p.per_layer_demand.iter().map(|&d| u64::from(d)).sum();
        prop_assert_eq!(total, (p.t_count + p.rz_count) as u64);
        prop_assert_eq!(p.per_layer_demand.len() as u64, p.depth_cycles);
        prop_assert_eq!(p.gamma_peak, p.per_layer_demand.iter().copied().max().unwrap_or(0));
        if p.depth_cycles > 0 {
            prop_assert!((p.gamma_avg - total as f64 / p.depth_cycles as f64).abs() < 1e-12);
        }
        let top = dag.nodes().iter().map(|n| n.priority).max().unwrap_or(0);
        prop_assert_eq!(top, p.depth_cycles);
        prop_assert!((0.0..=1.0).contains(&p.critical_path_ncd));
    }

    #[test]
    fn parsing_is_pure(src in circuit()) {
        let a = serde_json::to_string(&parse_qasm(&src).unwrap()).unwrap();
        let b = serde_json::to_string(&parse_qasm(&src).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn fixup_insertion_keeps_the_dag_sound(src in circuit(), pick in any::<prop::sample::Index>(), full in any::<bool>()) {
        let mut dag = parse_qasm(&src).unwrap();
        prop_assume!(!dag.is_empty());
        let after = NodeId(pick.index(dag.len()) as u32);
        let before_succs = dag.succs(after).to_vec();
        let before_reach = reachable(&dag, after);
        let update = if full { PriorityUpdate::Full } else { PriorityUpdate::Static };
        let f = dag.insert_fixup(after, GateKind::FixupClifford, 1, update);

        prop_assert_eq!(dag.succs(after), &[f][..]);
        prop_assert_eq!(dag.preds(f), &[after][..]);
        prop_assert_eq!(dag.succs(f), &before_succs[..]);
        let mut expected = before_reach;
        expected.insert(f);
        prop_assert_eq!(reachable(&dag, after), expected);
        prop_assert!(dag.topological_order().is_ok());
        if full {
            check_structure(&dag)?;
        } else {
            let exact = longest_path_priorities(&dag).unwrap();
            prop_assert_eq!(dag.node(f).priority, exact[f.index()]);
        }
    }

    #[test]
    fn simulation_conserves_states(src in circuit(), seed in any::<u64>(), units in 1u32..6, m in 0usize..3, mode in 0usize..4) {
        let dag = parse_qasm(&src).unwrap();
        let mech = [
            MechanismConfig::Distillation(Default::default()),
            MechanismConfig::Cultivation(Default::default()),
            MechanismConfig::Rz(Default::default()),
        ][m].clone();
        let mode = SimulationMode::ALL[mode];
        let cfg = SimConfig { mechanism: mech, units, mode, trial_seed: seed, ..Default::default() };
        let r = simulate(&dag, &cfg).unwrap();
        let inj = (dag.t_count() + dag.rz_count()) as u64;
        let consumed: u64 = r.demand_trace.iter().map(|&d| u64::from(d)).sum();
        prop_assert_eq!(consumed, r.injection_count);
        prop_assert_eq!(r.demand_trace.len() as u64, r.cycles);
        prop_assert_eq!(r.volume, r.q_total * r.cycles);
        let depth = static_profile(&dag).unwrap().depth_cycles;
        prop_assert!(r.cycles >= depth);
        if mode.injection_errors() {
            prop_assert!(r.injection_count >= inj);
        } else {
            prop_assert_eq!(r.injection_count, inj);
            prop_assert_eq!(r.fixup_count, 0);
        }
        if !cfg.mechanism.is_rz() {
            // T semantics: one fixup per failure, never a new injection.
            prop_assert_eq!(r.injection_count, inj);
        }
        prop_assert_eq!(simulate(&dag, &cfg).unwrap(), r);
    }
}

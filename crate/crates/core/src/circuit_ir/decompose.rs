//! Lowering of non-core gates through a decomposition table.
//!
//! A table maps a gate name to a sequence of gate applications. Each entry
//! picks its qubits from the parent's operands by position (`qubit_pattern`)
//! and may carry one angle expression over the parent's parameters, written
//! `p0`, `p1`, ... Entries may name other table gates; lowering recurses until
//! only core gates remain. Rz synthesis is deliberately not attempted: a
//! non-Clifford `rz` stays a single rotation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::expr::{parse_expr_str, Expr};
use super::qasm::{check_arity, check_distinct, core_arity};
use super::{CircuitError, Op, Program};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompEntry {
    pub name: String,
    pub qubit_pattern: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_expr: Option<String>,
}

#[derive(Debug, Clone)]
struct Rule {
    entries: Vec<(DecompEntry, Option<Expr>)>,
    qubits: usize,
    params: usize,
    exact_arity: bool,
}

#[derive(Debug, Clone)]
pub struct DecompositionTable {
    rules: BTreeMap<String, Rule>,
}

impl Default for DecompositionTable {
    fn default() -> Self {
        Self::builtin()
    }
}

const MAX_DEPTH: usize = 32;

fn e(name: &str, pattern: &[usize], angle: Option<&str>) -> DecompEntry {
    DecompEntry {
        name: name.to_string(),
        qubit_pattern: pattern.to_vec(),
        angle_expr: angle.map(str::to_string),
    }
}

impl DecompositionTable {
    pub fn empty() -> Self {
        DecompositionTable {
            rules: BTreeMap::new(),
        }
    }

    /// Standard identities for the qelib1 gates outside the core set. All
    /// are exact up to global phase.
    pub fn builtin() -> Self {
        let mut t = Self::empty();
        let mut rules: Vec<(&str, usize, usize, Vec<DecompEntry>)> = vec![
            (
                "ccx",
                3,
                0,
                vec![
                    e("h", &[2], None),
                    e("cx", &[1, 2], None),
                    e("tdg", &[2], None),
                    e("cx", &[0, 2], None),
                    e("t", &[2], None),
                    e("cx", &[1, 2], None),
                    e("tdg", &[2], None),
                    e("cx", &[0, 2], None),
                    e("t", &[1], None),
                    e("t", &[2], None),
                    e("h", &[2], None),
                    e("cx", &[0, 1], None),
                    e("t", &[0], None),
                    e("tdg", &[1], None),
                    e("cx", &[0, 1], None),
                ],
            ),
            (
                "swap",
                2,
                0,
                vec![
                    e("cx", &[0, 1], None),
                    e("cx", &[1, 0], None),
                    e("cx", &[0, 1], None),
                ],
            ),
            (
                "cswap",
                3,
                0,
                vec![
                    e("cx", &[2, 1], None),
                    e("ccx", &[0, 1, 2], None),
                    e("cx", &[2, 1], None),
                ],
            ),
            ("u1", 1, 1, vec![e("rz", &[0], Some("p0"))]),
            ("p", 1, 1, vec![e("rz", &[0], Some("p0"))]),
            (
                "u2",
                1,
                2,
                vec![
                    e("rz", &[0], Some("p1 - pi/2")),
                    e("h", &[0], None),
                    e("s", &[0], None),
                    e("h", &[0], None),
                    e("rz", &[0], Some("p0 + pi/2")),
                ],
            ),
            (
                "u3",
                1,
                3,
                vec![
                    e("rz", &[0], Some("p2 - pi/2")),
                    e("h", &[0], None),
                    e("rz", &[0], Some("p0")),
                    e("h", &[0], None),
                    e("rz", &[0], Some("p1 + pi/2")),
                ],
            ),
            (
                "rx",
                1,
                1,
                vec![
                    e("h", &[0], None),
                    e("rz", &[0], Some("p0")),
                    e("h", &[0], None),
                ],
            ),
            (
                "ry",
                1,
                1,
                vec![
                    e("sdg", &[0], None),
                    e("h", &[0], None),
                    e("rz", &[0], Some("p0")),
                    e("h", &[0], None),
                    e("s", &[0], None),
                ],
            ),
            (
                "sx",
                1,
                0,
                vec![e("h", &[0], None), e("s", &[0], None), e("h", &[0], None)],
            ),
            (
                "sxdg",
                1,
                0,
                vec![e("h", &[0], None), e("sdg", &[0], None), e("h", &[0], None)],
            ),
            (
                "cy",
                2,
                0,
                vec![
                    e("sdg", &[1], None),
                    e("cx", &[0, 1], None),
                    e("s", &[1], None),
                ],
            ),
            (
                "cu1",
                2,
                1,
                vec![
                    e("rz", &[0], Some("p0/2")),
                    e("cx", &[0, 1], None),
                    e("rz", &[1], Some("-p0/2")),
                    e("cx", &[0, 1], None),
                    e("rz", &[1], Some("p0/2")),
                ],
            ),
            ("cp", 2, 1, vec![e("cu1", &[0, 1], Some("p0"))]),
            (
                "crz",
                2,
                1,
                vec![
                    e("rz", &[1], Some("p0/2")),
                    e("cx", &[0, 1], None),
                    e("rz", &[1], Some("-p0/2")),
                    e("cx", &[0, 1], None),
                ],
            ),
            (
                "rzz",
                2,
                1,
                vec![
                    e("cx", &[0, 1], None),
                    e("rz", &[1], Some("p0")),
                    e("cx", &[0, 1], None),
                ],
            ),
        ];
        // An entry carries at most one angle, so `u` repeats the `u3` body.
        let u3_body = rules.iter().find(|r| r.0 == "u3").map(|r| r.3.clone());
        rules.push(("u", 1, 3, u3_body.expect("u3 is listed")));
        for (name, qubits, params, entries) in rules {
            t.insert(name, entries, Some((qubits, params)))
                .expect("built-in table is well formed");
        }
        t
    }

    /// Parses `{gate_name: [ {name, qubit_pattern, angle_expr?} ]}`.
    pub fn from_json(text: &str) -> Result<Self, CircuitError> {
        let raw: BTreeMap<String, Vec<DecompEntry>> =
            serde_json::from_str(text).map_err(|e| CircuitError::Table(e.to_string()))?;
        let mut t = Self::empty();
        for (name, entries) in raw {
            t.insert(&name, entries, None)?;
        }
        Ok(t)
    }

    /// Built-in rules overridden by `user`.
    pub fn with_overrides(mut self, user: DecompositionTable) -> Self {
        self.rules.extend(user.rules);
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.rules.contains_key(name)
    }

    pub fn entries(&self, name: &str) -> Option<Vec<DecompEntry>> {
        self.rules
            .get(name)
            .map(|r| r.entries.iter().map(|(d, _)| d.clone()).collect())
    }

    pub fn to_json(&self) -> String {
        let raw: BTreeMap<&str, Vec<DecompEntry>> = self
            .rules
            .iter()
            .map(|(k, r)| {
                (
                    k.as_str(),
                    r.entries.iter().map(|(d, _)| d.clone()).collect(),
                )
            })
            .collect();
        serde_json::to_string_pretty(&raw).expect("table serializes")
    }

    fn insert(
        &mut self,
        name: &str,
        entries: Vec<DecompEntry>,
        arity: Option<(usize, usize)>,
    ) -> Result<(), CircuitError> {
        let mut parsed = Vec::with_capacity(entries.len());
        let (mut nq, mut np) = (0usize, 0usize);
        for entry in entries {
            let expr = match &entry.angle_expr {
                Some(s) => {
                    let ex = parse_expr_str(s).map_err(|err| {
                        CircuitError::Table(format!("`{name}` → `{}`: {err}", entry.name))
                    })?;
                    np = np.max(max_param_index(&ex).map_or(0, |i| i + 1));
                    Some(ex)
                }
                None => None,
            };
            nq = nq.max(entry.qubit_pattern.iter().max().map_or(0, |m| m + 1));
            parsed.push((entry, expr));
        }
        let (qubits, params, exact_arity) = match arity {
            Some((q, p)) => (q, p, true),
            None => (nq, np, false),
        };
        self.rules.insert(
            name.to_string(),
            Rule {
                entries: parsed,
                qubits,
                params,
                exact_arity,
            },
        );
        Ok(())
    }
}

fn max_param_index(e: &Expr) -> Option<usize> {
    match e {
        Expr::Param(n) => n.strip_prefix('p').and_then(|d| d.parse().ok()),
        Expr::Neg(a) | Expr::Call(_, a) => max_param_index(a),
        Expr::Bin(_, a, b) => max_param_index(a).max(max_param_index(b)),
        Expr::Num(_) | Expr::Pi => None,
    }
}

fn is_core(name: &str) -> bool {
    core_arity(name).is_some() || name == "measure" || name == "barrier"
}

/// Rewrites every op outside the core set `{x, y, z, h, s, sdg, t, tdg, cx,
/// cz, rz, id, measure, barrier}` using `table`.
pub fn lower_gates(program: &Program, table: &DecompositionTable) -> Result<Program, CircuitError> {
    let mut out = Program {
        qubit_count: program.qubit_count,
        ops: Vec::with_capacity(program.ops.len()),
    };
    for op in &program.ops {
        lower_op(op, table, &mut out.ops, 0)?;
    }
    Ok(out)
}

fn lower_op(
    op: &Op,
    table: &DecompositionTable,
    out: &mut Vec<Op>,
    depth: usize,
) -> Result<(), CircuitError> {
    if is_core(&op.name) {
        if let Some((nq, np)) = core_arity(&op.name) {
            check_arity(&op.name, nq, np, &op.qubits, &op.params, op.line)?;
        }
        check_distinct(&op.name, &op.qubits, op.line)?;
        out.push(op.clone());
        return Ok(());
    }
    if depth > MAX_DEPTH {
        return Err(CircuitError::RecursiveDecomposition(op.name.clone()));
    }
    let rule = table
        .rules
        .get(&op.name)
        .ok_or_else(|| CircuitError::UnsupportedGate {
            name: op.name.clone(),
            line: op.line,
        })?;
    if rule.exact_arity {
        check_arity(
            &op.name,
            rule.qubits,
            rule.params,
            &op.qubits,
            &op.params,
            op.line,
        )?;
    } else if op.qubits.len() < rule.qubits || op.params.len() < rule.params {
        return Err(CircuitError::Arity {
            gate: op.name.clone(),
            what: "operands",
            expected: rule.qubits,
            got: op.qubits.len(),
            line: op.line,
        });
    }
    check_distinct(&op.name, &op.qubits, op.line)?;
    let lookup = |n: &str| {
        n.strip_prefix('p')
            .and_then(|d| d.parse::<usize>().ok())
            .and_then(|i| op.params.get(i).copied())
    };
    for (entry, expr) in &rule.entries {
        let params = match expr {
            Some(ex) => vec![ex.eval(&lookup).map_err(|message| CircuitError::Expr {
                message,
                line: op.line,
            })?],
            None => Vec::new(),
        };
        let qubits = entry.qubit_pattern.iter().map(|&i| op.qubits[i]).collect();
        let child = Op {
            name: entry.name.clone(),
            params,
            qubits,
            line: op.line,
        };
        lower_op(&child, table, out, depth + 1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit_ir::parse_program;

    fn lowered(src: &str) -> Program {
        lower_gates(&parse_program(src).unwrap(), &DecompositionTable::builtin()).unwrap()
    }

    #[test]
    fn ccx_has_seven_t_type_gates() {
        let p = lowered("qreg q[3]; ccx q[0], q[1], q[2];");
        let t = p
            .ops
            .iter()
            .filter(|o| o.name == "t" || o.name == "tdg")
            .count();
        assert_eq!(t, 7);
        assert_eq!(p.ops.len(), 15);
    }

    #[test]
    fn swap_is_three_cx() {
        let p = lowered("qreg q[2]; swap q[0], q[1];");
        assert_eq!(p.ops.len(), 3);
        assert!(p.ops.iter().all(|o| o.name == "cx"));
    }

    #[test]
    fn nested_rules_resolve() {
        let p = lowered("qreg q[3]; cswap q[0], q[1], q[2];");
        assert_eq!(p.ops.len(), 17);
        let p = lowered("qreg q[2]; cp(pi/2) q[0], q[1];");
        assert_eq!(p.ops.iter().filter(|o| o.name == "rz").count(), 3);
    }

    #[test]
    fn table_miss_names_the_gate() {
        let prog = parse_program("qreg q[1];\ncrazy_gate q[0];").unwrap();
        let err = lower_gates(&prog, &DecompositionTable::builtin()).unwrap_err();
        assert_eq!(
            err,
            CircuitError::UnsupportedGate {
                name: "crazy_gate".into(),
                line: 2
            }
        );
        assert!(err.to_string().contains("crazy_gate"));
    }

    #[test]
    fn json_table_overrides_and_extends() {
        let user = DecompositionTable::from_json(
            r#"{"myrot": [{"name": "rz", "qubit_pattern": [0], "angle_expr": "p0*2"},
                          {"name": "h", "qubit_pattern": [1]}]}"#,
        )
        .unwrap();
        let table = DecompositionTable::builtin().with_overrides(user);
        let prog = parse_program("qreg q[2]; myrot(0.25) q[1], q[0];").unwrap();
        let p = lower_gates(&prog, &table).unwrap();
        assert_eq!(p.ops[0].params, vec![0.5]);
        assert_eq!(p.ops[0].qubits, vec![1]);
        assert_eq!(p.ops[1].qubits, vec![0]);
    }

    #[test]
    fn json_errors_are_reported() {
        assert!(DecompositionTable::from_json("{\"g\": [{\"name\": \"h\"}]}").is_err());
        assert!(DecompositionTable::from_json(
            "{\"g\": [{\"name\": \"rz\", \"qubit_pattern\": [0], \"angle_expr\": \"p0 +\"}]}"
        )
        .is_err());
        assert!(DecompositionTable::from_json(
            "{\"g\": [{\"name\": \"h\", \"qubit_pattern\": [0], \"bogus\": 1}]}"
        )
        .is_err());
    }
}

//! Generators for synthetic benchmark circuits, emitted as OpenQASM 2.0.

use std::fmt::Write;

/// Alternating demand bursts and Clifford-only stretches.
///
/// Every layer touches every qubit exactly once, so ASAP layers coincide
/// with the generated layers: a burst layer applies `burst_width` non-Clifford
/// gates and `h` on the remaining qubits, and each Clifford layer is a layer
/// of `cx` gates laid out by [`Coupling`] with `h` on leftover qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstyCircuit {
    pub qubits: u32,
    pub burst_width: u32,
    pub clifford_layers: u32,
    pub bursts: u32,
    /// Emit `rz(angle)` instead of `t` in bursts.
    pub rz_angle: Option<f64>,
    pub coupling: Coupling,
    /// Shift of the burst window between consecutive bursts.
    pub window_step: u32,
}

/// Layout of `cx` gates in Clifford layers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Coupling {
    /// Fixed pairs `(0,1), (2,3), ...` in every layer. A delay spreads to one
    /// partner and no further.
    Pairs,
    /// Brick pattern whose offset alternates per layer. A delay spreads over
    /// `2 * clifford_layers` neighbours per burst, which realigns the next
    /// burst.
    Brick,
    /// Fixed pairs within a Clifford stretch, shifted by one qubit in
    /// alternate stretches. A delay spreads one qubit further per burst.
    #[default]
    Staggered,
}

impl Default for BurstyCircuit {
    fn default() -> Self {
        BurstyCircuit {
            qubits: 25,
            burst_width: 15,
            clifford_layers: 10,
            bursts: 8,
            rz_angle: None,
            coupling: Coupling::Staggered,
            window_step: 1,
        }
    }
}

impl BurstyCircuit {
    pub fn to_qasm(&self) -> String {
        assert!(self.burst_width <= self.qubits);
        let n = self.qubits;
        let mut s = format!("OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[{n}];\n");
        let mut brick = 0u32;
        for b in 0..self.bursts {
            let first = (b * self.window_step) % n;
            for k in 0..n {
                let q = (first + k) % n;
                let gate = if k < self.burst_width {
                    match self.rz_angle {
                        Some(a) => format!("rz({a:?})"),
                        None => "t".to_string(),
                    }
                } else {
                    "h".to_string()
                };
                writeln!(s, "{gate} q[{q}];").unwrap();
            }
            for _ in 0..self.clifford_layers {
                let offset = match self.coupling {
                    Coupling::Pairs => 0,
                    Coupling::Brick => brick % 2,
                    Coupling::Staggered => b % 2,
                };
                brick += 1;
                let mut q = 0;
                while q < n {
                    if q >= offset && q + 1 < n && (q - offset) % 2 == 0 {
                        writeln!(s, "cx q[{}], q[{}];", q, q + 1).unwrap();
                        q += 2;
                    } else {
                        writeln!(s, "h q[{q}];").unwrap();
                        q += 1;
                    }
                }
            }
        }
        s
    }
}

/// `n` T gates on one qubit.
pub fn t_chain(n: usize) -> String {
    let mut s = String::from("OPENQASM 2.0;\nqreg q[1];\n");
    for _ in 0..n {
        s.push_str("t q[0];\n");
    }
    s
}

/// `n` independent single-qubit `rz(angle)` gates, one per qubit.
pub fn parallel_rz(n: u32, angle: f64) -> String {
    let mut s = format!("OPENQASM 2.0;\nqreg q[{n}];\n");
    for q in 0..n {
        writeln!(s, "rz({angle:?}) q[{q}];").unwrap();
    }
    s
}

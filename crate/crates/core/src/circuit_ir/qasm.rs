//! Recursive-descent parser for the supported OpenQASM 2.0 subset.
//!
//! The parser resolves registers to flat qubit indices, expands register
//! broadcasting and in-file `gate` definitions, and evaluates angle
//! expressions. Gate names it does not know are passed through for the
//! decomposition table to lower.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::expr::{Expr, ExprParser};
use super::lexer::{tokenize, Tok, Token};
use super::CircuitError;

/// One gate application in program order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Op {
    pub name: String,
    pub params: Vec<f64>,
    pub qubits: Vec<u32>,
    pub line: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub qubit_count: u32,
    pub ops: Vec<Op>,
}

/// `(qubits, params)` of the gates the parser checks itself.
pub(crate) fn core_arity(name: &str) -> Option<(usize, usize)> {
    Some(match name {
        "x" | "y" | "z" | "h" | "s" | "sdg" | "t" | "tdg" | "id" => (1, 0),
        "cx" | "CX" | "cz" => (2, 0),
        "rz" => (1, 1),
        _ => return None,
    })
}

struct GateDef {
    params: Vec<String>,
    qargs: Vec<String>,
    body: Vec<BodyStmt>,
}

struct BodyStmt {
    name: String,
    exprs: Vec<Expr>,
    args: Vec<usize>,
    line: u32,
}

enum Arg {
    One(u32),
    Reg { offset: u32, size: u32 },
}

const MAX_GATE_DEPTH: usize = 64;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    qregs: HashMap<String, (u32, u32)>,
    cregs: HashMap<String, u32>,
    gates: HashMap<String, GateDef>,
    program: Program,
}

pub fn parse_program(text: &str) -> Result<Program, CircuitError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        qregs: HashMap::new(),
        cregs: HashMap::new(),
        gates: HashMap::new(),
        program: Program::default(),
    };
    while p.peek().tok != Tok::Eof {
        p.statement()?;
    }
    Ok(p.program)
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn line(&self) -> u32 {
        self.peek().line
    }

    fn err(&self, message: impl Into<String>) -> CircuitError {
        let t = self.peek();
        CircuitError::Syntax {
            line: t.line,
            col: t.col,
            message: message.into(),
        }
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek().tok == Tok::Sym(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), CircuitError> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Result<String, CircuitError> {
        match self.peek().tok.clone() {
            Tok::Ident(s) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("expected an identifier")),
        }
    }

    fn integer(&mut self) -> Result<u64, CircuitError> {
        match self.peek().tok {
            Tok::Num {
                value,
                integral: true,
            } if value >= 0.0 => {
                self.pos += 1;
                Ok(value as u64)
            }
            _ => Err(self.err("expected a non-negative integer")),
        }
    }

    fn expr(&mut self) -> Result<Expr, CircuitError> {
        let mut ep = ExprParser::new(&self.toks, self.pos);
        let e = ep.parse()?;
        self.pos = ep.pos;
        Ok(e)
    }

    fn statement(&mut self) -> Result<(), CircuitError> {
        let line = self.line();
        let head = match self.peek().tok.clone() {
            Tok::Ident(s) => s,
            _ => return Err(self.err("expected a statement")),
        };
        match head.as_str() {
            "OPENQASM" => {
                self.pos += 1;
                match self.advance().tok {
                    Tok::Num { value, .. } if (2.0..3.0).contains(&value) => {}
                    _ => {
                        return Err(CircuitError::UnsupportedStatement {
                            what: "OpenQASM versions other than 2.x".into(),
                            line,
                        })
                    }
                }
                self.expect_sym(';')
            }
            "include" => {
                self.pos += 1;
                match self.advance().tok {
                    Tok::Str(_) => {}
                    _ => return Err(self.err("expected a file name")),
                }
                self.expect_sym(';')
            }
            "qreg" | "creg" => {
                self.pos += 1;
                let name = self.ident()?;
                self.expect_sym('[')?;
                let size = self.integer()?;
                self.expect_sym(']')?;
                self.expect_sym(';')?;
                let size = u32::try_from(size).map_err(|_| self.err("register too large"))?;
                if self.qregs.contains_key(&name) || self.cregs.contains_key(&name) {
                    return Err(self.err(format!("register `{name}` redeclared")));
                }
                if head == "qreg" {
                    self.qregs.insert(name, (self.program.qubit_count, size));
                    self.program.qubit_count += size;
                } else {
                    self.cregs.insert(name, size);
                }
                Ok(())
            }
            "gate" => self.gate_definition(),
            "measure" => self.measure(),
            "barrier" => {
                self.pos += 1;
                let args = self.qubit_args()?;
                self.expect_sym(';')?;
                let mut qubits = Vec::new();
                for a in args {
                    match a {
                        Arg::One(q) => qubits.push(q),
                        Arg::Reg { offset, size } => qubits.extend(offset..offset + size),
                    }
                }
                self.emit("barrier", Vec::new(), qubits, line)
            }
            "if" => Err(CircuitError::UnsupportedStatement {
                what: "classical control (`if`)".into(),
                line,
            }),
            "reset" | "opaque" => Err(CircuitError::UnsupportedStatement {
                what: format!("`{head}`"),
                line,
            }),
            _ => self.gate_call(),
        }
    }

    fn gate_definition(&mut self) -> Result<(), CircuitError> {
        self.pos += 1;
        let name = self.ident()?;
        let mut params = Vec::new();
        if self.eat_sym('(') && !self.eat_sym(')') {
            loop {
                params.push(self.ident()?);
                if self.eat_sym(')') {
                    break;
                }
                self.expect_sym(',')?;
            }
        }
        let mut qargs = vec![self.ident()?];
        while self.eat_sym(',') {
            qargs.push(self.ident()?);
        }
        self.expect_sym('{')?;
        let mut body = Vec::new();
        while !self.eat_sym('}') {
            let line = self.line();
            let stmt_name = self.ident()?;
            let mut exprs = Vec::new();
            if stmt_name != "barrier" && self.eat_sym('(') && !self.eat_sym(')') {
                loop {
                    exprs.push(self.expr()?);
                    if self.eat_sym(')') {
                        break;
                    }
                    self.expect_sym(',')?;
                }
            }
            let mut args = Vec::new();
            loop {
                let a = self.ident()?;
                let idx = qargs
                    .iter()
                    .position(|q| *q == a)
                    .ok_or_else(|| self.err(format!("unknown gate argument `{a}`")))?;
                args.push(idx);
                if !self.eat_sym(',') {
                    break;
                }
            }
            self.expect_sym(';')?;
            body.push(BodyStmt {
                name: stmt_name,
                exprs,
                args,
                line,
            });
        }
        self.gates.insert(
            name,
            GateDef {
                params,
                qargs,
                body,
            },
        );
        Ok(())
    }

    fn measure(&mut self) -> Result<(), CircuitError> {
        let line = self.line();
        self.pos += 1;
        let q = self.qubit_arg()?;
        if self.advance().tok != Tok::Arrow {
            return Err(self.err("expected `->`"));
        }
        let cname = self.ident()?;
        let csize = *self
            .cregs
            .get(&cname)
            .ok_or(CircuitError::UnknownRegister {
                name: cname.clone(),
                line,
            })?;
        let cindex = if self.eat_sym('[') {
            let i = self.integer()?;
            self.expect_sym(']')?;
            if i >= u64::from(csize) {
                return Err(CircuitError::QubitOutOfRange {
                    register: cname,
                    index: i,
                    size: csize,
                    line,
                });
            }
            Some(i)
        } else {
            None
        };
        self.expect_sym(';')?;
        match (q, cindex) {
            (Arg::One(q), Some(_)) => self.emit("measure", Vec::new(), vec![q], line),
            (Arg::Reg { offset, size }, None) if size == csize => {
                for q in offset..offset + size {
                    self.emit("measure", Vec::new(), vec![q], line)?;
                }
                Ok(())
            }
            _ => Err(CircuitError::Syntax {
                line,
                col: 1,
                message: "measure operands must both be indexed or equal-size registers".into(),
            }),
        }
    }

    fn gate_call(&mut self) -> Result<(), CircuitError> {
        let line = self.line();
        let name = self.ident()?;
        let mut params = Vec::new();
        if self.eat_sym('(') && !self.eat_sym(')') {
            loop {
                let e = self.expr()?;
                let v = e
                    .eval(&|_| None)
                    .map_err(|message| CircuitError::Expr { message, line })?;
                params.push(v);
                if self.eat_sym(')') {
                    break;
                }
                self.expect_sym(',')?;
            }
        }
        let args = self.qubit_args()?;
        self.expect_sym(';')?;

        let width = args
            .iter()
            .filter_map(|a| match a {
                Arg::Reg { size, .. } => Some(*size),
                Arg::One(_) => None,
            })
            .try_fold(None, |acc: Option<u32>, s| match acc {
                Some(prev) if prev != s => Err(()),
                _ => Ok(Some(s)),
            })
            .map_err(|_| CircuitError::Syntax {
                line,
                col: 1,
                message: format!("register sizes differ in broadcast `{name}`"),
            })?;
        match width {
            None => {
                let qubits = args
                    .iter()
                    .map(|a| match a {
                        Arg::One(q) => *q,
                        Arg::Reg { .. } => unreachable!(),
                    })
                    .collect();
                self.apply(&name, params, qubits, line, 0)
            }
            Some(n) => {
                for i in 0..n {
                    let qubits = args
                        .iter()
                        .map(|a| match a {
                            Arg::One(q) => *q,
                            Arg::Reg { offset, .. } => offset + i,
                        })
                        .collect();
                    self.apply(&name, params.clone(), qubits, line, 0)?;
                }
                Ok(())
            }
        }
    }

    /// Emits `name`, expanding in-file gate definitions.
    fn apply(
        &mut self,
        name: &str,
        params: Vec<f64>,
        qubits: Vec<u32>,
        line: u32,
        depth: usize,
    ) -> Result<(), CircuitError> {
        if let Some((nq, np)) = core_arity(name) {
            check_arity(name, nq, np, &qubits, &params, line)?;
            return self.emit(name, params, qubits, line);
        }
        let Some(def) = self.gates.get(name) else {
            return self.emit(name, params, qubits, line);
        };
        if depth > MAX_GATE_DEPTH {
            return Err(CircuitError::RecursiveDecomposition(name.to_string()));
        }
        check_arity(
            name,
            def.qargs.len(),
            def.params.len(),
            &qubits,
            &params,
            line,
        )?;
        check_distinct(name, &qubits, line)?;
        let env: HashMap<&str, f64> = def
            .params
            .iter()
            .map(String::as_str)
            .zip(params.iter().copied())
            .collect();
        let mut calls = Vec::with_capacity(def.body.len());
        for stmt in &def.body {
            let ps = stmt
                .exprs
                .iter()
                .map(|e| e.eval(&|n| env.get(n).copied()))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|message| CircuitError::Expr {
                    message,
                    line: stmt.line,
                })?;
            let qs = stmt.args.iter().map(|&i| qubits[i]).collect::<Vec<_>>();
            calls.push((stmt.name.clone(), ps, qs));
        }
        for (n, ps, qs) in calls {
            if n == "barrier" {
                self.emit("barrier", ps, qs, line)?;
            } else {
                self.apply(&n, ps, qs, line, depth + 1)?;
            }
        }
        Ok(())
    }

    fn emit(
        &mut self,
        name: &str,
        params: Vec<f64>,
        qubits: Vec<u32>,
        line: u32,
    ) -> Result<(), CircuitError> {
        let mut qubits = qubits;
        if name == "barrier" {
            // `barrier q[0], q;` names q[0] twice; a fence only needs it once.
            let mut seen = std::collections::HashSet::new();
            qubits.retain(|q| seen.insert(*q));
        } else {
            check_distinct(name, &qubits, line)?;
        }
        self.program.ops.push(Op {
            name: name.to_string(),
            params,
            qubits,
            line,
        });
        Ok(())
    }

    fn qubit_args(&mut self) -> Result<Vec<Arg>, CircuitError> {
        let mut args = vec![self.qubit_arg()?];
        while self.eat_sym(',') {
            args.push(self.qubit_arg()?);
        }
        Ok(args)
    }

    fn qubit_arg(&mut self) -> Result<Arg, CircuitError> {
        let line = self.line();
        let name = self.ident()?;
        let &(offset, size) = self.qregs.get(&name).ok_or(CircuitError::UnknownRegister {
            name: name.clone(),
            line,
        })?;
        if self.eat_sym('[') {
            let index = self.integer()?;
            self.expect_sym(']')?;
            if index >= u64::from(size) {
                return Err(CircuitError::QubitOutOfRange {
                    register: name,
                    index,
                    size,
                    line,
                });
            }
            Ok(Arg::One(offset + index as u32))
        } else {
            Ok(Arg::Reg { offset, size })
        }
    }
}

pub(crate) fn check_arity(
    gate: &str,
    nq: usize,
    np: usize,
    qubits: &[u32],
    params: &[f64],
    line: u32,
) -> Result<(), CircuitError> {
    if qubits.len() != nq {
        return Err(CircuitError::Arity {
            gate: gate.to_string(),
            what: "qubit operands",
            expected: nq,
            got: qubits.len(),
            line,
        });
    }
    if params.len() != np {
        return Err(CircuitError::Arity {
            gate: gate.to_string(),
            what: "parameters",
            expected: np,
            got: params.len(),
            line,
        });
    }
    Ok(())
}

pub(crate) fn check_distinct(gate: &str, qubits: &[u32], line: u32) -> Result<(), CircuitError> {
    for (i, q) in qubits.iter().enumerate() {
        if qubits[..i].contains(q) {
            return Err(CircuitError::DuplicateQubit {
                gate: gate.to_string(),
                qubit: *q,
                line,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registers_flatten_in_declaration_order() {
        let p = parse_program("qreg a[2]; qreg b[3]; cx a[1], b[2];").unwrap();
        assert_eq!(p.qubit_count, 5);
        assert_eq!(p.ops[0].qubits, vec![1, 4]);
    }

    #[test]
    fn broadcast_expands_per_index() {
        let p = parse_program("qreg q[3]; creg c[3]; h q; measure q -> c;").unwrap();
        assert_eq!(p.ops.len(), 6);
        assert!(p.ops[..3].iter().all(|o| o.name == "h"));
        assert_eq!(p.ops[5].qubits, vec![2]);
    }

    #[test]
    fn in_file_gate_definitions_expand() {
        let src = "qreg q[2]; gate foo(a) x, y { rz(a/2) x; cx x, y; } foo(pi) q[1], q[0];";
        let p = parse_program(src).unwrap();
        assert_eq!(p.ops.len(), 2);
        assert_eq!(p.ops[0].name, "rz");
        assert!((p.ops[0].params[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(p.ops[1].qubits, vec![1, 0]);
    }

    #[test]
    fn rejects_classical_control() {
        let err = parse_program("qreg q[1]; creg c[1];\nif (c==1) x q[0];").unwrap_err();
        assert!(matches!(
            err,
            CircuitError::UnsupportedStatement { line: 2, .. }
        ));
    }

    #[test]
    fn range_and_duplicate_errors() {
        assert!(matches!(
            parse_program("qreg q[2]; h q[2];").unwrap_err(),
            CircuitError::QubitOutOfRange {
                index: 2,
                size: 2,
                ..
            }
        ));
        assert!(matches!(
            parse_program("qreg q[2]; cx q[0], q[0];").unwrap_err(),
            CircuitError::DuplicateQubit { qubit: 0, .. }
        ));
        assert!(matches!(
            parse_program("qreg q[2]; rz q[0];").unwrap_err(),
            CircuitError::Arity { .. }
        ));
        assert!(matches!(
            parse_program("qreg q[2];\nh r[0];").unwrap_err(),
            CircuitError::UnknownRegister { line: 2, .. }
        ));
    }

    #[test]
    fn syntax_error_has_position() {
        match parse_program("qreg q[2];\nh q[0]\nh q[1];").unwrap_err() {
            CircuitError::Syntax { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }
}

//! Angle expressions: `pi`, numeric literals, named parameters, `+ - * / ^`,
//! unary minus, parentheses and the OpenQASM 2.0 unary functions.

use super::lexer::{tokenize, Tok, Token};
use super::CircuitError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Expr {
    Num(f64),
    Pi,
    Param(String),
    Neg(Box<Expr>),
    Bin(char, Box<Expr>, Box<Expr>),
    Call(String, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, String> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::Param(name) => {
                lookup(name).ok_or_else(|| format!("unknown parameter `{name}`"))?
            }
            Expr::Neg(e) => -e.eval(lookup)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(lookup)?, b.eval(lookup)?);
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' => {
                        if b == 0.0 {
                            return Err("division by zero".into());
                        }
                        a / b
                    }
                    '^' => a.powf(b),
                    _ => unreachable!("parser only builds + - * / ^"),
                }
            }
            Expr::Call(f, e) => {
                let x = e.eval(lookup)?;
                match f.as_str() {
                    "sin" => x.sin(),
                    "cos" => x.cos(),
                    "tan" => x.tan(),
                    "exp" => x.exp(),
                    "ln" => x.ln(),
                    "sqrt" => x.sqrt(),
                    _ => return Err(format!("unknown function `{f}`")),
                }
            }
        })
    }
}

const FUNCTIONS: [&str; 6] = ["sin", "cos", "tan", "exp", "ln", "sqrt"];

/// Precedence-climbing parser over a token slice.
pub(crate) struct ExprParser<'a> {
    toks: &'a [Token],
    pub pos: usize,
}

impl<'a> ExprParser<'a> {
    pub fn new(toks: &'a [Token], pos: usize) -> Self {
        ExprParser { toks, pos }
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn err(&self, message: impl Into<String>) -> CircuitError {
        let t = self.peek();
        CircuitError::Syntax {
            line: t.line,
            col: t.col,
            message: message.into(),
        }
    }

    pub fn parse(&mut self) -> Result<Expr, CircuitError> {
        self.additive()
    }

    fn additive(&mut self) -> Result<Expr, CircuitError> {
        let mut lhs = self.multiplicative()?;
        while let Tok::Sym(op @ ('+' | '-')) = self.peek().tok {
            self.pos += 1;
            let rhs = self.multiplicative()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> Result<Expr, CircuitError> {
        let mut lhs = self.unary()?;
        while let Tok::Sym(op @ ('*' | '/')) = self.peek().tok {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, CircuitError> {
        match self.peek().tok {
            Tok::Sym('-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Tok::Sym('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, CircuitError> {
        let base = self.atom()?;
        if self.peek().tok == Tok::Sym('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Bin('^', Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, CircuitError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Num { value, .. } => {
                self.pos += 1;
                Ok(Expr::Num(value))
            }
            Tok::Ident(ref name) if name == "pi" => {
                self.pos += 1;
                Ok(Expr::Pi)
            }
            Tok::Ident(ref name) if FUNCTIONS.contains(&name.as_str()) => {
                self.pos += 1;
                self.expect('(')?;
                let inner = self.parse()?;
                self.expect(')')?;
                Ok(Expr::Call(name.clone(), Box::new(inner)))
            }
            Tok::Ident(ref name) => {
                self.pos += 1;
                Ok(Expr::Param(name.clone()))
            }
            Tok::Sym('(') => {
                self.pos += 1;
                let inner = self.parse()?;
                self.expect(')')?;
                Ok(inner)
            }
            _ => Err(self.err("expected an expression")),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), CircuitError> {
        if self.peek().tok == Tok::Sym(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }
}

/// Parses a standalone expression string (decomposition-table angles).
pub(crate) fn parse_expr_str(src: &str) -> Result<Expr, CircuitError> {
    let toks = tokenize(src)?;
    let mut p = ExprParser::new(&toks, 0);
    let e = p.parse()?;
    if toks[p.pos].tok != Tok::Eof {
        return Err(p.err("trailing input after expression"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn eval(s: &str) -> f64 {
        parse_expr_str(s)
            .unwrap()
            .eval(&|n| (n == "p0").then_some(2.0))
            .unwrap()
    }

    #[test]
    fn arithmetic() {
        assert!((eval("pi/2") - PI / 2.0).abs() < 1e-15);
        assert!((eval("-pi/4 + 3*pi/4") - PI / 2.0).abs() < 1e-15);
        assert!((eval("p0/2 - pi") - (1.0 - PI)).abs() < 1e-15);
        assert_eq!(eval("2^3"), 8.0);
        assert_eq!(eval("-(1+1)*3"), -6.0);
        assert!((eval("cos(0)") - 1.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(parse_expr_str("pi +").is_err());
        assert!(parse_expr_str("1 2").is_err());
        let e = parse_expr_str("q1").unwrap();
        assert!(e.eval(&|_| None).is_err());
        assert!(parse_expr_str("1/0").unwrap().eval(&|_| None).is_err());
    }
}

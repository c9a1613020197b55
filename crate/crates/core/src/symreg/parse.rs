//! Parser for printed expressions.
//!
//! Accepts `+`, binary and unary `-`, `*`, parentheses, `sgn(...)`, decimal
//! literals and variables `x1`, `x2`, .... Several expressions may be
//! separated by `;`.

use thiserror::Error;

use super::tree::sgn;

const MAX_NESTING: usize = 200;
/// A state has at most one dimension per diagram variable.
const MAX_VARIABLE: usize = crate::mtbdd::MAX_VARS;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Zero-based variable index.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Sgn(Box<Expr>),
}

impl Expr {
    /// Evaluates at `x`; variables beyond `x` read as NaN.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => x.get(*i).copied().unwrap_or(f64::NAN),
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Sgn(a) => sgn(a.eval(x)),
        }
    }

    /// Highest variable index used, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Sgn(a) => a.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.arity().max(b.arity()),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    nesting: usize,
}

impl Parser<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.nesting += 1;
        if self.nesting > MAX_NESTING {
            return self.err("nesting too deep");
        }
        Ok(())
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.product()?;
        loop {
            if self.eat(b'+') {
                acc = Expr::Add(Box::new(acc), Box::new(self.product()?));
            } else if self.eat(b'-') {
                acc = Expr::Sub(Box::new(acc), Box::new(self.product()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        while self.eat(b'*') {
            acc = Expr::Mul(Box::new(acc), Box::new(self.factor()?));
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let e = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Expr::Neg(Box::new(self.factor()?))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(b')')?;
                e
            }
            Some(b'x') => {
                let start = self.pos;
                self.pos += 1;
                let digits = self.take_while(|c| c.is_ascii_digit());
                match digits.parse::<usize>() {
                    Ok(i) if (1..=MAX_VARIABLE).contains(&i) => Expr::Var(i - 1),
                    _ => {
                        self.pos = start;
                        return self.err(format!("expected variable number from 1 to {MAX_VARIABLE}"));
                    }
                }
            }
            Some(b's') => {
                if !self.src[self.pos..].starts_with(b"sgn") {
                    return self.err("unknown identifier");
                }
                self.pos += 3;
                self.expect(b'(')?;
                let e = self.sum()?;
                self.expect(b')')?;
                Expr::Sgn(Box::new(e))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                self.take_while(|c| c.is_ascii_digit() || c == b'.');
                if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
                    self.pos += 1;
                    if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                        self.pos += 1;
                    }
                    self.take_while(|c| c.is_ascii_digit());
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                match text.parse::<f64>() {
                    Ok(v) => Expr::Num(v),
                    Err(_) => {
                        self.pos = start;
                        return self.err(format!("bad number '{text}'"));
                    }
                }
            }
            Some(_) => return self.err("unexpected character"),
            None => return self.err("unexpected end of input"),
        };
        self.nesting -= 1;
        Ok(e)
    }

    fn take_while(&mut self, f: impl Fn(u8) -> bool) -> &str {
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(|&c| f(c)) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).expect("ascii")
    }
}

pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        nesting: 0,
    };
    let e = p.sum()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(e)
}

/// Parses `;`-separated expressions, one per input dimension.
pub fn parse_expressions(text: &str) -> Result<Vec<Expr>, ParseError> {
    let mut offset = 0;
    let mut out = Vec::new();
    for part in text.split(';') {
        out.push(parse_expression(part).map_err(|e| ParseError {
            pos: e.pos + offset,
            msg: e.msg,
        })?);
        offset += part.len() + 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_association() {
        let e = parse_expression("1 - 2 - 3 * x2 * 2").unwrap();
        assert_eq!(e.eval(&[0.0, 1.0]), -7.0);
        assert_eq!(e.arity(), 2);
        assert_eq!(parse_expression("-(-1.5e1)").unwrap().eval(&[]), 15.0);
    }

    #[test]
    fn sgn_at_zero() {
        let e = parse_expression("0.5 * sgn(x1) + 0.5").unwrap();
        assert_eq!(e.eval(&[0.0]), 0.5);
        assert_eq!(e.eval(&[-3.0]), 0.0);
        assert_eq!(e.eval(&[3.0]), 1.0);
    }

    #[test]
    fn errors() {
        assert_eq!(parse_expression(" x0").unwrap_err().pos, 1);
        assert!(parse_expression("x64").is_ok());
        assert!(parse_expression("x65").is_err());
        assert!(parse_expression("x5555555555555555555555").is_err());
        assert!(parse_expression("(1 + 2").is_err());
        assert!(parse_expression("1 2").is_err());
        assert!(parse_expression("sin(x1)").is_err());
        assert!(parse_expression("").is_err());
        assert!(parse_expression("1..2").is_err());
        assert!(parse_expression(&"(".repeat(10_000)).is_err());
        assert_eq!(parse_expressions("1; x1 +").unwrap_err().pos, 7);
    }

    #[test]
    fn several_outputs() {
        let es = parse_expressions("x1; 2 * x2").unwrap();
        assert_eq!(es.len(), 2);
        assert_eq!(es[1].eval(&[0.0, 4.0]), 8.0);
    }
}

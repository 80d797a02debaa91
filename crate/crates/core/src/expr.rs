//! Arithmetic expressions over phase-space coordinates and time, used to
//! define Hamiltonians in scenario files.
//!
//! Variables are `x1, y1, …, xn, yn` and `s`; `x, y` alias the first pair,
//! `u, v` the last pair and `t` the time `s`. Operators `+ − * / ^`, unary
//! minus, the constant `pi`, and the functions `min, max, sin, cos, exp,
//! sqrt, abs, smoothstep, bump, hmu` are available.

use crate::error::{Error, Result};
use crate::smooth::{smoothstep, PeriodicBump};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Coord(usize),
    Time,
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Min,
    Max,
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
    Smoothstep,
    Bump,
    Hmu,
}

impl Func {
    fn lookup(name: &str) -> Option<(Func, usize)> {
        Some(match name {
            "min" => (Func::Min, 2),
            "max" => (Func::Max, 2),
            "sin" => (Func::Sin, 1),
            "cos" => (Func::Cos, 1),
            "exp" => (Func::Exp, 1),
            "sqrt" => (Func::Sqrt, 1),
            "abs" => (Func::Abs, 1),
            "smoothstep" => (Func::Smoothstep, 1),
            "bump" => (Func::Bump, 1),
            "hmu" => (Func::Hmu, 2),
            _ => return None,
        })
    }
}

/// `(1 − z²)³` on `|z| < 1`, zero outside; twice continuously differentiable.
pub fn bump(z: f64) -> f64 {
    if z.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - z * z;
        q * q * q
    }
}

/// A parsed expression in a phase space of dimension `2n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    dim: usize,
    root: Node,
}

impl Expr {
    pub fn parse(source: &str, dim: usize) -> Result<Self> {
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::input(format!("expression dimension must be even and positive, got {dim}")));
        }
        let tokens = tokenize(source)?;
        let mut p = Parser { tokens, pos: 0, dim };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::input(format!("unexpected {:?} in {source:?}", p.tokens[p.pos])));
        }
        Ok(Self {
            source: source.to_string(),
            dim,
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64], s: f64) -> f64 {
        eval(&self.root, x, s)
    }
}

fn eval(n: &Node, x: &[f64], s: f64) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Coord(i) => x[*i],
        Node::Time => s,
        Node::Neg(a) => -eval(a, x, s),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, x, s), eval(b, x, s));
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                '/' => a / b,
                _ => a.powf(b),
            }
        }
        Node::Call(f, args) => {
            let a: Vec<f64> = args.iter().map(|n| eval(n, x, s)).collect();
            match f {
                Func::Min => a[0].min(a[1]),
                Func::Max => a[0].max(a[1]),
                Func::Sin => a[0].sin(),
                Func::Cos => a[0].cos(),
                Func::Exp => a[0].exp(),
                Func::Sqrt => a[0].sqrt(),
                Func::Abs => a[0].abs(),
                Func::Smoothstep => smoothstep(a[0]),
                Func::Bump => bump(a[0]),
                Func::Hmu => PeriodicBump::new(a[1]).value(a[0]),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse()
                .map_err(|_| Error::input(format!("bad number {text:?} at {start}")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^(),".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(Error::input(format!("unexpected character {c:?} at {i}")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::input(format!("expected {c:?} at token {}", self.pos)))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            return Ok(Node::Bin('^', Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn variable(&self, name: &str) -> Option<Node> {
        let last = self.dim / 2;
        let pair = |k: usize, second: bool| Node::Coord(2 * (k - 1) + second as usize);
        match name {
            "s" | "t" => Some(Node::Time),
            "x" => Some(pair(1, false)),
            "y" => Some(pair(1, true)),
            "u" => Some(pair(last, false)),
            "v" => Some(pair(last, true)),
            "pi" => Some(Node::Num(std::f64::consts::PI)),
            _ => {
                let (head, idx) = name.split_at(1);
                let k: usize = idx.parse().ok()?;
                if (1..=last).contains(&k) && (head == "x" || head == "y") {
                    Some(pair(k, head == "y"))
                } else {
                    None
                }
            }
        }
    }

    fn atom(&mut self) -> Result<Node> {
        match self.tokens.get(self.pos).cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                if self.peek_op() == Some('(') {
                    let (f, arity) = Func::lookup(&name).ok_or_else(|| Error::input(format!("unknown function {name:?}")))?;
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while self.peek_op() == Some(',') {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    if args.len() != arity {
                        return Err(Error::input(format!("{name} takes {arity} argument(s), got {}", args.len())));
                    }
                    Ok(Node::Call(f, args))
                } else {
                    self.variable(&name)
                        .ok_or_else(|| Error::input(format!("unknown variable {name:?}")))
                }
            }
            Some(Token::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            other => Err(Error::input(format!("unexpected {other:?} at token {}", self.pos))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_aliases() {
        let e = Expr::parse("1 + 2*x^2 - -y/4", 2).unwrap();
        assert_eq!(e.eval(&[3.0, 8.0], 0.0), 1.0 + 18.0 + 2.0);
        let e = Expr::parse("u*v + x1*s - 2^3^2", 4).unwrap();
        assert_eq!(e.eval(&[1.0, 2.0, 3.0, 4.0], 0.5), 12.0 + 0.5 - 512.0);
        let e = Expr::parse("-x^2", 2).unwrap();
        assert_eq!(e.eval(&[3.0, 0.0], 0.0), -9.0);
    }

    #[test]
    fn functions() {
        let e = Expr::parse("max(min(x, 1), 0) + smoothstep(0.5) + bump(0) + hmu(t, 0.1)", 2).unwrap();
        assert!((e.eval(&[2.0, 0.0], 0.5) - 3.5).abs() < 1e-15);
        let e = Expr::parse("sqrt(abs(-4)) * cos(pi) + exp(0) + sin(0) + 1e-3", 2).unwrap();
        assert!((e.eval(&[0.0, 0.0], 0.0) + 1.0 - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(Expr::parse("x +", 2).is_err());
        assert!(Expr::parse("z", 2).is_err());
        assert!(Expr::parse("x2", 2).is_err());
        assert!(Expr::parse("min(x)", 2).is_err());
        assert!(Expr::parse("x $ y", 2).is_err());
        assert!(Expr::parse("(x", 2).is_err());
    }
}

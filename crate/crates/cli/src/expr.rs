//! Generator expressions such as `lp_power(two_point(1, 0.5), 2, 3)`.
//!
//! ```text
//! expr  := call | number | list | tuple
//! call  := ident '(' [expr {',' expr}] ')'
//! list  := '[' [expr {',' expr}] ']'
//! tuple := '(' expr {',' expr} ')'
//! ```
//! Numbers accept `inf` and `pi`.

use std::f64::consts::PI;

use mmpyramid::construct::{
    cycle_space, direct_sum_extended, dissipation_space, gapped_sum, lp_power, lp_product, lp_product_extended,
    restrict_normalize, scale, wedge_sum,
};
use mmpyramid::{Budget, ExtendedFiniteMmSpace, FiniteMmSpace, PointedSpace, WeightVector};

use crate::error::CliError;

/// Largest number of nodes an expression may contain.
const MAX_NODES: usize = 10_000;
const MAX_DEPTH: usize = 64;

#[derive(Clone, Debug)]
pub enum Space {
    Finite(FiniteMmSpace),
    Extended(ExtendedFiniteMmSpace),
}

#[derive(Clone, Debug)]
enum Node {
    Num(f64),
    List(Vec<Spanned>),
    Tuple(Vec<Spanned>),
    Call(String, Vec<Spanned>),
}

#[derive(Clone, Debug)]
struct Spanned {
    node: Node,
    pos: usize,
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    i: usize,
    nodes: usize,
}

/// One-based line and column of a byte offset.
pub fn line_col(src: &str, pos: usize) -> (usize, usize) {
    let before = &src[..pos.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

impl<'a> Parser<'a> {
    fn err<T>(&self, pos: usize, msg: impl Into<String>) -> Result<T, CliError> {
        let (line, col) = line_col(self.src, pos);
        Err(CliError::Parse {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.i < self.bytes.len() && (self.bytes[self.i] as char).is_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.i).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), CliError> {
        if self.peek() == Some(c) {
            self.i += 1;
            Ok(())
        } else {
            let found = self.peek().map_or("end of input".to_string(), |b| format!("'{}'", b as char));
            self.err(self.i, format!("expected '{}', found {found}", c as char))
        }
    }

    fn items(&mut self, close: u8, depth: usize) -> Result<Vec<Spanned>, CliError> {
        let mut out = Vec::new();
        if self.peek() == Some(close) {
            self.i += 1;
            return Ok(out);
        }
        loop {
            out.push(self.expr(depth + 1)?);
            match self.peek() {
                Some(b',') => self.i += 1,
                Some(c) if c == close => {
                    self.i += 1;
                    return Ok(out);
                }
                _ => return self.err(self.i, format!("expected ',' or '{}'", close as char)),
            }
        }
    }

    fn expr(&mut self, depth: usize) -> Result<Spanned, CliError> {
        self.nodes += 1;
        if self.nodes > MAX_NODES || depth > MAX_DEPTH {
            return self.err(self.i, "expression too large");
        }
        let pos = {
            self.skip_ws();
            self.i
        };
        let node = match self.peek() {
            None => return self.err(pos, "unexpected end of input"),
            Some(b'[') => {
                self.i += 1;
                Node::List(self.items(b']', depth)?)
            }
            Some(b'(') => {
                self.i += 1;
                Node::Tuple(self.items(b')', depth)?)
            }
            Some(c) if c.is_ascii_digit() || c == b'-' || c == b'+' || c == b'.' => {
                let start = self.i;
                self.i += 1;
                while self.i < self.bytes.len() {
                    let c = self.bytes[self.i];
                    let exp_sign = (c == b'-' || c == b'+') && matches!(self.bytes[self.i - 1], b'e' | b'E');
                    if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                        self.i += 1;
                    } else {
                        break;
                    }
                }
                let text = &self.src[start..self.i];
                match text.parse::<f64>() {
                    Ok(v) => Node::Num(v),
                    Err(_) if text == "-" && self.src[self.i..].starts_with("inf") => {
                        self.i += 3;
                        Node::Num(f64::NEG_INFINITY)
                    }
                    Err(_) => return self.err(start, format!("bad number '{text}'")),
                }
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.i;
                while self.i < self.bytes.len() && (self.bytes[self.i].is_ascii_alphanumeric() || self.bytes[self.i] == b'_') {
                    self.i += 1;
                }
                let name = self.src[start..self.i].to_string();
                match name.as_str() {
                    "inf" => Node::Num(f64::INFINITY),
                    "pi" => Node::Num(PI),
                    _ => {
                        self.expect(b'(')?;
                        Node::Call(name, self.items(b')', depth)?)
                    }
                }
            }
            Some(c) => return self.err(pos, format!("unexpected character '{}'", c as char)),
        };
        Ok(Spanned { node, pos })
    }
}

/// Parses and evaluates an expression.
pub fn parse_space(src: &str, budget: &Budget) -> Result<Space, CliError> {
    let mut p = Parser {
        src,
        bytes: src.as_bytes(),
        i: 0,
        nodes: 0,
    };
    let e = p.expr(0)?;
    if p.peek().is_some() {
        return p.err(p.i, "trailing input");
    }
    Eval { src, budget }.space(&e)
}

struct Eval<'a> {
    src: &'a str,
    budget: &'a Budget,
}

impl Eval<'_> {
    fn err<T>(&self, at: &Spanned, msg: impl Into<String>) -> Result<T, CliError> {
        let (line, col) = line_col(self.src, at.pos);
        Err(CliError::Parse {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn lift<T>(&self, at: &Spanned, r: mmpyramid::Result<T>) -> Result<T, CliError> {
        r.map_err(|e| {
            let (line, col) = line_col(self.src, at.pos);
            CliError::Eval { line, col, source: e }
        })
    }

    fn num(&self, e: &Spanned) -> Result<f64, CliError> {
        match e.node {
            Node::Num(v) => Ok(v),
            _ => self.err(e, "expected a number"),
        }
    }

    fn count(&self, e: &Spanned) -> Result<usize, CliError> {
        let v = self.num(e)?;
        if v >= 0.0 && v.fract() == 0.0 && v < 1e9 {
            Ok(v as usize)
        } else {
            self.err(e, format!("expected a nonnegative integer, found {v}"))
        }
    }

    fn finite(&self, e: &Spanned) -> Result<FiniteMmSpace, CliError> {
        match self.space(e)? {
            Space::Finite(x) => Ok(x),
            Space::Extended(_) => self.err(e, "expected a space with finite distances"),
        }
    }

    fn extended(&self, e: &Spanned) -> Result<ExtendedFiniteMmSpace, CliError> {
        Ok(match self.space(e)? {
            Space::Finite(x) => x.to_extended(),
            Space::Extended(x) => x,
        })
    }

    fn elems<'e>(&self, e: &'e Spanned, what: &str) -> Result<&'e [Spanned], CliError> {
        match &e.node {
            Node::List(v) | Node::Tuple(v) => Ok(v),
            _ => self.err(e, format!("expected a list of {what}")),
        }
    }

    fn arity(&self, e: &Spanned, args: &[Spanned], lo: usize, hi: usize, name: &str) -> Result<(), CliError> {
        if args.len() < lo || args.len() > hi {
            let want = if lo == hi { lo.to_string() } else { format!("{lo} to {hi}") };
            return self.err(e, format!("{name} takes {want} arguments, got {}", args.len()));
        }
        Ok(())
    }

    fn weights(&self, at: &Spanned, w: Vec<f64>) -> Result<WeightVector, CliError> {
        self.lift(at, WeightVector::a1(w))
    }

    fn space(&self, e: &Spanned) -> Result<Space, CliError> {
        let (name, args) = match &e.node {
            Node::Call(n, a) => (n.as_str(), a.as_slice()),
            _ => return self.err(e, "expected a space expression"),
        };
        let b = self.budget;
        let fin = |x: mmpyramid::Result<FiniteMmSpace>| -> Result<Space, CliError> { Ok(Space::Finite(self.lift(e, x)?)) };
        match name {
            "point" => {
                self.arity(e, args, 0, 0, name)?;
                Ok(Space::Finite(FiniteMmSpace::one_point()))
            }
            "cycle" => {
                self.arity(e, args, 1, 2, name)?;
                let c = match args.get(1) {
                    Some(a) => self.num(a)?,
                    None => 2.0 * PI,
                };
                fin(cycle_space(self.count(&args[0])?, c))
            }
            "two_point" => {
                self.arity(e, args, 2, 2, name)?;
                fin(FiniteMmSpace::two_point(self.num(&args[0])?, self.num(&args[1])?))
            }
            "dissipation" => {
                self.arity(e, args, 1, 1, name)?;
                fin(dissipation_space(self.count(&args[0])?))
            }
            "lp_power" => {
                self.arity(e, args, 3, 3, name)?;
                let x = self.finite(&args[0])?;
                fin(lp_power(&x, self.num(&args[1])?, self.count(&args[2])?, b))
            }
            "lp_product" => {
                self.arity(e, args, 2, 3, name)?;
                let p = match args.get(2) {
                    Some(a) => self.num(a)?,
                    None => 2.0,
                };
                match (self.space(&args[0])?, self.space(&args[1])?) {
                    (Space::Finite(x), Space::Finite(y)) => fin(lp_product(&x, &y, p, b)),
                    (x, y) => {
                        let (x, y) = (to_ext(x), to_ext(y));
                        Ok(Space::Extended(self.lift(e, lp_product_extended(&x, &y, p, b))?))
                    }
                }
            }
            "direct_sum" => {
                self.arity(e, args, 1, 1, name)?;
                let mut parts = Vec::new();
                let mut w = Vec::new();
                for item in self.elems(&args[0], "(space, weight) pairs")? {
                    let pair = self.elems(item, "space and weight")?;
                    if pair.len() != 2 {
                        return self.err(item, "expected (space, weight)");
                    }
                    parts.push(self.extended(&pair[0])?);
                    w.push(self.num(&pair[1])?);
                }
                let a = self.weights(&args[0], w)?;
                Ok(Space::Extended(self.lift(e, direct_sum_extended(&parts, &a))?))
            }
            "gapped_sum" => {
                self.arity(e, args, 2, 2, name)?;
                let mut parts = Vec::new();
                let mut w = Vec::new();
                for item in self.elems(&args[0], "(space, base, weight) triples")? {
                    let t = self.elems(item, "space, base and weight")?;
                    if t.len() != 3 {
                        return self.err(item, "expected (space, base, weight)");
                    }
                    let x = self.finite(&t[0])?;
                    parts.push(self.lift(item, PointedSpace::new(x, self.count(&t[1])?))?);
                    w.push(self.num(&t[2])?);
                }
                let a = self.weights(&args[0], w)?;
                fin(gapped_sum(&parts, &a, self.num(&args[1])?))
            }
            "wedge" => {
                self.arity(e, args, 5, 5, name)?;
                let x = self.lift(e, PointedSpace::new(self.finite(&args[0])?, self.count(&args[1])?))?;
                let y = self.lift(e, PointedSpace::new(self.finite(&args[2])?, self.count(&args[3])?))?;
                let w = self.lift(e, wedge_sum(&x, &y, self.num(&args[4])?))?;
                Ok(Space::Finite(w.space))
            }
            "scale" => {
                self.arity(e, args, 2, 2, name)?;
                let x = self.finite(&args[0])?;
                fin(scale(&x, self.num(&args[1])?))
            }
            "restrict" => {
                self.arity(e, args, 2, 2, name)?;
                let x = self.finite(&args[0])?;
                let idx = self
                    .elems(&args[1], "point indices")?
                    .iter()
                    .map(|i| self.count(i))
                    .collect::<Result<Vec<_>, _>>()?;
                fin(restrict_normalize(&x, &idx))
            }
            _ => self.err(e, format!("unknown constructor '{name}'")),
        }
    }
}

fn to_ext(s: Space) -> ExtendedFiniteMmSpace {
    match s {
        Space::Finite(x) => x.to_extended(),
        Space::Extended(x) => x,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mmpyramid::{Metric, WeightedMetric};

    fn fin(src: &str) -> FiniteMmSpace {
        match parse_space(src, &Budget::default()).unwrap() {
            Space::Finite(x) => x,
            Space::Extended(_) => panic!("expected finite"),
        }
    }

    #[test]
    fn constructors() {
        assert_eq!(fin("dissipation(8)").len(), 8);
        assert_eq!(fin("lp_power(two_point(1, 0.5), 2, 3)").len(), 8);
        assert_eq!(fin("lp_product(cycle(4), point())").len(), 4);
        assert_eq!(fin("cycle(6, 6)").dist(0, 3), 3.0);
        assert_eq!(fin("scale(two_point(1,0.5), 2.5)").dist(0, 1), 2.5);
        assert_eq!(fin("restrict(dissipation(4), [0, 2])").weights(), &[0.5, 0.5]);
        assert_eq!(fin("gapped_sum([(point(), 0, 0.5), (point(), 0, 0.5)], 3)").dist(0, 1), 3.0);
        assert_eq!(fin("wedge(two_point(1,0.5), 0, two_point(2,0.5), 0, 0.5)").len(), 3);
        assert_eq!(fin("lp_power(two_point(1, 0.5), inf, 2)").diameter(), 1.0);
        match parse_space("direct_sum([(point(), 0.25), (two_point(1, 0.5), 0.75)])", &Budget::default()).unwrap() {
            Space::Extended(z) => assert!(z.dist(0, 1).is_infinite()),
            Space::Finite(_) => panic!("expected extended"),
        }
    }

    #[test]
    fn errors_carry_positions() {
        let b = Budget::default();
        let e = parse_space("lp_power(two_point(1, 0.5),\n  2, foo(1))", &b).unwrap_err();
        assert!(matches!(e, CliError::Parse { line: 2, col: 6, .. }), "{e}");
        let e = parse_space("two_point(1, 0.5", &b).unwrap_err();
        assert!(matches!(e, CliError::Parse { line: 1, col: 17, .. }), "{e}");
        let e = parse_space("two_point(1, 1.5)", &b).unwrap_err();
        assert!(matches!(e, CliError::Eval { line: 1, col: 1, .. }), "{e}");
        let e = parse_space("direct_sum([(point(), 0.5)])", &b).unwrap_err();
        assert!(e.to_string().contains("sum"), "{e}");
        let deep = "scale(".repeat(100) + "point()" + &", 2)".repeat(100);
        assert!(parse_space(&deep, &b).unwrap_err().to_string().contains("too large"));
    }
}

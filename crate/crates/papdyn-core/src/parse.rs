//! Recursive-descent parser for the coefficient/density expression grammar:
//! numbers, `t`, `pi`, `sin`, `cos`, `exp`, `abs`, `sqrt`, `+ - * /`,
//! unary minus, and parentheses.

use crate::error::Error;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum MathExpr {
    Num(f64),
    Time,
    Neg(Box<MathExpr>),
    Add(Box<MathExpr>, Box<MathExpr>),
    Sub(Box<MathExpr>, Box<MathExpr>),
    Mul(Box<MathExpr>, Box<MathExpr>),
    Div(Box<MathExpr>, Box<MathExpr>),
    Sin(Box<MathExpr>),
    Cos(Box<MathExpr>),
    Exp(Box<MathExpr>),
    Abs(Box<MathExpr>),
    Sqrt(Box<MathExpr>),
}

impl MathExpr {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            MathExpr::Num(v) => *v,
            MathExpr::Time => t,
            MathExpr::Neg(e) => -e.eval(t),
            MathExpr::Add(a, b) => a.eval(t) + b.eval(t),
            MathExpr::Sub(a, b) => a.eval(t) - b.eval(t),
            MathExpr::Mul(a, b) => a.eval(t) * b.eval(t),
            MathExpr::Div(a, b) => a.eval(t) / b.eval(t),
            MathExpr::Sin(e) => e.eval(t).sin(),
            MathExpr::Cos(e) => e.eval(t).cos(),
            MathExpr::Exp(e) => e.eval(t).exp(),
            MathExpr::Abs(e) => e.eval(t).abs(),
            MathExpr::Sqrt(e) => e.eval(t).sqrt(),
        }
    }

    /// Constant-folds the node; `Some(v)` when the subtree does not mention `t`.
    pub fn as_const(&self) -> Option<f64> {
        match self {
            MathExpr::Num(v) => Some(*v),
            MathExpr::Time => None,
            MathExpr::Neg(e) => e.as_const().map(|v| -v),
            MathExpr::Add(a, b) => Some(a.as_const()? + b.as_const()?),
            MathExpr::Sub(a, b) => Some(a.as_const()? - b.as_const()?),
            MathExpr::Mul(a, b) => Some(a.as_const()? * b.as_const()?),
            MathExpr::Div(a, b) => Some(a.as_const()? / b.as_const()?),
            MathExpr::Sin(e) => e.as_const().map(f64::sin),
            MathExpr::Cos(e) => e.as_const().map(f64::cos),
            MathExpr::Exp(e) => e.as_const().map(f64::exp),
            MathExpr::Abs(e) => e.as_const().map(f64::abs),
            MathExpr::Sqrt(e) => e.as_const().map(f64::sqrt),
        }
    }

    /// Interprets the subtree as `a*t + b`; `None` when not linear in `t`.
    pub fn as_linear(&self) -> Option<(f64, f64)> {
        match self {
            MathExpr::Num(v) => Some((0.0, *v)),
            MathExpr::Time => Some((1.0, 0.0)),
            MathExpr::Neg(e) => e.as_linear().map(|(a, b)| (-a, -b)),
            MathExpr::Add(x, y) => {
                let (a1, b1) = x.as_linear()?;
                let (a2, b2) = y.as_linear()?;
                Some((a1 + a2, b1 + b2))
            }
            MathExpr::Sub(x, y) => {
                let (a1, b1) = x.as_linear()?;
                let (a2, b2) = y.as_linear()?;
                Some((a1 - a2, b1 - b2))
            }
            MathExpr::Mul(x, y) => {
                if let Some(c) = x.as_const() {
                    let (a, b) = y.as_linear()?;
                    Some((c * a, c * b))
                } else if let Some(c) = y.as_const() {
                    let (a, b) = x.as_linear()?;
                    Some((c * a, c * b))
                } else {
                    None
                }
            }
            MathExpr::Div(x, y) => {
                let c = y.as_const()?;
                let (a, b) = x.as_linear()?;
                Some((a / c, b / c))
            }
            _ => self.as_const().map(|v| (0.0, v)),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

pub fn parse_expr(src: &str) -> Result<MathExpr> {
    let mut p = Parser { src, bytes: src.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse(format!("{msg} at byte {} in `{}`", self.pos, self.src))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<MathExpr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = MathExpr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = MathExpr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<MathExpr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = MathExpr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = MathExpr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<MathExpr> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(MathExpr::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<MathExpr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            _ => Err(self.err("expected number, `t`, function, or `(`")),
        }
    }

    fn number(&mut self) -> Result<MathExpr> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E')
                && self.pos > start
                && self
                    .bytes
                    .get(self.pos + 1)
                    .is_some_and(|&n| n.is_ascii_digit() || n == b'+' || n == b'-')
            {
                self.pos += 2;
            } else {
                break;
            }
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map(MathExpr::Num)
            .map_err(|_| self.err("malformed number"))
    }

    fn ident(&mut self) -> Result<MathExpr> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        match name {
            "t" => Ok(MathExpr::Time),
            "pi" => Ok(MathExpr::Num(std::f64::consts::PI)),
            "sin" | "cos" | "exp" | "abs" | "sqrt" => {
                if self.peek() != Some(b'(') {
                    return Err(self.err("expected `(` after function name"));
                }
                self.pos += 1;
                let arg = Box::new(self.expr()?);
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(match name {
                    "sin" => MathExpr::Sin(arg),
                    "cos" => MathExpr::Cos(arg),
                    "exp" => MathExpr::Exp(arg),
                    "abs" => MathExpr::Abs(arg),
                    _ => MathExpr::Sqrt(arg),
                })
            }
            _ => Err(self.err("unknown identifier")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn arithmetic_and_functions() {
        let e = parse_expr("(2*sin(t)+exp(-t))/10").unwrap();
        assert_relative_eq!(e.eval(0.0), 0.1);
        let t = std::f64::consts::FRAC_PI_2;
        assert_relative_eq!(e.eval(t), (2.0 + (-t).exp()) / 10.0);
    }

    #[test]
    fn sqrt_frequency_folds() {
        let e = parse_expr("sin(sqrt(2)*t)").unwrap();
        assert_relative_eq!(e.eval(3.0), (2f64.sqrt() * 3.0).sin());
    }

    #[test]
    fn pi_and_scientific_numbers() {
        assert_relative_eq!(parse_expr("pi/2").unwrap().eval(0.0), std::f64::consts::FRAC_PI_2);
        assert_relative_eq!(parse_expr("1.5e-3").unwrap().eval(0.0), 1.5e-3);
    }

    #[test]
    fn density_shape() {
        let e = parse_expr("exp(sin(t))").unwrap();
        assert_relative_eq!(e.eval(1.0), 1f64.sin().exp());
    }

    #[test]
    fn linear_extraction() {
        let (a, b) = parse_expr("sqrt(2)*t + pi").unwrap().as_linear().unwrap();
        assert_relative_eq!(a, 2f64.sqrt());
        assert_relative_eq!(b, std::f64::consts::PI);
        assert!(parse_expr("t*t").unwrap().as_linear().is_none());
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_expr("sin t").is_err());
        assert!(parse_expr("2 +").is_err());
        assert!(parse_expr("foo(t)").is_err());
        assert!(parse_expr("(1").is_err());
    }
}

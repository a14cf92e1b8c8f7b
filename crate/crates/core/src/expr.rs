//! Scalar expression language for fundamental functions and metric
//! coefficients.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | 'pi' | var | func '(' expr ')' | '(' expr ')'
//! var     := 'x' digits | 'y' digits       1-based: x1..xn, y1..yn
//! func    := sqrt | exp | log | sin | cos
//! ```
//!
//! Variables are 1-based in text and 0-based in the tree.

use std::fmt;

use crate::error::{Error, Result};
use crate::jets::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X(usize),
    Y(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Neg,
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Unary(Func, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn uses_fiber(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => matches!(v, Var::Y(_)),
            Expr::Unary(_, a) => a.uses_fiber(),
            Expr::Binary(_, a, b) => a.uses_fiber() || b.uses_fiber(),
        }
    }

    /// Plain floating-point evaluation at `(x, y)`.
    pub fn eval_f64(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(Var::X(i)) => x[*i],
            Expr::Var(Var::Y(i)) => y[*i],
            Expr::Unary(f, a) => {
                let a = a.eval_f64(x, y)?;
                match f {
                    Func::Neg => -a,
                    Func::Sqrt if a > 0.0 => a.sqrt(),
                    Func::Sqrt => return Err(Error::Domain { op: "sqrt", value: a }),
                    Func::Exp => a.exp(),
                    Func::Log if a > 0.0 => a.ln(),
                    Func::Log => return Err(Error::Domain { op: "log", value: a }),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                }
            }
            Expr::Binary(op, a, b) => {
                let a = a.eval_f64(x, y)?;
                let b = b.eval_f64(x, y)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div if b != 0.0 => a / b,
                    BinOp::Div => return Err(Error::Domain { op: "div", value: b }),
                    BinOp::Pow => pow_f64(a, b)?,
                }
            }
        })
    }

    /// Jet evaluation given the seeds `x1..xn, y1..yn`.
    pub fn eval_jet(&self, seeds: &[Jet]) -> Result<Jet> {
        let n = seeds.len() / 2;
        Ok(match self {
            Expr::Const(c) => {
                let s = &seeds[0];
                Jet::constant(s.nvars(), s.order(), *c)
            }
            Expr::Var(Var::X(i)) => seeds[*i].clone(),
            Expr::Var(Var::Y(i)) => seeds[n + *i].clone(),
            Expr::Unary(f, a) => {
                let a = a.eval_jet(seeds)?;
                match f {
                    Func::Neg => -a,
                    Func::Sqrt => a.sqrt()?,
                    Func::Exp => a.exp(),
                    Func::Log => a.ln()?,
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                }
            }
            Expr::Binary(BinOp::Pow, a, b) => {
                let base = a.eval_jet(seeds)?;
                match **b {
                    Expr::Const(r) => base.powf(r)?,
                    _ => {
                        let exponent = b.eval_jet(seeds)?;
                        (exponent * base.ln()?).exp()
                    }
                }
            }
            Expr::Binary(op, a, b) => {
                let a = a.eval_jet(seeds)?;
                let b = b.eval_jet(seeds)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a.div(&b)?,
                    BinOp::Pow => unreachable!(),
                }
            }
        })
    }
}

fn pow_f64(a: f64, b: f64) -> Result<f64> {
    if b.fract() == 0.0 && b.abs() <= 64.0 {
        if a == 0.0 && b < 0.0 {
            return Err(Error::Domain { op: "pow", value: a });
        }
        return Ok(a.powi(b as i32));
    }
    if a > 0.0 {
        Ok(a.powf(b))
    } else {
        Err(Error::Domain { op: "pow", value: a })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(Var::X(i)) => write!(f, "x{}", i + 1),
            Expr::Var(Var::Y(i)) => write!(f, "y{}", i + 1),
            Expr::Unary(func, a) => {
                let name = match func {
                    Func::Neg => "neg",
                    Func::Sqrt => "sqrt",
                    Func::Exp => "exp",
                    Func::Log => "log",
                    Func::Sin => "sin",
                    Func::Cos => "cos",
                };
                write!(f, "{name}({a})")
            }
            Expr::Binary(op, a, b) => {
                let name = match op {
                    BinOp::Add => "add",
                    BinOp::Sub => "sub",
                    BinOp::Mul => "mul",
                    BinOp::Div => "div",
                    BinOp::Pow => "pow",
                };
                write!(f, "{name}({a},{b})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // Exponent part, only when followed by a digit (optionally signed).
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit = &text[start..i];
            let value = lit.parse::<f64>().map_err(|_| Error::Syntax {
                offset: start,
                message: format!("malformed number `{lit}`"),
            })?;
            out.push((Token::Num(value), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Token::Ident(text[start..i].to_string()), start));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Token::Op(c),
                '(' => Token::LParen,
                ')' => Token::RParen,
                _ => {
                    return Err(Error::Syntax {
                        offset: i,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            };
            out.push((tok, i));
            i += c.len_utf8();
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn syntax(&self, message: impl Into<String>) -> Error {
        Error::Syntax {
            offset: self.offset(),
            message: message.into(),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Token::Op('-')) = self.peek() {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Expr::Unary(Func::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn expect_rparen(&mut self) -> Result<()> {
        match self.peek() {
            Some(Token::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.syntax("expected `)`")),
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                let func = match name.as_str() {
                    "sqrt" => Some(Func::Sqrt),
                    "exp" => Some(Func::Exp),
                    "log" => Some(Func::Log),
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    _ => None,
                };
                if let Some(func) = func {
                    if self.peek() != Some(&Token::LParen) {
                        return Err(self.syntax(format!("expected `(` after `{name}`")));
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Unary(func, Box::new(arg)));
                }
                if name == "pi" {
                    return Ok(Expr::Const(std::f64::consts::PI));
                }
                self.variable(&name, offset)
            }
            Some(Token::RParen) => Err(self.syntax("unexpected `)`")),
            Some(Token::Op(c)) => Err(self.syntax(format!("unexpected operator `{c}`"))),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn variable(&self, name: &str, offset: usize) -> Result<Expr> {
        let unknown = || Error::UnknownIdentifier {
            name: name.to_string(),
            offset,
        };
        let (kind, digits) = name.split_at(1);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(unknown());
        }
        let index: usize = digits.parse().map_err(|_| unknown())?;
        if index == 0 || index > self.dim {
            return Err(Error::VariableOutOfRange {
                name: name.to_string(),
                offset,
                dim: self.dim,
            });
        }
        match kind {
            "x" => Ok(Expr::Var(Var::X(index - 1))),
            "y" => Ok(Expr::Var(Var::Y(index - 1))),
            _ => Err(unknown()),
        }
    }
}

/// Parse `text` as a scalar expression over `x1..xn, y1..yn`.
pub fn parse_expression(text: &str, dim: usize) -> Result<Expr> {
    if text.trim().is_empty() {
        return Err(Error::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
        dim,
    };
    let expr = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.syntax("unexpected trailing input"));
    }
    Ok(expr)
}

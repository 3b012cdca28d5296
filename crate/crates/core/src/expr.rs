//! Closed-form expressions in `x` and `y`, expandable as Taylor series.
//!
//! Grammar (whitespace is ignored):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*      division by constants only
//! unary := '-' unary | power
//! power := atom ('^' uint)?
//! atom  := number | 'x' | 'y' | 'pi' | fn '(' expr ')' | '(' expr ')'
//! fn    := 'sin' | 'cos' | 'exp'
//! ```

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::taylor2d::{Affine, Elementary, TaylorSeries2};
use crate::Point;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Y,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// Quotient by an expression free of `x` and `y`.
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Parse(format!(
                "unexpected {:?} in {src:?}",
                p.tokens[p.pos]
            )));
        }
        Ok(e)
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::X | Expr::Y => false,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => {
                a.is_constant()
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.is_constant() && b.is_constant()
            }
        }
    }

    pub fn eval(&self, (x, y): Point) -> f64 {
        let e = |a: &Expr| a.eval((x, y));
        match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::Y => y,
            Expr::Neg(a) => -e(a),
            Expr::Add(a, b) => e(a) + e(b),
            Expr::Sub(a, b) => e(a) - e(b),
            Expr::Mul(a, b) => e(a) * e(b),
            Expr::Div(a, b) => e(a) / e(b),
            Expr::Pow(a, n) => e(a).powi(*n as i32),
            Expr::Sin(a) => e(a).sin(),
            Expr::Cos(a) => e(a).cos(),
            Expr::Exp(a) => e(a).exp(),
        }
    }

    /// Affine form `a x + b y + c`, if the expression is one.
    fn as_affine(&self) -> Option<Affine> {
        match self {
            Expr::X => Some(Affine::X),
            Expr::Y => Some(Affine::Y),
            e if e.is_constant() => Some(Affine {
                a: 0.0,
                b: 0.0,
                c: e.eval((0.0, 0.0)),
            }),
            Expr::Neg(a) => a.as_affine().map(|f| scale_affine(f, -1.0)),
            Expr::Add(a, b) => Some(add_affine(a.as_affine()?, b.as_affine()?, 1.0)),
            Expr::Sub(a, b) => Some(add_affine(a.as_affine()?, b.as_affine()?, -1.0)),
            Expr::Mul(a, b) if a.is_constant() => {
                b.as_affine().map(|f| scale_affine(f, a.eval((0.0, 0.0))))
            }
            Expr::Mul(a, b) if b.is_constant() => {
                a.as_affine().map(|f| scale_affine(f, b.eval((0.0, 0.0))))
            }
            Expr::Div(a, b) => a.as_affine().map(|f| scale_affine(f, 1.0 / b.eval((0.0, 0.0)))),
            _ => None,
        }
    }

    /// Taylor expansion about `center`, truncated at `order`.
    pub fn taylor(&self, center: Point, order: usize) -> Result<TaylorSeries2> {
        let t = |a: &Expr| a.taylor(center, order);
        Ok(match self {
            Expr::Num(v) => TaylorSeries2::constant(center, order, (*v).into()),
            Expr::X => TaylorSeries2::elementary(Elementary::CoordinateX, center, order),
            Expr::Y => TaylorSeries2::elementary(Elementary::CoordinateY, center, order),
            Expr::Neg(a) => t(a)?.scaled((-1.0).into()),
            Expr::Add(a, b) => t(a)?.try_add(&t(b)?)?,
            Expr::Sub(a, b) => t(a)?.try_sub(&t(b)?)?,
            Expr::Mul(a, b) => t(a)?.mul(&t(b)?, order)?,
            Expr::Div(a, b) => {
                if !b.is_constant() {
                    return Err(Error::Parse("division by a non-constant".into()));
                }
                t(a)?.scaled((1.0 / b.eval(center)).into())
            }
            Expr::Pow(a, n) => {
                let base = t(a)?;
                let mut acc = TaylorSeries2::constant(center, order, 1.0.into());
                for _ in 0..*n {
                    acc = acc.mul(&base, order)?;
                }
                acc
            }
            Expr::Sin(a) | Expr::Cos(a) => {
                let is_sin = matches!(self, Expr::Sin(_));
                if let Some(f) = a.as_affine() {
                    let kind = if is_sin {
                        Elementary::SinOf(f)
                    } else {
                        Elementary::CosOf(f)
                    };
                    return Ok(TaylorSeries2::elementary(kind, center, order));
                }
                // sin g = (e^{ig} - e^{-ig}) / 2i, cos g = (e^{ig} + e^{-ig}) / 2
                let ig = t(a)?.scaled(Complex64::i());
                let plus = ig.exp_any(order)?;
                let minus = ig.scaled((-1.0).into()).exp_any(order)?;
                let s = if is_sin {
                    plus.try_sub(&minus)?.scaled(Complex64::new(0.0, -0.5))
                } else {
                    plus.try_add(&minus)?.scaled(0.5.into())
                };
                // the result of a real argument is real
                TaylorSeries2::from_fn(center, order, |idx| s.coeff(idx.i, idx.j).re.into())
            }
            Expr::Exp(a) => t(a)?.exp_any(order)?,
        })
    }
}

fn scale_affine(f: Affine, s: f64) -> Affine {
    Affine {
        a: f.a * s,
        b: f.b * s,
        c: f.c * s,
    }
}

fn add_affine(f: Affine, g: Affine, sign: f64) -> Affine {
    Affine {
        a: f.a + sign * g.a,
        b: f.b + sign * g.b,
        c: f.c + sign * g.c,
    }
}

impl FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::X => write!(f, "x"),
            Expr::Y => write!(f, "y"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Div(a, b) => write!(f, "{a}/({b})"),
            Expr::Pow(a, n) => write!(f, "({a})^{n}"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
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
            // exponent, e.g. 1e-3
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut k = i + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    i = k;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse()
                .map_err(|_| Error::Parse(format!("bad number {text:?}")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Parse(format!("expected '{op}'")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(lhs.into(), rhs.into())
            } else {
                Expr::Sub(lhs.into(), rhs.into())
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(lhs.into(), rhs.into())
            } else {
                if !rhs.is_constant() {
                    return Err(Error::Parse("division by a non-constant".into()));
                }
                Expr::Div(lhs.into(), rhs.into())
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(Expr::Neg(self.unary()?.into()));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            match self.tokens.get(self.pos) {
                Some(Token::Num(v)) if v.fract() == 0.0 && *v >= 0.0 && *v <= u32::MAX as f64 => {
                    self.pos += 1;
                    return Ok(Expr::Pow(base.into(), *v as u32));
                }
                _ => return Err(Error::Parse("exponent must be a non-negative integer".into())),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| Error::Parse("unexpected end of input".into()))?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Expr::Num(v)),
            Token::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Token::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::X),
                "y" => Ok(Expr::Y),
                "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                "sin" | "cos" | "exp" => {
                    self.expect('(')?;
                    let arg = Box::new(self.expr()?);
                    self.expect(')')?;
                    Ok(match name.as_str() {
                        "sin" => Expr::Sin(arg),
                        "cos" => Expr::Cos(arg),
                        _ => Expr::Exp(arg),
                    })
                }
                _ => Err(Error::Parse(format!("unknown identifier {name:?}"))),
            },
            Token::Op(c) => Err(Error::Parse(format!("unexpected '{c}'"))),
        }
    }
}

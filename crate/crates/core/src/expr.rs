//! Scalar expressions over the ambient coordinates `x1, x2, x3`.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?            right associative
//! atom    := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Identifiers are `x1`, `x2`, `x3`, the constants `pi` and `e`, and the
//! functions `sin cos tan exp ln sqrt abs` (one argument) and `max min`
//! (two arguments). Derivatives are obtained by symbolic differentiation of
//! the tree, so fields built from expressions carry exact gradients and
//! Hessians.

use std::fmt;

use crate::error::{Error, Result};
use crate::field::{AmbientMatrixField, AmbientScalarField, AmbientVectorField};
use crate::linalg::Vec3;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sign,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn apply<T: Real>(self, x: T) -> T {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Exp => x.exp(),
            Func::Ln => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
            Func::Sign => {
                if x > T::zero() {
                    T::one()
                } else if x < T::zero() {
                    -T::one()
                } else {
                    T::zero()
                }
            }
        }
    }
}

/// Expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based coordinate index.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    /// `if a >= b { then } else { otherwise }`; produced by differentiating max/min.
    IfGe(Box<Expr>, Box<Expr>, Box<Expr>, Box<Expr>),
}

use Expr::*;

fn bx(e: Expr) -> Box<Expr> {
    Box::new(e)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Const(x), Const(y)) => Const(x + y),
        (Const(z), _) if *z == 0.0 => b,
        (_, Const(z)) if *z == 0.0 => a,
        _ => Add(bx(a), bx(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Const(x), Const(y)) => Const(x - y),
        (_, Const(z)) if *z == 0.0 => a,
        (Const(z), _) if *z == 0.0 => neg(b),
        _ => Sub(bx(a), bx(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Const(x), Const(y)) => Const(x * y),
        (Const(z), _) | (_, Const(z)) if *z == 0.0 => Const(0.0),
        (Const(o), _) if *o == 1.0 => b,
        (_, Const(o)) if *o == 1.0 => a,
        _ => Mul(bx(a), bx(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Const(z), _) if *z == 0.0 => Const(0.0),
        (_, Const(o)) if *o == 1.0 => a,
        _ => Div(bx(a), bx(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Const(x) => Const(-x),
        Neg(inner) => *inner,
        other => Neg(bx(other)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Const(z)) if *z == 0.0 => Const(1.0),
        (_, Const(o)) if *o == 1.0 => a,
        _ => Pow(bx(a), bx(b)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    match a {
        Const(x) => Const(f.apply(x)),
        other => Call(f, bx(other)),
    }
}

impl Expr {
    pub fn eval<T: Real>(&self, x: &Vec3<T>) -> T {
        match self {
            Const(c) => T::c(*c),
            Var(k) => x[*k],
            Neg(a) => -a.eval(x),
            Add(a, b) => a.eval(x) + b.eval(x),
            Sub(a, b) => a.eval(x) - b.eval(x),
            Mul(a, b) => a.eval(x) * b.eval(x),
            Div(a, b) => a.eval(x) / b.eval(x),
            Pow(a, b) => {
                let base = a.eval(x);
                match **b {
                    Const(c) if c.fract() == 0.0 && c.abs() <= 64.0 => base.powi(c as i32),
                    _ => base.powf(b.eval(x)),
                }
            }
            Call(f, a) => f.apply(a.eval(x)),
            Max(a, b) => a.eval(x).max(b.eval(x)),
            Min(a, b) => a.eval(x).min(b.eval(x)),
            IfGe(a, b, t, e) => {
                if a.eval(x) >= b.eval(x) {
                    t.eval(x)
                } else {
                    e.eval(x)
                }
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Const(_) => true,
            Var(_) => false,
            Neg(a) | Call(_, a) => a.is_constant(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) | Max(a, b) | Min(a, b) => {
                a.is_constant() && b.is_constant()
            }
            IfGe(a, b, t, e) => a.is_constant() && b.is_constant() && t.is_constant() && e.is_constant(),
        }
    }

    /// Symbolic partial derivative with respect to coordinate `k` (zero-based).
    pub fn derivative(&self, k: usize) -> Expr {
        match self {
            Const(_) => Const(0.0),
            Var(j) => Const(if *j == k { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.derivative(k)),
            Add(a, b) => add(a.derivative(k), b.derivative(k)),
            Sub(a, b) => sub(a.derivative(k), b.derivative(k)),
            Mul(a, b) => add(mul(a.derivative(k), (**b).clone()), mul((**a).clone(), b.derivative(k))),
            Div(a, b) => div(
                sub(mul(a.derivative(k), (**b).clone()), mul((**a).clone(), b.derivative(k))),
                pow((**b).clone(), Const(2.0)),
            ),
            Pow(a, b) => {
                if b.is_constant() {
                    // c a^(c-1) a'
                    let c = (**b).clone();
                    mul(mul(c.clone(), pow((**a).clone(), sub(c, Const(1.0)))), a.derivative(k))
                } else {
                    // a^b (b' ln a + b a'/a)
                    mul(
                        self.clone(),
                        add(
                            mul(b.derivative(k), call(Func::Ln, (**a).clone())),
                            div(mul((**b).clone(), a.derivative(k)), (**a).clone()),
                        ),
                    )
                }
            }
            Call(f, a) => {
                let inner = (**a).clone();
                let da = a.derivative(k);
                let outer = match f {
                    Func::Sin => call(Func::Cos, inner),
                    Func::Cos => neg(call(Func::Sin, inner)),
                    Func::Tan => div(Const(1.0), pow(call(Func::Cos, inner), Const(2.0))),
                    Func::Exp => call(Func::Exp, inner),
                    Func::Ln => div(Const(1.0), inner),
                    Func::Sqrt => div(Const(0.5), call(Func::Sqrt, inner)),
                    Func::Abs => call(Func::Sign, inner),
                    Func::Sign => Const(0.0),
                };
                mul(outer, da)
            }
            Max(a, b) => if_ge((**a).clone(), (**b).clone(), a.derivative(k), b.derivative(k)),
            Min(a, b) => if_ge((**b).clone(), (**a).clone(), a.derivative(k), b.derivative(k)),
            IfGe(a, b, t, e) => if_ge((**a).clone(), (**b).clone(), t.derivative(k), e.derivative(k)),
        }
    }

    pub fn gradient(&self) -> [Expr; 3] {
        [self.derivative(0), self.derivative(1), self.derivative(2)]
    }

    /// Scalar field with symbolic gradient and Hessian.
    pub fn to_scalar_field<T: Real>(&self) -> AmbientScalarField<T> {
        let f = self.clone();
        let g = self.gradient();
        let h: [[Expr; 3]; 3] = [g[0].gradient(), g[1].gradient(), g[2].gradient()];
        AmbientScalarField::new(move |x| f.eval(x))
            .with_gradient(move |x| [g[0].eval(x), g[1].eval(x), g[2].eval(x)])
            .with_hessian(move |x| {
                let mut m = [[T::zero(); 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        m[i][j] = h[i][j].eval(x);
                    }
                }
                m
            })
    }
}

fn if_ge(a: Expr, b: Expr, t: Expr, e: Expr) -> Expr {
    if t == e {
        return t;
    }
    IfGe(bx(a), bx(b), bx(t), bx(e))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const(c) => {
                if *c < 0.0 {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            Var(k) => write!(f, "x{}", k + 1),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Pow(a, b) => write!(f, "({a} ^ {b})"),
            Call(func, a) => write!(f, "{}({a})", func.name()),
            Max(a, b) => write!(f, "max({a}, {b})"),
            Min(a, b) => write!(f, "min({a}, {b})"),
            IfGe(a, b, t, e) => write!(f, "ifge({a}, {b}, {t}, {e})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
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
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| Error::Syntax {
                pos: start,
                msg: format!("malformed number '{text}'"),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if "+-*/^(),".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(Error::Syntax {
                pos: i,
                msg: format!("unexpected character '{c}'"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(Error::Syntax {
                pos: self.here(),
                msg: format!("expected '{op}'"),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Add(bx(lhs), bx(self.term()?));
            } else if self.eat('-') {
                lhs = Sub(bx(lhs), bx(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Mul(bx(lhs), bx(self.unary()?));
            } else if self.eat('/') {
                lhs = Div(bx(lhs), bx(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Neg(bx(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Pow(bx(base), bx(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.here();
        match self.toks.get(self.pos).cloned() {
            Some((_, Tok::Num(v))) => {
                self.pos += 1;
                Ok(Const(v))
            }
            Some((_, Tok::Op('('))) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some((_, Tok::Ident(name))) => {
                self.pos += 1;
                if self.eat('(') {
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    return self.apply(&name, pos, args);
                }
                match name.as_str() {
                    "x1" => Ok(Var(0)),
                    "x2" => Ok(Var(1)),
                    "x3" => Ok(Var(2)),
                    "pi" => Ok(Const(std::f64::consts::PI)),
                    "e" => Ok(Const(std::f64::consts::E)),
                    _ => Err(Error::UnknownIdentifier { name, pos }),
                }
            }
            Some((_, Tok::Op(c))) => Err(Error::Syntax {
                pos,
                msg: format!("unexpected '{c}'"),
            }),
            None => Err(Error::Syntax {
                pos,
                msg: "unexpected end of input".into(),
            }),
        }
    }

    fn apply(&self, name: &str, pos: usize, mut args: Vec<Expr>) -> Result<Expr> {
        let arity = |n: usize, args: &Vec<Expr>| {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::Syntax {
                    pos,
                    msg: format!("'{name}' takes {n} argument(s), got {}", args.len()),
                })
            }
        };
        if let Some(f) = Func::from_name(name) {
            arity(1, &args)?;
            return Ok(Call(f, bx(args.pop().unwrap())));
        }
        match name {
            "max" | "min" => {
                arity(2, &args)?;
                let b = args.pop().unwrap();
                let a = args.pop().unwrap();
                Ok(if name == "max" {
                    Max(bx(a), bx(b))
                } else {
                    Min(bx(a), bx(b))
                })
            }
            _ => Err(Error::UnknownIdentifier {
                name: name.to_string(),
                pos,
            }),
        }
    }
}

/// Parses an expression over `x1, x2, x3`.
pub fn parse_expression(text: &str) -> Result<Expr> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Syntax {
            pos: p.here(),
            msg: "trailing input".into(),
        });
    }
    Ok(e)
}

pub fn parse_scalar_field<T: Real>(text: &str) -> Result<AmbientScalarField<T>> {
    Ok(parse_expression(text)?.to_scalar_field())
}

/// Vector field from three component expressions.
pub fn parse_vector_field<T: Real>(components: [&str; 3]) -> Result<AmbientVectorField<T>> {
    let e = [
        parse_expression(components[0])?,
        parse_expression(components[1])?,
        parse_expression(components[2])?,
    ];
    let jac: [[Expr; 3]; 3] = [e[0].gradient(), e[1].gradient(), e[2].gradient()];
    Ok(
        AmbientVectorField::new(move |x| [e[0].eval(x), e[1].eval(x), e[2].eval(x)]).with_jacobian(move |x| {
            let mut m = [[T::zero(); 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] = jac[i][j].eval(x);
                }
            }
            m
        }),
    )
}

/// Matrix field from a row-major 3×3 array of expressions.
pub fn parse_matrix_field<T: Real>(entries: [[&str; 3]; 3]) -> Result<AmbientMatrixField<T>> {
    let mut e: Vec<Expr> = Vec::with_capacity(9);
    for row in entries.iter() {
        for s in row.iter() {
            e.push(parse_expression(s)?);
        }
    }
    let d: Vec<[Expr; 3]> = e.iter().map(Expr::gradient).collect();
    Ok(AmbientMatrixField::new(move |x| {
        let mut m = [[T::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = e[3 * i + j].eval(x);
            }
        }
        m
    })
    .with_derivative(move |x| {
        let mut out = [[[T::zero(); 3]; 3]; 3];
        for (k, dk) in out.iter_mut().enumerate() {
            for i in 0..3 {
                for j in 0..3 {
                    dk[i][j] = d[3 * i + j][k].eval(x);
                }
            }
        }
        out
    }))
}

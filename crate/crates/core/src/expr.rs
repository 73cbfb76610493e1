//! Expression front end for user-supplied fields.
//!
//! Grammar:
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := atom ('^' atom)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' atom
//! ```
//! Identifiers resolve to the variables `x y z t r`, then to declared
//! parameters. `pi` is a constant. Exponents must not depend on `x y z r`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::jet::Jet;

pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
    Z,
    T,
    R,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
            Var::T => "t",
            Var::R => "r",
        }
    }

    pub fn from_name(s: &str) -> Option<Var> {
        Some(match s {
            "x" => Var::X,
            "y" => Var::Y,
            "z" => Var::Z,
            "t" => Var::T,
            "r" => Var::R,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Atan,
}

pub const FUNCTIONS: [Func; 9] =
    [Func::Sin, Func::Cos, Func::Tan, Func::Exp, Func::Log, Func::Sqrt, Func::Sinh, Func::Cosh, Func::Atan];

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Atan => "atan",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        FUNCTIONS.iter().copied().find(|f| f.name() == s)
    }

    fn apply(self, a: &Jet) -> Result<Jet> {
        Ok(match self {
            Func::Sin => a.sin(),
            Func::Cos => a.cos(),
            Func::Tan => a.tan()?,
            Func::Exp => a.exp(),
            Func::Log => a.log()?,
            Func::Sqrt => a.sqrt()?,
            Func::Sinh => a.sinh(),
            Func::Cosh => a.cosh(),
            Func::Atan => a.atan(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Param(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let mut out = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some(&(i, ch)) = it.peek() {
        if ch.is_whitespace() {
            it.next();
        } else if ch.is_ascii_digit() || ch == '.' {
            let mut end = i;
            let mut seen_exp = false;
            let mut prev = ' ';
            while let Some(&(j, c)) = it.peek() {
                let ok = c.is_ascii_digit()
                    || c == '.'
                    || (!seen_exp && (c == 'e' || c == 'E'))
                    || ((c == '+' || c == '-') && (prev == 'e' || prev == 'E'));
                if !ok {
                    break;
                }
                if c == 'e' || c == 'E' {
                    seen_exp = true;
                }
                prev = c;
                end = j + c.len_utf8();
                it.next();
            }
            let s = &text[i..end];
            let v: f64 =
                s.parse().map_err(|_| Error::Parse { offset: i, message: format!("malformed number `{s}`") })?;
            out.push((Tok::Num(v), i));
        } else if ch.is_alphabetic() || ch == '_' {
            let mut end = i;
            while let Some(&(j, c)) = it.peek() {
                if !(c.is_alphanumeric() || c == '_') {
                    break;
                }
                end = j + c.len_utf8();
                it.next();
            }
            out.push((Tok::Ident(text[i..end].to_string()), i));
        } else if "+-*/^(),".contains(ch) {
            out.push((Tok::Sym(ch), i));
            it.next();
        } else {
            return Err(Error::Parse { offset: i, message: format!("unexpected character `{ch}`") });
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    params: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: &str) -> Result<T> {
        Err(Error::Parse { offset: self.offset(), message: message.into() })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == &Tok::Sym('^') {
            self.bump();
            let at = self.offset();
            let exp = self.atom()?;
            if exp.depends_on_space() {
                return Err(Error::Parse { offset: at, message: "exponent must be constant".into() });
            }
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let (tok, at) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Sym('-') => Ok(Expr::Neg(Box::new(self.atom()?))),
            Tok::Sym('(') => {
                let e = self.expr()?;
                if self.peek() != &Tok::Sym(')') {
                    return self.error("expected `)`");
                }
                self.bump();
                Ok(e)
            }
            Tok::Ident(name) => self.ident(name, at),
            Tok::End => {
                self.pos = self.toks.len() - 1;
                self.error("unexpected end of input")
            }
            Tok::Sym(c) => Err(Error::Parse { offset: at, message: format!("unexpected `{c}`") }),
        }
    }

    fn ident(&mut self, name: String, at: usize) -> Result<Expr> {
        let called = self.peek() == &Tok::Sym('(');
        if let Some(f) = Func::from_name(&name) {
            if !called {
                return self.error(&format!("expected `(` after `{name}`"));
            }
            self.bump();
            if self.peek() == &Tok::Sym(')') {
                return Err(Error::Arity { name, offset: at, expected: 1, got: 0 });
            }
            let arg = self.expr()?;
            let mut got = 1;
            while self.peek() == &Tok::Sym(',') {
                self.bump();
                self.expr()?;
                got += 1;
            }
            if got != 1 {
                return Err(Error::Arity { name, offset: at, expected: 1, got });
            }
            if self.peek() != &Tok::Sym(')') {
                return self.error("expected `)`");
            }
            self.bump();
            return Ok(Expr::Call(f, Box::new(arg)));
        }
        let leaf = if let Some(v) = Var::from_name(&name) {
            Expr::Var(v)
        } else if self.params.contains(&name.as_str()) {
            Expr::Param(name.clone())
        } else if name == "pi" {
            Expr::Num(std::f64::consts::PI)
        } else {
            return Err(Error::UnknownIdentifier { name, offset: at });
        };
        if called {
            return Err(Error::Arity { name, offset: at, expected: 0, got: 1 });
        }
        Ok(leaf)
    }
}

/// Parses with no declared parameters.
pub fn parse_expression(text: &str) -> Result<Expr> {
    parse_with_params(text, &[])
}

pub fn parse_with_params(text: &str, params: &[&str]) -> Result<Expr> {
    if text.trim().is_empty() {
        return Err(Error::Parse { offset: 0, message: "empty expression".into() });
    }
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, params };
    let e = p.expr()?;
    if p.peek() != &Tok::End {
        return p.error("unexpected trailing input");
    }
    Ok(e)
}

/// Coordinate jets and constants available during evaluation.
pub struct Env<'a> {
    pub coords: &'a [(Var, Jet)],
    pub t: f64,
    pub params: &'a Params,
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    fn depends_on_space(&self) -> bool {
        match self {
            Expr::Var(v) => *v != Var::T,
            Expr::Num(_) | Expr::Param(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on_space(),
            Expr::Bin(_, a, b) => a.depends_on_space() || b.depends_on_space(),
        }
    }

    /// Variables referenced, in first-use order.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Var(v) = e {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
        });
        out
    }

    pub fn parameters(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Param(p) = e {
                if !out.contains(p) {
                    out.push(p.clone());
                }
            }
        });
        out
    }

    fn walk(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Neg(a) | Expr::Call(_, a) => a.walk(f),
            Expr::Bin(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            _ => {}
        }
    }

    pub fn eval(&self, env: &Env) -> Result<Jet> {
        let like = &env.coords.first().expect("at least one coordinate").1;
        match self {
            Expr::Num(v) => Ok(like.constant_like(*v)),
            Expr::Var(Var::T) => Ok(like.constant_like(env.t)),
            Expr::Var(v) => env
                .coords
                .iter()
                .find(|(w, _)| w == v)
                .map(|(_, j)| j.clone())
                .ok_or_else(|| Error::UnknownIdentifier { name: v.name().into(), offset: 0 }),
            Expr::Param(p) => {
                env.params.get(p).map(|v| like.constant_like(*v)).ok_or_else(|| Error::MissingParameter(p.clone()))
            }
            Expr::Neg(a) => Ok(-a.eval(env)?),
            Expr::Call(f, a) => f.apply(&a.eval(env)?),
            Expr::Bin(BinOp::Pow, a, b) => {
                let p = b.eval(env)?.value();
                a.eval(env)?.pow(p)
            }
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval(env)?, b.eval(env)?);
                match op {
                    BinOp::Add => Ok(&x + &y),
                    BinOp::Sub => Ok(&x - &y),
                    BinOp::Mul => Ok(&x * &y),
                    BinOp::Div => x.div(&y),
                    BinOp::Pow => unreachable!(),
                }
            }
        }
    }

    /// Plain evaluation at a point.
    pub fn eval_f64(&self, coords: &[(Var, f64)], t: f64, params: &Params) -> Result<f64> {
        let jets: Vec<(Var, Jet)> = if coords.is_empty() {
            vec![(Var::X, Jet::constant(0.0, 1, 0))]
        } else {
            coords.iter().map(|(v, x)| (*v, Jet::constant(*x, 1, 0))).collect()
        };
        Ok(self.eval(&Env { coords: &jets, t, params })?.value())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => write!(f, "{}", v.name()),
            Expr::Param(p) => write!(f, "{p}"),
            Expr::Neg(a) => write!(f, "-{}", Atom(a)),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Bin(BinOp::Pow, a, b) => write!(f, "({}^{})", Atom(a), Atom(b)),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

/// Prints an expression so that it parses back as a single atom.
struct Atom<'a>(&'a Expr);

impl fmt::Display for Atom<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Expr::Num(v) if *v < 0.0 || v.is_sign_negative() => write!(f, "({v})"),
            Expr::Neg(_) => write!(f, "({})", self.0),
            e => write!(f, "{e}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn moffatt_stream() {
        let e = parse_expression("-(x^2) + 3*y*t + y^3").unwrap();
        let p = Params::new();
        let v = e.eval_f64(&[(Var::X, 1.0), (Var::Y, 2.0)], -1.0, &p).unwrap();
        assert_eq!(v, -1.0 - 6.0 + 8.0);
    }

    #[test]
    fn offsets() {
        assert!(matches!(parse_expression("sin)"), Err(Error::Parse { offset: 3, .. })));
        assert!(matches!(parse_expression("x + $"), Err(Error::Parse { offset: 4, .. })));
        assert!(matches!(parse_expression("(x"), Err(Error::Parse { offset: 2, .. })));
        assert!(matches!(parse_expression("x y"), Err(Error::Parse { offset: 2, .. })));
        assert!(matches!(parse_expression("x^y"), Err(Error::Parse { offset: 2, .. })));
    }

    #[test]
    fn identifiers_and_arity() {
        assert!(matches!(parse_expression("2*w"), Err(Error::UnknownIdentifier { offset: 2, .. })));
        assert!(parse_with_params("2*w", &["w"]).is_ok());
        assert!(matches!(parse_expression("sin(x, y)"), Err(Error::Arity { got: 2, .. })));
        assert!(matches!(parse_expression("cos()"), Err(Error::Arity { got: 0, .. })));
        assert!(matches!(parse_expression("x(2)"), Err(Error::Arity { expected: 0, .. })));
    }

    #[test]
    fn unicode_parameter_names() {
        let e = parse_with_params("κ*x", &["κ"]).unwrap();
        let mut p = Params::new();
        p.insert("κ".into(), 3.0);
        assert_eq!(e.eval_f64(&[(Var::X, 2.0)], 0.0, &p).unwrap(), 6.0);
        assert!(matches!(e.eval_f64(&[(Var::X, 2.0)], 0.0, &Params::new()), Err(Error::MissingParameter(_))));
    }

    #[test]
    fn unary_minus_binds_to_atom() {
        let e = parse_expression("-x^2").unwrap();
        let v = e.eval_f64(&[(Var::X, 3.0)], 0.0, &Params::new()).unwrap();
        assert_eq!(v, 9.0);
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000).prop_map(|n| Expr::Num(n as f64 / 8.0)),
            prop_oneof![Just(Var::X), Just(Var::Y), Just(Var::Z), Just(Var::T), Just(Var::R)].prop_map(Expr::Var),
            Just(Expr::Param("a".into())),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (0usize..9, inner.clone()).prop_map(|(k, e)| Expr::Call(FUNCTIONS[k], Box::new(e))),
                (0usize..4, inner.clone(), inner.clone()).prop_map(|(k, a, b)| {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][k];
                    Expr::Bin(op, Box::new(a), Box::new(b))
                }),
                (inner, 0u32..7).prop_map(|(a, n)| Expr::Bin(BinOp::Pow, Box::new(a), Box::new(Expr::Num(n as f64)))),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn print_parse_roundtrip(e in arb_expr()) {
            let s = e.to_string();
            let back = parse_with_params(&s, &["a"]).unwrap();
            prop_assert_eq!(&back, &e);
            let again = parse_with_params(&back.to_string(), &["a"]).unwrap();
            prop_assert_eq!(again, back);
        }
    }
}

//! Expression trees with integer literals, used to read and write elements.
//!
//! JSON forms: a number is an integer literal, a string is parsed as infix
//! text (`"(1-a1)*(1+a2)^2"`), and objects are `{"var": "x"}`,
//! `{"add": [..]}`, `{"mul": [..]}`, `{"neg": e}`, `{"sub": [a, b]}`,
//! `{"div": [a, b]}`, `{"pow": [e, n]}`, `{"int": "digits"}`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::repr::Repr;
use super::tower::{FieldTower, LayerKind};
use super::{FieldElement, FieldError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(BigInt),
    Var(String),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Neg(Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Int(BigInt::from(n))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    /// Parse infix text: integers, names, `+ - * / ^`, parentheses.
    pub fn parse(text: &str) -> Result<Expr, FieldError> {
        let toks = tokenize(text)?;
        let mut p = Parser { toks, pos: 0 };
        let e = p.sum()?;
        if p.pos != p.toks.len() {
            return Err(FieldError::Parse(format!("trailing input in {text:?}")));
        }
        Ok(e)
    }

    pub fn eval(&self, level: &FieldTower) -> Result<FieldElement, FieldError> {
        Ok(match self {
            Expr::Int(n) => level.from_bigint(n),
            Expr::Var(name) => level
                .gen_named(name)
                .ok_or_else(|| FieldError::UnknownName(name.clone()))?,
            Expr::Add(xs) => {
                let mut acc = level.zero();
                for x in xs {
                    acc = &acc + &x.eval(level)?;
                }
                acc
            }
            Expr::Mul(xs) => {
                let mut acc = level.one();
                for x in xs {
                    acc = &acc * &x.eval(level)?;
                }
                acc
            }
            Expr::Neg(x) => -&x.eval(level)?,
            Expr::Sub(a, b) => &a.eval(level)? - &b.eval(level)?,
            Expr::Div(a, b) => a.eval(level)?.checked_div(&b.eval(level)?)?,
            Expr::Pow(x, e) => {
                let v = x.eval(level)?;
                if *e < 0 && v.is_zero() {
                    return Err(FieldError::ZeroElement);
                }
                v.pow(*e)
            }
        })
    }

    /// Expression tree of an element in terms of the layer generators.
    pub fn from_element(e: &FieldElement) -> Expr {
        repr_expr(e.level(), e.repr()).simplify()
    }

    fn simplify(self) -> Expr {
        match self {
            Expr::Add(xs) => {
                let mut out: Vec<Expr> = Vec::new();
                for x in xs.into_iter().map(Expr::simplify) {
                    match x {
                        Expr::Int(n) if n.is_zero() => {}
                        Expr::Add(inner) => out.extend(inner),
                        other => out.push(other),
                    }
                }
                match out.len() {
                    0 => Expr::int(0),
                    1 => out.pop().unwrap(),
                    _ => Expr::Add(out),
                }
            }
            Expr::Mul(xs) => {
                let mut out: Vec<Expr> = Vec::new();
                for x in xs.into_iter().map(Expr::simplify) {
                    match x {
                        Expr::Int(n) if n.is_zero() => return Expr::int(0),
                        Expr::Int(n) if n.is_one() => {}
                        Expr::Mul(inner) => out.extend(inner),
                        other => out.push(other),
                    }
                }
                match out.len() {
                    0 => Expr::int(1),
                    1 => out.pop().unwrap(),
                    _ => Expr::Mul(out),
                }
            }
            Expr::Div(a, b) => {
                let b = b.simplify();
                if matches!(&b, Expr::Int(n) if n.is_one()) {
                    a.simplify()
                } else {
                    Expr::Div(Box::new(a.simplify()), Box::new(b))
                }
            }
            Expr::Pow(x, 1) => x.simplify(),
            Expr::Pow(_, 0) => Expr::int(1),
            Expr::Pow(x, e) => Expr::Pow(Box::new(x.simplify()), e),
            Expr::Neg(x) => Expr::Neg(Box::new(x.simplify())),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.simplify()), Box::new(b.simplify())),
            other => other,
        }
    }

    fn to_value(&self) -> Value {
        match self {
            Expr::Int(n) => match n.to_i64() {
                Some(v) => json!(v),
                None => json!({ "int": n.to_string() }),
            },
            Expr::Var(s) => json!({ "var": s }),
            Expr::Add(xs) => json!({ "add": xs.iter().map(Expr::to_value).collect::<Vec<_>>() }),
            Expr::Mul(xs) => json!({ "mul": xs.iter().map(Expr::to_value).collect::<Vec<_>>() }),
            Expr::Neg(x) => json!({ "neg": x.to_value() }),
            Expr::Sub(a, b) => json!({ "sub": [a.to_value(), b.to_value()] }),
            Expr::Div(a, b) => json!({ "div": [a.to_value(), b.to_value()] }),
            Expr::Pow(x, e) => json!({ "pow": [x.to_value(), e] }),
        }
    }

    fn from_value(v: &Value) -> Result<Expr, String> {
        let list = |v: &Value| -> Result<Vec<Expr>, String> {
            v.as_array()
                .ok_or_else(|| "expected an array".to_string())?
                .iter()
                .map(Expr::from_value)
                .collect()
        };
        let pair = |v: &Value| -> Result<(Expr, Expr), String> {
            let mut xs = list(v)?;
            if xs.len() != 2 {
                return Err("expected two operands".into());
            }
            let b = xs.pop().unwrap();
            Ok((xs.pop().unwrap(), b))
        };
        match v {
            Value::Number(n) => n
                .as_i64()
                .map(Expr::int)
                .ok_or_else(|| format!("non-integer literal {n}")),
            Value::String(s) => Expr::parse(s).map_err(|e| e.to_string()),
            Value::Object(m) if m.len() == 1 => {
                let (k, v) = m.iter().next().unwrap();
                match k.as_str() {
                    "int" => v
                        .as_str()
                        .and_then(|s| s.parse::<BigInt>().ok())
                        .map(Expr::Int)
                        .ok_or_else(|| "bad integer literal".to_string()),
                    "var" => v
                        .as_str()
                        .map(Expr::var)
                        .ok_or_else(|| "variable name must be a string".to_string()),
                    "add" => Ok(Expr::Add(list(v)?)),
                    "mul" => Ok(Expr::Mul(list(v)?)),
                    "neg" => Ok(Expr::Neg(Box::new(Expr::from_value(v)?))),
                    "sub" => pair(v).map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                    "div" => pair(v).map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
                    "pow" => {
                        let xs = v.as_array().ok_or("pow expects [base, exponent]")?;
                        if xs.len() != 2 {
                            return Err("pow expects [base, exponent]".into());
                        }
                        let e = xs[1].as_i64().ok_or("exponent must be an integer")?;
                        Ok(Expr::Pow(Box::new(Expr::from_value(&xs[0])?), e))
                    }
                    other => Err(format!("unknown operator {other:?}")),
                }
            }
            other => Err(format!("cannot read expression from {other}")),
        }
    }
}

fn repr_expr(level: &FieldTower, r: &Repr) -> Expr {
    match r {
        Repr::Rat(q) => {
            if q.denom().is_one() {
                Expr::Int(q.numer().clone())
            } else {
                Expr::Div(
                    Box::new(Expr::Int(q.numer().clone())),
                    Box::new(Expr::Int(q.denom().clone())),
                )
            }
        }
        Repr::Fp(v) => Expr::Int(BigInt::from(*v)),
        Repr::Frac(f) => {
            let below = level.below().expect("layer has a level below");
            let name = level.kind().expect("layer").name();
            if f.is_zero() {
                return Expr::int(0);
            }
            let poly = |p: &[Repr]| -> Expr {
                Expr::Add(
                    p.iter()
                        .enumerate()
                        .filter(|(_, c)| !super::repr::is_zero(c))
                        .map(|(i, c)| {
                            Expr::Mul(vec![
                                repr_expr(below, c),
                                Expr::Pow(Box::new(Expr::var(name)), i as i64),
                            ])
                        })
                        .collect(),
                )
            };
            let body = Expr::Div(Box::new(poly(&f.num)), Box::new(poly(&f.den)));
            if f.shift == 0 {
                body
            } else {
                Expr::Mul(vec![Expr::Pow(Box::new(Expr::var(name)), f.shift), body])
            }
        }
        Repr::Quad(c, d) => {
            let below = level.below().expect("layer has a level below");
            let name = match level.kind() {
                Some(LayerKind::Quadratic { name, .. }) => name.clone(),
                _ => unreachable!("quadratic representation on a non-quadratic level"),
            };
            Expr::Add(vec![
                repr_expr(below, c),
                Expr::Mul(vec![repr_expr(below, d), Expr::var(&name)]),
            ])
        }
    }
}

impl Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_value().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        Expr::from_value(&v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(n) if n.is_negative() => write!(f, "({n})"),
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Var(s) => write!(f, "{s}"),
            Expr::Add(xs) => {
                write!(f, "(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            Expr::Mul(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
            Expr::Neg(x) => write!(f, "-({x})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Div(a, b) => write!(f, "({a})/({b})"),
            Expr::Pow(x, e) => write!(f, "{x}^({e})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Name(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>, FieldError> {
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let st = i;
            while i < cs.len() && cs[i].is_ascii_digit() {
                i += 1;
            }
            let txt: String = cs[st..i].iter().collect();
            out.push(Tok::Int(txt.parse().expect("digits")));
        } else if c.is_alphabetic() || c == '_' {
            let st = i;
            while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_') {
                i += 1;
            }
            out.push(Tok::Name(cs[st..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(FieldError::Parse(format!("unexpected character {c:?} in {s:?}")));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr, FieldError> {
        let mut terms = vec![self.product()?];
        loop {
            if self.eat('+') {
                terms.push(self.product()?);
            } else if self.eat('-') {
                terms.push(Expr::Neg(Box::new(self.product()?)));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::Add(terms)
        })
    }

    fn product(&mut self) -> Result<Expr, FieldError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = Expr::Mul(vec![acc, self.unary()?]);
            } else if self.eat('/') {
                acc = Expr::Div(Box::new(acc), Box::new(self.unary()?));
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, FieldError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, FieldError> {
        let b = self.atom()?;
        if self.eat('^') {
            let neg = self.eat('-');
            match self.toks.get(self.pos).cloned() {
                Some(Tok::Int(n)) => {
                    self.pos += 1;
                    let e = n
                        .to_i64()
                        .ok_or_else(|| FieldError::Parse("exponent too large".into()))?;
                    return Ok(Expr::Pow(Box::new(b), if neg { -e } else { e }));
                }
                _ => return Err(FieldError::Parse("exponent must be an integer literal".into())),
            }
        }
        Ok(b)
    }

    fn atom(&mut self) -> Result<Expr, FieldError> {
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(Expr::Int(n))
            }
            Some(Tok::Name(s)) => {
                self.pos += 1;
                Ok(Expr::Var(s))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(')') {
                    return Err(FieldError::Parse("missing ')'".into()));
                }
                Ok(e)
            }
            other => Err(FieldError::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

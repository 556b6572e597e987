//! Text formats: polynomial term lines, numerator files, a small expression
//! reader, and the structured expansion report.
//!
//! A term line is `coef e1 … ed`. The coefficient token has no spaces: it is
//! a sum of `p/q` or `p/q*rad(r,a/b)` pieces joined by `+`, optionally
//! followed by `*pi^(h/2)`.

use crate::error::{Error, Result};
use crate::exactalg::poly::vars;
use crate::exactalg::rational::{fmt_rational, parse_rational};
use crate::exactalg::{Field, FieldElem, LaurentPoly, Radical, RatFunc, RootOfUnity};
use crate::expansion::AsymptoticExpansion;
use crate::saddle::Twist;
use num_rational::BigRational;
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::sync::Arc;

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Coefficient token without spaces.
pub fn format_coef(c: &FieldElem) -> String {
    c.to_string().replace(" + ", "+")
}

/// Inverse of [`format_coef`]; also accepts plain rationals.
pub fn parse_coef(tok: &str) -> Option<FieldElem> {
    let mut pieces = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in tok.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            '+' if depth == 0 && i > 0 => {
                pieces.push(&tok[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    pieces.push(&tok[start..]);
    FieldElem::parse(&pieces.join(" + "))
}

/// Splits a trailing `*pi^(h/2)` off a coefficient token.
fn split_pi(tok: &str) -> Result<(&str, i32)> {
    match tok.rfind("*pi^(") {
        Some(i) => {
            let inner = tok[i + 5..]
                .strip_suffix("/2)")
                .ok_or_else(|| perr(0, format!("bad π power in `{}`", tok)))?;
            let h = inner
                .parse()
                .map_err(|_| perr(0, format!("bad π power in `{}`", tok)))?;
            Ok((&tok[..i], h))
        }
        None => Ok((tok, 0)),
    }
}

/// Term lines in graded-lex order (highest first), each with the π suffix.
pub fn write_terms(p: &LaurentPoly<FieldElem>, pi_half: i32) -> String {
    let suffix = if pi_half == 0 {
        String::new()
    } else {
        format!("*pi^({}/2)", pi_half)
    };
    let mut out = String::new();
    for (e, c) in p.terms_grlex().into_iter().rev() {
        out.push_str(&format_coef(c));
        out.push_str(&suffix);
        for k in e.iter() {
            out.push(' ');
            out.push_str(&k.to_string());
        }
        out.push('\n');
    }
    out
}

/// Rational polynomial as term lines.
pub fn write_rational_terms(p: &LaurentPoly<BigRational>) -> String {
    let mut out = String::new();
    for (e, c) in p.terms_grlex().into_iter().rev() {
        out.push_str(&fmt_rational(c));
        for k in e.iter() {
            out.push(' ');
            out.push_str(&k.to_string());
        }
        out.push('\n');
    }
    out
}

/// Parses term lines over `vars`. All lines must carry the same π power.
pub fn parse_terms(text: &str, names: Arc<Vec<String>>) -> Result<(LaurentPoly<FieldElem>, i32)> {
    let d = names.len();
    let mut poly = LaurentPoly::zero_in(names);
    let mut pi: Option<i32> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != d + 1 {
            return Err(perr(i + 1, format!("expected a coefficient and {} exponents", d)));
        }
        let (ctok, h) = split_pi(toks[0]).map_err(|_| perr(i + 1, "bad π power"))?;
        if *pi.get_or_insert(h) != h {
            return Err(perr(i + 1, "mixed π powers"));
        }
        let c = parse_coef(ctok).ok_or_else(|| perr(i + 1, format!("bad coefficient `{}`", ctok)))?;
        let e = toks[1..]
            .iter()
            .map(|t| {
                t.parse::<i32>()
                    .map_err(|_| perr(i + 1, format!("bad exponent `{}`", t)))
            })
            .collect::<Result<_>>()?;
        poly.add_term(e, c);
    }
    Ok((poly, pi.unwrap_or(0)))
}

/// Parses term lines with rational coefficients and no π power.
pub fn parse_rational_terms(text: &str, names: Arc<Vec<String>>) -> Result<LaurentPoly<BigRational>> {
    let (p, h) = parse_terms(text, names)?;
    if h != 0 {
        return Err(perr(0, "unexpected π power"));
    }
    let terms = p
        .terms()
        .map(|(e, c)| {
            c.to_rational()
                .map(|r| (e.clone(), r))
                .ok_or_else(|| perr(0, format!("coefficient {} is not rational", c)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LaurentPoly::from_terms(p.vars().clone(), terms))
}

/// Numerator file: a `num:` section and an optional `den:` section of
/// rational term lines.
pub fn parse_numerator(text: &str, names: Arc<Vec<String>>) -> Result<RatFunc<BigRational>> {
    let mut num = String::new();
    let mut den = String::new();
    let mut section = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        match line {
            "num:" => section = 1,
            "den:" => section = 2,
            "" => {}
            _ => match section {
                1 => {
                    num.push_str(line);
                    num.push('\n');
                }
                2 => {
                    den.push_str(line);
                    den.push('\n');
                }
                _ => return Err(perr(i + 1, "term line outside a `num:`/`den:` section")),
            },
        }
    }
    let n = parse_rational_terms(&num, names.clone())?;
    if n.is_zero() {
        return Err(perr(0, "empty numerator"));
    }
    let d = if den.trim().is_empty() {
        LaurentPoly::constant_in(names.clone(), BigRational::from_integer(1.into()))
    } else {
        parse_rational_terms(&den, names)?
    };
    RatFunc::new(n, d)
}

pub fn write_numerator(f: &RatFunc<BigRational>) -> String {
    format!(
        "num:\n{}den:\n{}",
        write_rational_terms(f.num()),
        write_rational_terms(f.den())
    )
}

/// Reads expressions such as `k*l*(l-1)*(l+1)`, `x^-1*y + 3/2` or
/// `2*sqrt(3)*k^2` over the given variables.
pub fn parse_expr(s: &str, names: Arc<Vec<String>>) -> Result<LaurentPoly<FieldElem>> {
    let mut p = ExprParser {
        chars: s.chars().collect(),
        pos: 0,
        names,
    };
    let v = p.sum()?;
    if p.peek().is_some() {
        return Err(p.fail("trailing input"));
    }
    Ok(v)
}

/// Convenience form of [`parse_expr`] with variable names given inline.
pub fn expr(s: &str, names: &[&str]) -> Result<LaurentPoly<FieldElem>> {
    parse_expr(s, vars(names))
}

struct ExprParser {
    chars: Vec<char>,
    pos: usize,
    names: Arc<Vec<String>>,
}

impl ExprParser {
    fn fail(&self, msg: &str) -> Error {
        perr(1, format!("{} at column {}", msg, self.pos + 1))
    }

    fn peek(&mut self) -> Option<char> {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn constant(&self, c: FieldElem) -> LaurentPoly<FieldElem> {
        LaurentPoly::constant_in(self.names.clone(), c)
    }

    fn sum(&mut self) -> Result<LaurentPoly<FieldElem>> {
        let neg = self.eat('-');
        if !neg {
            self.eat('+');
        }
        let mut acc = self.product()?;
        if neg {
            acc = acc.neg();
        }
        loop {
            if self.eat('+') {
                acc = acc.add(&self.product()?);
            } else if self.eat('-') {
                acc = acc.sub(&self.product()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<LaurentPoly<FieldElem>> {
        let mut acc = self.power()?;
        loop {
            if self.eat('*') {
                acc = acc.mul(&self.power()?);
            } else if self.eat('/') {
                let d = self.power()?;
                let c = d
                    .as_constant()
                    .and_then(|c| c.inv())
                    .ok_or_else(|| self.fail("division by a non-constant"))?;
                acc = acc.scale(&c);
            } else if matches!(self.peek(), Some('(')) || self.peek().is_some_and(|c| c.is_alphabetic()) {
                acc = acc.mul(&self.power()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn power(&mut self) -> Result<LaurentPoly<FieldElem>> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let neg = self.eat('-');
        let e = self.integer()?;
        if neg {
            let inv = base
                .monomial_inverse()
                .ok_or_else(|| self.fail("negative power of a non-monomial"))?;
            Ok(inv.pow(e))
        } else {
            Ok(base.pow(e))
        }
    }

    fn integer(&mut self) -> Result<u32> {
        self.peek();
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse().map_err(|_| self.fail("expected an integer"))
    }

    fn atom(&mut self) -> Result<LaurentPoly<FieldElem>> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let v = self.sum()?;
                if !self.eat(')') {
                    return Err(self.fail("expected `)`"));
                }
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                Ok(self.constant(FieldElem::from_int(n as i64)))
            }
            Some(c) if c.is_alphabetic() => {
                let start = self.pos;
                while self
                    .chars
                    .get(self.pos)
                    .is_some_and(|c| c.is_alphanumeric() || *c == '_')
                {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                if name == "sqrt" {
                    let arg = self.atom()?;
                    let r = arg
                        .as_constant()
                        .and_then(|c| c.sqrt())
                        .ok_or_else(|| self.fail("sqrt needs a constant"))?;
                    return Ok(self.constant(r));
                }
                match self.names.iter().position(|v| *v == name) {
                    Some(i) => Ok(LaurentPoly::var_in(self.names.clone(), i)),
                    None => Err(self.fail(&format!("unknown variable `{}`", name))),
                }
            }
            _ => Err(self.fail("expected a term")),
        }
    }
}

trait AsConstant {
    fn as_constant(&self) -> Option<FieldElem>;
}

impl AsConstant for LaurentPoly<FieldElem> {
    fn as_constant(&self) -> Option<FieldElem> {
        if self.is_zero() {
            Some(FieldElem::zero())
        } else if self.is_constant() {
            Some(self.constant_term())
        } else {
            None
        }
    }
}

/// Basis file: lines `n m expression` in the variables `k, l`.
pub fn parse_basis(text: &str) -> Result<BTreeMap<(usize, usize), LaurentPoly<BigRational>>> {
    let names = crate::polyharmonic::basis_vars();
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.splitn(3, char::is_whitespace);
        let mut index = || -> Result<usize> {
            it.next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| perr(i + 1, "expected `n m expression`"))
        };
        let (n, m) = (index()?, index()?);
        let rest = it.next().ok_or_else(|| perr(i + 1, "missing expression"))?;
        let poly = parse_expr(rest, names.clone()).map_err(|e| perr(i + 1, e.to_string()))?;
        out.insert((n, m), crate::polyharmonic::to_rational_poly(&poly)?);
    }
    Ok(out)
}

fn root_text(r: &RootOfUnity) -> String {
    r.to_string()
}

fn twist_json(t: &Twist) -> Value {
    json!({
        "alphas": t.alphas.iter().map(root_text).collect::<Vec<_>>(),
        "zeta": root_text(&t.zeta),
    })
}

/// `±1` when the root is real, otherwise `e(a/b)` for `exp(2πi a/b)`.
pub fn root_display(r: &RootOfUnity) -> String {
    match r.as_sign() {
        Some(s) => s.to_string(),
        None => format!("e({}/{})", r.num(), r.den()),
    }
}

/// Twist in the `(α_1,…,α_d;ζ)` notation.
pub fn twist_display(t: &Twist) -> String {
    let a: Vec<String> = t.alphas.iter().map(root_display).collect();
    format!("({};{})", a.join(","), root_display(&t.zeta))
}

/// Deterministic structured form of an expansion; every leaf is exact.
pub fn expansion_to_json(e: &AsymptoticExpansion) -> Value {
    let mut m = Map::new();
    m.insert("dim".into(), json!(e.dim));
    m.insert("gamma".into(), json!(format_coef(&e.gamma)));
    m.insert("c".into(), json!(fmt_rational(&e.c)));
    m.insert("pi_half".into(), json!(e.pi_half));
    m.insert(
        "exp_prefactor".into(),
        json!(e.exp_prefactor.iter().map(format_coef).collect::<Vec<_>>()),
    );
    m.insert("twists".into(), Value::Array(e.twists.iter().map(twist_json).collect()));
    m.insert(
        "characters".into(),
        json!(e.characters.iter().map(root_text).collect::<Vec<_>>()),
    );
    m.insert("start".into(), e.start.as_ref().map_or(Value::Null, |s| json!(s)));
    let terms: Vec<Value> = e
        .terms
        .iter()
        .map(|p| Value::Array(write_terms(p, 0).lines().map(|l| json!(l)).collect()))
        .collect();
    m.insert("terms".into(), Value::Array(terms));
    Value::Object(m)
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| perr(0, format!("missing key `{}`", key)))
}

fn str_field<'a>(v: &'a Value, key: &str) -> Result<&'a str> {
    field(v, key)?
        .as_str()
        .ok_or_else(|| perr(0, format!("`{}` must be a string", key)))
}

fn str_list(v: &Value, key: &str) -> Result<Vec<String>> {
    field(v, key)?
        .as_array()
        .ok_or_else(|| perr(0, format!("`{}` must be a list", key)))?
        .iter()
        .map(|x| {
            x.as_str()
                .map(String::from)
                .ok_or_else(|| perr(0, format!("`{}` entries must be strings", key)))
        })
        .collect()
}

fn root(s: &str) -> Result<RootOfUnity> {
    RootOfUnity::parse(s).ok_or_else(|| perr(0, format!("bad root of unity `{}`", s)))
}

fn coef(s: &str) -> Result<FieldElem> {
    parse_coef(s).ok_or_else(|| perr(0, format!("bad field element `{}`", s)))
}

/// Inverse of [`expansion_to_json`].
pub fn expansion_from_json(v: &Value) -> Result<AsymptoticExpansion> {
    let dim = field(v, "dim")?
        .as_u64()
        .ok_or_else(|| perr(0, "`dim` must be an integer"))? as usize;
    let names = crate::expansion::endpoint_vars(dim);
    let twists = field(v, "twists")?
        .as_array()
        .ok_or_else(|| perr(0, "`twists` must be a list"))?
        .iter()
        .map(|t| {
            Ok(Twist {
                alphas: str_list(t, "alphas")?.iter().map(|s| root(s)).collect::<Result<_>>()?,
                zeta: root(str_field(t, "zeta")?)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let terms = field(v, "terms")?
        .as_array()
        .ok_or_else(|| perr(0, "`terms` must be a list"))?
        .iter()
        .map(|lines| {
            let text: Vec<&str> = lines
                .as_array()
                .ok_or_else(|| perr(0, "term blocks must be lists"))?
                .iter()
                .map(|l| l.as_str().ok_or_else(|| perr(0, "term lines must be strings")))
                .collect::<Result<_>>()?;
            Ok(parse_terms(&text.join("\n"), names.clone())?.0)
        })
        .collect::<Result<Vec<_>>>()?;
    let start = match field(v, "start")? {
        Value::Null => None,
        s => Some(
            s.as_array()
                .ok_or_else(|| perr(0, "`start` must be a list"))?
                .iter()
                .map(|x| x.as_i64().ok_or_else(|| perr(0, "`start` entries must be integers")))
                .collect::<Result<_>>()?,
        ),
    };
    Ok(AsymptoticExpansion {
        dim,
        gamma: coef(str_field(v, "gamma")?)?,
        c: parse_rational(str_field(v, "c")?).ok_or_else(|| perr(0, "bad `c`"))?,
        pi_half: field(v, "pi_half")?
            .as_i64()
            .ok_or_else(|| perr(0, "`pi_half` must be an integer"))? as i32,
        exp_prefactor: str_list(v, "exp_prefactor")?
            .iter()
            .map(|s| coef(s))
            .collect::<Result<_>>()?,
        terms,
        twists,
        characters: str_list(v, "characters")?
            .iter()
            .map(|s| root(s))
            .collect::<Result<_>>()?,
        start,
    })
}

/// Human-readable rendering with the same content as the structured form.
pub fn expansion_to_text(e: &AsymptoticExpansion) -> String {
    let mut out = String::new();
    out.push_str(&format!("gamma {}\n", e.gamma));
    out.push_str(&format!("c {}\n", fmt_rational(&e.c)));
    out.push_str(&format!("pi_power {}/2\n", e.pi_half));
    let pre: Vec<String> = e.exp_prefactor.iter().map(|b| b.to_string()).collect();
    out.push_str(&format!("prefactor_bases {}\n", pre.join(" ")));
    for (t, chi) in e.twists.iter().zip(&e.characters) {
        out.push_str(&format!("twist {} character {}\n", twist_display(t), root_display(chi)));
    }
    if let Some(s) = &e.start {
        let s: Vec<String> = s.iter().map(|x| x.to_string()).collect();
        out.push_str(&format!("start {}\n", s.join(",")));
    }
    for (p, poly) in e.terms.iter().enumerate() {
        out.push_str(&format!("v{}:\n", p + 1));
        out.push_str(&write_terms(poly, e.pi_half));
    }
    out
}

/// `p/q` rendering of a rational for reports.
pub fn rational_text(x: &BigRational) -> String {
    fmt_rational(x)
}

/// Field element from an exact radical, for report code outside this crate.
pub fn radical_text(r: &Radical) -> String {
    format_coef(&FieldElem::Exact(r.clone()))
}

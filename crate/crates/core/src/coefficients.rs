//! Reasonably smooth coefficient functions.
//!
//! Expressions are kept in a canonical normal form
//! `Σ r · (2π)^k · Π Bump(ℓ_a)^{k_a} · Π ℓ̂_b^{e_b}` with rational `r`, affine
//! bump arguments `ℓ_a` (sign-normalized, since `Bump` is even) and affine
//! factors `ℓ̂_b` scaled so their first nonzero linear coefficient is 1.
//! The class is closed under `∂_j`, and because derivatives are computed on
//! this normal form, mixed partials agree exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyhedra::{
    enumerate_vertices, hrep_is_bounded, polyhedron_from_specs, polyhedron_to_specs, CellSpec,
    HalfSpace, PseudoCell, PseudoPolyhedron,
};
use crate::tseries::{parse_rational, Q};

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// `Bump(u) = exp(1 − 1/(1 − u²))` for `|u| < 1`, else 0.
pub fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

/// Exact affine form `Σ lin_i x_i + c`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Affine {
    pub lin: Vec<Q>,
    pub c: Q,
}

impl Affine {
    pub fn var(m: usize, j: usize) -> Self {
        let mut lin = vec![Q::zero(); m];
        lin[j] = Q::one();
        Affine { lin, c: Q::zero() }
    }

    pub fn is_constant(&self) -> bool {
        self.lin.iter().all(|v| v.is_zero())
    }

    fn lead(&self) -> Option<Q> {
        self.lin.iter().find(|v| !v.is_zero()).copied()
    }

    fn scaled(&self, s: Q) -> Affine {
        Affine { lin: self.lin.iter().map(|v| v * s).collect(), c: self.c * s }
    }

    /// `(s, â)` with `self = s · â` and `â` monic.
    fn monic(&self) -> Option<(Q, Affine)> {
        let lead = self.lead()?;
        Some((lead, self.scaled(lead.recip())))
    }

    /// Canonical sign for a bump argument.
    fn bump_canonical(&self) -> Affine {
        let neg = match self.lead() {
            Some(l) => l < Q::zero(),
            None => self.c < Q::zero(),
        };
        if neg {
            self.scaled(-Q::one())
        } else {
            self.clone()
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut s = q_f64(self.c);
        for (a, xi) in self.lin.iter().zip(x) {
            if !a.is_zero() {
                s += q_f64(*a) * xi;
            }
        }
        s
    }

    pub fn depends_on(&self, j: usize) -> bool {
        !self.lin[j].is_zero()
    }
}

fn q_f64(q: Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn q_big(q: Q) -> BigRational {
    BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()))
}

fn big_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonoKey {
    pub two_pi: i32,
    pub bumps: BTreeMap<Affine, u32>,
    pub factors: BTreeMap<Affine, i32>,
}

impl MonoKey {
    fn one() -> Self {
        MonoKey { two_pi: 0, bumps: BTreeMap::new(), factors: BTreeMap::new() }
    }

    fn mul(&self, other: &MonoKey) -> MonoKey {
        let mut out = self.clone();
        out.two_pi += other.two_pi;
        for (a, k) in &other.bumps {
            *out.bumps.entry(a.clone()).or_insert(0) += k;
        }
        for (a, e) in &other.factors {
            let v = out.factors.entry(a.clone()).or_insert(0);
            *v += e;
            if *v == 0 {
                out.factors.remove(a);
            }
        }
        out
    }

    fn affines(&self) -> impl Iterator<Item = &Affine> {
        self.bumps.keys().chain(self.factors.keys())
    }
}

/// Sum of normal-form terms over `m` variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SmoothExpr {
    m: usize,
    terms: BTreeMap<MonoKey, BigRational>,
}

impl SmoothExpr {
    pub fn zero(m: usize) -> Self {
        SmoothExpr { m, terms: BTreeMap::new() }
    }

    pub fn constant(m: usize, r: BigRational) -> Self {
        let mut e = SmoothExpr::zero(m);
        e.push(MonoKey::one(), r);
        e
    }

    pub fn one(m: usize) -> Self {
        SmoothExpr::constant(m, BigRational::one())
    }

    pub fn two_pi_power(m: usize, k: i32) -> Self {
        let mut key = MonoKey::one();
        key.two_pi = k;
        let mut e = SmoothExpr::zero(m);
        e.push(key, BigRational::one());
        e
    }

    pub fn var(m: usize, j: usize) -> Self {
        SmoothExpr::affine(Affine::var(m, j))
    }

    pub fn affine(a: Affine) -> Self {
        let m = a.lin.len();
        match a.monic() {
            None => SmoothExpr::constant(m, q_big(a.c)),
            Some((s, hat)) => {
                let mut key = MonoKey::one();
                key.factors.insert(hat, 1);
                let mut e = SmoothExpr::zero(m);
                e.push(key, q_big(s));
                e
            }
        }
    }

    pub fn bump(a: Affine) -> Self {
        let m = a.lin.len();
        let mut key = MonoKey::one();
        key.bumps.insert(a.bump_canonical(), 1);
        let mut e = SmoothExpr::zero(m);
        e.push(key, BigRational::one());
        e
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MonoKey, &BigRational)> {
        self.terms.iter()
    }

    fn push(&mut self, key: MonoKey, r: BigRational) {
        if r.is_zero() {
            return;
        }
        let entry = self.terms.entry(key.clone()).or_insert_with(BigRational::zero);
        *entry += r;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &SmoothExpr) -> SmoothExpr {
        let mut out = self.clone();
        for (k, r) in &other.terms {
            out.push(k.clone(), r.clone());
        }
        out
    }

    pub fn sub(&self, other: &SmoothExpr) -> SmoothExpr {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> SmoothExpr {
        self.scale(&-BigRational::one())
    }

    pub fn scale(&self, r: &BigRational) -> SmoothExpr {
        let mut out = SmoothExpr::zero(self.m);
        for (k, v) in &self.terms {
            out.push(k.clone(), v * r);
        }
        out
    }

    pub fn scale_i(&self, r: i64) -> SmoothExpr {
        self.scale(&BigRational::from_integer(BigInt::from(r)))
    }

    pub fn mul_two_pi(&self, k: i32) -> SmoothExpr {
        let mut out = SmoothExpr::zero(self.m);
        for (key, v) in &self.terms {
            let mut key = key.clone();
            key.two_pi += k;
            out.push(key, v.clone());
        }
        out
    }

    pub fn mul(&self, other: &SmoothExpr) -> SmoothExpr {
        let mut out = SmoothExpr::zero(self.m);
        for (ka, ra) in &self.terms {
            for (kb, rb) in &other.terms {
                out.push(ka.mul(kb), ra * rb);
            }
        }
        out
    }

    /// Single term without bumps, invertible as a monomial.
    fn as_invertible_monomial(&self) -> Option<(&MonoKey, &BigRational)> {
        if self.terms.len() != 1 {
            return None;
        }
        let (k, r) = self.terms.iter().next()?;
        k.bumps.is_empty().then_some((k, r))
    }

    pub fn pow(&self, e: i64) -> Result<SmoothExpr> {
        if e >= 0 {
            let mut out = SmoothExpr::one(self.m);
            for _ in 0..e {
                out = out.mul(self);
            }
            return Ok(out);
        }
        let (k, r) = self
            .as_invertible_monomial()
            .ok_or_else(|| Error::Parse("negative power of a non-monomial expression".into()))?;
        let mut key = MonoKey::one();
        key.two_pi = k.two_pi * e as i32;
        for (a, p) in &k.factors {
            key.factors.insert(a.clone(), p * e as i32);
        }
        let mut out = SmoothExpr::zero(self.m);
        out.push(key, r.pow(e as i32));
        Ok(out)
    }

    pub fn div(&self, other: &SmoothExpr) -> Result<SmoothExpr> {
        if other.is_zero() {
            return Err(Error::Parse("division by zero".into()));
        }
        Ok(self.mul(&other.pow(-1)?))
    }

    /// `∂/∂x_j`.
    pub fn partial(&self, j: usize) -> SmoothExpr {
        let mut out = SmoothExpr::zero(self.m);
        for (key, r) in &self.terms {
            for (a, &k) in &key.bumps {
                let dj = a.lin[j];
                if dj.is_zero() {
                    continue;
                }
                // ∂Bump(ℓ) = Bump(ℓ)·(−2ℓ)·(1−ℓ)^{−2}·(1+ℓ)^{−2}·∂ℓ
                let one = Affine { lin: vec![Q::zero(); self.m], c: Q::one() };
                let minus = Affine {
                    lin: a.lin.iter().map(|v| -v).collect(),
                    c: Q::one() - a.c,
                };
                let plus = Affine { lin: a.lin.clone(), c: one.c + a.c };
                let mut coeff = r * BigRational::from_integer(BigInt::from(-2 * k as i64)) * q_big(dj);
                let mut extra = MonoKey::one();
                for (aff, e) in [(a, 1), (&minus, -2), (&plus, -2)] {
                    let (s, hat) = aff.monic().expect("non-constant affine");
                    coeff *= q_big(s).pow(e);
                    extra.factors.insert(hat, e);
                }
                out.push(key.mul(&extra), coeff);
            }
            for (a, &e) in &key.factors {
                let dj = a.lin[j];
                if dj.is_zero() {
                    continue;
                }
                let mut nk = key.clone();
                if e == 1 {
                    nk.factors.remove(a);
                } else {
                    nk.factors.insert(a.clone(), e - 1);
                }
                out.push(nk, r * BigRational::from_integer(BigInt::from(e)) * q_big(dj));
            }
        }
        out
    }

    pub fn depends_on(&self, j: usize) -> bool {
        self.terms.keys().any(|k| k.affines().any(|a| a.depends_on(j)))
    }

    pub fn dependent_vars(&self) -> BTreeSet<usize> {
        (0..self.m).filter(|&j| self.depends_on(j)).collect()
    }

    /// Evaluate at finite coordinates (entries for independent variables are ignored).
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (key, r) in &self.terms {
            s += eval_term(key, r, x);
        }
        s
    }

    pub fn compile(&self) -> CompiledExpr {
        let mut affines: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
        let mut index: BTreeMap<Affine, usize> = BTreeMap::new();
        let mut intern = |a: &Affine| -> usize {
            *index.entry(a.clone()).or_insert_with(|| {
                let lin = a
                    .lin
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| !v.is_zero())
                    .map(|(i, v)| (i, q_f64(*v)))
                    .collect();
                affines.push((lin, q_f64(a.c)));
                affines.len() - 1
            })
        };
        let mut terms = Vec::with_capacity(self.terms.len());
        for (key, r) in &self.terms {
            let coeff = big_f64(r) * TWO_PI.powi(key.two_pi);
            let bumps = key.bumps.iter().map(|(a, k)| (intern(a), *k as i32)).collect();
            let factors = key.factors.iter().map(|(a, e)| (intern(a), *e)).collect();
            terms.push(CompiledTerm { coeff, bumps, factors });
        }
        CompiledExpr { affines, terms }
    }
}

fn eval_term(key: &MonoKey, r: &BigRational, x: &[f64]) -> f64 {
    let mut v = big_f64(r) * TWO_PI.powi(key.two_pi);
    for (a, &k) in &key.bumps {
        let b = bump(a.eval(x));
        if b == 0.0 {
            return 0.0;
        }
        v *= b.powi(k as i32);
    }
    for (a, &e) in &key.factors {
        v *= a.eval(x).powi(e);
    }
    v
}

#[derive(Clone, Debug)]
struct CompiledTerm {
    coeff: f64,
    bumps: Vec<(usize, i32)>,
    factors: Vec<(usize, i32)>,
}

/// Flattened `f64` evaluator.
#[derive(Clone, Debug)]
pub struct CompiledExpr {
    affines: Vec<(Vec<(usize, f64)>, f64)>,
    terms: Vec<CompiledTerm>,
}

impl CompiledExpr {
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64], scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        for (lin, c) in &self.affines {
            scratch.push(lin.iter().fold(*c, |s, (i, a)| s + a * x[*i]));
        }
        let mut total = 0.0;
        'terms: for t in &self.terms {
            let mut v = t.coeff;
            for &(i, k) in &t.bumps {
                let b = bump(scratch[i]);
                if b == 0.0 {
                    continue 'terms;
                }
                v *= b.powi(k);
            }
            for &(i, e) in &t.factors {
                v *= scratch[i].powi(e);
            }
            total += v;
        }
        total
    }
}

// ---- S-expressions ------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum Sx {
    Atom(String),
    List(Vec<Sx>),
    Bracket(Vec<Sx>),
}

fn tokenize(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' | ')' | '[' | ']' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn parse_sx(tokens: &[String], pos: &mut usize) -> Result<Sx> {
    let tok = tokens.get(*pos).ok_or_else(|| Error::Parse("unexpected end of input".into()))?;
    *pos += 1;
    match tok.as_str() {
        "(" | "[" => {
            let close = if tok == "(" { ")" } else { "]" };
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => return Err(Error::Parse(format!("missing '{close}'"))),
                    Some(t) if t == close => {
                        *pos += 1;
                        break;
                    }
                    Some(t) if t == ")" || t == "]" => {
                        return Err(Error::Parse(format!("mismatched '{t}'")))
                    }
                    Some(_) => items.push(parse_sx(tokens, pos)?),
                }
            }
            Ok(if close == ")" { Sx::List(items) } else { Sx::Bracket(items) })
        }
        ")" | "]" => Err(Error::Parse(format!("unexpected '{tok}'"))),
        _ => Ok(Sx::Atom(tok.clone())),
    }
}

fn parse_var(s: &str, m: usize) -> Option<Result<usize>> {
    let rest = s.strip_prefix('x')?;
    let i: usize = rest.parse().ok()?;
    Some(if i == 0 || i > m {
        Err(Error::Parse(format!("variable {s} out of range x1..x{m}")))
    } else {
        Ok(i - 1)
    })
}

fn atom_rational(s: &str) -> Result<Q> {
    parse_rational(s)
}

fn sx_to_expr(sx: &Sx, m: usize) -> Result<SmoothExpr> {
    match sx {
        Sx::Atom(a) => {
            if a == "twopi" {
                return Ok(SmoothExpr::two_pi_power(m, 1));
            }
            if let Some(j) = parse_var(a, m) {
                return Ok(SmoothExpr::var(m, j?));
            }
            Ok(SmoothExpr::constant(m, q_big(atom_rational(a)?)))
        }
        Sx::Bracket(_) => Err(Error::Parse("unexpected bracket list".into())),
        Sx::List(items) => {
            let Some(Sx::Atom(head)) = items.first() else {
                return Err(Error::Parse("expected an operator".into()));
            };
            let args = &items[1..];
            let exprs = || args.iter().map(|a| sx_to_expr(a, m)).collect::<Result<Vec<_>>>();
            match head.as_str() {
                "+" => Ok(exprs()?.iter().fold(SmoothExpr::zero(m), |acc, e| acc.add(e))),
                "*" => Ok(exprs()?.iter().fold(SmoothExpr::one(m), |acc, e| acc.mul(e))),
                "-" => {
                    let es = exprs()?;
                    match es.len() {
                        0 => Err(Error::Parse("'-' needs an argument".into())),
                        1 => Ok(es[0].neg()),
                        _ => Ok(es[1..].iter().fold(es[0].clone(), |acc, e| acc.sub(e))),
                    }
                }
                "/" => {
                    let es = exprs()?;
                    if es.len() != 2 {
                        return Err(Error::Parse("'/' takes two arguments".into()));
                    }
                    es[0].div(&es[1])
                }
                "pow" => {
                    if args.len() != 2 {
                        return Err(Error::Parse("'pow' takes two arguments".into()));
                    }
                    let Sx::Atom(e) = &args[1] else {
                        return Err(Error::Parse("exponent must be an integer".into()));
                    };
                    let e: i64 = e.parse().map_err(|_| Error::Parse(format!("bad exponent {e:?}")))?;
                    sx_to_expr(&args[0], m)?.pow(e)
                }
                "const" => {
                    let [Sx::Atom(a)] = args else {
                        return Err(Error::Parse("'const' takes one rational".into()));
                    };
                    Ok(SmoothExpr::constant(m, q_big(atom_rational(a)?)))
                }
                "bump" => {
                    if args.len() != 1 {
                        return Err(Error::Parse("'bump' takes one argument".into()));
                    }
                    Ok(SmoothExpr::bump(sx_to_affine(&args[0], m)?))
                }
                "affine" => Ok(SmoothExpr::affine(sx_to_affine(sx, m)?)),
                other => Err(Error::Parse(format!("unknown operator {other:?}"))),
            }
        }
    }
}

fn sx_to_affine(sx: &Sx, m: usize) -> Result<Affine> {
    match sx {
        Sx::Atom(a) => {
            if let Some(j) = parse_var(a, m) {
                return Ok(Affine::var(m, j?));
            }
            Ok(Affine { lin: vec![Q::zero(); m], c: atom_rational(a)? })
        }
        Sx::List(items) if matches!(items.first(), Some(Sx::Atom(h)) if h == "affine") => {
            let (Some(Sx::Bracket(coeffs)), Some(Sx::Atom(c0))) = (items.get(1), items.get(2)) else {
                return Err(Error::Parse("expected (affine [c ...] c0 x ...)".into()));
            };
            let vars = &items[3..];
            if vars.len() != coeffs.len() {
                return Err(Error::Parse("affine coefficient and variable counts differ".into()));
            }
            let mut lin = vec![Q::zero(); m];
            for (c, v) in coeffs.iter().zip(vars) {
                let (Sx::Atom(c), Sx::Atom(v)) = (c, v) else {
                    return Err(Error::Parse("affine entries must be atoms".into()));
                };
                let j = parse_var(v, m).ok_or_else(|| Error::Parse(format!("expected variable, got {v:?}")))??;
                lin[j] += atom_rational(c)?;
            }
            Ok(Affine { lin, c: atom_rational(c0)? })
        }
        _ => {
            let e = sx_to_expr(sx, m)?;
            expr_as_affine(&e).ok_or_else(|| Error::Parse("bump argument must be affine".into()))
        }
    }
}

fn expr_as_affine(e: &SmoothExpr) -> Option<Affine> {
    let mut out = Affine { lin: vec![Q::zero(); e.m], c: Q::zero() };
    for (k, r) in &e.terms {
        if k.two_pi != 0 || !k.bumps.is_empty() {
            return None;
        }
        let r = Q::new(r.numer().to_i64()?, r.denom().to_i64()?);
        match k.factors.len() {
            0 => out.c += r,
            1 => {
                let (a, &p) = k.factors.iter().next()?;
                if p != 1 {
                    return None;
                }
                for (o, v) in out.lin.iter_mut().zip(&a.lin) {
                    *o += r * v;
                }
                out.c += r * a.c;
            }
            _ => return None,
        }
    }
    Some(out)
}

pub fn parse_expr(s: &str, m: usize) -> Result<SmoothExpr> {
    let tokens = tokenize(s);
    let mut pos = 0;
    let sx = parse_sx(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(Error::Parse("trailing tokens".into()));
    }
    sx_to_expr(&sx, m)
}

fn fmt_affine(a: &Affine) -> String {
    let nz: Vec<(usize, &Q)> = a.lin.iter().enumerate().filter(|(_, v)| !v.is_zero()).collect();
    if nz.is_empty() {
        return a.c.to_string();
    }
    let coeffs: Vec<String> = nz.iter().map(|(_, v)| v.to_string()).collect();
    let vars: Vec<String> = nz.iter().map(|(i, _)| format!("x{}", i + 1)).collect();
    format!("(affine [{}] {} {})", coeffs.join(" "), a.c, vars.join(" "))
}

impl fmt::Display for SmoothExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        for (k, r) in &self.terms {
            let mut fs = vec![r.to_string()];
            if k.two_pi != 0 {
                fs.push(format!("(pow twopi {})", k.two_pi));
            }
            for (a, &p) in &k.bumps {
                let b = format!("(bump {})", fmt_affine(a));
                fs.push(if p == 1 { b } else { format!("(pow {b} {p})") });
            }
            for (a, &e) in &k.factors {
                fs.push(format!("(pow {} {e})", fmt_affine(a)));
            }
            parts.push(if fs.len() == 1 { fs.remove(0) } else { format!("(* {})", fs.join(" ")) });
        }
        if parts.len() == 1 {
            write!(f, "{}", parts[0])
        } else {
            write!(f, "(+ {})", parts.join(" "))
        }
    }
}

// ---- reasonably smooth functions ----------------------------------------

/// A region on which the function is given by a single formula.
#[derive(Clone, Debug, PartialEq)]
pub struct NiceChart {
    pub region: PseudoCell,
    /// Variables the chart formula may depend on.
    pub vars: BTreeSet<usize>,
    /// The chart formula is identically zero.
    pub zero: bool,
}

/// A reasonably smooth function on a pseudo-polyhedral domain, given by one
/// normal-form formula together with the charts derived from its support.
#[derive(Clone, Debug, PartialEq)]
pub struct ReasonablySmooth {
    expr: SmoothExpr,
    domain: PseudoPolyhedron,
    vanish: BTreeSet<usize>,
}

/// `{expr, vanish?, domain?}`; indices are 1-based.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmoothSpec {
    pub expr: String,
    #[serde(default)]
    pub vanish: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<CellSpec>>,
}

/// Bounds of `{x : |ℓ_a(x)| ≤ 1 ∀a}` over the given variables, `None` if unbounded.
fn bump_box(bumps: &[&Affine], vars: &[usize]) -> Option<Vec<(f64, f64)>> {
    let k = vars.len();
    let mut hs = Vec::new();
    for a in bumps {
        let row: Vec<f64> = vars.iter().map(|&j| q_f64(a.lin[j])).collect();
        let c = q_f64(a.c);
        hs.push(HalfSpace { a: row.clone(), b: 1.0 - c });
        hs.push(HalfSpace { a: row.iter().map(|v| -v).collect(), b: 1.0 + c });
    }
    if !hrep_is_bounded(&hs, k) {
        return None;
    }
    let verts = enumerate_vertices(&hs, k);
    if verts.is_empty() {
        return Some(vec![(f64::INFINITY, f64::NEG_INFINITY); k]);
    }
    Some(
        (0..k)
            .map(|i| {
                let lo = verts.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min);
                let hi = verts.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            })
            .collect(),
    )
}

/// Per-term support data: for each variable, bounds (−∞/+∞ when unconstrained)
/// and whether the term depends on it.
struct TermSupport {
    lo: Vec<f64>,
    hi: Vec<f64>,
    depends: Vec<bool>,
    empty: bool,
}

fn term_support(key: &MonoKey, m: usize) -> TermSupport {
    let depends: Vec<bool> = (0..m).map(|j| key.affines().any(|a| a.depends_on(j))).collect();
    let mut lo = vec![f64::NEG_INFINITY; m];
    let mut hi = vec![f64::INFINITY; m];
    let bumps: Vec<&Affine> = key.bumps.keys().collect();
    let mut empty = bumps.iter().any(|a| a.is_constant() && a.c.abs() >= Q::one());
    let vars: Vec<usize> = (0..m).filter(|&j| bumps.iter().any(|a| a.depends_on(j))).collect();
    if !vars.is_empty() && !empty {
        if let Some(b) = bump_box(&bumps, &vars) {
            for (i, &j) in vars.iter().enumerate() {
                lo[j] = b[i].0;
                hi[j] = b[i].1;
                empty |= b[i].0 > b[i].1;
            }
        }
    }
    if empty {
        lo = vec![f64::INFINITY; m];
        hi = vec![f64::NEG_INFINITY; m];
    }
    TermSupport { lo, hi, depends, empty }
}

impl ReasonablySmooth {
    pub fn new(expr: SmoothExpr, domain: PseudoPolyhedron, vanish: BTreeSet<usize>) -> Result<Self> {
        if domain.ambient_dim != expr.m() {
            return Err(Error::DimMismatch { expected: expr.m(), got: domain.ambient_dim });
        }
        if let Some(&j) = vanish.iter().find(|&&j| j >= expr.m()) {
            return Err(Error::Validation(format!("vanishing index {} out of range", j + 1)));
        }
        let out = ReasonablySmooth { expr, domain, vanish };
        out.check_vanishing()?;
        Ok(out)
    }

    /// Defined on all of `(R ∪ {−∞})^m`.
    pub fn global(expr: SmoothExpr, vanish: BTreeSet<usize>) -> Result<Self> {
        let m = expr.m();
        ReasonablySmooth::new(expr, PseudoPolyhedron::from_cell(PseudoCell::full_extended(m)), vanish)
    }

    pub fn zero(m: usize) -> Self {
        ReasonablySmooth {
            expr: SmoothExpr::zero(m),
            domain: PseudoPolyhedron::from_cell(PseudoCell::full_extended(m)),
            vanish: (0..m).collect(),
        }
    }

    pub fn from_spec(spec: &SmoothSpec, m: usize) -> Result<Self> {
        let expr = parse_expr(&spec.expr, m)?;
        let domain = match &spec.domain {
            Some(cells) => polyhedron_from_specs(m, cells)?,
            None => PseudoPolyhedron::from_cell(PseudoCell::full_extended(m)),
        };
        let mut vanish = BTreeSet::new();
        for &j in &spec.vanish {
            if j == 0 || j > m {
                return Err(Error::Parse(format!("vanishing index {j} out of range 1..={m}")));
            }
            vanish.insert(j - 1);
        }
        ReasonablySmooth::new(expr, domain, vanish)
    }

    pub fn to_spec(&self) -> SmoothSpec {
        SmoothSpec {
            expr: self.expr.to_string(),
            vanish: self.vanish.iter().map(|j| j + 1).collect(),
            domain: Some(polyhedron_to_specs(&self.domain)),
        }
    }

    pub fn m(&self) -> usize {
        self.expr.m()
    }

    pub fn expr(&self) -> &SmoothExpr {
        &self.expr
    }

    pub fn domain(&self) -> &PseudoPolyhedron {
        &self.domain
    }

    pub fn vanish(&self) -> &BTreeSet<usize> {
        &self.vanish
    }

    pub fn is_zero(&self) -> bool {
        self.expr.is_zero()
    }

    /// Largest `b_j` with `φ = 0` on `{x_j ≤ b_j}`, per variable.
    pub fn zero_below(&self) -> Vec<Option<f64>> {
        let m = self.m();
        if self.expr.is_zero() {
            return vec![Some(f64::INFINITY); m];
        }
        let mut lo = vec![f64::INFINITY; m];
        for key in self.expr.terms.keys() {
            let s = term_support(key, m);
            for j in 0..m {
                lo[j] = lo[j].min(s.lo[j]);
            }
        }
        lo.into_iter().map(|v| (v > f64::NEG_INFINITY).then_some(v)).collect()
    }

    pub fn charts(&self) -> Vec<NiceChart> {
        let m = self.m();
        let vars = self.expr.dependent_vars();
        let mut main = PseudoCell::full(m);
        main.minus_inf = (0..m).filter(|j| !vars.contains(j)).collect();
        let mut out = vec![NiceChart { region: main, vars, zero: false }];
        for (j, b) in self.zero_below().into_iter().enumerate() {
            if let Some(b) = b {
                let mut region = PseudoCell::full_extended(m);
                region.upper[j] = b;
                out.push(NiceChart { region, vars: BTreeSet::new(), zero: true });
            }
        }
        out
    }

    /// Every `{x_j = −∞}` face of the domain, for `j` in the vanishing set,
    /// must lie in a zero chart.
    pub fn check_vanishing(&self) -> Result<()> {
        if self.expr.is_zero() {
            return Ok(());
        }
        let zb = self.zero_below();
        for &j in &self.vanish {
            for cell in &self.domain.cells {
                if !cell.minus_inf.contains(&j) || cell.box_is_empty() {
                    continue;
                }
                let covered = zb[j].is_some()
                    || zb.iter().enumerate().any(|(k, b)| matches!(b, Some(b) if cell.upper[k] <= *b));
                if !covered {
                    return Err(Error::NotVanishing(format!(
                        "x{} = -inf on a domain cell where the coefficient is nonzero",
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let m = self.m();
        if x.len() != m {
            return Err(Error::DimMismatch { expected: m, got: x.len() });
        }
        if !self.domain.contains_slice(x) {
            return Err(Error::OutsideDomain);
        }
        for c in self.charts() {
            if !c.region.contains(x) {
                continue;
            }
            if c.zero {
                return Ok(0.0);
            }
            let y: Vec<f64> = x.iter().map(|v| if v.is_finite() { *v } else { 0.0 }).collect();
            return Ok(self.expr.eval(&y));
        }
        Err(Error::OutsideDomain)
    }

    pub fn partial(&self, j: usize) -> ReasonablySmooth {
        let mut vanish = self.vanish.clone();
        vanish.insert(j);
        ReasonablySmooth { expr: self.expr.partial(j), domain: self.domain.clone(), vanish }
    }

    fn merged_domain(&self, other: &ReasonablySmooth) -> PseudoPolyhedron {
        if self.domain == other.domain {
            self.domain.clone()
        } else {
            self.domain.intersect(&other.domain)
        }
    }

    pub fn add(&self, other: &ReasonablySmooth) -> ReasonablySmooth {
        let expr = self.expr.add(&other.expr);
        let vanish = match (self.is_zero(), other.is_zero()) {
            (true, _) => other.vanish.clone(),
            (_, true) => self.vanish.clone(),
            _ => self.vanish.intersection(&other.vanish).copied().collect(),
        };
        ReasonablySmooth { expr, domain: self.merged_domain(other), vanish }
    }

    pub fn mul(&self, other: &ReasonablySmooth) -> ReasonablySmooth {
        ReasonablySmooth {
            expr: self.expr.mul(&other.expr),
            domain: self.merged_domain(other),
            vanish: self.vanish.union(&other.vanish).copied().collect(),
        }
    }

    /// Multiply by `sign · (2π)^k`.
    pub fn scaled(&self, sign: i64, two_pi: i32) -> ReasonablySmooth {
        ReasonablySmooth {
            expr: self.expr.scale_i(sign).mul_two_pi(two_pi),
            domain: self.domain.clone(),
            vanish: self.vanish.clone(),
        }
    }

    pub fn with_vanish(&self, vanish: BTreeSet<usize>) -> Result<ReasonablySmooth> {
        ReasonablySmooth::new(self.expr.clone(), self.domain.clone(), vanish)
    }

    /// A region containing `{φ ≠ 0}`: the union of per-term bump boxes.
    pub fn support_bound(&self) -> Result<PseudoPolyhedron> {
        let m = self.m();
        let mut cells = Vec::new();
        for key in self.expr.terms.keys() {
            let s = term_support(key, m);
            if s.empty {
                continue;
            }
            let mut cell = PseudoCell::full(m);
            for j in 0..m {
                if s.depends[j] && !(s.lo[j].is_finite() && s.hi[j].is_finite()) {
                    return Err(Error::UnboundedSupport);
                }
                if !s.depends[j] {
                    cell.minus_inf.insert(j);
                }
                cell.lower[j] = s.lo[j];
                cell.upper[j] = s.hi[j];
            }
            if !cell.box_is_empty() && !cells.contains(&cell) {
                cells.push(cell);
            }
        }
        PseudoPolyhedron::new(m, cells)
    }

    pub fn compile(&self) -> CompiledExpr {
        self.expr.compile()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rs(s: &str, m: usize) -> ReasonablySmooth {
        ReasonablySmooth::global(parse_expr(s, m).unwrap(), BTreeSet::new()).unwrap()
    }

    #[test]
    fn bump_values() {
        assert_eq!(bump(0.0), 1.0);
        assert!((bump(0.5) - (1.0f64 - 1.0 / 0.75).exp()).abs() < 1e-15);
        assert!((bump(0.5) - 0.71653).abs() < 1e-5);
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(-3.0), 0.0);
    }

    #[test]
    fn eval_examples() {
        let one = rs("1", 2);
        assert_eq!(one.eval(&[f64::NEG_INFINITY, 5.0]).unwrap(), 1.0);
        let b = rs("(bump x1)", 1);
        assert_eq!(b.eval(&[0.0]).unwrap(), 1.0);
        assert!((b.eval(&[0.5]).unwrap() - 0.71653).abs() < 1e-5);
        // zero chart below the support
        assert_eq!(b.eval(&[f64::NEG_INFINITY]).unwrap(), 0.0);
        // no chart covers x1 = -inf for a function that does not vanish there
        assert_eq!(rs("(+ 1 x1)", 1).eval(&[f64::NEG_INFINITY]), Err(Error::OutsideDomain));
    }

    #[test]
    fn partial_examples() {
        assert!(rs("7/3", 2).partial(0).is_zero());
        assert!(rs("(bump x1)", 2).partial(1).is_zero());
        let b = rs("(bump x1)", 1);
        let db = b.partial(0);
        let h = 1e-5;
        let fd = (b.eval(&[0.5 + h]).unwrap() - b.eval(&[0.5 - h]).unwrap()) / (2.0 * h);
        assert!((db.eval(&[0.5]).unwrap() - fd).abs() < 1e-7);
        assert!(db.vanish().contains(&0));
        // derivative outside the support short-circuits to zero
        assert_eq!(db.eval(&[1.0]).unwrap(), 0.0);
        assert_eq!(db.eval(&[-2.0]).unwrap(), 0.0);
    }

    #[test]
    fn mixed_partials_agree_exactly() {
        let e = parse_expr("(* (bump (affine [1/2 1] 1/3 x1 x2)) (bump x2) (pow (affine [1] 3 x1) 2))", 2).unwrap();
        assert_eq!(e.partial(0).partial(1), e.partial(1).partial(0));
        assert!(!e.partial(0).partial(1).is_zero());
    }

    #[test]
    fn quotient_rule() {
        let e = parse_expr("(/ (bump x1) (affine [1] 3 x1))", 1).unwrap();
        let x = 0.3;
        let h = 1e-5;
        let fd = (e.eval(&[x + h]) - e.eval(&[x - h])) / (2.0 * h);
        assert!((e.partial(0).eval(&[x]) - fd).abs() < 1e-8);
    }

    #[test]
    fn support_bound_examples() {
        let s = rs("(bump x1)", 2).support_bound().unwrap();
        assert_eq!(s.cells.len(), 1);
        assert!((s.cells[0].lower[0] + 1.0).abs() < 1e-12 && (s.cells[0].upper[0] - 1.0).abs() < 1e-12);
        assert!(s.cells[0].minus_inf.contains(&1));
        assert!(rs("0", 2).support_bound().unwrap().is_empty());
        let s = rs("(* (bump (affine [1/2] 1/2 x1)) (bump x2))", 2).support_bound().unwrap();
        let c = &s.cells[0];
        assert!((c.lower[0] + 3.0).abs() < 1e-12 && (c.upper[0] - 1.0).abs() < 1e-12);
        assert!((c.lower[1] + 1.0).abs() < 1e-12 && (c.upper[1] - 1.0).abs() < 1e-12);
        assert_eq!(rs("(+ 1 x1)", 1).support_bound(), Err(Error::UnboundedSupport));
    }

    #[test]
    fn printer_roundtrip() {
        for s in [
            "0",
            "5/2",
            "(* (bump (affine [1/2] 1/2 x1)) (pow x2 -1) twopi)",
            "(+ (bump x1) (- (* 3 x2 x2)) (/ 1 (affine [2 -1] 1 x1 x2)))",
        ] {
            let e = parse_expr(s, 2).unwrap();
            let back = parse_expr(&e.to_string(), 2).unwrap();
            assert_eq!(e, back, "{s} -> {e}");
        }
    }

    #[test]
    fn parse_errors() {
        assert!(parse_expr("(bump (* x1 x1))", 1).is_err());
        assert!(parse_expr("(/ 1 (+ x1 (bump x1)))", 1).is_err());
        assert!(parse_expr("x3", 2).is_err());
        assert!(parse_expr("(+ 1 2", 1).is_err());
        assert!(parse_expr("(frob x1)", 1).is_err());
    }

    #[test]
    fn vanishing_checks() {
        // Bump((x+1)/2) vanishes for x ≤ -3
        let b = parse_expr("(bump (affine [1/2] 1/2 x1))", 1).unwrap();
        assert!(ReasonablySmooth::global(b.clone(), [0].into()).is_ok());
        // a constant does not vanish at -inf
        assert!(matches!(
            ReasonablySmooth::global(SmoothExpr::one(1), [0].into()),
            Err(Error::NotVanishing(_))
        ));
        // φ(x2) is {1}-vanishing once the domain couples x1 = -inf to small x2
        let phi = parse_expr("(bump (affine [1/2] 1/2 x2))", 2).unwrap();
        assert!(ReasonablySmooth::global(phi.clone(), [0].into()).is_err());
        let mut low = PseudoCell::full_extended(2);
        low.upper = vec![-5.0, -5.0];
        let mut high = PseudoCell::full(2);
        high.minus_inf.insert(1);
        high.lower[0] = -5.0;
        let dom = PseudoPolyhedron::new(2, vec![low, high]).unwrap();
        let f = ReasonablySmooth::new(phi, dom, [0, 1].into()).unwrap();
        assert_eq!(f.eval(&[f64::NEG_INFINITY, f64::NEG_INFINITY]).unwrap(), 0.0);
        assert_eq!(f.eval(&[f64::NEG_INFINITY, 0.0]), Err(Error::OutsideDomain));
    }

    #[test]
    fn compiled_matches_tree() {
        let e = parse_expr("(+ (* (bump (affine [1/2] 1/2 x1)) (pow x2 2)) (bump x2) (pow twopi -1))", 2).unwrap();
        let c = e.compile();
        let mut scratch = Vec::new();
        for x in [[0.1, 0.2], [-2.9, 0.5], [0.7, -0.99], [3.0, 3.0]] {
            assert!((c.eval(&x, &mut scratch) - e.eval(&x)).abs() < 1e-15);
        }
    }
}

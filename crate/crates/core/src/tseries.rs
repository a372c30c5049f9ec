//! Truncated asymptotic series in a small complex parameter `t`.
//!
//! An element is a finite sum `Σ c · t^α · λ^β` with rational `α`, integer `β`
//! and `λ = -log|t|`. Everything of t-order at or beyond the truncation is
//! unknown. This is the concrete stand-in for the hybrid valued field used by
//! the integrators: `log_norm` is the normalized log of the non-archimedean
//! absolute value, `std` the standard part of a bounded element, and `sample`
//! substitutes an actual small `t`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Q = Rational64;

/// Default truncation order: `t^8` and beyond are dropped.
pub const DEFAULT_TRUNC: i64 = 8;

/// Number of extra pure-`λ^-1` corrections kept when inverting.
const LOG_DEPTH: usize = 16;

/// Exponent pair `(α, β)` of `t^α λ^β`.
///
/// Ordered so that smaller keys are asymptotically larger as `t → 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ExpKey {
    pub t_order: Q,
    pub log_power: i32,
}

impl ExpKey {
    pub fn new(t_order: Q, log_power: i32) -> Self {
        ExpKey { t_order, log_power }
    }

    pub fn zero() -> Self {
        ExpKey::new(Q::zero(), 0)
    }
}

impl Ord for ExpKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.t_order
            .cmp(&other.t_order)
            .then_with(|| other.log_power.cmp(&self.log_power))
    }
}

impl PartialOrd for ExpKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Asymptotic size class, from most negligible to largest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeClass {
    ZeroModTrunc,
    TNegligible,
    Negligible,
    Bounded,
    TBounded,
    TUnbounded,
}

impl SizeClass {
    pub fn is_t_negligible(self) -> bool {
        self <= SizeClass::TNegligible
    }

    pub fn is_negligible(self) -> bool {
        self <= SizeClass::Negligible
    }

    pub fn is_bounded(self) -> bool {
        self <= SizeClass::Bounded
    }

    pub fn is_t_bounded(self) -> bool {
        self <= SizeClass::TBounded
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TSeries {
    terms: BTreeMap<ExpKey, Complex64>,
    trunc: Q,
}

/// One `{re, im, t_order, log_power}` record of the literal syntax.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    #[serde(default = "zero_order_str")]
    pub t_order: String,
    #[serde(default)]
    pub log_power: i32,
}

fn zero_order_str() -> String {
    "0".to_string()
}

pub fn parse_rational(s: &str) -> Result<Q> {
    s.trim()
        .parse::<Q>()
        .map_err(|e| Error::Parse(format!("bad rational {s:?}: {e}")))
}

impl TSeries {
    pub fn zero() -> Self {
        TSeries::zero_with_trunc(Q::from_integer(DEFAULT_TRUNC))
    }

    pub fn zero_with_trunc(trunc: Q) -> Self {
        TSeries {
            terms: BTreeMap::new(),
            trunc,
        }
    }

    pub fn monomial(c: Complex64, t_order: Q, log_power: i32) -> Self {
        let mut s = TSeries::zero();
        s.insert(ExpKey::new(t_order, log_power), c);
        s
    }

    pub fn constant(c: Complex64) -> Self {
        TSeries::monomial(c, Q::zero(), 0)
    }

    pub fn real(c: f64) -> Self {
        TSeries::constant(Complex64::new(c, 0.0))
    }

    pub fn one() -> Self {
        TSeries::real(1.0)
    }

    /// The parameter `t` itself.
    pub fn t() -> Self {
        TSeries::monomial(Complex64::new(1.0, 0.0), Q::one(), 0)
    }

    /// `λ = -log|t|`.
    pub fn lambda() -> Self {
        TSeries::monomial(Complex64::new(1.0, 0.0), Q::zero(), 1)
    }

    pub fn with_trunc(mut self, trunc: Q) -> Self {
        self.trunc = trunc;
        self.terms.retain(|k, _| k.t_order < trunc);
        self
    }

    pub fn from_records(records: &[TermRecord]) -> Result<Self> {
        let mut s = TSeries::zero();
        for r in records {
            let key = ExpKey::new(parse_rational(&r.t_order)?, r.log_power);
            s.insert(key, Complex64::new(r.re, r.im));
        }
        Ok(s)
    }

    pub fn to_records(&self) -> Vec<TermRecord> {
        self.terms
            .iter()
            .map(|(k, c)| TermRecord {
                re: c.re,
                im: c.im,
                t_order: k.t_order.to_string(),
                log_power: k.log_power,
            })
            .collect()
    }

    fn insert(&mut self, key: ExpKey, c: Complex64) {
        if key.t_order >= self.trunc {
            return;
        }
        let entry = self.terms.entry(key).or_insert(Complex64::zero());
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn trunc(&self) -> Q {
        self.trunc
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExpKey, &Complex64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, key: &ExpKey) -> Complex64 {
        self.terms.get(key).copied().unwrap_or_default()
    }

    pub fn is_zero_mod_trunc(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn leading(&self) -> Option<(ExpKey, Complex64)> {
        self.terms.iter().next().map(|(k, c)| (*k, *c))
    }

    /// Leading t-order, or the truncation when nothing survives.
    fn lead_order(&self) -> Q {
        self.leading().map(|(k, _)| k.t_order).unwrap_or(self.trunc)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = TSeries::zero_with_trunc(self.trunc);
        if c.is_zero() {
            return out;
        }
        for (k, v) in &self.terms {
            out.insert(*k, v * c);
        }
        out
    }

    /// Multiplicative inverse by geometric expansion around the leading term.
    pub fn invert(&self) -> Result<Self> {
        let (lead_key, lead_c) = self.leading().ok_or(Error::ZeroDivisor)?;
        // a = c·t^α·λ^β·(1 + u), u made of strictly smaller terms.
        let inv_lead = TSeries {
            terms: BTreeMap::from([(
                ExpKey::new(-lead_key.t_order, -lead_key.log_power),
                lead_c.inv(),
            )]),
            trunc: Q::from_integer(1 << 20),
        };
        let rel_trunc = self.trunc - lead_key.t_order;
        let mut u = TSeries::zero_with_trunc(rel_trunc);
        for (k, c) in self.terms.iter().skip(1) {
            u.insert(
                ExpKey::new(k.t_order - lead_key.t_order, k.log_power - lead_key.log_power),
                c / lead_c,
            );
        }
        let mut sum = TSeries::one().with_trunc(rel_trunc);
        let mut power = TSeries::one().with_trunc(rel_trunc);
        let min_gap = u
            .terms
            .keys()
            .map(|k| k.t_order)
            .filter(|o| o.is_positive())
            .min();
        let mut iters = LOG_DEPTH;
        if let Some(gap) = min_gap {
            let by_order = (rel_trunc / gap).ceil().to_integer().max(0) as usize;
            iters = iters.max(by_order + 1);
        }
        for _ in 0..iters {
            power = &power * &(-&u);
            if power.is_zero_mod_trunc() {
                break;
            }
            sum = &sum + &power;
        }
        Ok(&sum * &inv_lead)
    }

    pub fn classify(&self) -> SizeClass {
        let Some((k, _)) = self.leading() else {
            return SizeClass::ZeroModTrunc;
        };
        match k.t_order.cmp(&Q::zero()) {
            Ordering::Greater => SizeClass::Negligible,
            Ordering::Less => SizeClass::TBounded,
            Ordering::Equal => match k.log_power.cmp(&0) {
                Ordering::Less => SizeClass::Negligible,
                Ordering::Equal => SizeClass::Bounded,
                Ordering::Greater => SizeClass::TBounded,
            },
        }
    }

    /// Standard part of a bounded element.
    pub fn std(&self) -> Result<Complex64> {
        if !self.classify().is_bounded() {
            return Err(Error::Unbounded);
        }
        Ok(self.coeff(&ExpKey::zero()))
    }

    /// `-α_min`, the normalized log of the non-archimedean absolute value.
    ///
    /// Powers of `λ` have t-order zero and do not contribute.
    pub fn log_norm(&self) -> Result<Q> {
        self.leading()
            .map(|(k, _)| -k.t_order)
            .ok_or(Error::ZeroInput)
    }

    /// Non-archimedean absolute value `τ^{α_min}` for a given `τ ∈ (0,1)`.
    pub fn val(&self, tau: f64) -> Result<f64> {
        let a = self.log_norm()?;
        Ok(tau.powf(-a.to_f64().unwrap_or(f64::NAN)))
    }

    /// Substitute a concrete `t` (principal branch for fractional orders).
    pub fn sample(&self, t: Complex64) -> Complex64 {
        let lambda = -t.norm().ln();
        let (r, arg) = t.to_polar();
        self.terms
            .iter()
            .map(|(k, c)| {
                let alpha = k.t_order.to_f64().unwrap_or(f64::NAN);
                let tpow = Complex64::from_polar(r.powf(alpha), arg * alpha);
                c * tpow * lambda.powi(k.log_power)
            })
            .sum()
    }
}

impl Default for TSeries {
    fn default() -> Self {
        TSeries::zero()
    }
}

impl<'a> Add<&'a TSeries> for &'a TSeries {
    type Output = TSeries;

    fn add(self, rhs: &TSeries) -> TSeries {
        let mut out = TSeries::zero_with_trunc(self.trunc.min(rhs.trunc));
        for (k, c) in self.terms.iter().chain(rhs.terms.iter()) {
            out.insert(*k, *c);
        }
        out
    }
}

impl<'a> Sub<&'a TSeries> for &'a TSeries {
    type Output = TSeries;

    fn sub(self, rhs: &TSeries) -> TSeries {
        self + &(-rhs)
    }
}

impl Neg for &TSeries {
    type Output = TSeries;

    fn neg(self) -> TSeries {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl<'a> Mul<&'a TSeries> for &'a TSeries {
    type Output = TSeries;

    fn mul(self, rhs: &TSeries) -> TSeries {
        let trunc = (self.trunc + rhs.lead_order()).min(rhs.trunc + self.lead_order());
        let mut out = TSeries::zero_with_trunc(trunc);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &rhs.terms {
                out.insert(
                    ExpKey::new(ka.t_order + kb.t_order, ka.log_power + kb.log_power),
                    ca * cb,
                );
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<TSeries> for TSeries {
            type Output = TSeries;
            fn $m(self, rhs: TSeries) -> TSeries {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for TSeries {
    type Output = TSeries;
    fn neg(self) -> TSeries {
        -&self
    }
}

impl fmt::Display for TSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            write!(f, "0")?;
        }
        for (i, (k, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}{:+}i)", c.re, c.im)?;
            if !k.t_order.is_zero() {
                write!(f, "·t^{}", k.t_order)?;
            }
            if k.log_power != 0 {
                write!(f, "·λ^{}", k.log_power)?;
            }
        }
        write!(f, " + O(t^{})", self.trunc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &TSeries, b: &TSeries, tol: f64) -> bool {
        let keys: std::collections::BTreeSet<_> =
            a.terms.keys().chain(b.terms.keys()).copied().collect();
        keys.iter().all(|k| (a.coeff(k) - b.coeff(k)).norm() <= tol)
    }

    #[test]
    fn monomial_products() {
        let t = TSeries::t();
        let t2 = TSeries::monomial(c(1.0, 0.0), Q::from_integer(2), 0);
        assert!((&t * &t).terms().eq(t2.terms()));
        assert_eq!((&t * &t).trunc(), Q::from_integer(9));

        let one = TSeries::one();
        let a = &one + &t;
        let b = &one - &t;
        let expected = &one - &t2;
        assert_eq!(&a * &b, expected);

        let lam = TSeries::lambda();
        let lam_inv = TSeries::monomial(c(1.0, 0.0), Q::zero(), -1);
        assert_eq!(&lam * &lam_inv, one);
    }

    #[test]
    fn invert_examples() {
        let one = TSeries::one();
        let t = TSeries::t();
        let inv = (&one - &t).invert().unwrap();
        for k in 0..8 {
            assert_eq!(
                inv.coeff(&ExpKey::new(Q::from_integer(k), 0)),
                c(1.0, 0.0),
                "coefficient of t^{k}"
            );
        }

        let inv_t = t.invert().unwrap();
        assert_eq!(inv_t.leading().unwrap().0, ExpKey::new(Q::from_integer(-1), 0));
        assert_eq!(inv_t.terms().count(), 1);

        let a = &TSeries::real(2.0) + &t.scale(c(0.0, 1.0));
        let inv = a.invert().unwrap();
        assert!((inv.coeff(&ExpKey::zero()) - c(0.5, 0.0)).norm() < 1e-15);
        assert!((inv.coeff(&ExpKey::new(Q::one(), 0)) - c(0.0, -0.25)).norm() < 1e-15);
        // multiply back
        let prod = &a * &inv;
        assert!(close(&prod, &TSeries::one().with_trunc(prod.trunc()), 1e-12));
    }

    #[test]
    fn invert_zero_fails() {
        assert_eq!(TSeries::zero().invert(), Err(Error::ZeroDivisor));
    }

    #[test]
    fn classify_examples() {
        let t = TSeries::t();
        let k = t.classify();
        assert_eq!(k, SizeClass::Negligible);
        assert!(k.is_negligible() && k.is_bounded() && !k.is_t_negligible());

        let lam_inv = TSeries::monomial(c(1.0, 0.0), Q::zero(), -1);
        let k = lam_inv.classify();
        assert!(k.is_negligible() && !k.is_t_negligible());

        let k = TSeries::lambda().classify();
        assert!(k.is_t_bounded() && !k.is_bounded());

        assert_eq!(TSeries::zero().classify(), SizeClass::ZeroModTrunc);
        assert_eq!(t.invert().unwrap().classify(), SizeClass::TBounded);
    }

    #[test]
    fn std_examples() {
        let a = &TSeries::real(3.0) + &TSeries::t().scale(c(0.0, 1.0));
        assert_eq!(a.std().unwrap(), c(3.0, 0.0));
        let lam_inv = TSeries::monomial(c(1.0, 0.0), Q::zero(), -1);
        assert_eq!(lam_inv.std().unwrap(), c(0.0, 0.0));
        assert_eq!(TSeries::lambda().std(), Err(Error::Unbounded));

        let b = &(&TSeries::real(2.0) + &lam_inv.scale(c(5.0, 0.0))) + &TSeries::t();
        assert_eq!(b.std().unwrap(), c(2.0, 0.0));
    }

    #[test]
    fn std_matches_sampling_at_tiny_t() {
        // λ^-1 decays only logarithmically: at t = 1e-8 it still contributes
        // 5/18.4, so the sample is compared to std plus the explicit tail.
        let lam_inv = TSeries::monomial(c(1.0, 0.0), Q::zero(), -1);
        let b = &(&TSeries::real(2.0) + &lam_inv.scale(c(5.0, 0.0))) + &TSeries::t();
        let t = c(1e-8, 0.0);
        let lambda = -(1e-8f64).ln();
        let sampled = b.sample(t);
        let std = b.std().unwrap();
        assert!((sampled - std - c(5.0 / lambda + 1e-8, 0.0)).norm() < 1e-12);
        let no_log = &TSeries::real(2.0) + &TSeries::t();
        assert!((no_log.sample(t) - no_log.std().unwrap()).norm() < 1e-6);
    }

    #[test]
    fn log_norm_examples() {
        assert_eq!(TSeries::t().log_norm().unwrap(), Q::from_integer(-1));
        assert_eq!(TSeries::constant(c(2.0, -3.0)).log_norm().unwrap(), Q::zero());
        let a = &TSeries::monomial(c(1.0, 0.0), Q::from_integer(2), 0)
            + &TSeries::monomial(c(1.0, 0.0), Q::from_integer(3), 0);
        assert_eq!(a.log_norm().unwrap(), Q::from_integer(-2));
        assert_eq!(TSeries::zero().log_norm(), Err(Error::ZeroInput));
        assert!((TSeries::t().val(0.5).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sample_examples() {
        assert!((TSeries::t().sample(c(0.01, 0.0)) - c(0.01, 0.0)).norm() < 1e-18);
        let lam = TSeries::lambda().sample(c(0.01, 0.0));
        assert!((lam.re - 4.605170185988091).abs() < 1e-12);
        let a = &TSeries::one() + &(&TSeries::t() * &TSeries::lambda());
        let v = a.sample(c(1e-3, 0.0));
        let expected = 1.0 + 1e-3 * (-(1e-3f64).ln());
        assert!((v.re - expected).abs() < 1e-15);
        assert!((v.re - (1.0 + 1e-3 * 6.9078)).abs() < 1e-7);
    }

    #[test]
    fn records_roundtrip() {
        let recs = vec![
            TermRecord { re: 1.0, im: 0.0, t_order: "0".into(), log_power: 0 },
            TermRecord { re: -1.0, im: 0.5, t_order: "3/2".into(), log_power: -1 },
        ];
        let s = TSeries::from_records(&recs).unwrap();
        assert_eq!(TSeries::from_records(&s.to_records()).unwrap(), s);
        assert!(TSeries::from_records(&[TermRecord {
            re: 1.0,
            im: 0.0,
            t_order: "x/2".into(),
            log_power: 0
        }])
        .is_err());
    }

    #[test]
    fn truncation_drops_high_orders() {
        let a = &TSeries::one() + &TSeries::monomial(c(1.0, 0.0), Q::from_integer(4), 0);
        let sq = &a * &a;
        assert_eq!(sq.trunc(), Q::from_integer(8));
        assert_eq!(sq.terms().count(), 2);
        assert_eq!(sq.coeff(&ExpKey::new(Q::from_integer(4), 0)), c(2.0, 0.0));
        let tail = &sq - &(&TSeries::one() + &TSeries::monomial(c(2.0, 0.0), Q::from_integer(4), 0));
        assert!(tail.is_zero_mod_trunc());
        assert_eq!(tail.classify(), SizeClass::ZeroModTrunc);
    }
}

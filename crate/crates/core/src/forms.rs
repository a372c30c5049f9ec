//! Bigraded forms `Σ φ_{I,J}(Log|f|) dLog|f_I| ∧ (darg f_J / 2π)` on a torus
//! chart, with the differentials `d`, `d♯`, the `J` operator and wedge products.
//!
//! The same coefficient data read on the skeleton is a non-archimedean form;
//! `flat` is the identity on data and `d′`, `d″` reuse `d`, `d♯`.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_rational::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coefficients::{Affine, ReasonablySmooth, SmoothExpr, SmoothSpec};
use crate::error::{Error, Result};
use crate::tropical::LaurentPoly;
use crate::tseries::Q;

thread_local! {
    static SIGN_MUTATION: Cell<bool> = const { Cell::new(false) };
}

/// Test hook for the current thread: when on, `d` ignores the insertion sign.
pub fn set_sign_mutation(on: bool) {
    SIGN_MUTATION.with(|c| c.set(on));
}

fn sign_mutated() -> bool {
    SIGN_MUTATION.with(|c| c.get())
}

/// The functions `f_1..f_m` on `G_m^n` whose normalized logs are the tropical coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub n: usize,
    pub f: Vec<LaurentPoly>,
}

impl Chart {
    pub fn new(n: usize, f: Vec<LaurentPoly>) -> Result<Self> {
        for fi in &f {
            if fi.n() != n {
                return Err(Error::DimMismatch { expected: n, got: fi.n() });
            }
            if fi.is_zero() {
                return Err(Error::ZeroPolynomial);
            }
        }
        Ok(Chart { n, f })
    }

    pub fn m(&self) -> usize {
        self.f.len()
    }
}

pub type Key = (Vec<usize>, Vec<usize>);

#[derive(Clone, Debug, PartialEq)]
pub struct TropicalForm {
    chart: Arc<Chart>,
    p: usize,
    q: usize,
    coeffs: BTreeMap<Key, ReasonablySmooth>,
}

/// Non-archimedean reading of the same data.
#[derive(Clone, Debug, PartialEq)]
pub struct NAForm(pub TropicalForm);

/// `{I, J, phi}` with 1-based indices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FormTermSpec {
    #[serde(rename = "I")]
    pub i: Vec<usize>,
    #[serde(rename = "J")]
    pub j: Vec<usize>,
    pub phi: SmoothSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FormSpec {
    pub p: usize,
    pub q: usize,
    pub terms: Vec<FormTermSpec>,
}

fn count_below(set: &[usize], i: usize) -> usize {
    set.iter().take_while(|&&k| k < i).count()
}

fn parity(k: usize) -> i64 {
    if k.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn insert_sorted(set: &[usize], i: usize) -> Vec<usize> {
    let mut out = set.to_vec();
    let pos = count_below(set, i);
    out.insert(pos, i);
    out
}

/// Sign of sorting the concatenation `a ++ b` (both sorted), or `None` on overlap.
fn merge_sign(a: &[usize], b: &[usize]) -> Option<(i64, Vec<usize>)> {
    let mut inversions = 0;
    for &x in a {
        for &y in b {
            if x == y {
                return None;
            }
            if x > y {
                inversions += 1;
            }
        }
    }
    let mut merged: Vec<usize> = a.iter().chain(b).copied().collect();
    merged.sort_unstable();
    Some((parity(inversions), merged))
}

impl TropicalForm {
    pub fn zero(chart: Arc<Chart>, p: usize, q: usize) -> Self {
        TropicalForm { chart, p, q, coeffs: BTreeMap::new() }
    }

    pub fn new(
        chart: Arc<Chart>,
        p: usize,
        q: usize,
        terms: impl IntoIterator<Item = (Key, ReasonablySmooth)>,
    ) -> Result<Self> {
        let m = chart.m();
        let mut out = TropicalForm::zero(chart, p, q);
        for ((i, j), phi) in terms {
            if i.len() != p || j.len() != q {
                return Err(Error::Validation(format!(
                    "index sets {i:?}, {j:?} do not match bidegree ({p}, {q})"
                )));
            }
            for set in [&i, &j] {
                if set.windows(2).any(|w| w[0] >= w[1]) || set.iter().any(|&k| k >= m) {
                    return Err(Error::Validation(format!("index set {set:?} must be sorted and < {m}")));
                }
            }
            if phi.m() != m {
                return Err(Error::DimMismatch { expected: m, got: phi.m() });
            }
            let needed: BTreeSet<usize> = i.iter().chain(&j).copied().collect();
            if !phi.is_zero() && !needed.is_subset(phi.vanish()) {
                return Err(Error::NotVanishing(format!("({i:?}, {j:?})")));
            }
            out.accumulate((i, j), phi);
        }
        Ok(out)
    }

    pub fn from_spec(chart: Arc<Chart>, spec: &FormSpec) -> Result<Self> {
        let m = chart.m();
        let to0 = |v: &[usize]| -> Result<Vec<usize>> {
            let mut out = Vec::with_capacity(v.len());
            for &k in v {
                if k == 0 || k > m {
                    return Err(Error::Parse(format!("index {k} out of range 1..={m}")));
                }
                out.push(k - 1);
            }
            out.sort_unstable();
            Ok(out)
        };
        let mut terms = Vec::new();
        for t in &spec.terms {
            terms.push(((to0(&t.i)?, to0(&t.j)?), ReasonablySmooth::from_spec(&t.phi, m)?));
        }
        TropicalForm::new(chart, spec.p, spec.q, terms)
    }

    pub fn to_spec(&self) -> FormSpec {
        let to1 = |v: &[usize]| v.iter().map(|k| k + 1).collect();
        FormSpec {
            p: self.p,
            q: self.q,
            terms: self
                .coeffs
                .iter()
                .map(|((i, j), phi)| FormTermSpec { i: to1(i), j: to1(j), phi: phi.to_spec() })
                .collect(),
        }
    }

    fn accumulate(&mut self, key: Key, phi: ReasonablySmooth) {
        if phi.is_zero() {
            return;
        }
        let sum = match self.coeffs.remove(&key) {
            Some(prev) => prev.add(&phi),
            None => phi,
        };
        if !sum.is_zero() {
            self.coeffs.insert(key, sum);
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn bidegree(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn degree(&self) -> usize {
        self.p + self.q
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &BTreeMap<Key, ReasonablySmooth> {
        &self.coeffs
    }

    pub fn coeff(&self, i: &[usize], j: &[usize]) -> Option<&ReasonablySmooth> {
        self.coeffs.get(&(i.to_vec(), j.to_vec()))
    }

    pub fn add(&self, other: &TropicalForm) -> Result<TropicalForm> {
        if self.chart != other.chart {
            return Err(Error::ChartMismatch);
        }
        if self.bidegree() != other.bidegree() {
            return Err(Error::Validation("bidegrees differ".into()));
        }
        let mut out = self.clone();
        for (k, phi) in &other.coeffs {
            out.accumulate(k.clone(), phi.clone());
        }
        Ok(out)
    }

    /// Multiply every coefficient by `sign · (2π)^k`.
    pub fn scaled(&self, sign: i64, two_pi: i32) -> TropicalForm {
        let mut out = TropicalForm::zero(self.chart.clone(), self.p, self.q);
        for (k, phi) in &self.coeffs {
            out.accumulate(k.clone(), phi.scaled(sign, two_pi));
        }
        out
    }

    pub fn d(&self) -> TropicalForm {
        let m = self.chart.m();
        let mut out = TropicalForm::zero(self.chart.clone(), self.p + 1, self.q);
        for ((iset, jset), phi) in &self.coeffs {
            for i in (0..m).filter(|i| !iset.contains(i)) {
                let sign = if sign_mutated() { 1 } else { parity(count_below(iset, i)) };
                out.accumulate((insert_sorted(iset, i), jset.clone()), phi.partial(i).scaled(sign, 0));
            }
        }
        out
    }

    pub fn d_sharp(&self) -> TropicalForm {
        let m = self.chart.m();
        let mut out = TropicalForm::zero(self.chart.clone(), self.p, self.q + 1);
        for ((iset, jset), phi) in &self.coeffs {
            for i in (0..m).filter(|i| !jset.contains(i)) {
                let sign = parity(self.p) * parity(count_below(jset, i));
                out.accumulate((iset.clone(), insert_sorted(jset, i)), phi.partial(i).scaled(sign, 0));
            }
        }
        out
    }

    /// `(I, J) ↦ (J, I)` with scalar `(−1)^q (2π)^{p−q} (−1)^{pq}`.
    pub fn j_op(&self) -> TropicalForm {
        let (p, q) = (self.p, self.q);
        let sign = parity(q) * parity(p * q);
        let mut out = TropicalForm::zero(self.chart.clone(), q, p);
        for ((i, j), phi) in &self.coeffs {
            out.accumulate((j.clone(), i.clone()), phi.scaled(sign, p as i32 - q as i32));
        }
        out
    }

    pub fn wedge(&self, other: &TropicalForm) -> Result<TropicalForm> {
        if self.chart != other.chart {
            return Err(Error::ChartMismatch);
        }
        let mut out = TropicalForm::zero(self.chart.clone(), self.p + other.p, self.q + other.q);
        let koszul = parity(self.q * other.p);
        for ((i1, j1), a) in &self.coeffs {
            for ((i2, j2), b) in &other.coeffs {
                let (Some((si, i)), Some((sj, j))) = (merge_sign(i1, i2), merge_sign(j1, j2)) else {
                    continue;
                };
                out.accumulate((i, j), a.mul(b).scaled(koszul * si * sj, 0));
            }
        }
        Ok(out)
    }

    pub fn flat(&self) -> NAForm {
        NAForm(self.clone())
    }

    /// Check `(I ∪ J) ⊆ vanish(φ_{I,J})` for every coefficient.
    pub fn check_vanishing(&self) -> Result<()> {
        for ((i, j), phi) in &self.coeffs {
            let needed: BTreeSet<usize> = i.iter().chain(j).copied().collect();
            if !needed.is_subset(phi.vanish()) {
                return Err(Error::NotVanishing(format!("({i:?}, {j:?})")));
            }
            phi.check_vanishing()?;
        }
        Ok(())
    }

    /// Largest pointwise discrepancy from `other` over `points`.
    pub fn max_pointwise_diff(&self, other: &TropicalForm, points: &[Vec<f64>]) -> f64 {
        let keys: BTreeSet<&Key> = self.coeffs.keys().chain(other.coeffs.keys()).collect();
        let mut worst: f64 = 0.0;
        for k in keys {
            let a = self.coeffs.get(k).map(|p| p.expr().compile());
            let b = other.coeffs.get(k).map(|p| p.expr().compile());
            let mut scratch = Vec::new();
            for x in points {
                let va = a.as_ref().map_or(0.0, |c| c.eval(x, &mut scratch));
                let vb = b.as_ref().map_or(0.0, |c| c.eval(x, &mut scratch));
                worst = worst.max((va - vb).abs());
            }
        }
        worst
    }
}

impl NAForm {
    pub fn d_prime(&self) -> NAForm {
        NAForm(self.0.d())
    }

    pub fn d_second(&self) -> NAForm {
        NAForm(self.0.d_sharp())
    }

    pub fn wedge(&self, other: &NAForm) -> Result<NAForm> {
        Ok(NAForm(self.0.wedge(&other.0)?))
    }

    pub fn inner(&self) -> &TropicalForm {
        &self.0
    }
}

fn small_rational<R: Rng>(rng: &mut R, num: i64, den: i64) -> Q {
    Q::new(rng.random_range(-num..=num), rng.random_range(1..=den))
}

/// A random compactly supported coefficient over `m` variables.
pub fn random_coefficient<R: Rng>(rng: &mut R, m: usize) -> ReasonablySmooth {
    let mut expr = SmoothExpr::zero(m);
    for _ in 0..rng.random_range(1..=2) {
        let mut term = SmoothExpr::constant(
            m,
            BigRational::new(rng.random_range(-5..=5).into(), rng.random_range(1..=3).into()),
        );
        for j in 0..m {
            let mut a = Affine::var(m, j);
            a.lin[j] = Q::new(rng.random_range(1..=3), rng.random_range(1..=2));
            a.c = small_rational(rng, 2, 2);
            term = term.mul(&SmoothExpr::bump(a));
        }
        if m > 1 && rng.random_bool(0.5) {
            let a = Affine {
                lin: (0..m).map(|_| small_rational(rng, 2, 2)).collect(),
                c: small_rational(rng, 1, 2),
            };
            term = term.mul(&SmoothExpr::bump(a));
        }
        if rng.random_bool(0.5) {
            let a = Affine {
                lin: (0..m).map(|_| small_rational(rng, 2, 1)).collect(),
                c: small_rational(rng, 3, 1),
            };
            term = term.mul(&SmoothExpr::affine(a).pow(rng.random_range(1..=2)).expect("nonnegative power"));
        }
        expr = expr.add(&term);
    }
    ReasonablySmooth::global(expr, (0..m).collect()).expect("compact support vanishes everywhere")
}

fn random_subset<R: Rng>(rng: &mut R, m: usize, k: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..m).collect();
    for i in 0..k {
        let j = rng.random_range(i..m);
        all.swap(i, j);
    }
    let mut s = all[..k].to_vec();
    s.sort_unstable();
    s
}

/// A random `(p, q)`-form with up to `terms` coefficients.
pub fn random_form<R: Rng>(rng: &mut R, chart: Arc<Chart>, p: usize, q: usize, terms: usize) -> TropicalForm {
    let m = chart.m();
    let mut out = TropicalForm::zero(chart, p, q);
    for _ in 0..terms {
        let key = (random_subset(rng, m, p), random_subset(rng, m, q));
        out.accumulate(key, random_coefficient(rng, m));
    }
    out
}

/// `m` coordinate-like functions on `G_m^1`, for random-form tests.
pub fn test_chart(m: usize) -> Arc<Chart> {
    let f = (0..m).map(|k| LaurentPoly::monomial(vec![k as i64 + 1])).collect();
    Arc::new(Chart::new(1, f).expect("valid chart"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::parse_expr;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rs(s: &str, m: usize, vanish: &[usize]) -> ReasonablySmooth {
        ReasonablySmooth::global(parse_expr(s, m).unwrap(), vanish.iter().copied().collect()).unwrap()
    }

    fn zero_form(phi: ReasonablySmooth, chart: Arc<Chart>) -> TropicalForm {
        TropicalForm::new(chart, 0, 0, [((vec![], vec![]), phi)]).unwrap()
    }

    #[test]
    fn d_of_function() {
        let chart = test_chart(2);
        let w = zero_form(rs("(bump x1)", 2, &[0]), chart);
        let dw = w.d();
        assert_eq!(dw.coeffs().len(), 1);
        let c = dw.coeff(&[0], &[]).unwrap();
        assert_eq!(c.expr(), &parse_expr("(bump x1)", 2).unwrap().partial(0));
        assert!(dw.d().is_zero());
    }

    #[test]
    fn d_sign_on_one_form() {
        let chart = test_chart(2);
        let phi = rs("(* (bump x1) (bump x2))", 2, &[0, 1]);
        let w = TropicalForm::new(chart, 1, 0, [((vec![0], vec![]), phi.clone())]).unwrap();
        let dw = w.d();
        assert_eq!(dw.coeffs().len(), 1);
        let c = dw.coeff(&[0, 1], &[]).unwrap();
        // d(φ dx1) = ∂2φ dx2 ∧ dx1 = −∂2φ dx1 ∧ dx2
        let x = [0.0, 0.5];
        let expected = -phi.expr().partial(1).eval(&x);
        assert!((c.eval(&x).unwrap() - expected).abs() < 1e-14);
        assert!(expected.abs() > 0.1);
    }

    #[test]
    fn d_sharp_of_function() {
        let chart = test_chart(1);
        let w = zero_form(rs("(bump x1)", 1, &[0]), chart);
        let ds = w.d_sharp();
        assert!(ds.coeff(&[], &[0]).is_some());
        assert!(ds.d_sharp().is_zero());
        assert!(w.d().d_sharp().add(&w.d_sharp().d()).unwrap().is_zero());
    }

    #[test]
    fn j_op_examples() {
        let chart = test_chart(2);
        let phi = rs("(* (bump x1) (bump x2))", 2, &[0, 1]);
        let w = TropicalForm::new(chart.clone(), 1, 1, [((vec![0], vec![1]), phi.clone())]).unwrap();
        let jw = w.j_op();
        assert_eq!(jw.coeff(&[1], &[0]).unwrap().expr(), phi.expr());
        let v = TropicalForm::new(chart.clone(), 1, 0, [((vec![0], vec![]), phi.clone())]).unwrap();
        let vv = v.j_op();
        assert_eq!(vv.bidegree(), (0, 1));
        // (2π)^1 factor
        let x = [0.1, 0.2];
        assert!((vv.coeff(&[], &[0]).unwrap().eval(&x).unwrap() - TWO_PI_F * phi.eval(&x).unwrap()).abs() < 1e-12);
        assert_eq!(vv.j_op(), v.scaled(-1, 0));
        let c1 = test_chart(1);
        let top = TropicalForm::new(c1, 1, 1, [((vec![0], vec![0]), rs("(bump x1)", 1, &[0]))]).unwrap();
        assert_eq!(top.j_op(), top);
    }

    const TWO_PI_F: f64 = std::f64::consts::TAU;

    #[test]
    fn wedge_examples() {
        let chart = test_chart(2);
        let phi = rs("(bump x1)", 2, &[0]);
        let one = TropicalForm::new(chart.clone(), 0, 0, [((vec![], vec![]), ReasonablySmooth::global(SmoothExpr::one(2), BTreeSet::new()).unwrap())]).unwrap();
        let w = TropicalForm::new(chart.clone(), 1, 0, [((vec![0], vec![]), phi.clone())]).unwrap();
        assert_eq!(w.wedge(&one).unwrap(), w);
        assert!(w.wedge(&w).unwrap().is_zero());
        let other = TropicalForm::zero(test_chart(3), 0, 0);
        assert_eq!(w.wedge(&other), Err(Error::ChartMismatch));
    }

    #[test]
    fn random_forms_satisfy_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let m = rng.random_range(1..=3);
            let chart = test_chart(m);
            let p = rng.random_range(0..m);
            let q = rng.random_range(0..m);
            let w = random_form(&mut rng, chart, p, q, 2);
            assert!(w.d().d().is_zero());
            assert!(w.d_sharp().d_sharp().is_zero());
            assert!(w.d().d_sharp().add(&w.d_sharp().d()).unwrap().is_zero());
            let sign = if (p + q) % 2 == 0 { 1 } else { -1 };
            assert_eq!(w.j_op().j_op(), w.scaled(sign, 0));
            w.d().check_vanishing().unwrap();
            w.d_sharp().check_vanishing().unwrap();
            assert_eq!(w.flat().d_prime(), w.d().flat());
        }
    }

    #[test]
    fn graded_commutativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let chart = test_chart(3);
        for _ in 0..20 {
            let (p1, q1, p2, q2) = (rng.random_range(0..2), rng.random_range(0..2), rng.random_range(0..2), rng.random_range(0..2));
            let a = random_form(&mut rng, chart.clone(), p1, q1, 2);
            let b = random_form(&mut rng, chart.clone(), p2, q2, 2);
            let ab = a.wedge(&b).unwrap();
            let sign = if a.degree() * b.degree() % 2 == 0 { 1 } else { -1 };
            let ba = b.wedge(&a).unwrap().scaled(sign, 0);
            assert_eq!(ab, ba);
        }
    }

    #[test]
    fn sign_mutation_breaks_d_squared() {
        let chart = test_chart(2);
        let w = zero_form(rs("(* (bump x1) (bump x2))", 2, &[0, 1]), chart);
        set_sign_mutation(true);
        let dd = w.d().d();
        set_sign_mutation(false);
        assert!(!dd.is_zero());
        assert!(w.d().d().is_zero());
    }

    #[test]
    fn vanishing_is_enforced() {
        let chart = test_chart(1);
        let phi = rs("(bump x1)", 1, &[]);
        assert!(matches!(
            TropicalForm::new(chart, 1, 0, [((vec![0], vec![]), phi)]),
            Err(Error::NotVanishing(_))
        ));
    }
}

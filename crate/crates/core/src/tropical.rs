//! Laurent polynomials over the series field and their tropicalizations.
//!
//! Coordinates on the tropical side are `x = Log|z| = log|z| / λ`, so
//! `Log|t| = -1` and `z - t` tropicalizes to `max(x, -1)`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyhedra::{
    enumerate_vertices, hrep_is_bounded, recession_ray, AffineFormQ, HalfSpace, PseudoCell,
    PseudoPolyhedron,
};
use crate::tseries::{TSeries, TermRecord, Q};

#[derive(Clone, Debug, PartialEq)]
pub struct LaurentPoly {
    n: usize,
    terms: BTreeMap<Vec<i64>, TSeries>,
}

/// `{coeff: [TSeries records], exps: [integers]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LaurentTermSpec {
    pub coeff: Vec<TermRecord>,
    pub exps: Vec<i64>,
}

impl LaurentPoly {
    pub fn new(n: usize, terms: impl IntoIterator<Item = (Vec<i64>, TSeries)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("torus dimension must be at least 1".into()));
        }
        let mut map: BTreeMap<Vec<i64>, TSeries> = BTreeMap::new();
        for (e, c) in terms {
            if e.len() != n {
                return Err(Error::DimMismatch { expected: n, got: e.len() });
            }
            let sum = match map.remove(&e) {
                Some(prev) => &prev + &c,
                None => c,
            };
            if !sum.is_zero_mod_trunc() {
                map.insert(e, sum);
            }
        }
        Ok(LaurentPoly { n, terms: map })
    }

    pub fn monomial(exps: Vec<i64>) -> Self {
        let n = exps.len();
        LaurentPoly::new(n, [(exps, TSeries::one())]).expect("valid monomial")
    }

    /// The coordinate function `z_j` (0-based) on the `n`-torus.
    pub fn coordinate(n: usize, j: usize) -> Self {
        let mut e = vec![0; n];
        e[j] = 1;
        LaurentPoly::monomial(e)
    }

    pub fn from_specs(n: usize, specs: &[LaurentTermSpec]) -> Result<Self> {
        let terms = specs
            .iter()
            .map(|s| Ok((s.exps.clone(), TSeries::from_records(&s.coeff)?)))
            .collect::<Result<Vec<_>>>()?;
        LaurentPoly::new(n, terms)
    }

    pub fn to_specs(&self) -> Vec<LaurentTermSpec> {
        self.terms
            .iter()
            .map(|(e, c)| LaurentTermSpec { coeff: c.to_records(), exps: e.clone() })
            .collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &TSeries)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    /// Exponent of a monomial, `None` otherwise.
    pub fn monomial_exponent(&self) -> Option<&Vec<i64>> {
        if self.is_monomial() {
            self.terms.keys().next()
        } else {
            None
        }
    }

    pub fn mul(&self, other: &LaurentPoly) -> Result<LaurentPoly> {
        if self.n != other.n {
            return Err(Error::DimMismatch { expected: self.n, got: other.n });
        }
        let mut out = Vec::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<i64> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.push((e, ca * cb));
            }
        }
        LaurentPoly::new(self.n, out)
    }

    pub fn tropicalize(&self) -> Result<TropPoly> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| Ok((c.log_norm()?, e.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(TropPoly { n: self.n, terms })
    }

    pub fn eval_complex(&self, z: &[Complex64], t: Complex64) -> Result<Complex64> {
        self.check_point(z)?;
        Ok(self
            .terms
            .iter()
            .map(|(e, c)| c.sample(t) * monomial_value(e, z))
            .sum())
    }

    /// `L_j = z_j ∂f/∂z_j / f`.
    pub fn log_jacobian(&self, z: &[Complex64], t: Complex64) -> Result<Vec<Complex64>> {
        self.check_point(z)?;
        let mut f = Complex64::zero();
        let mut num = vec![Complex64::zero(); self.n];
        let mut scale = 0.0;
        for (e, c) in &self.terms {
            let v = c.sample(t) * monomial_value(e, z);
            scale += v.norm();
            f += v;
            for (nj, &ej) in num.iter_mut().zip(e) {
                *nj += v * ej as f64;
            }
        }
        if f.norm() <= 1e-300 || f.norm() <= 1e-14 * scale {
            return Err(Error::OnZeroLocus);
        }
        Ok(num.into_iter().map(|v| v / f).collect())
    }

    fn check_point(&self, z: &[Complex64]) -> Result<()> {
        if z.len() != self.n {
            return Err(Error::DimMismatch { expected: self.n, got: z.len() });
        }
        if z.iter().any(|v| v.is_zero()) {
            return Err(Error::ZeroCoordinate);
        }
        Ok(())
    }

    /// Coefficients sampled at a concrete `t`, for fast evaluation in log coordinates.
    pub fn sampled(&self, t: Complex64) -> SampledLaurent {
        let terms = self
            .terms
            .iter()
            .filter_map(|(e, c)| {
                let v = c.sample(t);
                (!v.is_zero()).then(|| SampledTerm {
                    log_coeff: v.ln(),
                    exps: e.iter().map(|&x| x as f64).collect(),
                })
            })
            .collect();
        SampledLaurent { n: self.n, terms }
    }
}

fn monomial_value(e: &[i64], z: &[Complex64]) -> Complex64 {
    e.iter()
        .zip(z)
        .fold(Complex64::new(1.0, 0.0), |acc, (&k, &zj)| acc * zj.powi(k as i32))
}

#[derive(Clone, Debug)]
struct SampledTerm {
    log_coeff: Complex64,
    exps: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SampledLaurent {
    n: usize,
    terms: Vec<SampledTerm>,
}

/// Value of a sampled polynomial at `z = exp(w)`.
#[derive(Clone, Debug)]
pub struct LogEval {
    pub log_abs: f64,
    /// `z_j ∂f/∂z_j / f`.
    pub l: Vec<Complex64>,
    /// `|f| / Σ |terms|`, in `[0, 1]`.
    pub cancellation: f64,
}

impl SampledLaurent {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Evaluate at `z_j = exp(w_j)` with the largest term factored out.
    pub fn eval_log(&self, w: &[Complex64]) -> LogEval {
        let mut buf: Vec<Complex64> = Vec::with_capacity(self.terms.len());
        let mut rmax = f64::NEG_INFINITY;
        for term in &self.terms {
            let mut s = term.log_coeff;
            for (e, wj) in term.exps.iter().zip(w) {
                s += wj * *e;
            }
            rmax = rmax.max(s.re);
            buf.push(s);
        }
        let mut sum = Complex64::zero();
        let mut abs_sum = 0.0;
        let mut num = vec![Complex64::zero(); self.n];
        for (term, s) in self.terms.iter().zip(&buf) {
            let v = (s - rmax).exp();
            abs_sum += v.norm();
            sum += v;
            for (nj, e) in num.iter_mut().zip(&term.exps) {
                *nj += v * *e;
            }
        }
        let mag = sum.norm();
        let l = if mag > 0.0 { num.into_iter().map(|v| v / sum).collect() } else { num };
        LogEval {
            log_abs: rmax + mag.ln(),
            l,
            cancellation: if abs_sum > 0.0 { mag / abs_sum } else { 0.0 },
        }
    }
}

/// `w(x) = max_k (offset_k + ⟨slope_k, x⟩)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TropPoly {
    n: usize,
    terms: Vec<(Q, Vec<i64>)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TropPiece {
    pub cell: PseudoPolyhedron,
    pub slope: Vec<i64>,
    pub offset: Q,
}

impl TropPoly {
    pub fn new(n: usize, terms: Vec<(Q, Vec<i64>)>) -> Self {
        TropPoly { n, terms }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(Q, Vec<i64>)] {
        &self.terms
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(o, s)| term_value(*o, s, x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax(&self, x: &[f64]) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (k, (o, s)) in self.terms.iter().enumerate() {
            let v = term_value(*o, s, x);
            if v > best.1 {
                best = (k, v);
            }
        }
        best.0
    }

    /// Constraints `term_j − term_k ≤ 0` for all `j ≠ k`.
    pub fn dominance(&self, k: usize) -> Vec<AffineFormQ> {
        let (ok, sk) = &self.terms[k];
        self.terms
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, (oj, sj))| {
                AffineFormQ::new(
                    sj.iter().zip(sk).map(|(a, b)| Q::from_integer(a - b)).collect(),
                    (oj - ok).to_f64().unwrap_or(f64::NAN),
                )
            })
            .collect()
    }

    /// `term_k(x) + c` as an affine form.
    pub fn term_form(&self, k: usize, c: f64) -> AffineFormQ {
        let (o, s) = &self.terms[k];
        AffineFormQ::new(
            s.iter().map(|&v| Q::from_integer(v)).collect(),
            o.to_f64().unwrap_or(f64::NAN) + c,
        )
    }

    /// All pairwise corner hyperplanes `term_j = term_k`.
    pub fn corner_hyperplanes(&self) -> Vec<AffineFormQ> {
        let mut out = Vec::new();
        for k in 0..self.terms.len() {
            for j in k + 1..self.terms.len() {
                let (ok, sk) = &self.terms[k];
                let (oj, sj) = &self.terms[j];
                out.push(AffineFormQ::new(
                    sj.iter().zip(sk).map(|(a, b)| Q::from_integer(a - b)).collect(),
                    (oj - ok).to_f64().unwrap_or(f64::NAN),
                ));
            }
        }
        out
    }

    pub fn linearity_cells(&self, region: &PseudoPolyhedron) -> Result<Vec<TropPiece>> {
        if region.ambient_dim != self.n {
            return Err(Error::DimMismatch { expected: self.n, got: region.ambient_dim });
        }
        let pieces = region.refine(&[]).map_err(|e| match e {
            Error::UnboundedInput | Error::HasMinusInfinity => Error::UnboundedRegion,
            other => other,
        })?;
        let mut out = Vec::new();
        for piece in pieces {
            for cell in &piece.cells {
                for k in 0..self.terms.len() {
                    let mut c = cell.clone();
                    c.constraints.extend(self.dominance(k));
                    if c.volume()? > 0.0 {
                        out.push(TropPiece {
                            cell: PseudoPolyhedron::from_cell(c.tightened()?),
                            slope: self.terms[k].1.clone(),
                            offset: self.terms[k].0,
                        });
                    }
                }
            }
        }
        Ok(out)
    }
}

fn term_value(o: Q, s: &[i64], x: &[f64]) -> f64 {
    o.to_f64().unwrap_or(f64::NAN) + s.iter().zip(x).map(|(a, b)| *a as f64 * b).sum::<f64>()
}

/// Cells of `R^n` on which every polynomial has a fixed dominant term, one per
/// combination of term choices, each given by its constraint list.
pub fn choice_cells(polys: &[&TropPoly]) -> Vec<(Vec<usize>, Vec<AffineFormQ>)> {
    let mut out: Vec<(Vec<usize>, Vec<AffineFormQ>)> = vec![(Vec::new(), Vec::new())];
    for p in polys {
        let mut next = Vec::with_capacity(out.len() * p.terms.len());
        for (choice, cons) in &out {
            for k in 0..p.terms.len() {
                let mut ch = choice.clone();
                ch.push(k);
                let mut cs = cons.clone();
                cs.extend(p.dominance(k));
                next.push((ch, cs));
            }
        }
        out = next;
    }
    out
}

/// `{x ∈ R^n : (trop g_i(x))_i ∈ target}` as a union of (possibly unbounded) cells.
///
/// Cells found empty are dropped.
pub fn pl_preimage(gs: &[TropPoly], target: &PseudoPolyhedron) -> Result<PseudoPolyhedron> {
    let l = gs.len();
    if target.ambient_dim != l {
        return Err(Error::DimMismatch { expected: l, got: target.ambient_dim });
    }
    let n = gs.first().map(|g| g.n).unwrap_or(0);
    let refs: Vec<&TropPoly> = gs.iter().collect();
    let mut cells = Vec::new();
    for (choice, cons) in choice_cells(&refs) {
        for tc in &target.cells {
            let mut cell = PseudoCell::full(n);
            cell.constraints = cons.clone();
            for i in 0..l {
                let g = &gs[i];
                if tc.upper[i].is_finite() {
                    cell.constraints.push(g.term_form(choice[i], -tc.upper[i]));
                } else if tc.upper[i] == f64::NEG_INFINITY {
                    cell.constraints.clear();
                    cell.upper = vec![f64::NEG_INFINITY; n];
                    break;
                }
                let lo = tc.lower_of(i);
                if lo.is_finite() {
                    cell.constraints.push(g.term_form(choice[i], -lo).negated());
                }
            }
            if cell.upper.contains(&f64::NEG_INFINITY) {
                continue;
            }
            for c in &tc.constraints {
                let mut lin = vec![Q::zero(); n];
                let mut constant = c.constant;
                for i in 0..l {
                    let a = c.linear[i];
                    if a.is_zero() {
                        continue;
                    }
                    let (o, s) = &gs[i].terms[choice[i]];
                    for (lj, &sj) in lin.iter_mut().zip(s) {
                        *lj += a * Q::from_integer(sj);
                    }
                    constant += (a * o).to_f64().unwrap_or(f64::NAN);
                }
                cell.constraints.push(AffineFormQ::new(lin, constant));
            }
            if is_feasible(&cell)? {
                cells.push(cell);
            }
        }
    }
    PseudoPolyhedron::new(n, cells)
}

/// Feasibility of a finite cell, by vertex search inside a large box.
pub fn is_feasible(cell: &PseudoCell) -> Result<bool> {
    const FAR: f64 = 1e6;
    let mut hs = cell.halfspaces()?;
    let m = cell.dim();
    for i in 0..m {
        let mut a = vec![0.0; m];
        a[i] = 1.0;
        hs.push(HalfSpace { a: a.clone(), b: FAR });
        a[i] = -1.0;
        hs.push(HalfSpace { a, b: FAR });
    }
    Ok(!enumerate_vertices(&hs, m).is_empty())
}

/// Bounding box of a union of finite cells; `Err(UnboundedRegion)` if any
/// non-empty cell is unbounded, `None` if the union is empty.
pub fn bounded_box(p: &PseudoPolyhedron) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    let m = p.ambient_dim;
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    let mut any = false;
    for c in &p.cells {
        if !is_feasible(c)? {
            continue;
        }
        let hs = c.halfspaces()?;
        if !hrep_is_bounded(&hs, m) {
            return Err(Error::UnboundedRegion);
        }
        for v in enumerate_vertices(&hs, m) {
            any = true;
            for i in 0..m {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
    }
    Ok(any.then_some((lo, hi)))
}

/// A direction along which a non-empty cell of `p` is unbounded.
pub fn unbounded_direction(p: &PseudoPolyhedron) -> Result<Option<Vec<f64>>> {
    for c in &p.cells {
        if !is_feasible(c)? {
            continue;
        }
        if let Some(r) = recession_ray(&c.halfspaces()?, p.ambient_dim) {
            return Ok(Some(r));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// `z - t`
    fn z_minus_t() -> LaurentPoly {
        LaurentPoly::new(1, [(vec![1], TSeries::one()), (vec![0], -TSeries::t())]).unwrap()
    }

    /// `z^2 + t z`
    fn z2_plus_tz() -> LaurentPoly {
        LaurentPoly::new(1, [(vec![2], TSeries::one()), (vec![1], TSeries::t())]).unwrap()
    }

    #[test]
    fn tropicalize_examples() {
        let w = LaurentPoly::monomial(vec![1]).tropicalize().unwrap();
        for x in [-2.0, 0.0, 3.5] {
            assert_eq!(w.eval(&[x]), x);
        }
        let w = z_minus_t().tropicalize().unwrap();
        assert_eq!(w.eval(&[-3.0]), -1.0);
        assert_eq!(w.eval(&[0.5]), 0.5);
        assert_eq!(
            LaurentPoly::new(1, Vec::<(Vec<i64>, TSeries)>::new()).unwrap().tropicalize(),
            Err(Error::ZeroPolynomial)
        );
    }

    #[test]
    fn tropicalize_matches_sampled_log() {
        let f = z2_plus_tz();
        let w = f.tropicalize().unwrap();
        let t = 1e-6;
        let lambda = -f64::ln(t);
        for x in [-2.0, -1.5, 0.0, 1.0] {
            let z = Complex64::from_polar((lambda * x).exp(), 0.7);
            let v = f.eval_complex(&[z], c(t, 0.0)).unwrap();
            assert!((v.norm().ln() / lambda - w.eval(&[x])).abs() < 0.05, "x = {x}");
        }
    }

    #[test]
    fn linearity_cells_examples() {
        let w = z_minus_t().tropicalize().unwrap();
        let region = PseudoPolyhedron::from_box(vec![-3.0], vec![3.0]);
        let mut pieces = w.linearity_cells(&region).unwrap();
        pieces.sort_by(|a, b| a.cell.cells[0].lower[0].total_cmp(&b.cell.cells[0].lower[0]));
        assert_eq!(pieces.len(), 2);
        assert_eq!(pieces[0].slope, vec![0]);
        assert_eq!(pieces[0].offset, Q::from_integer(-1));
        assert!((pieces[0].cell.cells[0].upper[0] + 1.0).abs() < 1e-12);
        assert_eq!(pieces[1].slope, vec![1]);
        assert!((pieces[1].cell.cells[0].lower[0] + 1.0).abs() < 1e-12);

        let affine = LaurentPoly::monomial(vec![2]).tropicalize().unwrap();
        assert_eq!(affine.linearity_cells(&region).unwrap().len(), 1);

        let w = z2_plus_tz().tropicalize().unwrap();
        let region = PseudoPolyhedron::from_box(vec![-4.0], vec![2.0]);
        let pieces = w.linearity_cells(&region).unwrap();
        assert_eq!(pieces.len(), 2);
        for p in &pieces {
            let cell = &p.cell.cells[0];
            for k in 1..20 {
                let x = cell.lower[0] + (cell.upper[0] - cell.lower[0]) * k as f64 / 20.0;
                assert_eq!(w.terms()[w.argmax(&[x])].1, p.slope);
            }
        }
        let breaks: Vec<f64> = pieces.iter().map(|p| p.cell.cells[0].upper[0]).collect();
        assert!(breaks.iter().any(|b| (b + 1.0).abs() < 1e-12));

        let half = PseudoPolyhedron::from_box(vec![0.0], vec![f64::INFINITY]);
        assert_eq!(w.linearity_cells(&half), Err(Error::UnboundedRegion));
    }

    #[test]
    fn eval_complex_examples() {
        let t = c(1e-3, 0.0);
        assert_eq!(LaurentPoly::monomial(vec![1]).eval_complex(&[c(0.0, 2.0)], t).unwrap(), c(0.0, 2.0));
        assert_eq!(z_minus_t().eval_complex(&[t], t).unwrap(), c(0.0, 0.0));
        let f = LaurentPoly::new(2, [(vec![1, -1], TSeries::one()), (vec![0, 0], TSeries::one())]).unwrap();
        assert_eq!(f.eval_complex(&[c(1.0, 0.0), c(1.0, 0.0)], t).unwrap(), c(2.0, 0.0));
        assert_eq!(
            LaurentPoly::monomial(vec![1]).eval_complex(&[c(0.0, 0.0)], t),
            Err(Error::ZeroCoordinate)
        );
    }

    #[test]
    fn log_jacobian_examples() {
        let t = c(1e-6, 0.0);
        for m in [-2, 1, 3] {
            let l = LaurentPoly::monomial(vec![m]).log_jacobian(&[c(0.3, 1.7)], t).unwrap();
            assert!((l[0] - c(m as f64, 0.0)).norm() < 1e-14);
        }
        let l = LaurentPoly::monomial(vec![1, 1]).log_jacobian(&[c(2.0, 1.0), c(-1.0, 0.5)], t).unwrap();
        assert!((l[0] - c(1.0, 0.0)).norm() < 1e-14 && (l[1] - c(1.0, 0.0)).norm() < 1e-14);

        // finite-difference oracle on z - t at z = 1
        let f = z_minus_t();
        let z = c(1.0, 0.0);
        let h = 1e-6;
        let fd = (f.eval_complex(&[z * (1.0 + h)], t).unwrap() - f.eval_complex(&[z * (1.0 - h)], t).unwrap())
            / (2.0 * h)
            / f.eval_complex(&[z], t).unwrap();
        let l = f.log_jacobian(&[z], t).unwrap()[0];
        assert!((l - fd).norm() < 1e-5);
        assert!((l - c(1.0, 0.0)).norm() < 2e-6);
        assert_eq!(f.log_jacobian(&[t], t), Err(Error::OnZeroLocus));
    }

    #[test]
    fn sampled_eval_matches_direct() {
        let f = z2_plus_tz();
        let t = c(1e-4, 0.0);
        let s = f.sampled(t);
        let lambda = -t.re.ln();
        for (x, th) in [(-1.7, 0.3), (0.4, 2.0), (-0.9, 5.9)] {
            let w = c(lambda * x, th);
            let z = w.exp();
            let e = s.eval_log(&[w]);
            let direct = f.eval_complex(&[z], t).unwrap();
            assert!((e.log_abs - direct.norm().ln()).abs() < 1e-12);
            let l = f.log_jacobian(&[z], t).unwrap();
            assert!((e.l[0] - l[0]).norm() < 1e-10);
        }
    }

    #[test]
    fn pl_preimage_examples() {
        let g = LaurentPoly::monomial(vec![1]).tropicalize().unwrap();
        let target = PseudoPolyhedron::from_box(vec![0.0], vec![1.0]);
        let pre = pl_preimage(std::slice::from_ref(&g), &target).unwrap();
        let (lo, hi) = bounded_box(&pre).unwrap().unwrap();
        assert!((lo[0] - 0.0).abs() < 1e-12 && (hi[0] - 1.0).abs() < 1e-12);

        let g2 = z_minus_t().tropicalize().unwrap();
        let target = PseudoPolyhedron::from_box(vec![0.0, 0.0], vec![1.0, 1.0]);
        let pre = pl_preimage(&[g.clone(), g2.clone()], &target).unwrap();
        assert!(bounded_box(&pre).unwrap().is_some());

        // trop(z - t) ∈ [-1, 0] is unbounded below
        let target = PseudoPolyhedron::from_box(vec![-1.0], vec![0.0]);
        let pre = pl_preimage(&[g2], &target).unwrap();
        assert_eq!(bounded_box(&pre), Err(Error::UnboundedRegion));
        let r = unbounded_direction(&pre).unwrap().unwrap();
        assert!(r[0] < 0.0);
    }

    #[test]
    fn product_tropicalizes_to_sum() {
        let f = z_minus_t();
        let g = z2_plus_tz();
        let fg = f.mul(&g).unwrap();
        let (wf, wg, wfg) = (f.tropicalize().unwrap(), g.tropicalize().unwrap(), fg.tropicalize().unwrap());
        for k in 0..50 {
            let x = -4.0 + 0.13 * k as f64;
            assert!((wfg.eval(&[x]) - wf.eval(&[x]) - wg.eval(&[x])).abs() < 1e-12);
        }
    }
}

//! Integration of tropical forms over skeleton regions by cell refinement and
//! slope determinants.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{Key, NAForm};
use crate::polyhedra::{int_det, PseudoCell, PseudoPolyhedron};
use crate::quadrature::{simplex_rule, subdivide_simplex, Neumaier};
use crate::tropical::{choice_cells, pl_preimage, unbounded_direction, LaurentPoly, TropPoly};

/// Thickening used when probing compactness.
pub const PROBE_EPS: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub enum Compactness {
    Compact,
    NonCompact(Vec<f64>),
    Undetermined,
}

pub fn check_compact(g: &[LaurentPoly], pi: &PseudoPolyhedron) -> Result<Compactness> {
    let n = match g.first() {
        Some(g0) => g0.n(),
        None => return Ok(Compactness::Undetermined),
    };
    if pi.ambient_dim != g.len() {
        return Err(Error::DimMismatch { expected: g.len(), got: pi.ambient_dim });
    }
    let open_below = pi.cells.iter().any(|c| c.minus_inf.iter().any(|&i| !g[i].is_monomial()));
    let tg: Vec<TropPoly> = g.iter().map(|p| p.tropicalize()).collect::<Result<_>>()?;
    let region = pl_preimage(&tg, &pi.thicken(PROBE_EPS)?)?;
    if let Some(ray) = unbounded_direction(&region)? {
        return Ok(Compactness::NonCompact(ray));
    }
    if open_below && n >= 2 {
        return Ok(Compactness::Undetermined);
    }
    Ok(Compactness::Compact)
}

/// `{x : trop g(x) ∈ P}` for a compact choice of `(g, P)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonRegion {
    pub x_p: PseudoPolyhedron,
    pub g: Vec<LaurentPoly>,
    pub p: PseudoPolyhedron,
}

impl SkeletonRegion {
    pub fn new(g: Vec<LaurentPoly>, p: PseudoPolyhedron) -> Result<Self> {
        match check_compact(&g, &p)? {
            Compactness::Compact => {}
            _ => return Err(Error::NonCompactDomain),
        }
        let tg: Vec<TropPoly> = g.iter().map(|q| q.tropicalize()).collect::<Result<_>>()?;
        let x_p = pl_preimage(&tg, &p)?;
        Ok(SkeletonRegion { x_p, g, p })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellContribution {
    pub cell: PseudoPolyhedron,
    pub key: Key,
    /// `det(M_I)·det(M_J)` from the slopes on the cell.
    pub weight: i64,
    /// `∫_cell φ(trop f(x)) dx`, before weighting.
    pub integral: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Warning {
    /// Non-monomial charts in dimension at least two: slope weights may miss
    /// multiplicities on corner loci.
    AdvisoryMultiplicity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NaResult {
    pub value: f64,
    pub cells: Vec<CellContribution>,
    pub warnings: Vec<Warning>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NaConfig {
    pub order: usize,
    /// Simplex subdivision depth; `None` picks by dimension.
    pub depth: Option<usize>,
}

impl Default for NaConfig {
    fn default() -> Self {
        NaConfig { order: 12, depth: None }
    }
}

fn orientation_sign(n: usize) -> f64 {
    if (n * n.saturating_sub(1) / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub fn integrate_na(w: &NAForm, region: &SkeletonRegion, cfg: &NaConfig) -> Result<NaResult> {
    let form = w.inner();
    let chart = form.chart();
    let n = chart.n;
    if form.bidegree() != (n, n) {
        return Err(Error::Validation(format!("expected an ({n}, {n})-form, got {:?}", form.bidegree())));
    }
    if region.x_p.ambient_dim != n {
        return Err(Error::DimMismatch { expected: n, got: region.x_p.ambient_dim });
    }
    if cfg.order == 0 {
        return Err(Error::Validation("quadrature order must be positive".into()));
    }
    let depth = cfg.depth.unwrap_or(if n == 1 { 6 } else { 4 });
    let tf: Vec<TropPoly> = chart.f.iter().map(|f| f.tropicalize()).collect::<Result<_>>()?;
    let tf_refs: Vec<&TropPoly> = tf.iter().collect();
    let choices = choice_cells(&tf_refs);

    let mut warnings = Vec::new();
    let mut jobs: Vec<(PseudoCell, Key, i64)> = Vec::new();
    for ((iset, jset), phi) in form.coeffs() {
        let support = match phi.support_bound() {
            Ok(s) => Some(pl_preimage(&tf, &s)?),
            Err(Error::UnboundedSupport) => None,
            Err(e) => return Err(e),
        };
        let area = match support {
            Some(s) => region.x_p.intersect(&s),
            None => region.x_p.clone(),
        };
        if area.is_empty() {
            continue;
        }
        if n >= 2 && iset.iter().chain(jset).any(|&k| !chart.f[k].is_monomial()) && warnings.is_empty() {
            warnings.push(Warning::AdvisoryMultiplicity);
        }
        for piece in area.refine(&[])? {
            for (choice, cons) in &choices {
                let mut cell = piece.cells[0].clone();
                cell.constraints.extend(cons.iter().cloned());
                if cell.volume()? <= 0.0 {
                    continue;
                }
                let slope = |k: usize| tf[k].terms()[choice[k]].1.clone();
                let mi: Vec<Vec<i64>> = iset.iter().map(|&k| slope(k)).collect();
                let mj: Vec<Vec<i64>> = jset.iter().map(|&k| slope(k)).collect();
                let weight = int_det(&mi) * int_det(&mj);
                if weight != 0 {
                    jobs.push((cell, (iset.clone(), jset.clone()), weight));
                }
            }
        }
    }

    let compiled: std::collections::BTreeMap<&Key, _> =
        form.coeffs().iter().map(|(k, phi)| (k, phi.compile())).collect();
    let results: Vec<Result<CellContribution>> = jobs
        .into_par_iter()
        .map(|(cell, key, weight)| {
            let phi = &compiled[&key];
            let mut scratch = Vec::new();
            let mut sum = Neumaier::default();
            for simplex in cell.triangulate()? {
                for sub in subdivide_simplex(&simplex, depth) {
                    for (x, wgt) in simplex_rule(&sub, cfg.order) {
                        let y: Vec<f64> = tf.iter().map(|p| p.eval(&x)).collect();
                        sum.add(wgt * phi.eval(&y, &mut scratch));
                    }
                }
            }
            Ok(CellContribution { cell: PseudoPolyhedron::from_cell(cell), key, weight, integral: sum.value() })
        })
        .collect();
    let cells: Vec<CellContribution> = results.into_iter().collect::<Result<_>>()?;
    let mut total = Neumaier::default();
    for c in &cells {
        total.add(c.weight as f64 * c.integral);
    }
    Ok(NaResult { value: orientation_sign(n) * total.value(), cells, warnings })
}

/// Number of solutions of `f(z) = w` with `Log|z|` at `x`, for a target `w`
/// with `Log|w| = trop f(x)`.
pub fn sheet_count(f: &[LaurentPoly], x: &[f64], t: Complex64, tol: f64) -> Result<usize> {
    let n = x.len();
    if f.len() != n {
        return Err(Error::DimMismatch { expected: n, got: f.len() });
    }
    if !(t.norm() > 0.0 && t.norm() < 1.0) {
        return Err(Error::Validation(format!("need 0 < |t| < 1, got {t}")));
    }
    if f.iter().all(|p| p.is_monomial()) {
        let m: Vec<Vec<i64>> = f.iter().map(|p| p.monomial_exponent().cloned().unwrap_or_default()).collect();
        return Ok(int_det(&m).unsigned_abs() as usize);
    }
    if n != 1 {
        return Err(Error::Unsupported("sheet counting for non-monomial charts needs n = 1".into()));
    }
    let lambda = -t.norm().ln();
    let x0 = x[0];
    let target_log = f[0].tropicalize()?.eval(x);
    // z = e^{λ x0} u, w = e^{λ trop f(x)} e^{iφ}; divide through by |w|.
    let phase = Complex64::from_polar(1.0, 2.399_963_229_728_653);
    let emin = f[0].terms().map(|(e, _)| e[0]).min().unwrap_or(0).min(0);
    let emax = f[0].terms().map(|(e, _)| e[0]).max().unwrap_or(0).max(0);
    let deg = (emax - emin) as usize;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); deg + 1];
    for (e, c) in f[0].terms() {
        let scale = (lambda * (e[0] as f64 * x0 - target_log)).exp();
        coeffs[(e[0] - emin) as usize] += c.sample(t) * scale;
    }
    coeffs[(-emin) as usize] -= phase;
    let roots = poly_roots(&coeffs)?;
    let mut count = 0;
    for r in roots {
        if r.norm() == 0.0 {
            continue;
        }
        let dy = r.norm().ln() / lambda;
        if dy.abs() <= tol {
            count += 1;
        } else if dy.abs() <= 2.0 * tol {
            return Err(Error::IllConditioned);
        }
    }
    Ok(count)
}

/// Roots of `Σ c_k u^k` from the companion matrix.
fn poly_roots(c: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut c = c.to_vec();
    while c.last().is_some_and(|v| v.norm() == 0.0) {
        c.pop();
    }
    let lead_zeros = c.iter().take_while(|v| v.norm() == 0.0).count();
    let c = &c[lead_zeros..];
    let d = c.len().saturating_sub(1);
    if d == 0 {
        return Ok(Vec::new());
    }
    let lead = c[d];
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for i in 1..d {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..d {
        m[(i, d - 1)] = -c[i] / lead;
    }
    m.eigenvalues().map(|v| v.iter().copied().collect()).ok_or(Error::IllConditioned)
}

/// Upper bound on the number of sheets of `f` over a point.
pub fn sheet_bound(f: &[LaurentPoly], n: usize) -> f64 {
    let spans: Vec<f64> = f
        .iter()
        .map(|p| {
            (0..n)
                .map(|j| {
                    let lo = p.terms().map(|(e, _)| e[j]).min().unwrap_or(0);
                    let hi = p.terms().map(|(e, _)| e[j]).max().unwrap_or(0);
                    let abs_max = p.terms().map(|(e, _)| e[j].abs()).max().unwrap_or(0);
                    (hi - lo).max(abs_max) as f64
                })
                .sum::<f64>()
        })
        .collect();
    if f.iter().all(|p| p.is_monomial()) {
        let exps: Vec<Vec<i64>> = f.iter().map(|p| p.monomial_exponent().cloned().unwrap_or_default()).collect();
        return subsets(f.len(), n)
            .into_iter()
            .map(|s| int_det(&s.iter().map(|&k| exps[k].clone()).collect::<Vec<_>>()).unsigned_abs() as f64)
            .fold(1.0, f64::max);
    }
    let mut sorted = spans;
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted.iter().take(n).product::<f64>().max(1.0)
}

fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if m < k {
        return Vec::new();
    }
    let mut out = subsets(m - 1, k);
    for mut s in subsets(m - 1, k - 1) {
        s.push(m - 1);
        out.push(s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{parse_expr, ReasonablySmooth};
    use crate::forms::{Chart, TropicalForm};
    use crate::tseries::TSeries;
    use std::sync::Arc;

    fn zmt() -> LaurentPoly {
        LaurentPoly::new(1, [(vec![2], TSeries::one()), (vec![1], -TSeries::t())]).unwrap()
    }

    fn bump_form(f: LaurentPoly, expr: &str) -> NAForm {
        let chart = Arc::new(Chart::new(1, vec![f]).unwrap());
        let phi = ReasonablySmooth::global(parse_expr(expr, 1).unwrap(), [0].into()).unwrap();
        TropicalForm::new(chart, 1, 1, [((vec![0], vec![0]), phi)]).unwrap().flat()
    }

    fn interval(lo: f64, hi: f64) -> SkeletonRegion {
        SkeletonRegion::new(vec![LaurentPoly::monomial(vec![1])], PseudoPolyhedron::from_box(vec![lo], vec![hi])).unwrap()
    }

    const BUMP_INTEGRAL: f64 = 1.2069003224378765;

    #[test]
    fn compactness_examples() {
        let z = LaurentPoly::monomial(vec![1]);
        assert_eq!(check_compact(std::slice::from_ref(&z), &PseudoPolyhedron::from_box(vec![0.0], vec![1.0])).unwrap(), Compactness::Compact);
        assert!(matches!(
            check_compact(&[z], &PseudoPolyhedron::from_box(vec![0.0], vec![f64::INFINITY])).unwrap(),
            Compactness::NonCompact(_)
        ));
        let g = vec![LaurentPoly::monomial(vec![1, 1]), LaurentPoly::monomial(vec![1, -1])];
        let unit = PseudoPolyhedron::from_box(vec![0.0, 0.0], vec![1.0, 1.0]);
        assert_eq!(check_compact(&g, &unit).unwrap(), Compactness::Compact);
    }

    #[test]
    fn monomial_square_doubles() {
        let w = bump_form(LaurentPoly::monomial(vec![2]), "(bump x1)");
        let r = integrate_na(&w, &interval(-3.0, 3.0), &NaConfig::default()).unwrap();
        assert!((r.value - 2.0 * BUMP_INTEGRAL).abs() < 1e-10, "{}", r.value);
        assert!(r.cells.iter().all(|c| c.weight == 4));
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn intro_example_matches_cell_formula() {
        let chart = Arc::new(Chart::new(1, vec![LaurentPoly::monomial(vec![1]), zmt()]).unwrap());
        let mut c1 = PseudoCell::full_extended(2);
        c1.upper = vec![-5.0, -5.0];
        let mut c2 = PseudoCell::full(2);
        c2.minus_inf = [1].into();
        c2.lower[0] = -5.0;
        let dom = PseudoPolyhedron::new(2, vec![c1, c2]).unwrap();
        let phi = ReasonablySmooth::new(parse_expr("(bump (affine [1/2] 1/2 x2))", 2).unwrap(), dom, [0, 1].into()).unwrap();
        let w = TropicalForm::new(chart, 1, 1, [((vec![0], vec![0]), phi)]).unwrap().flat();
        let r = integrate_na(&w, &interval(-4.0, 2.0), &NaConfig::default()).unwrap();
        assert!((r.value - 1.3553095762745941).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn zero_and_empty() {
        let chart = Arc::new(Chart::new(1, vec![LaurentPoly::monomial(vec![1])]).unwrap());
        let w = TropicalForm::zero(chart, 1, 1).flat();
        assert_eq!(integrate_na(&w, &interval(-1.0, 1.0), &NaConfig::default()).unwrap().value, 0.0);
        let w = bump_form(LaurentPoly::monomial(vec![1]), "(bump x1)");
        assert_eq!(integrate_na(&w, &interval(5.0, 6.0), &NaConfig::default()).unwrap().value, 0.0);
    }

    #[test]
    fn refinement_independence() {
        let w = bump_form(LaurentPoly::monomial(vec![1]), "(bump (affine [2] 1/3 x1))");
        let a = integrate_na(&w, &interval(-2.0, 2.0), &NaConfig::default()).unwrap().value;
        let b = integrate_na(&w, &interval(-2.0, 2.0), &NaConfig { order: 12, depth: Some(7) }).unwrap().value;
        assert!((a - b).abs() <= 1e-10 * a.abs());
        assert!((a - BUMP_INTEGRAL / 2.0).abs() < 1e-10);
    }

    #[test]
    fn sheet_counts() {
        let t = Complex64::new(1e-6, 0.0);
        assert_eq!(sheet_count(&[LaurentPoly::monomial(vec![1])], &[0.3], t, 0.05).unwrap(), 1);
        assert_eq!(sheet_count(&[LaurentPoly::monomial(vec![2])], &[0.3], t, 0.05).unwrap(), 2);
        assert_eq!(sheet_count(&[zmt()], &[0.5], t, 0.05).unwrap(), 2);
        assert_eq!(sheet_count(&[zmt()], &[-2.0], t, 0.05).unwrap(), 1);
    }

    #[test]
    fn sheet_bounds() {
        assert_eq!(sheet_bound(&[zmt()], 1), 2.0);
        let m = vec![LaurentPoly::monomial(vec![2, 1]), LaurentPoly::monomial(vec![1, 1])];
        assert_eq!(sheet_bound(&m, 2), 1.0);
    }
}

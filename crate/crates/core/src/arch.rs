//! Integration of top-degree forms over `(Log|g|)^{-1}(Π_ε)` in log-polar
//! coordinates `z_j = exp(λ x_j + i θ_j)` at a concrete small `t`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{CompiledExpr, TWO_PI};
use crate::error::{Error, Result};
use crate::forms::TropicalForm;
use crate::polyhedra::{PseudoCell, PseudoPolyhedron};
use crate::quadrature::{
    binomial, composite_rule, det_small, kronecker_alphas, kronecker_point, panel_edges,
    periodic_midpoints, Neumaier,
};
use crate::tropical::{bounded_box, choice_cells, pl_preimage, LaurentPoly, SampledLaurent, TropPoly};

#[derive(Clone, Debug, PartialEq)]
pub struct ArchDomain {
    pub g: Vec<LaurentPoly>,
    pub pi: PseudoPolyhedron,
    pub eps: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadMethod {
    TensorGauss,
    Qmc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadConfig {
    /// Gauss–Legendre order per panel.
    pub x_nodes_per_axis: usize,
    /// Minimum number of panels per axis.
    pub x_panels: usize,
    pub theta_nodes_per_axis: usize,
    pub method: QuadMethod,
    pub qmc_samples: usize,
    /// Nodes where `|h| < guard_delta · Σ|terms of h|` for some `f_k` or `g_k` are skipped.
    pub guard_delta: f64,
    pub seed: u64,
    pub max_nodes: u64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            x_nodes_per_axis: 12,
            x_panels: 64,
            theta_nodes_per_axis: 128,
            method: QuadMethod::TensorGauss,
            qmc_samples: 1 << 18,
            guard_delta: 1e-12,
            seed: 0,
            max_nodes: 200_000_000,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.x_nodes_per_axis < 2 || self.x_panels == 0 || self.theta_nodes_per_axis < 2 || self.qmc_samples == 0 {
            return Err(Error::Validation("quadrature counts must be positive (orders at least 2)".into()));
        }
        if self.guard_delta.is_nan() || self.guard_delta <= 0.0 {
            return Err(Error::Validation("guard_delta must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegralResult {
    pub value: Complex64,
    pub abs_value: f64,
    pub est_error: f64,
    pub nodes_used: u64,
    pub nodes_skipped: u64,
    /// Largest `|Log|f_k||` at nodes with nonzero integrand.
    pub sup_log: f64,
    /// Largest coefficient magnitude at nodes with nonzero integrand.
    pub sup_phi: f64,
}

impl IntegralResult {
    fn zero() -> Self {
        IntegralResult {
            value: Complex64::new(0.0, 0.0),
            abs_value: 0.0,
            est_error: 0.0,
            nodes_used: 0,
            nodes_skipped: 0,
            sup_log: 0.0,
            sup_phi: 0.0,
        }
    }
}

/// `C(m, n)² · N · d · (2A)^n`.
pub fn a_priori_bound(m: usize, n: usize, sup_phi: f64, d: f64, a: f64) -> f64 {
    binomial(m, n).powi(2) * sup_phi * d * (2.0 * a).powi(n as i32)
}

fn tropicalize_all(ps: &[LaurentPoly]) -> Result<Vec<TropPoly>> {
    ps.iter().map(|p| p.tropicalize()).collect()
}

fn check_top_degree(w: &TropicalForm) -> Result<usize> {
    let n = w.chart().n;
    if w.bidegree() != (n, n) {
        return Err(Error::Validation(format!(
            "expected an ({n}, {n})-form, got {:?}",
            w.bidegree()
        )));
    }
    Ok(n)
}

/// Bounding box in `x` of the integration region, widened by one unit of
/// tropical slack; `None` when the region is empty.
pub fn domain_box(dom: &ArchDomain, w: &TropicalForm) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    let n = w.chart().n;
    if dom.g.iter().any(|g| g.n() != n) {
        return Err(Error::DimMismatch { expected: n, got: dom.g.iter().map(|g| g.n()).find(|&k| k != n).unwrap_or(n) });
    }
    if w.is_zero() || dom.pi.is_empty() {
        return Ok(None);
    }
    let tg = tropicalize_all(&dom.g)?;
    let tf = tropicalize_all(&w.chart().f)?;
    let target = pl_preimage(&tg, &dom.pi.thicken(dom.eps + 1.0)?)?;
    let mut support = PseudoPolyhedron::empty(n);
    for phi in w.coeffs().values() {
        let s = match phi.support_bound() {
            Ok(s) => s,
            Err(Error::UnboundedSupport) => PseudoPolyhedron::from_cell(PseudoCell::full_extended(phi.m())),
            Err(e) => return Err(e),
        };
        support = support.union(&pl_preimage(&tf, &s.thicken(1.0)?)?);
    }
    let region = target.intersect(&support);
    bounded_box(&region).map_err(|e| match e {
        Error::UnboundedRegion => Error::NonCompactDomain,
        other => other,
    })
}

struct Integrand {
    n: usize,
    lambda: f64,
    f: Vec<SampledLaurent>,
    g: Vec<SampledLaurent>,
    pi: PseudoPolyhedron,
    terms: Vec<(Vec<usize>, Vec<usize>, CompiledExpr)>,
    guard: f64,
    norm: f64,
    sign: f64,
}

#[derive(Clone, Copy, Debug, Default)]
struct Partial {
    sum: Neumaier,
    abs: Neumaier,
    used: u64,
    skipped: u64,
    sup_log: f64,
    sup_phi: f64,
}

impl Partial {
    fn merge(&mut self, o: &Partial) {
        self.sum.merge(&o.sum);
        self.abs.merge(&o.abs);
        self.used += o.used;
        self.skipped += o.skipped;
        self.sup_log = self.sup_log.max(o.sup_log);
        self.sup_phi = self.sup_phi.max(o.sup_phi);
    }
}

impl Integrand {
    /// Integrand density at `(x, θ)`, or `None` when the node is skipped.
    fn eval(&self, x: &[f64], theta: &[f64], scratch: &mut Vec<f64>, acc: &mut Partial, weight: f64) {
        let w: Vec<Complex64> = x.iter().zip(theta).map(|(xi, th)| Complex64::new(self.lambda * xi, *th)).collect();
        let mut glog = Vec::with_capacity(self.g.len());
        for g in &self.g {
            let e = g.eval_log(&w);
            if e.cancellation < self.guard {
                acc.skipped += 1;
                return;
            }
            glog.push(e.log_abs / self.lambda);
        }
        acc.used += 1;
        if !self.pi.contains_slice(&glog) {
            return;
        }
        let mut xs = Vec::with_capacity(self.f.len());
        let mut ls = Vec::with_capacity(self.f.len());
        for f in &self.f {
            let e = f.eval_log(&w);
            if e.cancellation < self.guard {
                acc.used -= 1;
                acc.skipped += 1;
                return;
            }
            xs.push(e.log_abs / self.lambda);
            ls.push(e.l);
        }
        let n = self.n;
        let mut total = 0.0;
        let mut any = false;
        let mut sup_phi: f64 = 0.0;
        for (iset, jset, phi) in &self.terms {
            let v = phi.eval(&xs, scratch);
            if v == 0.0 {
                continue;
            }
            any = true;
            sup_phi = sup_phi.max(v.abs());
            let mut b: Vec<Vec<f64>> = Vec::with_capacity(2 * n);
            for &i in iset {
                let mut row = Vec::with_capacity(2 * n);
                row.extend(ls[i].iter().map(|l| l.re));
                row.extend(ls[i].iter().map(|l| -l.im / self.lambda));
                b.push(row);
            }
            for &j in jset {
                let mut row = Vec::with_capacity(2 * n);
                row.extend(ls[j].iter().map(|l| self.lambda * l.im));
                row.extend(ls[j].iter().map(|l| l.re));
                b.push(row);
            }
            total += v * det_small(&b);
        }
        if !any {
            return;
        }
        acc.sup_phi = acc.sup_phi.max(sup_phi);
        acc.sup_log = acc.sup_log.max(xs.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        let val = self.sign * total * self.norm * weight;
        acc.sum.add(val);
        acc.abs.add(val.abs());
    }
}

/// Cut points per axis: vertices of the domain and corner arrangements,
/// with graded points around tropical corners.
fn axis_cuts(
    lo: &[f64],
    hi: &[f64],
    tf: &[TropPoly],
    tg: &[TropPoly],
    pi_eps: &PseudoPolyhedron,
    supports: &[PseudoPolyhedron],
    lambda: f64,
) -> Result<Vec<Vec<f64>>> {
    let n = lo.len();
    let mut cuts = vec![Vec::new(); n];
    let clip = |mut c: PseudoCell| {
        for i in 0..n {
            c.lower[i] = c.lower[i].max(lo[i]);
            c.upper[i] = c.upper[i].min(hi[i]);
        }
        c
    };
    let nonmono: Vec<&TropPoly> = tf.iter().chain(tg).filter(|p| p.terms().len() > 1).collect();
    for (_, cons) in choice_cells(&nonmono) {
        let mut c = PseudoCell::from_box(lo.to_vec(), hi.to_vec());
        c.constraints = cons;
        if c.box_is_empty() {
            continue;
        }
        for v in c.vertices()? {
            for i in 0..n {
                let on_corner = v[i] > lo[i] + 1e-12 && v[i] < hi[i] - 1e-12;
                cuts[i].push(v[i]);
                if on_corner {
                    for s in [0.25, 0.5, 1.0, 2.0, 4.0] {
                        cuts[i].push(v[i] - s / lambda);
                        cuts[i].push(v[i] + s / lambda);
                    }
                }
            }
        }
    }
    let mut regions = vec![pl_preimage(tg, pi_eps)?];
    for phi in supports {
        regions.push(pl_preimage(tf, phi)?);
    }
    for c in regions.into_iter().flat_map(|r| r.cells) {
        let c = clip(c);
        if c.box_is_empty() {
            continue;
        }
        for v in c.vertices()? {
            for i in 0..n {
                cuts[i].push(v[i]);
            }
        }
    }
    Ok(cuts)
}

fn build_integrand(w: &TropicalForm, dom: &ArchDomain, t: Complex64, cfg: &QuadConfig) -> Result<Integrand> {
    let n = w.chart().n;
    let lambda = -t.norm().ln();
    Ok(Integrand {
        n,
        lambda,
        f: w.chart().f.iter().map(|f| f.sampled(t)).collect(),
        g: dom.g.iter().map(|g| g.sampled(t)).collect(),
        pi: dom.pi.thicken(dom.eps)?,
        terms: w
            .coeffs()
            .iter()
            .map(|((i, j), phi)| (i.clone(), j.clone(), phi.compile()))
            .collect(),
        guard: cfg.guard_delta,
        norm: TWO_PI.powi(-(n as i32)),
        sign: if (n * (n.saturating_sub(1)) / 2).is_multiple_of(2) { 1.0 } else { -1.0 },
    })
}

/// `∫ ω` over `(Log|g|)^{-1}(Π_ε)` at the given `t`.
pub fn integrate(w: &TropicalForm, dom: &ArchDomain, t: Complex64, cfg: &QuadConfig) -> Result<IntegralResult> {
    cfg.validate()?;
    check_top_degree(w)?;
    if !(t.norm() > 0.0 && t.norm() < 1.0) {
        return Err(Error::Validation(format!("need 0 < |t| < 1, got {t}")));
    }
    if dom.eps < 0.0 {
        return Err(Error::NegativeEps(dom.eps));
    }
    let Some((lo, hi)) = domain_box(dom, w)? else {
        return Ok(IntegralResult::zero());
    };
    let integrand = build_integrand(w, dom, t, cfg)?;
    let theta_free = w.chart().f.iter().chain(&dom.g).all(|p| p.is_monomial());
    match cfg.method {
        QuadMethod::TensorGauss => tensor(&integrand, dom, w, &lo, &hi, cfg, theta_free),
        QuadMethod::Qmc => qmc(&integrand, &lo, &hi, cfg, theta_free),
    }
}

fn tensor(
    integrand: &Integrand,
    dom: &ArchDomain,
    w: &TropicalForm,
    lo: &[f64],
    hi: &[f64],
    cfg: &QuadConfig,
    theta_free: bool,
) -> Result<IntegralResult> {
    let n = integrand.n;
    let tf = tropicalize_all(&w.chart().f)?;
    let tg = tropicalize_all(&dom.g)?;
    let supports: Vec<PseudoPolyhedron> =
        w.coeffs().values().filter_map(|phi| phi.support_bound().ok()).collect();
    let cuts = axis_cuts(lo, hi, &tf, &tg, &integrand.pi, &supports, integrand.lambda)?;
    let edges: Vec<Vec<f64>> = (0..n).map(|i| panel_edges(lo[i], hi[i], &cuts[i], cfg.x_panels)).collect();
    let fine_order = cfg.x_nodes_per_axis;
    let coarse_order = (fine_order / 2).max(1);
    let theta_count = if theta_free { 1 } else { cfg.theta_nodes_per_axis };
    let coarse_theta = if theta_free { 1 } else { (theta_count / 2).max(1) };

    let fine_x: Vec<Vec<(f64, f64)>> = edges.iter().map(|e| composite_rule(e, fine_order)).collect();
    let coarse_x: Vec<Vec<(f64, f64)>> = edges.iter().map(|e| composite_rule(e, coarse_order)).collect();
    let fine_t = periodic_midpoints(theta_count);
    let coarse_t = periodic_midpoints(coarse_theta);

    let count = |xs: &[Vec<(f64, f64)>], th: usize| -> u64 {
        xs.iter().map(|v| v.len() as u64).product::<u64>() * (th as u64).pow(n as u32)
    };
    let requested = count(&fine_x, theta_count) + count(&coarse_x, coarse_theta);
    if requested > cfg.max_nodes {
        return Err(Error::BudgetExceeded(requested));
    }
    let fine = tensor_pass(integrand, &fine_x, &fine_t);
    let coarse = tensor_pass(integrand, &coarse_x, &coarse_t);
    let value = fine.sum.value();
    let abs_value = fine.abs.value();
    Ok(IntegralResult {
        value: Complex64::new(value, 0.0),
        abs_value,
        est_error: (value - coarse.sum.value()).abs() + 1e-12 * abs_value,
        nodes_used: fine.used + coarse.used,
        nodes_skipped: fine.skipped + coarse.skipped,
        sup_log: fine.sup_log,
        sup_phi: fine.sup_phi,
    })
}

const CHUNK: usize = 64;

fn multi_index(mut k: usize, dims: &[usize]) -> Vec<usize> {
    dims.iter()
        .map(|&d| {
            let i = k % d;
            k /= d;
            i
        })
        .collect()
}

fn tensor_pass(integrand: &Integrand, xs: &[Vec<(f64, f64)>], thetas: &[(f64, f64)]) -> Partial {
    let n = integrand.n;
    let xdims: Vec<usize> = xs.iter().map(|v| v.len()).collect();
    let total_x: usize = xdims.iter().product();
    let tdims = vec![thetas.len(); n];
    let total_t: usize = tdims.iter().product();
    let chunks: Vec<usize> = (0..total_x.div_ceil(CHUNK)).collect();
    let partials: Vec<Partial> = chunks
        .par_iter()
        .map(|&c| {
            let mut acc = Partial::default();
            let mut scratch = Vec::new();
            for k in c * CHUNK..((c + 1) * CHUNK).min(total_x) {
                let idx = multi_index(k, &xdims);
                let x: Vec<f64> = idx.iter().zip(xs).map(|(&i, v)| v[i].0).collect();
                let wx: f64 = idx.iter().zip(xs).map(|(&i, v)| v[i].1).product();
                for kt in 0..total_t {
                    let tidx = multi_index(kt, &tdims);
                    let th: Vec<f64> = tidx.iter().map(|&i| thetas[i].0).collect();
                    let wt: f64 = tidx.iter().map(|&i| thetas[i].1).product();
                    integrand.eval(&x, &th, &mut scratch, &mut acc, wx * wt);
                }
            }
            acc
        })
        .collect();
    let mut out = Partial::default();
    for p in &partials {
        out.merge(p);
    }
    out
}

const QMC_SHIFTS: usize = 8;

fn qmc(integrand: &Integrand, lo: &[f64], hi: &[f64], cfg: &QuadConfig, theta_free: bool) -> Result<IntegralResult> {
    let n = integrand.n;
    let dim = if theta_free { n } else { 2 * n };
    let per_shift = (cfg.qmc_samples / QMC_SHIFTS).max(1);
    let requested = (per_shift * QMC_SHIFTS) as u64;
    if requested > cfg.max_nodes {
        return Err(Error::BudgetExceeded(requested));
    }
    let alphas = kronecker_alphas(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let shifts: Vec<Vec<f64>> = (0..QMC_SHIFTS).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
    let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product::<f64>() * TWO_PI.powi(n as i32);
    let partials: Vec<Partial> = shifts
        .par_iter()
        .map(|shift| {
            let mut acc = Partial::default();
            let mut scratch = Vec::new();
            let w = vol / per_shift as f64;
            for i in 0..per_shift as u64 {
                let u = kronecker_point(i, &alphas, shift);
                let x: Vec<f64> = (0..n).map(|j| lo[j] + (hi[j] - lo[j]) * u[j]).collect();
                let th: Vec<f64> = if theta_free { vec![0.0; n] } else { (0..n).map(|j| TWO_PI * u[n + j]).collect() };
                integrand.eval(&x, &th, &mut scratch, &mut acc, w);
            }
            acc
        })
        .collect();
    let estimates: Vec<f64> = partials.iter().map(|p| p.sum.value()).collect();
    let mean = estimates.iter().sum::<f64>() / QMC_SHIFTS as f64;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (QMC_SHIFTS - 1) as f64;
    let mut total = Partial::default();
    for p in &partials {
        total.merge(p);
    }
    let abs_value = total.abs.value() / QMC_SHIFTS as f64;
    Ok(IntegralResult {
        value: Complex64::new(mean, 0.0),
        abs_value,
        est_error: (var / QMC_SHIFTS as f64).sqrt() + 1e-12 * abs_value,
        nodes_used: total.used,
        nodes_skipped: total.skipped,
        sup_log: total.sup_log,
        sup_phi: total.sup_phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{parse_expr, ReasonablySmooth};
    use crate::forms::Chart;
    use crate::tseries::TSeries;
    use std::sync::Arc;

    /// ∫ Bump over R, by a fine independent trapezoid rule.
    fn bump_integral() -> f64 {
        let n = 200_000;
        let h = 2.0 / n as f64;
        (1..n).map(|k| crate::coefficients::bump(-1.0 + k as f64 * h) * h).sum()
    }

    fn monomial_form(phi: &str) -> TropicalForm {
        let chart = Arc::new(Chart::new(1, vec![LaurentPoly::monomial(vec![1])]).unwrap());
        let phi = ReasonablySmooth::global(parse_expr(phi, 1).unwrap(), [0].into()).unwrap();
        TropicalForm::new(chart, 1, 1, [((vec![0], vec![0]), phi)]).unwrap()
    }

    fn box_domain(lo: f64, hi: f64, eps: f64) -> ArchDomain {
        ArchDomain { g: vec![LaurentPoly::monomial(vec![1])], pi: PseudoPolyhedron::from_box(vec![lo], vec![hi]), eps }
    }

    #[test]
    fn bump_integral_is_t_independent() {
        let w = monomial_form("(bump x1)");
        let dom = box_domain(-2.0, 2.0, 0.0);
        let oracle = bump_integral();
        assert!((oracle - 1.2069003224378765).abs() < 1e-9);
        for t in [1e-2, 1e-6] {
            let r = integrate(&w, &dom, Complex64::new(t, 0.0), &QuadConfig::default()).unwrap();
            assert!((r.value.re - oracle).abs() < 1e-8, "t = {t}: {}", r.value.re);
            assert!(r.value.norm() <= r.abs_value + 1e-15);
            assert!(r.est_error >= 0.0);
        }
    }

    #[test]
    fn zero_form_gives_zero() {
        let chart = Arc::new(Chart::new(1, vec![LaurentPoly::monomial(vec![1])]).unwrap());
        let w = TropicalForm::zero(chart, 1, 1);
        let r = integrate(&w, &box_domain(-2.0, 2.0, 0.0), Complex64::new(1e-3, 0.0), &QuadConfig::default()).unwrap();
        assert_eq!(r.value, Complex64::new(0.0, 0.0));
        assert_eq!(r.abs_value, 0.0);
    }

    #[test]
    fn domain_box_examples() {
        let w = monomial_form("(bump (affine [1/10] 0 x1))");
        let (lo, hi) = domain_box(&box_domain(0.0, 1.0, 0.1), &w).unwrap().unwrap();
        assert!(lo[0] <= -1.1 + 1e-12 && hi[0] >= 2.1 - 1e-12);
        let empty = ArchDomain { pi: PseudoPolyhedron::empty(1), ..box_domain(0.0, 1.0, 0.1) };
        assert_eq!(domain_box(&empty, &w).unwrap(), None);
        let zmt = LaurentPoly::new(1, [(vec![1], TSeries::one()), (vec![0], -TSeries::t())]).unwrap();
        let two = ArchDomain {
            g: vec![LaurentPoly::monomial(vec![1]), zmt],
            pi: PseudoPolyhedron::from_box(vec![0.0, 0.0], vec![1.0, 1.0]),
            eps: 0.0,
        };
        assert!(domain_box(&two, &w).unwrap().is_some());
    }

    #[test]
    fn non_compact_domain_is_rejected() {
        let chart = Arc::new(Chart::new(1, vec![LaurentPoly::monomial(vec![1])]).unwrap());
        let half_line = PseudoPolyhedron::from_box(vec![0.0], vec![f64::INFINITY]);
        let phi = ReasonablySmooth::new(parse_expr("1", 1).unwrap(), half_line.clone(), [0].into()).unwrap();
        let w = TropicalForm::new(chart, 1, 1, [((vec![0], vec![0]), phi)]).unwrap();
        let dom = ArchDomain { g: vec![LaurentPoly::monomial(vec![1])], pi: half_line, eps: 0.0 };
        assert!(matches!(
            integrate(&w, &dom, Complex64::new(1e-3, 0.0), &QuadConfig::default()),
            Err(Error::NonCompactDomain)
        ));
        let bounded = monomial_form("(bump x1)");
        assert!(integrate(&bounded, &dom, Complex64::new(1e-3, 0.0), &QuadConfig::default()).is_ok());
    }

    #[test]
    fn budget_is_enforced() {
        let w = monomial_form("(bump x1)");
        let cfg = QuadConfig { max_nodes: 10, ..QuadConfig::default() };
        assert!(matches!(
            integrate(&w, &box_domain(-2.0, 2.0, 0.0), Complex64::new(1e-3, 0.0), &cfg),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn a_priori_bound_examples() {
        assert_eq!(a_priori_bound(1, 1, 1.0, 1.0, 2.0), 4.0);
        assert_eq!(a_priori_bound(2, 1, 1.0, 1.0, 1.0), 8.0);
        assert_eq!(a_priori_bound(2, 2, 3.0, 2.0, 1.0), 24.0);
    }

    #[test]
    fn deterministic_across_runs() {
        let w = monomial_form("(bump x1)");
        let dom = box_domain(-0.5, 2.0, 0.1);
        let cfg = QuadConfig::default();
        let a = integrate(&w, &dom, Complex64::new(1e-3, 0.0), &cfg).unwrap();
        let b = integrate(&w, &dom, Complex64::new(1e-3, 0.0), &cfg).unwrap();
        assert_eq!(a, b);
        let q = QuadConfig { method: QuadMethod::Qmc, qmc_samples: 1 << 14, ..cfg };
        let a = integrate(&w, &dom, Complex64::new(1e-3, 0.0), &q).unwrap();
        let b = integrate(&w, &dom, Complex64::new(1e-3, 0.0), &q).unwrap();
        assert_eq!(a, b);
    }
}

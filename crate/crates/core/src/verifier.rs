//! Scenario runs, ε-sweeps, self-tests and report output.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arch::{a_priori_bound, integrate, ArchDomain, IntegralResult, QuadConfig};
use crate::error::{Error, Result};
use crate::forms::{random_form, set_sign_mutation, test_chart, Chart, TropicalForm};
use crate::na::{check_compact, integrate_na, sheet_bound, Compactness, NaConfig, NaResult, SkeletonRegion};
use crate::polyhedra::{PseudoCell, PseudoPolyhedron};
use crate::scenario::{Problem, Scenario};
use crate::tropical::LaurentPoly;
use crate::tseries::TSeries;

pub const CSV_HEADER: &str = "t,lambda,arch_re,arch_im,arch_abs,quad_err,na,abs_err";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub t: [f64; 2],
    pub lambda: f64,
    pub arch: [f64; 2],
    pub arch_abs: f64,
    pub quad_err: f64,
    pub na: f64,
    pub abs_err: f64,
    pub bound: f64,
    pub nodes_used: u64,
    pub nodes_skipped: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Verdict { name: name.to_string(), passed, detail }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub name: String,
    pub rows: Vec<ReportRow>,
    pub richardson_limit: Option<f64>,
    pub scaling_exponent: Option<f64>,
    pub verdicts: Vec<Verdict>,
    pub warnings: Vec<String>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let t = if r.t[1] == 0.0 { format!("{:e}", r.t[0]) } else { format!("{:e}{:+e}i", r.t[0], r.t[1]) };
            let _ = writeln!(
                s,
                "{t},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                r.lambda, r.arch[0], r.arch[1], r.arch_abs, r.quad_err, r.na, r.abs_err
            );
        }
        s
    }

    /// Line chart of `log10 abs_err` against `log10 |t|`.
    pub fn to_svg(&self) -> String {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.abs_err > 0.0)
            .map(|r| (Complex64::new(r.t[0], r.t[1]).norm().log10(), r.abs_err.log10()))
            .collect();
        svg_chart(&pts, &self.name)
    }
}

fn svg_chart(pts: &[(f64, f64)], title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const PAD: f64 = 60.0;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    let _ = writeln!(s, "<text x=\"{}\" y=\"24\" font-size=\"14\" text-anchor=\"middle\">{}</text>", W / 2.0, xml_escape(title));
    let _ = writeln!(
        s,
        "<line x1=\"{PAD}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n<line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{}\" stroke=\"black\"/>",
        H - PAD,
        W - PAD,
        H - PAD,
        H - PAD
    );
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">log10 |t|</text>", W / 2.0, H - 15.0);
    let _ = writeln!(
        s,
        "<text x=\"18\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">log10 abs_err</text>",
        H / 2.0,
        H / 2.0
    );
    if !pts.is_empty() {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if x1 - x0 < 1e-12 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 < 1e-12 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
        let poly: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{}\"/>", poly.join(" "));
        for &(x, y) in pts {
            let _ = writeln!(s, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"/>", px(x), py(y));
        }
        for (v, anchor_x, anchor_y) in [(x0, px(x0), H - PAD + 16.0), (x1, px(x1), H - PAD + 16.0)] {
            let _ = writeln!(s, "<text x=\"{anchor_x:.2}\" y=\"{anchor_y:.2}\" font-size=\"10\" text-anchor=\"middle\">{v:.2}</text>");
        }
        for v in [y0, y1] {
            let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\">{v:.2}</text>", PAD - 4.0, py(v) + 3.0);
        }
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let io = |e: std::io::Error| Error::Validation(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::Validation(format!("{}: not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(io)
}

fn require_compact(p: &Problem, pi: &PseudoPolyhedron) -> Result<()> {
    match check_compact(&p.g, pi)? {
        Compactness::Compact => Ok(()),
        Compactness::NonCompact(ray) => Err(Error::Validation(format!("domain is not compact: unbounded along {ray:?}"))),
        Compactness::Undetermined => Err(Error::Validation("domain compactness could not be established".into())),
    }
}

fn validation(e: Error) -> Error {
    match e {
        Error::NonCompactDomain => Error::Validation("integration region is not compact".into()),
        other => other,
    }
}

/// `∫ ω_♭` over the skeleton region of the scenario, at `Π(t)`.
pub fn run_na(p: &Problem, t: Complex64) -> Result<NaResult> {
    let pi = p.pi_at(t);
    require_compact(p, &pi)?;
    let region = SkeletonRegion::new(p.g.clone(), pi).map_err(validation)?;
    integrate_na(&p.form.flat(), &region, &p.na_quad)
}

pub fn arch_domain(p: &Problem, t: Complex64, eps: f64) -> ArchDomain {
    ArchDomain { g: p.g.clone(), pi: p.pi_at(t), eps }
}

/// `∫ ω_t` at one `t` with the smallest ε of the scenario.
pub fn run_arch(p: &Problem, t: Complex64) -> Result<IntegralResult> {
    require_compact(p, &p.pi_at(t))?;
    integrate(&p.form, &arch_domain(p, t, p.smallest_eps()), t, &p.quad).map_err(validation)
}

/// `C(m,n)²·N·d·(2A)^n` with `N`, `A` measured during the integration and
/// `d` from the chart.
pub fn bound_for(chart: &Chart, r: &IntegralResult) -> f64 {
    let d = sheet_bound(&chart.f, chart.n);
    a_priori_bound(chart.m(), chart.n, r.sup_phi, d, r.sup_log)
}

/// Scenario files shipped with the crate.
pub fn builtin(name: &str) -> Option<&'static str> {
    match name {
        "bump" => Some(BUMP_SCENARIO),
        "intro" => Some(include_str!("../scenarios/intro.json")),
        "intro_truncated" => Some(include_str!("../scenarios/intro_truncated.json")),
        "shrinking_strip" => Some(include_str!("../scenarios/shrinking_strip.json")),
        _ => None,
    }
}

pub const BUILTIN_NAMES: [&str; 4] = ["bump", "intro", "intro_truncated", "shrinking_strip"];

/// Extrapolation of `I(λ) = I∞ + c/λ` through the two smallest `|t|`.
pub fn richardson(rows: &[ReportRow]) -> Option<f64> {
    let mut sorted: Vec<&ReportRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let [.., r1, r2] = sorted.as_slice() else {
        return None;
    };
    (r2.lambda > r1.lambda).then(|| (r2.lambda * r2.arch[0] - r1.lambda * r1.arch[0]) / (r2.lambda - r1.lambda))
}

/// Least-squares slope of `ln arch_abs` against `ln |t|`.
pub fn scaling_exponent(rows: &[ReportRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.arch_abs > 0.0)
        .map(|r| (Complex64::new(r.t[0], r.t[1]).norm().ln(), r.arch_abs.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn run(p: &Problem) -> Result<ConvergenceReport> {
    let fixed_na = if p.shrink.is_none() { Some(run_na(p, p.ts[0])?) } else { None };
    let computed: Vec<Result<(ReportRow, Vec<String>)>> = p
        .ts
        .par_iter()
        .map(|&t| {
            let arch = run_arch(p, t)?;
            let na = match &fixed_na {
                Some(r) => r.clone(),
                None => run_na(p, t)?,
            };
            let row = ReportRow {
                t: [t.re, t.im],
                lambda: -t.norm().ln(),
                arch: [arch.value.re, arch.value.im],
                arch_abs: arch.abs_value,
                quad_err: arch.est_error,
                na: na.value,
                abs_err: (arch.value - Complex64::new(na.value, 0.0)).norm(),
                bound: bound_for(&p.chart, &arch),
                nodes_used: arch.nodes_used,
                nodes_skipped: arch.nodes_skipped,
            };
            let warnings = na.warnings.iter().map(|w| format!("{w:?}")).collect();
            Ok((row, warnings))
        })
        .collect();
    let mut rows = Vec::new();
    let mut warnings: Vec<String> = Vec::new();
    for c in computed {
        let (row, w) = c?;
        rows.push(row);
        for x in w {
            if !warnings.contains(&x) {
                warnings.push(x);
            }
        }
    }
    let richardson_limit = richardson(&rows);
    let scaling = scaling_exponent(&rows);
    let verdicts = judge(p, &rows, richardson_limit, scaling);
    let report = ConvergenceReport {
        name: p.name.clone(),
        rows,
        richardson_limit,
        scaling_exponent: scaling,
        verdicts,
        warnings,
    };
    if let Some(path) = &p.outputs.csv_path {
        write_atomic(path, report.to_csv().as_bytes())?;
    }
    if let Some(path) = &p.outputs.svg_path {
        write_atomic(path, report.to_svg().as_bytes())?;
    }
    Ok(report)
}

fn judge(p: &Problem, rows: &[ReportRow], rich: Option<f64>, scaling: Option<f64>) -> Vec<Verdict> {
    let c = &p.criteria;
    let mut out = Vec::new();
    let bound_ok = rows.iter().all(|r| r.arch_abs <= r.bound || r.arch_abs == 0.0);
    out.push(Verdict::new(
        "a_priori_bound",
        bound_ok,
        rows.iter().map(|r| format!("{:.4e}<={:.4e}", r.arch_abs, r.bound)).collect::<Vec<_>>().join(" "),
    ));
    let na = rows.first().map(|r| r.na).unwrap_or(0.0);
    if let Some(oracle) = c.na_oracle {
        let tol = c.na_tol.unwrap_or(1e-8);
        let err = (na - oracle).abs();
        out.push(Verdict::new("na_oracle", err <= tol, format!("|{na:.15} - {oracle:.15}| = {err:.3e} (tol {tol:.1e})")));
    }
    if let Some(slack) = c.monotone_slack {
        let mut sorted: Vec<&ReportRow> = rows.iter().collect();
        sorted.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        let ok = sorted.windows(2).all(|w| w[1].abs_err <= w[0].abs_err * (1.0 + slack));
        let seq: Vec<String> = sorted.iter().map(|r| format!("{:.3e}", r.abs_err)).collect();
        out.push(Verdict::new("monotone_abs_err", ok, seq.join(" ")));
    }
    if let Some(tol) = c.richardson_tol {
        let (ok, detail) = match rich {
            Some(l) => {
                let err = (l - na).abs();
                let lim = tol * na.abs().max(1.0);
                (err <= lim, format!("limit {l:.10}, |limit - na| = {err:.3e} (tol {lim:.3e})"))
            }
            None => (false, "needs at least two t values".to_string()),
        };
        out.push(Verdict::new("richardson", ok, detail));
    }
    if let Some(k) = c.quad_err_factor {
        let ok = rows.iter().all(|r| r.abs_err <= k * r.quad_err + 1e-10 * r.na.abs().max(1.0));
        let detail = rows.iter().map(|r| format!("{:.2e}/{:.2e}", r.abs_err, r.quad_err)).collect::<Vec<_>>().join(" ");
        out.push(Verdict::new("abs_err_within_quad_err", ok, detail));
    }
    if let Some(target) = c.scaling_exponent {
        let tol = c.scaling_tol.unwrap_or(0.05 * target.abs());
        let (ok, detail) = match scaling {
            Some(e) => ((e - target).abs() <= tol, format!("fitted {e:.5}, target {target} ± {tol}")),
            None => (false, "no positive abs-integrals to fit".to_string()),
        };
        out.push(Verdict::new("scaling_exponent", ok, detail));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub value: f64,
    pub abs_value: f64,
    pub est_error: f64,
    /// `I(ε_prev) − I(ε)`.
    pub diff_prev: Option<f64>,
    /// `∫|ω|` over `Π_{ε_prev} ∖ Π_ε`.
    pub shell_abs: Option<f64>,
    pub bound: f64,
}

pub fn sweep_eps(p: &Problem, t: Complex64) -> Result<Vec<SweepRow>> {
    require_compact(p, &p.pi_at(t))?;
    let results: Vec<Result<IntegralResult>> = p
        .eps
        .par_iter()
        .map(|&eps| integrate(&p.form, &arch_domain(p, t, eps), t, &p.quad).map_err(validation))
        .collect();
    let mut rows: Vec<SweepRow> = Vec::new();
    for (eps, r) in p.eps.iter().zip(results) {
        let r = r?;
        let prev = rows.last();
        rows.push(SweepRow {
            eps: *eps,
            value: r.value.re,
            abs_value: r.abs_value,
            est_error: r.est_error,
            diff_prev: prev.map(|q| q.value - r.value.re),
            shell_abs: prev.map(|q| (q.abs_value - r.abs_value).max(0.0)),
            bound: bound_for(&p.chart, &r),
        });
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("eps,value,abs_value,est_error,diff_prev,shell_abs\n");
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
    for r in rows {
        let _ = writeln!(
            s,
            "{},{:.17e},{:.17e},{:.17e},{},{}",
            r.eps,
            r.value,
            r.abs_value,
            r.est_error,
            opt(r.diff_prev),
            opt(r.shell_abs)
        );
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelftestSummary {
    pub passed: bool,
    pub checks: Vec<Verdict>,
}

/// The scenario with `∫ Bump` as its exact answer, used by the self-test.
pub const BUMP_SCENARIO: &str = r#"{
    "name": "bump",
    "n": 1,
    "f": [[{"coeff": [{"re": 1}], "exps": [1]}]],
    "form": {"p": 1, "q": 1, "terms": [{"I": [1], "J": [1], "phi": {"expr": "(bump x1)", "vanish": [1]}}]},
    "domain": {"g": [[{"coeff": [{"re": 1}], "exps": [1]}]], "pi": [{"upper": [2.0], "lower": {"1": -2.0}}], "eps": [0.1]},
    "t_schedule": [0.01, 0.0001],
    "criteria": {"na_oracle": 1.2069003224378765, "quad_err_factor": 2.0}
}"#;

fn check<F: FnOnce() -> std::result::Result<String, String>>(name: &str, f: F) -> Verdict {
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)) {
        Ok(Ok(d)) => Verdict::new(name, true, d),
        Ok(Err(d)) => Verdict::new(name, false, d),
        Err(_) => Verdict::new(name, false, "panicked".into()),
    }
}

/// Fast invariant suites across all modules. With `mutate_sign`, the
/// insertion sign of `d` is disabled first, which must make the run fail.
pub fn selftest(seed: u64, mutate_sign: bool) -> SelftestSummary {
    set_sign_mutation(mutate_sign);
    let mut checks = Vec::new();
    checks.push(check("tseries_ring", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let a = random_series(&mut rng);
            let b = random_series(&mut rng);
            let c = random_series(&mut rng);
            let lhs = &(&a * &b) * &c;
            let rhs = &a * &(&b * &c);
            if !nearly_zero(&(&lhs - &rhs)) {
                return Err(format!("associativity fails for {a}, {b}, {c}"));
            }
            let inv = a.invert().map_err(|e| e.to_string())?;
            if !nearly_zero(&(&(&a * &inv) - &TSeries::one())) {
                return Err(format!("inverse fails for {a}"));
            }
        }
        Ok("50 triples".into())
    }));
    checks.push(check("polyhedra_affine_volume", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let cube = PseudoPolyhedron::from_cell(PseudoCell::from_box(vec![0.0; 2], vec![1.0; 2]));
        for _ in 0..20 {
            let m: Vec<Vec<i64>> = (0..2).map(|_| (0..2).map(|_| rng.random_range(-3..=3)).collect()).collect();
            let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs() as f64;
            if det == 0.0 {
                continue;
            }
            let v = cube.affine_image(&m, &[0.5, -0.25]).map_err(|e| e.to_string())?.volume().map_err(|e| e.to_string())?;
            if (v - det).abs() > 1e-9 * det {
                return Err(format!("volume {v} of image under {m:?}, expected {det}"));
            }
        }
        Ok("20 matrices".into())
    }));
    checks.push(check("form_identities", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        for k in 0..60 {
            let m = rng.random_range(1..=3);
            let p = rng.random_range(0..m);
            let q = rng.random_range(0..m);
            let w = random_form(&mut rng, test_chart(m), p, q, 2);
            if !w.d().d().is_zero() {
                return Err(format!("d∘d ≠ 0 on form {k}"));
            }
            if !w.d_sharp().d_sharp().is_zero() {
                return Err(format!("d♯∘d♯ ≠ 0 on form {k}"));
            }
            if !w.d().d_sharp().add(&w.d_sharp().d()).map_err(|e| e.to_string())?.is_zero() {
                return Err(format!("d d♯ + d♯ d ≠ 0 on form {k}"));
            }
            let sign = if (p + q) % 2 == 0 { 1 } else { -1 };
            if w.j_op().j_op() != w.scaled(sign, 0) {
                return Err(format!("J∘J ≠ (−1)^(p+q) on form {k}"));
            }
            if w.flat().d_prime() != w.d().flat() || w.flat().d_second() != w.d_sharp().flat() {
                return Err(format!("flat does not commute with differentials on form {k}"));
            }
        }
        Ok("60 forms".into())
    }));
    set_sign_mutation(false);
    checks.push(check("bump_scenario", || {
        let p = Scenario::from_json(BUMP_SCENARIO).and_then(|s| s.validate()).map_err(|e| e.to_string())?;
        let r = run(&p).map_err(|e| e.to_string())?;
        let detail = r.verdicts.iter().map(|v| format!("{}={}", v.name, v.passed)).collect::<Vec<_>>().join(" ");
        if r.passed() {
            Ok(detail)
        } else {
            Err(detail)
        }
    }));
    checks.push(check("deterministic_csv", || {
        let p = Scenario::from_json(BUMP_SCENARIO).and_then(|s| s.validate()).map_err(|e| e.to_string())?;
        let a = run(&p).map_err(|e| e.to_string())?.to_csv();
        let b = run(&p).map_err(|e| e.to_string())?.to_csv();
        if a == b {
            Ok(format!("{} bytes", a.len()))
        } else {
            Err("CSV differs between identical runs".into())
        }
    }));
    checks.push(check("na_monomial_degree", || {
        let chart = std::sync::Arc::new(Chart::new(1, vec![LaurentPoly::monomial(vec![2])]).map_err(|e| e.to_string())?);
        let phi = crate::coefficients::ReasonablySmooth::global(
            crate::coefficients::parse_expr("(bump x1)", 1).map_err(|e| e.to_string())?,
            [0].into(),
        )
        .map_err(|e| e.to_string())?;
        let w = TropicalForm::new(chart, 1, 1, [((vec![0], vec![0]), phi)]).map_err(|e| e.to_string())?;
        let region = SkeletonRegion::new(vec![LaurentPoly::monomial(vec![1])], PseudoPolyhedron::from_box(vec![-3.0], vec![3.0]))
            .map_err(|e| e.to_string())?;
        let v = integrate_na(&w.flat(), &region, &NaConfig::default()).map_err(|e| e.to_string())?.value;
        let arch = integrate(
            &w,
            &ArchDomain { g: vec![LaurentPoly::monomial(vec![1])], pi: PseudoPolyhedron::from_box(vec![-3.0], vec![3.0]), eps: 0.0 },
            Complex64::new(1e-4, 0.0),
            &QuadConfig::default(),
        )
        .map_err(|e| e.to_string())?;
        let expected = 2.0 * 1.2069003224378765;
        if (v - expected).abs() < 1e-9 && (arch.value.re - expected).abs() < 1e-2 {
            Ok(format!("na {v:.12}, arch {:.12}", arch.value.re))
        } else {
            Err(format!("na {v}, arch {}, expected {expected}", arch.value.re))
        }
    }));
    let passed = checks.iter().all(|c| c.passed);
    SelftestSummary { passed, checks }
}

fn nearly_zero(s: &TSeries) -> bool {
    s.terms().all(|(_, c)| c.norm() <= 1e-10)
}

fn random_series<R: Rng>(rng: &mut R) -> TSeries {
    let mut s = TSeries::real(rng.random_range(0.5..2.0));
    for k in 1..4 {
        let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        s = &s + &TSeries::monomial(c, crate::tseries::Q::new(k, 2), rng.random_range(0..2));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump_problem() -> Problem {
        Scenario::from_json(BUMP_SCENARIO).unwrap().validate().unwrap()
    }

    #[test]
    fn bump_run_passes() {
        let r = run(&bump_problem()).unwrap();
        assert!(r.passed(), "{:?}", r.verdicts);
        for row in &r.rows {
            assert!((row.lambda + Complex64::new(row.t[0], row.t[1]).norm().ln()).abs() < 1e-15);
            assert!((row.abs_err - (row.arch[0] - row.na).abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_contract() {
        let r = run(&bump_problem()).unwrap();
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.count(), 2);
        assert!(r.to_svg().starts_with("<svg"));
    }

    #[test]
    fn richardson_is_exact_for_linear_model() {
        let mk = |lambda: f64| ReportRow {
            t: [(-lambda).exp(), 0.0],
            lambda,
            arch: [3.0 + 2.0 / lambda, 0.0],
            arch_abs: 0.0,
            quad_err: 0.0,
            na: 3.0,
            abs_err: 0.0,
            bound: 0.0,
            nodes_used: 0,
            nodes_skipped: 0,
        };
        let rows = vec![mk(2.0), mk(5.0), mk(9.0)];
        assert!((richardson(&rows).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn scaling_fit_recovers_exponent() {
        let rows: Vec<ReportRow> = (2..=6)
            .map(|k| {
                let t = 10f64.powi(-k);
                ReportRow {
                    t: [t, 0.0],
                    lambda: -t.ln(),
                    arch: [0.0, 0.0],
                    arch_abs: 3.0 * t.sqrt(),
                    quad_err: 0.0,
                    na: 0.0,
                    abs_err: 0.0,
                    bound: 0.0,
                    nodes_used: 0,
                    nodes_skipped: 0,
                }
            })
            .collect();
        assert!((scaling_exponent(&rows).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sweep_saturates_for_large_eps() {
        let mut p = bump_problem();
        p.eps = vec![0.4, 0.2];
        let rows = sweep_eps(&p, Complex64::new(1e-3, 0.0)).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[1].diff_prev.unwrap().abs() < 1e-9);
    }

    #[test]
    fn selftest_passes_and_mutation_fails() {
        let ok = selftest(3, false);
        assert!(ok.passed, "{:?}", ok.checks);
        let bad = selftest(3, true);
        assert!(!bad.passed);
        assert!(bad.checks.iter().any(|c| c.name == "form_identities" && !c.passed));
    }

    #[test]
    fn builtins_validate() {
        for name in BUILTIN_NAMES {
            Scenario::from_json(builtin(name).unwrap()).unwrap().validate().unwrap();
        }
        assert!(builtin("missing").is_none());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}

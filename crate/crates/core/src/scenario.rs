//! JSON scenario files.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::arch::QuadConfig;
use crate::error::{Error, Result};
use crate::forms::{Chart, FormSpec, TropicalForm};
use crate::na::NaConfig;
use crate::polyhedra::{polyhedron_from_specs, CellSpec, PseudoPolyhedron};
use crate::tropical::{LaurentPoly, LaurentTermSpec};
use crate::tseries::parse_rational;

/// A value of `t`: a real number or `[re, im]`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TValue {
    Real(f64),
    Complex([f64; 2]),
}

impl TValue {
    pub fn to_complex(self) -> Complex64 {
        match self {
            TValue::Real(r) => Complex64::new(r, 0.0),
            TValue::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

/// Explicit list, or `t = base^-(first + k)` for `k < count`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TSchedule {
    List(Vec<TValue>),
    Geometric {
        base: f64,
        #[serde(default = "one")]
        first: u32,
        count: u32,
    },
}

fn one() -> u32 {
    1
}

impl TSchedule {
    pub fn values(&self) -> Vec<Complex64> {
        match self {
            TSchedule::List(v) => v.iter().map(|t| t.to_complex()).collect(),
            TSchedule::Geometric { base, first, count } => (0..*count)
                .map(|k| Complex64::new(base.powi(-((first + k) as i32)), 0.0))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub g: Vec<Vec<LaurentTermSpec>>,
    pub pi: Vec<CellSpec>,
    pub eps: Vec<f64>,
}

/// On `axis` (1-based), the box of `Π` becomes `[lo, lo + |t|^exponent]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShrinkSpec {
    pub axis: usize,
    pub exponent: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub csv_path: Option<PathBuf>,
    #[serde(default)]
    pub svg_path: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Criteria {
    /// Reference value for the non-archimedean integral.
    pub na_oracle: Option<f64>,
    pub na_tol: Option<f64>,
    /// `abs_err` may grow by at most this fraction from one `t` to the next.
    pub monotone_slack: Option<f64>,
    /// Relative tolerance for the extrapolated limit against `I_na`.
    pub richardson_tol: Option<f64>,
    /// `abs_err ≤ factor · quad_err` at every `t`.
    pub quad_err_factor: Option<f64>,
    /// Fitted exponent of `arch_abs` against `|t|`, with tolerance.
    pub scaling_exponent: Option<f64>,
    pub scaling_tol: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub n: usize,
    #[serde(default = "unit_tau")]
    pub tau: f64,
    pub f: Vec<Vec<LaurentTermSpec>>,
    pub form: FormSpec,
    pub domain: DomainSpec,
    pub t_schedule: TSchedule,
    #[serde(default)]
    pub quad: QuadConfig,
    #[serde(default)]
    pub na_quad: NaConfig,
    #[serde(default)]
    pub shrink: Option<ShrinkSpec>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub criteria: Criteria,
}

fn unit_tau() -> f64 {
    1.0
}

/// A scenario after validation.
#[derive(Clone, Debug)]
pub struct Problem {
    pub name: String,
    pub n: usize,
    pub chart: Arc<Chart>,
    pub form: TropicalForm,
    pub g: Vec<LaurentPoly>,
    pub pi: PseudoPolyhedron,
    pub eps: Vec<f64>,
    pub ts: Vec<Complex64>,
    pub quad: QuadConfig,
    pub na_quad: NaConfig,
    pub shrink: Option<(usize, f64)>,
    pub outputs: Outputs,
    pub criteria: Criteria,
}

impl Scenario {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    pub fn validate(&self) -> Result<Problem> {
        let n = self.n;
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Validation("tau must be positive".into()));
        }
        let f = self.f.iter().map(|p| LaurentPoly::from_specs(n, p)).collect::<Result<Vec<_>>>()?;
        let chart = Arc::new(Chart::new(n, f)?);
        let form = TropicalForm::from_spec(chart.clone(), &self.form)?;
        if form.bidegree() != (n, n) {
            return Err(Error::Validation(format!("form must have bidegree ({n}, {n})")));
        }
        let g = self.domain.g.iter().map(|p| LaurentPoly::from_specs(n, p)).collect::<Result<Vec<_>>>()?;
        if g.is_empty() {
            return Err(Error::Validation("domain needs at least one g".into()));
        }
        let pi = polyhedron_from_specs(g.len(), &self.domain.pi)?;
        let eps = self.domain.eps.clone();
        if eps.is_empty() {
            return Err(Error::Validation("eps list is empty".into()));
        }
        if eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) || eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Validation("eps list must be positive and strictly decreasing".into()));
        }
        let ts = self.t_schedule.values();
        if ts.is_empty() || ts.iter().any(|t| !(t.norm() > 0.0 && t.norm() < 1.0)) {
            return Err(Error::Validation("t values must satisfy 0 < |t| < 1".into()));
        }
        self.quad.validate()?;
        if self.na_quad.order == 0 {
            return Err(Error::Validation("na_quad.order must be positive".into()));
        }
        let shrink = match &self.shrink {
            None => None,
            Some(s) => {
                if s.axis == 0 || s.axis > g.len() {
                    return Err(Error::Validation(format!("shrink axis {} out of range", s.axis)));
                }
                let e = parse_rational(&s.exponent)?
                    .to_f64()
                    .filter(|e| *e > 0.0)
                    .ok_or_else(|| Error::Validation("shrink exponent must be positive".into()))?;
                if pi.cells.iter().any(|c| !c.lower_of(s.axis - 1).is_finite()) {
                    return Err(Error::Validation("shrink axis needs a finite lower bound".into()));
                }
                Some((s.axis - 1, e))
            }
        };
        Ok(Problem {
            name: self.name.clone(),
            n,
            chart,
            form,
            g,
            pi,
            eps,
            ts,
            quad: self.quad.clone(),
            na_quad: self.na_quad,
            shrink,
            outputs: self.outputs.clone(),
            criteria: self.criteria.clone(),
        })
    }
}

impl Problem {
    /// `Π` at a given `t`, after applying any shrink rule.
    pub fn pi_at(&self, t: Complex64) -> PseudoPolyhedron {
        let Some((axis, e)) = self.shrink else {
            return self.pi.clone();
        };
        let width = t.norm().powf(e);
        let mut pi = self.pi.clone();
        for c in &mut pi.cells {
            c.upper[axis] = c.lower_of(axis) + width;
        }
        pi
    }

    pub fn smallest_eps(&self) -> f64 {
        *self.eps.last().expect("validated non-empty")
    }
}

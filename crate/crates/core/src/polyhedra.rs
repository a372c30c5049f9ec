//! Pseudo-polyhedra in `(R ∪ {-∞})^m`.
//!
//! A cell is a product of rays `[-∞, b_i]` (coordinates in `I`) and intervals
//! `[a_i, b_i]` (coordinates in `J`), cut by rational-linear inequalities
//! `ℓ(x) ≤ 0` on the finite coordinates. A pseudo-polyhedron is a finite union
//! of cells. Bounds may be infinite, which lets the same type describe
//! unbounded regions for compactness checks.
//!
//! Volumes and triangulations work on finite, bounded cells through an
//! H-representation, a brute-force vertex enumeration (ambient dimension is
//! small) and a cone-from-centroid triangulation of the face lattice.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tseries::{parse_rational, Q};

/// Largest ambient dimension handled by vertex enumeration.
pub const MAX_DIM: usize = 8;

const GEOM_TOL: f64 = 1e-9;

/// `ℓ(x) = Σ linear_i x_i + constant`, used as the constraint `ℓ(x) ≤ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineFormQ {
    pub linear: Vec<Q>,
    pub constant: f64,
}

impl AffineFormQ {
    pub fn new(linear: Vec<Q>, constant: f64) -> Self {
        AffineFormQ { linear, constant }
    }

    pub fn from_ints(linear: &[i64], constant: f64) -> Self {
        AffineFormQ::new(linear.iter().map(|&v| Q::from_integer(v)).collect(), constant)
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn linear_f64(&self) -> Vec<f64> {
        self.linear.iter().map(|q| q.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// Evaluate on finite coordinates; `-∞` entries must have zero weight.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut s = self.constant;
        for (a, &xi) in self.linear.iter().zip(x) {
            if a.is_zero() {
                continue;
            }
            s += a.to_f64().unwrap_or(f64::NAN) * xi;
        }
        s
    }

    pub fn l1_norm(&self) -> f64 {
        self.linear.iter().map(|q| q.abs().to_f64().unwrap_or(f64::NAN)).sum()
    }

    pub fn negated(&self) -> Self {
        AffineFormQ::new(self.linear.iter().map(|q| -q).collect(), -self.constant)
    }
}

/// A point of `(R ∪ {-∞})^m`; `-∞` is `f64::NEG_INFINITY`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtPoint(pub Vec<f64>);

impl ExtPoint {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<f64>> for ExtPoint {
    fn from(v: Vec<f64>) -> Self {
        ExtPoint(v)
    }
}

/// One cell of a pseudo-polyhedron.
///
/// `minus_inf` is the index set `I` of coordinates allowed to reach `-∞`; for
/// those the stored lower bound is ignored. The remaining coordinates are
/// finite, bounded by `lower[i] ≤ x_i ≤ upper[i]` (either side may be infinite).
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoCell {
    pub minus_inf: BTreeSet<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub constraints: Vec<AffineFormQ>,
}

impl PseudoCell {
    /// All of `R^m`, no `-∞` allowed.
    pub fn full(m: usize) -> Self {
        PseudoCell {
            minus_inf: BTreeSet::new(),
            lower: vec![f64::NEG_INFINITY; m],
            upper: vec![f64::INFINITY; m],
            constraints: Vec::new(),
        }
    }

    /// All of `(R ∪ {-∞})^m`.
    pub fn full_extended(m: usize) -> Self {
        let mut c = PseudoCell::full(m);
        c.minus_inf = (0..m).collect();
        c
    }

    pub fn from_box(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        PseudoCell {
            minus_inf: BTreeSet::new(),
            lower,
            upper,
            constraints: Vec::new(),
        }
    }

    pub fn with_constraint(mut self, c: AffineFormQ) -> Self {
        self.constraints.push(c);
        self
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Effective lower bound: `-∞` for coordinates in `I`.
    pub fn lower_of(&self, i: usize) -> f64 {
        if self.minus_inf.contains(&i) {
            f64::NEG_INFINITY
        } else {
            self.lower[i]
        }
    }

    fn check_invariants(&self) -> Result<()> {
        let m = self.dim();
        if self.upper.len() != m {
            return Err(Error::DimMismatch { expected: m, got: self.upper.len() });
        }
        for c in &self.constraints {
            if c.dim() != m {
                return Err(Error::DimMismatch { expected: m, got: c.dim() });
            }
            for &i in &self.minus_inf {
                if !c.linear[i].is_zero() {
                    return Err(Error::Validation(format!(
                        "constraint references coordinate {i}, which may be -inf"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        for (i, &xi) in x.iter().enumerate() {
            if xi == f64::NEG_INFINITY {
                if !self.minus_inf.contains(&i) {
                    return false;
                }
                continue;
            }
            if xi.is_nan() || xi > self.upper[i] + GEOM_TOL || xi < self.lower_of(i) - GEOM_TOL {
                return false;
            }
        }
        self.constraints.iter().all(|c| {
            let mut s = c.constant;
            for (a, &xi) in c.linear.iter().zip(x) {
                if !a.is_zero() {
                    s += a.to_f64().unwrap_or(f64::NAN) * xi;
                }
            }
            s <= GEOM_TOL
        })
    }

    pub fn thicken(&self, eps: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim() {
            out.upper[i] += eps;
            if !self.minus_inf.contains(&i) {
                out.lower[i] -= eps;
            }
        }
        for c in &mut out.constraints {
            c.constant -= eps * c.l1_norm();
        }
        out
    }

    /// Intersection of two cells. A coordinate may reach `-∞` only if both allow it.
    pub fn intersect(&self, other: &PseudoCell) -> PseudoCell {
        let m = self.dim();
        let mut out = PseudoCell::full(m);
        for i in 0..m {
            let a = self.minus_inf.contains(&i);
            let b = other.minus_inf.contains(&i);
            if a && b {
                out.minus_inf.insert(i);
            }
            out.lower[i] = self.lower_of(i).max(other.lower_of(i));
            out.upper[i] = self.upper[i].min(other.upper[i]);
        }
        out.constraints = self.constraints.iter().chain(&other.constraints).cloned().collect();
        out
    }

    /// Quick emptiness test on the bounds alone.
    pub fn box_is_empty(&self) -> bool {
        (0..self.dim()).any(|i| !self.minus_inf.contains(&i) && self.lower[i] > self.upper[i] + GEOM_TOL)
            || self.upper.contains(&f64::NEG_INFINITY)
    }

    pub fn is_finite_cell(&self) -> bool {
        self.minus_inf.is_empty()
    }

    /// Half-space description `a·x ≤ b` of a finite cell.
    pub fn halfspaces(&self) -> Result<Vec<HalfSpace>> {
        if !self.is_finite_cell() {
            return Err(Error::HasMinusInfinity);
        }
        let m = self.dim();
        let mut hs = Vec::new();
        for i in 0..m {
            if self.upper[i].is_finite() {
                let mut a = vec![0.0; m];
                a[i] = 1.0;
                hs.push(HalfSpace { a, b: self.upper[i] });
            }
            if self.lower[i].is_finite() {
                let mut a = vec![0.0; m];
                a[i] = -1.0;
                hs.push(HalfSpace { a, b: -self.lower[i] });
            }
        }
        for c in &self.constraints {
            hs.push(HalfSpace { a: c.linear_f64(), b: -c.constant });
        }
        Ok(hs)
    }

    pub fn vertices(&self) -> Result<Vec<Vec<f64>>> {
        let hs = self.halfspaces()?;
        if !hrep_is_bounded(&hs, self.dim()) {
            return Err(Error::UnboundedInput);
        }
        Ok(enumerate_vertices(&hs, self.dim()))
    }

    /// Simplices (each `m + 1` points) covering the cell; empty when the cell
    /// is lower-dimensional.
    pub fn triangulate(&self) -> Result<Vec<Vec<Vec<f64>>>> {
        if self.box_is_empty() {
            return Ok(Vec::new());
        }
        let hs = self.halfspaces()?;
        let m = self.dim();
        if !hrep_is_bounded(&hs, m) {
            return Err(Error::UnboundedInput);
        }
        let verts = enumerate_vertices(&hs, m);
        Ok(triangulate_polytope(&verts, &hs, m))
    }

    pub fn volume(&self) -> Result<f64> {
        Ok(self.triangulate()?.iter().map(|s| simplex_volume(s)).sum())
    }

    /// Tighten the box to the bounding box of a bounded finite cell.
    pub fn tightened(&self) -> Result<Self> {
        let verts = self.vertices()?;
        let mut out = self.clone();
        if verts.is_empty() {
            return Ok(out);
        }
        for i in 0..self.dim() {
            out.lower[i] = verts.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min);
            out.upper[i] = verts.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PseudoPolyhedron {
    pub ambient_dim: usize,
    pub cells: Vec<PseudoCell>,
}

impl PseudoPolyhedron {
    pub fn empty(m: usize) -> Self {
        PseudoPolyhedron { ambient_dim: m, cells: Vec::new() }
    }

    pub fn from_cell(cell: PseudoCell) -> Self {
        PseudoPolyhedron { ambient_dim: cell.dim(), cells: vec![cell] }
    }

    pub fn new(ambient_dim: usize, cells: Vec<PseudoCell>) -> Result<Self> {
        for c in &cells {
            if c.dim() != ambient_dim {
                return Err(Error::DimMismatch { expected: ambient_dim, got: c.dim() });
            }
            c.check_invariants()?;
        }
        Ok(PseudoPolyhedron { ambient_dim, cells })
    }

    pub fn from_box(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        PseudoPolyhedron::from_cell(PseudoCell::from_box(lower, upper))
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, x: &ExtPoint) -> Result<bool> {
        if x.dim() != self.ambient_dim {
            return Err(Error::DimMismatch { expected: self.ambient_dim, got: x.dim() });
        }
        Ok(self.contains_slice(&x.0))
    }

    pub fn contains_slice(&self, x: &[f64]) -> bool {
        self.cells.iter().any(|c| c.contains(x))
    }

    pub fn thicken(&self, eps: f64) -> Result<Self> {
        if eps < 0.0 || eps.is_nan() {
            return Err(Error::NegativeEps(eps));
        }
        Ok(PseudoPolyhedron {
            ambient_dim: self.ambient_dim,
            cells: self.cells.iter().map(|c| c.thicken(eps)).collect(),
        })
    }

    pub fn union(&self, other: &PseudoPolyhedron) -> Self {
        let mut cells = self.cells.clone();
        for c in &other.cells {
            if !cells.contains(c) {
                cells.push(c.clone());
            }
        }
        PseudoPolyhedron { ambient_dim: self.ambient_dim, cells }
    }

    /// Pairwise intersection of cells, dropping box-empty ones.
    pub fn intersect(&self, other: &PseudoPolyhedron) -> Self {
        let mut cells: Vec<PseudoCell> = Vec::new();
        for a in &self.cells {
            for b in &other.cells {
                let c = a.intersect(b);
                if !c.box_is_empty() && !cells.contains(&c) {
                    cells.push(c);
                }
            }
        }
        PseudoPolyhedron { ambient_dim: self.ambient_dim, cells }
    }

    fn require_finite_bounded(&self) -> Result<()> {
        for c in &self.cells {
            if !c.is_finite_cell() {
                return Err(Error::HasMinusInfinity);
            }
            if !hrep_is_bounded(&c.halfspaces()?, self.ambient_dim) {
                return Err(Error::UnboundedInput);
            }
        }
        Ok(())
    }

    /// Lebesgue volume of the union by inclusion–exclusion over cells.
    pub fn volume(&self) -> Result<f64> {
        self.require_finite_bounded()?;
        let k = self.cells.len();
        if k > 16 {
            return Err(Error::Unsupported(format!("inclusion-exclusion over {k} cells")));
        }
        let mut total = 0.0;
        for mask in 1u32..(1u32 << k) {
            let mut it = (0..k).filter(|i| mask & (1 << i) != 0);
            let first = it.next().expect("non-empty mask");
            let mut cell = self.cells[first].clone();
            for i in it {
                cell = cell.intersect(&self.cells[i]);
            }
            let v = cell.volume()?;
            if mask.count_ones() % 2 == 1 {
                total += v;
            } else {
                total -= v;
            }
        }
        Ok(total.max(0.0))
    }

    /// Image under `x ↦ Mx + v` for an integer matrix `M`.
    pub fn affine_image(&self, mat: &[Vec<i64>], shift: &[f64]) -> Result<Self> {
        let m = self.ambient_dim;
        if mat.len() != m || mat.iter().any(|r| r.len() != m) {
            return Err(Error::DimMismatch { expected: m, got: mat.len() });
        }
        if shift.len() != m {
            return Err(Error::DimMismatch { expected: m, got: shift.len() });
        }
        let inv = rational_inverse(mat).ok_or(Error::SingularMatrix)?;
        let mut cells = Vec::with_capacity(self.cells.len());
        for cell in &self.cells {
            if !cell.is_finite_cell() {
                return Err(Error::HasMinusInfinity);
            }
            // x = M⁻¹(y − v); every original constraint a·x + c ≤ 0 becomes
            // (a M⁻¹)·y + (c − a M⁻¹ v) ≤ 0.
            let mut forms: Vec<AffineFormQ> = Vec::new();
            for i in 0..m {
                let mut e = vec![Q::zero(); m];
                e[i] = Q::from_integer(1);
                if cell.upper[i].is_finite() {
                    forms.push(AffineFormQ::new(e.clone(), -cell.upper[i]));
                }
                if cell.lower[i].is_finite() {
                    forms.push(AffineFormQ::new(e.iter().map(|q| -q).collect(), cell.lower[i]));
                }
            }
            forms.extend(cell.constraints.iter().cloned());
            let mut out = PseudoCell::full(m);
            for f in forms {
                let lin: Vec<Q> = (0..m)
                    .map(|j| (0..m).fold(Q::zero(), |acc, k| acc + f.linear[k] * inv[k][j]))
                    .collect();
                let shift_term: f64 = lin
                    .iter()
                    .zip(shift)
                    .map(|(a, v)| a.to_f64().unwrap_or(f64::NAN) * v)
                    .sum();
                out.constraints.push(AffineFormQ::new(lin, f.constant - shift_term));
            }
            let out = if hrep_is_bounded(&out.halfspaces()?, m) { out.tightened()? } else { out };
            cells.push(out);
        }
        Ok(PseudoPolyhedron { ambient_dim: m, cells })
    }

    /// Split into cells overlapping only in lower dimension, each on one side
    /// of every hyperplane `ℓ = 0`.
    pub fn refine(&self, hyperplanes: &[AffineFormQ]) -> Result<Vec<PseudoPolyhedron>> {
        self.require_finite_bounded()?;
        let mut pieces = self.disjoint_cells()?;
        for h in hyperplanes {
            if h.dim() != self.ambient_dim {
                return Err(Error::DimMismatch { expected: self.ambient_dim, got: h.dim() });
            }
            let mut next = Vec::with_capacity(pieces.len() * 2);
            for p in pieces {
                for side in [h.clone(), h.negated()] {
                    let c = p.clone().with_constraint(side);
                    if c.volume()? > 0.0 {
                        next.push(c);
                    }
                }
            }
            pieces = next;
        }
        pieces
            .into_iter()
            .map(|c| Ok(PseudoPolyhedron::from_cell(c.tightened()?)))
            .collect()
    }

    /// Rewrite the union as cells with pairwise lower-dimensional overlaps.
    fn disjoint_cells(&self) -> Result<Vec<PseudoCell>> {
        let mut accepted: Vec<PseudoCell> = Vec::new();
        for cell in &self.cells {
            let mut pieces = vec![cell.clone()];
            for prev in &accepted {
                let mut remaining = Vec::new();
                for p in pieces {
                    remaining.extend(cell_difference(&p, prev)?);
                }
                pieces = remaining;
            }
            accepted.extend(pieces);
        }
        Ok(accepted)
    }

    /// Bounding box of all cells, `None` if empty.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.cells.is_empty() {
            return None;
        }
        let m = self.ambient_dim;
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![f64::NEG_INFINITY; m];
        for c in &self.cells {
            for i in 0..m {
                lo[i] = lo[i].min(c.lower_of(i));
                hi[i] = hi[i].max(c.upper[i]);
            }
        }
        Some((lo, hi))
    }
}

/// `p ∖ q` as closed cells, lower-dimensional pieces dropped.
fn cell_difference(p: &PseudoCell, q: &PseudoCell) -> Result<Vec<PseudoCell>> {
    let m = p.dim();
    let mut q_forms: Vec<AffineFormQ> = Vec::new();
    for i in 0..m {
        let mut e = vec![Q::zero(); m];
        e[i] = Q::from_integer(1);
        if q.upper[i].is_finite() {
            q_forms.push(AffineFormQ::new(e.clone(), -q.upper[i]));
        }
        if q.lower[i].is_finite() {
            q_forms.push(AffineFormQ::new(e.iter().map(|v| -v).collect(), q.lower[i]));
        }
    }
    q_forms.extend(q.constraints.iter().cloned());
    let mut out = Vec::new();
    let mut base = p.clone();
    for f in q_forms {
        let outside = base.clone().with_constraint(f.negated());
        if outside.volume()? > 0.0 {
            out.push(outside);
        }
        base = base.with_constraint(f);
    }
    Ok(out)
}

/// Exact inverse of an integer matrix over Q (Gauss–Jordan).
pub fn rational_inverse(mat: &[Vec<i64>]) -> Option<Vec<Vec<Q>>> {
    let m = mat.len();
    let mut a: Vec<Vec<Q>> = mat
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<Q> = row.iter().map(|&v| Q::from_integer(v)).collect();
            r.extend((0..m).map(|j| if i == j { Q::from_integer(1) } else { Q::zero() }));
            r
        })
        .collect();
    for col in 0..m {
        let piv = (col..m).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        let p = a[col][col];
        for v in a[col].iter_mut() {
            *v /= p;
        }
        for r in 0..m {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col];
                for c in 0..2 * m {
                    let sub = f * a[col][c];
                    a[r][c] -= sub;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[m..].to_vec()).collect())
}

/// Exact integer determinant (Bareiss).
pub fn int_det(mat: &[Vec<i64>]) -> i64 {
    let n = mat.len();
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> = mat.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&r| a[r][k] != 0) else {
                return 0;
            };
            a.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    (sign * a[n - 1][n - 1]) as i64
}

#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpace {
    pub a: Vec<f64>,
    pub b: f64,
}

impl HalfSpace {
    fn slack(&self, x: &[f64]) -> f64 {
        self.b - dot(&self.a, x)
    }

    fn scale(&self) -> f64 {
        self.a.iter().map(|v| v.abs()).fold(self.b.abs(), f64::max).max(1.0)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve a square system by Gaussian elimination with partial pivoting.
pub(crate) fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let norm = a.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * norm {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Vertices of `{a·x ≤ b}` by solving every `m`-subset of tight constraints.
pub fn enumerate_vertices(hs: &[HalfSpace], m: usize) -> Vec<Vec<f64>> {
    assert!(m <= MAX_DIM, "ambient dimension {m} exceeds {MAX_DIM}");
    let mut verts: Vec<Vec<f64>> = Vec::new();
    if m == 0 {
        if hs.iter().all(|h| h.b >= -GEOM_TOL) {
            verts.push(Vec::new());
        }
        return verts;
    }
    for combo in combinations(hs.len(), m) {
        let a: Vec<Vec<f64>> = combo.iter().map(|&i| hs[i].a.clone()).collect();
        let b: Vec<f64> = combo.iter().map(|&i| hs[i].b).collect();
        let Some(x) = solve(a, b) else { continue };
        if x.iter().any(|v| !v.is_finite()) {
            continue;
        }
        if hs.iter().all(|h| h.slack(&x) >= -GEOM_TOL * h.scale()) {
            let scale = x.iter().map(|v| v.abs()).fold(1.0, f64::max);
            if !verts
                .iter()
                .any(|v| v.iter().zip(&x).all(|(p, q)| (p - q).abs() <= 1e-9 * scale))
            {
                verts.push(x);
            }
        }
    }
    verts
}

/// True iff the recession cone `{a·r ≤ 0}` is `{0}`.
pub fn hrep_is_bounded(hs: &[HalfSpace], m: usize) -> bool {
    recession_ray(hs, m).is_none()
}

/// A nonzero direction `r` with `a·r ≤ 0` for all half-spaces, if any.
pub fn recession_ray(hs: &[HalfSpace], m: usize) -> Option<Vec<f64>> {
    let mut cone: Vec<HalfSpace> =
        hs.iter().map(|h| HalfSpace { a: h.a.clone(), b: 0.0 }).collect();
    for i in 0..m {
        let mut a = vec![0.0; m];
        a[i] = 1.0;
        cone.push(HalfSpace { a: a.clone(), b: 1.0 });
        a[i] = -1.0;
        cone.push(HalfSpace { a, b: 1.0 });
    }
    enumerate_vertices(&cone, m)
        .into_iter()
        .find(|v| v.iter().any(|x| x.abs() > 1e-7))
}

fn affine_rank(points: &[&Vec<f64>]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let m = points[0].len();
    let mut rows: Vec<Vec<f64>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(points[0].iter()).map(|(a, b)| a - b).collect())
        .collect();
    let scale = rows.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    let mut rank = 0;
    for col in 0..m {
        let Some(piv) = (rank..rows.len())
            .filter(|&r| rows[r][col].abs() > 1e-9 * scale)
            .max_by(|&i, &j| rows[i][col].abs().total_cmp(&rows[j][col].abs()))
        else {
            continue;
        };
        rows.swap(rank, piv);
        for r in rank + 1..rows.len() {
            let f = rows[r][col] / rows[rank][col];
            for c in col..m {
                rows[r][c] -= f * rows[rank][c];
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Triangulate a bounded convex polytope given its vertices and H-rep.
///
/// Each face of dimension `k` is coned from its vertex centroid over the
/// simplices of its `(k-1)`-faces.
pub fn triangulate_polytope(verts: &[Vec<f64>], hs: &[HalfSpace], m: usize) -> Vec<Vec<Vec<f64>>> {
    if verts.len() < m + 1 {
        return Vec::new();
    }
    let all: Vec<usize> = (0..verts.len()).collect();
    let refs: Vec<&Vec<f64>> = verts.iter().collect();
    if affine_rank(&refs) < m {
        return Vec::new();
    }
    let tight: Vec<BTreeSet<usize>> = hs
        .iter()
        .map(|h| {
            (0..verts.len())
                .filter(|&i| h.slack(&verts[i]).abs() <= 1e-8 * h.scale())
                .collect()
        })
        .collect();
    face_simplices(verts, &all, m, &tight)
}

fn face_simplices(
    verts: &[Vec<f64>],
    face: &[usize],
    dim: usize,
    tight: &[BTreeSet<usize>],
) -> Vec<Vec<Vec<f64>>> {
    match dim {
        0 => vec![vec![verts[face[0]].clone()]],
        1 => {
            // endpoints are the farthest pair
            let mut best = (face[0], face[0], -1.0);
            for &i in face {
                for &j in face {
                    let d: f64 = verts[i].iter().zip(&verts[j]).map(|(a, b)| (a - b).powi(2)).sum();
                    if d > best.2 {
                        best = (i, j, d);
                    }
                }
            }
            vec![vec![verts[best.0].clone(), verts[best.1].clone()]]
        }
        _ => {
            let m = verts[face[0]].len();
            let mut apex = vec![0.0; m];
            for &i in face {
                for (a, v) in apex.iter_mut().zip(&verts[i]) {
                    *a += v;
                }
            }
            for a in apex.iter_mut() {
                *a /= face.len() as f64;
            }
            let face_set: BTreeSet<usize> = face.iter().copied().collect();
            let mut seen: Vec<BTreeSet<usize>> = Vec::new();
            let mut out = Vec::new();
            for t in tight {
                let sub: BTreeSet<usize> = face_set.intersection(t).copied().collect();
                if sub.len() < dim || sub.len() == face_set.len() || seen.contains(&sub) {
                    continue;
                }
                let sub_vec: Vec<usize> = sub.iter().copied().collect();
                let pts: Vec<&Vec<f64>> = sub_vec.iter().map(|&i| &verts[i]).collect();
                if affine_rank(&pts) != dim - 1 {
                    continue;
                }
                seen.push(sub);
                for mut s in face_simplices(verts, &sub_vec, dim - 1, tight) {
                    s.push(apex.clone());
                    out.push(s);
                }
            }
            out
        }
    }
}

/// Volume of a simplex given by `m + 1` points in `R^m`.
pub fn simplex_volume(s: &[Vec<f64>]) -> f64 {
    let m = s.len() - 1;
    if m == 0 {
        return 1.0;
    }
    let mat = nalgebra::DMatrix::from_fn(m, m, |i, j| s[i + 1][j] - s[0][j]);
    let fact: f64 = (1..=m).map(|k| k as f64).product();
    mat.determinant().abs() / fact
}

// ---- JSON schema --------------------------------------------------------

/// `{I, upper, lower, constraints}` with 1-based indices; `null` upper means `+∞`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellSpec {
    #[serde(rename = "I", default)]
    pub minus_inf: Vec<usize>,
    pub upper: Vec<Option<f64>>,
    #[serde(default)]
    pub lower: BTreeMap<String, f64>,
    #[serde(default)]
    pub constraints: Vec<ConstraintSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub linear: Vec<String>,
    pub constant: f64,
}

impl CellSpec {
    pub fn to_cell(&self) -> Result<PseudoCell> {
        let m = self.upper.len();
        let mut cell = PseudoCell::full(m);
        for &i in &self.minus_inf {
            if i == 0 || i > m {
                return Err(Error::Parse(format!("index {i} out of range 1..={m}")));
            }
            cell.minus_inf.insert(i - 1);
        }
        for (i, u) in self.upper.iter().enumerate() {
            cell.upper[i] = u.unwrap_or(f64::INFINITY);
        }
        for (k, v) in &self.lower {
            let i: usize = k
                .parse()
                .map_err(|_| Error::Parse(format!("bad lower-bound index {k:?}")))?;
            if i == 0 || i > m {
                return Err(Error::Parse(format!("index {i} out of range 1..={m}")));
            }
            cell.lower[i - 1] = *v;
        }
        for c in &self.constraints {
            let linear = c.linear.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
            cell.constraints.push(AffineFormQ::new(linear, c.constant));
        }
        cell.check_invariants()?;
        Ok(cell)
    }

    pub fn from_cell(cell: &PseudoCell) -> Self {
        CellSpec {
            minus_inf: cell.minus_inf.iter().map(|i| i + 1).collect(),
            upper: cell.upper.iter().map(|u| u.is_finite().then_some(*u)).collect(),
            lower: (0..cell.dim())
                .filter(|i| !cell.minus_inf.contains(i) && cell.lower[*i].is_finite())
                .map(|i| ((i + 1).to_string(), cell.lower[i]))
                .collect(),
            constraints: cell
                .constraints
                .iter()
                .map(|c| ConstraintSpec {
                    linear: c.linear.iter().map(|q| q.to_string()).collect(),
                    constant: c.constant,
                })
                .collect(),
        }
    }
}

pub fn polyhedron_from_specs(m: usize, specs: &[CellSpec]) -> Result<PseudoPolyhedron> {
    let cells = specs.iter().map(|s| s.to_cell()).collect::<Result<Vec<_>>>()?;
    PseudoPolyhedron::new(m, cells)
}

pub fn polyhedron_to_specs(p: &PseudoPolyhedron) -> Vec<CellSpec> {
    p.cells.iter().map(CellSpec::from_cell).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cube(m: usize) -> PseudoPolyhedron {
        PseudoPolyhedron::from_box(vec![0.0; m], vec![1.0; m])
    }

    fn simplex(m: usize) -> PseudoPolyhedron {
        let mut c = PseudoCell::from_box(vec![0.0; m], vec![1.0; m]);
        c.constraints.push(AffineFormQ::from_ints(&vec![1; m], -1.0));
        PseudoPolyhedron::from_cell(c)
    }

    #[test]
    fn contains_examples() {
        let empty = PseudoPolyhedron::empty(2);
        assert!(!empty.contains(&ExtPoint(vec![0.0, 0.0])).unwrap());

        let mut c = PseudoCell::from_box(vec![f64::NEG_INFINITY, 0.0], vec![0.0, 1.0]);
        c.minus_inf.insert(0);
        let p = PseudoPolyhedron::from_cell(c);
        assert!(p.contains(&ExtPoint(vec![f64::NEG_INFINITY, 0.5])).unwrap());
        assert!(!p.contains(&ExtPoint(vec![0.5, 0.5])).unwrap());

        let q = PseudoPolyhedron::from_cell(
            PseudoCell::from_box(vec![-1.0, -1.0], vec![1.0, 1.0])
                .with_constraint(AffineFormQ::from_ints(&[1, 1], 0.0)),
        );
        assert!(!q.contains(&ExtPoint(vec![0.6, 0.5])).unwrap());
        assert!(q.contains(&ExtPoint(vec![0.6, -0.7])).unwrap());
        // -inf is rejected on finite coordinates
        assert!(!q.contains(&ExtPoint(vec![f64::NEG_INFINITY, 0.0])).unwrap());
        assert_eq!(
            q.contains(&ExtPoint(vec![0.0])),
            Err(Error::DimMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn thicken_examples() {
        let point = PseudoPolyhedron::from_box(vec![0.0], vec![0.0]);
        let t = point.thicken(1.0).unwrap();
        assert_eq!(t.cells[0].lower, vec![-1.0]);
        assert_eq!(t.cells[0].upper, vec![1.0]);

        let mut ray = PseudoCell::from_box(vec![f64::NEG_INFINITY], vec![0.0]);
        ray.minus_inf.insert(0);
        let t = PseudoPolyhedron::from_cell(ray).thicken(0.5).unwrap();
        assert_eq!(t.cells[0].upper, vec![0.5]);
        assert!(t.contains(&ExtPoint(vec![f64::NEG_INFINITY])).unwrap());

        let s = simplex(2).thicken(0.1).unwrap();
        assert!(s.contains(&ExtPoint(vec![-0.05, -0.05])).unwrap());

        assert_eq!(point.thicken(-1.0), Err(Error::NegativeEps(-1.0)));
        assert_eq!(simplex(2).thicken(0.0).unwrap(), simplex(2));
    }

    #[test]
    fn thicken_contains_minkowski_sum_samples() {
        // Minkowski-sum oracle: x ∈ S + [-eps, eps]^2 iff some point of the
        // eps-box around x lies in S, searched on a fine grid.
        let s = simplex(2);
        let eps = 0.1;
        let t = s.thicken(eps).unwrap();
        let grid = 40;
        for i in 0..30 {
            for j in 0..30 {
                let x = [-0.3 + 1.6 * i as f64 / 29.0, -0.3 + 1.6 * j as f64 / 29.0];
                let mut in_sum = false;
                'search: for a in 0..=grid {
                    for b in 0..=grid {
                        let y = [
                            x[0] - eps + 2.0 * eps * a as f64 / grid as f64,
                            x[1] - eps + 2.0 * eps * b as f64 / grid as f64,
                        ];
                        if s.contains_slice(&y) {
                            in_sum = true;
                            break 'search;
                        }
                    }
                }
                if in_sum {
                    assert!(t.contains_slice(&x), "{x:?} in Minkowski sum but not in thickening");
                }
            }
        }
    }

    #[test]
    fn volume_examples() {
        for m in 1..=4 {
            assert!((unit_cube(m).volume().unwrap() - 1.0).abs() < 1e-12);
        }
        assert!((simplex(3).volume().unwrap() - 1.0 / 6.0).abs() < 1e-12);
        assert!((simplex(2).volume().unwrap() - 0.5).abs() < 1e-12);

        // overlapping union: [0,2]x[0,1] ∪ [1,3]x[0,1] has area 3
        let p = PseudoPolyhedron::new(
            2,
            vec![
                PseudoCell::from_box(vec![0.0, 0.0], vec![2.0, 1.0]),
                PseudoCell::from_box(vec![1.0, 0.0], vec![3.0, 1.0]),
            ],
        )
        .unwrap();
        assert!((p.volume().unwrap() - 3.0).abs() < 1e-12);

        // degenerate cell reports zero
        let flat = PseudoPolyhedron::from_box(vec![0.0, 0.0], vec![1.0, 0.0]);
        assert_eq!(flat.volume().unwrap(), 0.0);
        assert_eq!(PseudoPolyhedron::empty(2).volume().unwrap(), 0.0);
    }

    #[test]
    fn volume_errors() {
        let half = PseudoPolyhedron::from_box(vec![0.0], vec![f64::INFINITY]);
        assert_eq!(half.volume(), Err(Error::UnboundedInput));
        let mut ray = PseudoCell::from_box(vec![0.0], vec![0.0]);
        ray.minus_inf.insert(0);
        assert_eq!(PseudoPolyhedron::from_cell(ray).volume(), Err(Error::HasMinusInfinity));
    }

    #[test]
    fn affine_image_examples() {
        let sq = unit_cube(2);
        let id = vec![vec![1, 0], vec![0, 1]];
        let img = sq.affine_image(&id, &[0.0, 0.0]).unwrap();
        for x in [[0.5, 0.5], [1.2, 0.5], [0.0, 1.0], [-0.1, 0.2]] {
            assert_eq!(img.contains_slice(&x), sq.contains_slice(&x));
        }
        let stretched = sq.affine_image(&[vec![2, 0], vec![0, 1]], &[0.0, 0.0]).unwrap();
        assert!((stretched.volume().unwrap() - 2.0).abs() < 1e-12);
        let sheared = simplex(2).affine_image(&[vec![1, 1], vec![0, 1]], &[3.0, -1.0]).unwrap();
        assert!((sheared.volume().unwrap() - 0.5).abs() < 1e-12);
        assert!(sheared.contains_slice(&[3.0 + 0.2 + 0.3, -1.0 + 0.3]));
        assert_eq!(
            sq.affine_image(&[vec![1, 2], vec![2, 4]], &[0.0, 0.0]),
            Err(Error::SingularMatrix)
        );
    }

    #[test]
    fn refine_examples() {
        let seg = PseudoPolyhedron::from_box(vec![-2.0], vec![2.0]);
        let parts = seg.refine(&[AffineFormQ::from_ints(&[1], 0.0)]).unwrap();
        assert_eq!(parts.len(), 2);
        let mut boxes: Vec<(f64, f64)> =
            parts.iter().map(|p| (p.cells[0].lower[0], p.cells[0].upper[0])).collect();
        boxes.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(boxes, vec![(-2.0, 0.0), (0.0, 2.0)]);

        let sq = unit_cube(2);
        let diag = AffineFormQ::from_ints(&[1, -1], 0.0);
        let tris = sq.refine(&[diag]).unwrap();
        assert_eq!(tris.len(), 2);
        for t in &tris {
            assert!((t.volume().unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn refine_disjointifies_overlapping_cells() {
        let p = PseudoPolyhedron::new(
            2,
            vec![
                PseudoCell::from_box(vec![0.0, 0.0], vec![2.0, 1.0]),
                PseudoCell::from_box(vec![1.0, 0.0], vec![3.0, 2.0]),
            ],
        )
        .unwrap();
        let parts = p.refine(&[]).unwrap();
        let total: f64 = parts.iter().map(|q| q.volume().unwrap()).sum();
        assert!((total - p.volume().unwrap()).abs() < 1e-9);
        for (i, a) in parts.iter().enumerate() {
            for b in &parts[i + 1..] {
                assert!(a.intersect(b).volume().unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn int_det_and_inverse() {
        assert_eq!(int_det(&[vec![2, 1], vec![1, 1]]), 1);
        assert_eq!(int_det(&[vec![0, 1], vec![1, 0]]), -1);
        assert_eq!(int_det(&[vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 10]]), -3);
        assert_eq!(int_det(&[vec![1, 2], vec![2, 4]]), 0);
        let inv = rational_inverse(&[vec![2, 0], vec![0, 4]]).unwrap();
        assert_eq!(inv[0][0], Q::new(1, 2));
        assert_eq!(inv[1][1], Q::new(1, 4));
    }

    #[test]
    fn cell_spec_roundtrip() {
        let json = r#"{"I":[1],"upper":[0.0,null],"lower":{"2":-1.0},
                       "constraints":[{"linear":["0","1/2"],"constant":-3.0}]}"#;
        let spec: CellSpec = serde_json::from_str(json).unwrap();
        let cell = spec.to_cell().unwrap();
        assert!(cell.minus_inf.contains(&0));
        assert_eq!(cell.upper[1], f64::INFINITY);
        assert_eq!(cell.lower[1], -1.0);
        assert_eq!(cell.constraints[0].linear[1], Q::new(1, 2));
        assert_eq!(CellSpec::from_cell(&cell).to_cell().unwrap(), cell);

        // constraint touching a -inf coordinate is rejected
        let bad = r#"{"I":[1],"upper":[0.0],"constraints":[{"linear":["1"],"constant":0.0}]}"#;
        let spec: CellSpec = serde_json::from_str(bad).unwrap();
        assert!(spec.to_cell().is_err());
    }
}

//! Quadrature building blocks.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let p = if order == 1 { x } else { p1 };
            let pm1 = if order == 1 { 1.0 } else { p0 };
            dp = n * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }
    (nodes, weights)
}

/// Neumaier compensated sum.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &Neumaier) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Composite rule on `[a, b]` over the given panel edges.
pub fn composite_rule(edges: &[f64], order: usize) -> Vec<(f64, f64)> {
    let (nodes, weights) = gauss_legendre(order);
    let mut out = Vec::with_capacity(edges.len().saturating_sub(1) * order);
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, wt) in nodes.iter().zip(&weights) {
            out.push((mid + half * x, half * wt));
        }
    }
    out
}

/// Panel edges on `[lo, hi]` through every point of `cuts` inside it, with
/// panels no wider than `(hi − lo) / min_panels`.
pub fn panel_edges(lo: f64, hi: f64, cuts: &[f64], min_panels: usize) -> Vec<f64> {
    if hi <= lo {
        return vec![lo, hi];
    }
    let mut pts: Vec<f64> = cuts.iter().copied().filter(|c| *c > lo && *c < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    let tol = 1e-12 * (hi - lo).max(1.0);
    pts.dedup_by(|a, b| (*a - *b).abs() <= tol);
    let max_w = (hi - lo) / min_panels.max(1) as f64;
    let mut edges = vec![pts[0]];
    for w in pts.windows(2) {
        let k = ((w[1] - w[0]) / max_w).ceil().max(1.0) as usize;
        for i in 1..=k {
            edges.push(w[0] + (w[1] - w[0]) * i as f64 / k as f64);
        }
    }
    edges
}

/// Midpoint nodes on `[0, 2π)`.
pub fn periodic_midpoints(count: usize) -> Vec<(f64, f64)> {
    let h = 2.0 * PI / count as f64;
    (0..count).map(|k| ((k as f64 + 0.5) * h, h)).collect()
}

/// Gauss rule on a simplex (`k + 1` vertices in `R^k`) via the collapsed
/// (Duffy) map of the unit cube.
pub fn simplex_rule(simplex: &[Vec<f64>], order: usize) -> Vec<(Vec<f64>, f64)> {
    let k = simplex.len() - 1;
    let v0 = &simplex[0];
    let edges: Vec<Vec<f64>> = simplex[1..]
        .iter()
        .map(|v| v.iter().zip(v0).map(|(a, b)| a - b).collect())
        .collect();
    let vol_factor = det_small(&edges).abs();
    let (nodes, weights) = gauss_legendre(order);
    let u: Vec<f64> = nodes.iter().map(|x| 0.5 * (x + 1.0)).collect();
    let wu: Vec<f64> = weights.iter().map(|w| 0.5 * w).collect();
    let mut out = Vec::new();
    let total = order.pow(k as u32);
    for idx in 0..total {
        let mut rem = idx;
        let mut bary = vec![0.0; k];
        let mut mass = 1.0;
        let mut jac = vol_factor;
        for i in 0..k {
            let a = rem % order;
            rem /= order;
            let ui = u[a];
            bary[i] = mass * ui;
            jac *= wu[a];
            if i + 1 < k {
                jac *= (1.0 - ui).powi((k - 1 - i) as i32);
            }
            mass *= 1.0 - ui;
        }
        let mut x = v0.clone();
        for (b, e) in bary.iter().zip(&edges) {
            for (xi, ei) in x.iter_mut().zip(e) {
                *xi += b * ei;
            }
        }
        out.push((x, jac));
    }
    out
}

/// Split a simplex of dimension ≤ 2 into `2^k` (intervals) or `4^k` (triangles) pieces.
pub fn subdivide_simplex(simplex: &[Vec<f64>], depth: usize) -> Vec<Vec<Vec<f64>>> {
    let mut cur = vec![simplex.to_vec()];
    let mid = |a: &Vec<f64>, b: &Vec<f64>| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect() };
    for _ in 0..depth {
        let mut next = Vec::new();
        for s in &cur {
            match s.len() {
                2 => {
                    let m = mid(&s[0], &s[1]);
                    next.push(vec![s[0].clone(), m.clone()]);
                    next.push(vec![m, s[1].clone()]);
                }
                3 => {
                    let (a, b, c) = (&s[0], &s[1], &s[2]);
                    let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
                    next.push(vec![a.clone(), ab.clone(), ca.clone()]);
                    next.push(vec![ab.clone(), b.clone(), bc.clone()]);
                    next.push(vec![ca.clone(), bc.clone(), c.clone()]);
                    next.push(vec![ab, bc, ca]);
                }
                _ => next.push(s.clone()),
            }
        }
        cur = next;
    }
    cur
}

/// Determinant of a small dense matrix by partial-pivot elimination.
pub fn det_small(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    match n {
        0 => 1.0,
        1 => rows[0][0],
        2 => rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0],
        _ => {
            let mut a: Vec<Vec<f64>> = rows.to_vec();
            let mut det = 1.0;
            for col in 0..n {
                let piv = (col..n)
                    .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                    .expect("non-empty range");
                if a[piv][col] == 0.0 {
                    return 0.0;
                }
                if piv != col {
                    a.swap(piv, col);
                    det = -det;
                }
                det *= a[col][col];
                for r in col + 1..n {
                    let f = a[r][col] / a[col][col];
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
            det
        }
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Additive recurrence points `frac(shift + i·α)` in `[0, 1)^dim`.
pub fn kronecker_point(i: u64, alphas: &[f64], shift: &[f64]) -> Vec<f64> {
    alphas
        .iter()
        .zip(shift)
        .map(|(a, s)| (s + i as f64 * a).fract())
        .collect()
}

/// Irrational steps `frac(√p)` for the first `dim` primes.
pub fn kronecker_alphas(dim: usize) -> Vec<f64> {
    const PRIMES: [f64; 8] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0];
    PRIMES.iter().take(dim).map(|p| p.sqrt().fract()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for order in 1..=20 {
            let (x, w) = gauss_legendre(order);
            for deg in 0..2 * order {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "order {order} deg {deg}");
            }
        }
    }

    #[test]
    fn neumaier_recovers_cancellation() {
        let mut s = Neumaier::default();
        for v in [1.0, 1e100, 1.0, -1e100] {
            s.add(v);
        }
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn panel_edges_include_cuts() {
        let e = panel_edges(-3.0, 1.0, &[-1.0, 5.0], 4);
        assert!(e.contains(&-1.0));
        assert_eq!(*e.first().unwrap(), -3.0);
        assert_eq!(*e.last().unwrap(), 1.0);
        assert!(e.windows(2).all(|w| w[1] - w[0] <= 1.0 + 1e-12));
    }

    #[test]
    fn simplex_rule_integrates_monomials() {
        let tri = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let rule = simplex_rule(&tri, 6);
        let area: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((area - 0.5).abs() < 1e-14);
        // ∫ x y over the unit triangle = 1/24
        let xy: f64 = rule.iter().map(|(p, w)| w * p[0] * p[1]).sum();
        assert!((xy - 1.0 / 24.0).abs() < 1e-14);
        let seg = vec![vec![-1.0], vec![3.0]];
        let r = simplex_rule(&seg, 4);
        let v: f64 = r.iter().map(|(p, w)| w * p[0] * p[0]).sum();
        assert!((v - 28.0 / 3.0).abs() < 1e-12);
        let tet = vec![vec![0.0; 3], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let r = simplex_rule(&tet, 4);
        let vol: f64 = r.iter().map(|(_, w)| w).sum();
        assert!((vol - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn subdivision_preserves_measure() {
        let tri = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 1.0]];
        let pieces = subdivide_simplex(&tri, 3);
        assert_eq!(pieces.len(), 64);
        let total: f64 = pieces
            .iter()
            .map(|s| simplex_rule(s, 2).iter().map(|(_, w)| w).sum::<f64>())
            .sum();
        assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn det_small_examples() {
        assert_eq!(det_small(&[vec![2.0, 1.0], vec![1.0, 1.0]]), 1.0);
        let m = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 10.0]];
        assert!((det_small(&m) + 3.0).abs() < 1e-12);
        assert_eq!(binomial(4, 2), 6.0);
    }
}

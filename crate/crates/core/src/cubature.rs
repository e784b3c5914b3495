//! Globally adaptive cubature over a reflexive polytope.
//!
//! Each origin cone `conv(0, w₁, …, wₙ)` of the canonical triangulation is
//! mapped from the unit cube by a radial coordinate `s = 1 − (1 − r)²`
//! (which flattens the `δ log δ`-type behaviour at the outer facet) times a
//! Duffy collapse of the facet simplex. Boxes are refined worst-first with
//! an error estimate from two tensor Gauss–Legendre orders.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::polytope::{ReflexivePolytope, ORIGIN};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct CubatureOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: usize,
}

impl Default for CubatureOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_evals: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CubatureResult<S> {
    pub value: S,
    pub error: S,
    pub evals: usize,
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(order);
    let mut weights = Vec::with_capacity(order);
    let n = order as f64;
    for i in 0..order {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if order == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

struct Cone<S> {
    base: Vec<Vec<S>>,
    jac: S,
}

struct Rule<S> {
    nodes: Vec<S>,
    weights: Vec<S>,
}

impl<S: Scalar> Rule<S> {
    fn new(order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        Self {
            nodes: x.into_iter().map(S::lit).collect(),
            weights: w.into_iter().map(S::lit).collect(),
        }
    }
}

struct BoxItem<S> {
    cone: usize,
    lo: Vec<S>,
    hi: Vec<S>,
    value: S,
    error: S,
}

impl<S: Scalar> PartialEq for BoxItem<S> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<S: Scalar> Eq for BoxItem<S> {}
impl<S: Scalar> PartialOrd for BoxItem<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S: Scalar> Ord for BoxItem<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

/// Maps a unit-cube point into the cone; returns the point and Jacobian.
fn cone_map<S: Scalar>(cone: &Cone<S>, t: &[S], x: &mut [S]) -> S {
    let n = t.len();
    let one = S::one();
    let r = t[0];
    let s = one - (one - r) * (one - r);
    let mut jac = cone.jac * S::lit(2.0) * (one - r);
    for _ in 1..n {
        jac = jac * s;
    }
    // Duffy collapse of the facet simplex.
    let m = n - 1;
    let mut remaining = one;
    x.iter_mut().for_each(|v| *v = S::zero());
    for k in 0..m {
        let u = t[k + 1];
        let wk = remaining * u;
        for (xi, bi) in x.iter_mut().zip(&cone.base[k]) {
            *xi = *xi + wk * *bi;
        }
        remaining = remaining * (one - u);
        for _ in 0..(m - 1 - k) {
            jac = jac * (one - u);
        }
    }
    for (xi, bi) in x.iter_mut().zip(&cone.base[m]) {
        *xi = (*xi + remaining * *bi) * s;
    }
    jac
}

fn tensor_rule<S: Scalar, F: Fn(&[S]) -> S>(
    f: &F,
    cone: &Cone<S>,
    lo: &[S],
    hi: &[S],
    rule: &Rule<S>,
    evals: &mut usize,
) -> S {
    let n = lo.len();
    let q = rule.nodes.len();
    let mut idx = vec![0usize; n];
    let mut t = vec![S::zero(); n];
    let mut x = vec![S::zero(); n];
    let vol: S = lo.iter().zip(hi).fold(S::one(), |acc, (&a, &b)| acc * (b - a));
    let mut sum = S::zero();
    loop {
        let mut w = vol;
        for d in 0..n {
            t[d] = lo[d] + (hi[d] - lo[d]) * rule.nodes[idx[d]];
            w = w * rule.weights[idx[d]];
        }
        let jac = cone_map(cone, &t, &mut x);
        sum = sum + w * jac * f(&x);
        *evals += 1;
        let mut d = 0;
        loop {
            if d == n {
                return sum;
            }
            idx[d] += 1;
            if idx[d] < q {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Integrates `f` over the polytope to the requested tolerance (or until
/// the evaluation budget runs out; the returned error estimate says which).
pub fn integrate_polytope<S, F>(polytope: &ReflexivePolytope, f: F, opts: CubatureOptions) -> CubatureResult<S>
where
    S: Scalar,
    F: Fn(&[S]) -> S,
{
    let n = polytope.dim();
    let cones: Vec<Cone<S>> = polytope
        .triangulation()
        .iter()
        .map(|simplex| {
            let base: Vec<Vec<S>> = simplex
                .iter()
                .filter(|&&i| i != ORIGIN)
                .map(|&i| polytope.vertices()[i].to_scalars())
                .collect();
            let rows: Vec<S> = base.iter().flatten().copied().collect();
            let jac = crate::linalg::det_dense(&rows, n).abs();
            Cone { base, jac }
        })
        .collect();
    let high = Rule::<S>::new(7);
    let low = Rule::<S>::new(5);
    let mut evals = 0usize;
    let mut heap = BinaryHeap::new();
    let mut total = S::zero();
    let mut total_err = S::zero();
    let push = |cone: usize, lo: Vec<S>, hi: Vec<S>, heap: &mut BinaryHeap<BoxItem<S>>, evals: &mut usize| {
        let v_hi = tensor_rule(&f, &cones[cone], &lo, &hi, &high, evals);
        let v_lo = tensor_rule(&f, &cones[cone], &lo, &hi, &low, evals);
        let item = BoxItem {
            cone,
            lo,
            hi,
            value: v_hi,
            error: (v_hi - v_lo).abs(),
        };
        let out = (item.value, item.error);
        heap.push(item);
        out
    };
    for c in 0..cones.len() {
        let (v, e) = push(c, vec![S::zero(); n], vec![S::one(); n], &mut heap, &mut evals);
        total = total + v;
        total_err = total_err + e;
    }
    loop {
        let target = S::lit(opts.abs_tol).max(S::lit(opts.rel_tol) * total.abs());
        if total_err <= target || evals >= opts.max_evals {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        total = total - worst.value;
        total_err = total_err - worst.error;
        let axis = (0..n)
            .max_by(|&a, &b| {
                (worst.hi[a] - worst.lo[a])
                    .partial_cmp(&(worst.hi[b] - worst.lo[b]))
                    .unwrap_or(Ordering::Equal)
                    .then(b.cmp(&a))
            })
            .unwrap_or(0);
        let mid = (worst.lo[axis] + worst.hi[axis]) * S::lit(0.5);
        let mut hi_left = worst.hi.clone();
        hi_left[axis] = mid;
        let mut lo_right = worst.lo.clone();
        lo_right[axis] = mid;
        let (v1, e1) = push(worst.cone, worst.lo.clone(), hi_left, &mut heap, &mut evals);
        let (v2, e2) = push(worst.cone, lo_right, worst.hi.clone(), &mut heap, &mut evals);
        total = total + v1 + v2;
        total_err = total_err + e1 + e2;
    }
    // Re-sum from the leaves to shed accumulated cancellation error.
    let value = heap.iter().fold(S::zero(), |acc, b| acc + b.value);
    let error = heap.iter().fold(S::zero(), |acc, b| acc + b.error);
    CubatureResult { value, error, evals }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(5);
        for k in 0..10 {
            let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn polynomial_moments_match_exact() {
        let f1 = ReflexivePolytope::from_coords("F1", &[&[-1, -1], &[0, -1], &[2, 1], &[-1, 1]]).unwrap();
        let r = integrate_polytope::<f64, _>(&f1, |x| x[0] * x[1], CubatureOptions::default());
        assert!((r.value - 2.0 / 3.0).abs() < 1e-12, "{}", r.value);
        let r = integrate_polytope::<f64, _>(&f1, |_| 1.0, CubatureOptions::default());
        assert!((r.value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_log_singularity_in_one_dimension() {
        let p1 = ReflexivePolytope::from_coords("P1", &[&[-1], &[1]]).unwrap();
        let r = integrate_polytope::<f64, _>(
            &p1,
            |x| {
                let d = 1.0 - x[0];
                if d > 0.0 {
                    d * d.ln()
                } else {
                    0.0
                }
            },
            CubatureOptions::default(),
        );
        // ∫_{-1}^{1} (1-x) ln(1-x) dx = ∫_0^2 t ln t dt = 2 ln 2 - 1.
        assert!((r.value - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-11, "{}", r.value);
    }
}

//! Legendre duality between symplectic potentials `u` on the polytope and
//! Kähler potentials `φ` on `ℝⁿ`.
//!
//! The smooth side is the log-sum-exp family
//! `φ_θ(ξ) = log Σ_m exp(⟨m, ξ⟩ + θ_m)` over a rational sample of the
//! polytope containing its vertices. Its gradient is the softmax mean of the
//! sample, so the moment map lands in the open polytope.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hull::Point;
use crate::invariants::{linearity_cells, PLConvexFunction};
use crate::linalg;
use crate::polytope::ReflexivePolytope;
use crate::scalar::{to_scalars, Scalar};

/// Softmax data at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry<S> {
    pub value: S,
    pub gradient: Vec<S>,
    /// Row-major `n×n`.
    pub hessian: Vec<S>,
    pub weights: Vec<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogSumExpPotential<S> {
    dim: usize,
    sample: Vec<Point>,
    /// Sample coordinates, flattened row-major (`len = sample.len() · dim`).
    coords: Vec<S>,
    theta: Vec<S>,
}

impl<S: Scalar> LogSumExpPotential<S> {
    /// Potential over an explicit sample with the given weights.
    pub fn new(sample: Vec<Point>, theta: Vec<S>) -> Result<Self> {
        let dim = sample.first().map_or(0, Vec::len);
        if dim == 0 || sample.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidInput("sample points must share a positive dimension".into()));
        }
        if theta.len() != sample.len() {
            return Err(Error::InvalidInput(format!(
                "{} weights for {} sample points",
                theta.len(),
                sample.len()
            )));
        }
        let coords = sample.iter().flat_map(|p| to_scalars::<S>(p)).collect();
        Ok(Self {
            dim,
            sample,
            coords,
            theta,
        })
    }

    /// `θ = 0` over `△ ∩ (1/k)ℤⁿ`.
    pub fn on_polytope(polytope: &ReflexivePolytope, k: u32) -> Self {
        let sample = polytope.lattice_sample(k);
        let theta = vec![S::zero(); sample.len()];
        Self::new(sample, theta).expect("lattice sample is non-empty")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn sample(&self) -> &[Point] {
        &self.sample
    }

    pub fn point(&self, m: usize) -> &[S] {
        &self.coords[m * self.dim..(m + 1) * self.dim]
    }

    pub fn theta(&self) -> &[S] {
        &self.theta
    }

    pub fn with_theta(&self, theta: Vec<S>) -> Self {
        assert_eq!(theta.len(), self.theta.len());
        Self {
            dim: self.dim,
            sample: self.sample.clone(),
            coords: self.coords.clone(),
            theta,
        }
    }

    pub fn set_theta(&mut self, theta: &[S]) {
        self.theta.copy_from_slice(theta);
    }

    pub fn theta_min(&self) -> S {
        self.theta.iter().copied().fold(S::infinity(), S::min)
    }

    pub fn theta_max(&self) -> S {
        self.theta.iter().copied().fold(S::neg_infinity(), S::max)
    }

    /// Writes normalized softmax weights into `weights`; returns `φ(ξ)`.
    pub fn weights_into(&self, xi: &[S], weights: &mut [S]) -> S {
        let n = self.dim;
        let mut mx = S::neg_infinity();
        for (m, w) in weights.iter_mut().enumerate() {
            let p = &self.coords[m * n..(m + 1) * n];
            let s = p.iter().zip(xi).fold(self.theta[m], |acc, (&a, &b)| acc + a * b);
            *w = s;
            mx = mx.max(s);
        }
        let mut sum = S::zero();
        for w in weights.iter_mut() {
            *w = (*w - mx).exp();
            sum = sum + *w;
        }
        for w in weights.iter_mut() {
            *w = *w / sum;
        }
        mx + sum.ln()
    }

    pub fn value(&self, xi: &[S]) -> S {
        let mut w = vec![S::zero(); self.len()];
        self.weights_into(xi, &mut w)
    }

    /// Gradient and (centred) Hessian from weights already computed at `ξ`.
    pub fn moments_from_weights(&self, weights: &[S], gradient: &mut [S], hessian: &mut [S]) {
        let n = self.dim;
        gradient.iter_mut().for_each(|g| *g = S::zero());
        hessian.iter_mut().for_each(|h| *h = S::zero());
        for (m, &w) in weights.iter().enumerate() {
            let p = &self.coords[m * n..(m + 1) * n];
            for i in 0..n {
                gradient[i] = gradient[i] + w * p[i];
            }
        }
        let mut d = vec![S::zero(); n];
        for (m, &w) in weights.iter().enumerate() {
            let p = &self.coords[m * n..(m + 1) * n];
            for i in 0..n {
                d[i] = p[i] - gradient[i];
            }
            for i in 0..n {
                let wi = w * d[i];
                for j in 0..=i {
                    hessian[i * n + j] = hessian[i * n + j] + wi * d[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                hessian[j * n + i] = hessian[i * n + j];
            }
        }
    }

    /// Facet slacks `⟨n_F, ∇φ⟩ + 1 = Σ_m p_m δ_F(m)` of the moment map,
    /// accumulated from positive terms so they stay positive even where
    /// `∇φ(ξ)` itself rounds onto the boundary.
    pub fn facet_slacks(&self, polytope: &ReflexivePolytope, weights: &[S]) -> Vec<S> {
        let n = self.dim;
        polytope
            .facets()
            .iter()
            .map(|f| {
                weights.iter().enumerate().fold(S::zero(), |acc, (m, &w)| {
                    let p = &self.coords[m * n..(m + 1) * n];
                    let delta = f.normal.iter().zip(p).fold(S::one(), |a, (&c, &x)| a + S::lit(c as f64) * x);
                    acc + w * delta
                })
            })
            .collect()
    }

    /// Value, gradient, Hessian and weights at `ξ`, with max-shifted
    /// exponentials.
    pub fn softmax_geometry(&self, xi: &[S]) -> Geometry<S> {
        let n = self.dim;
        let mut weights = vec![S::zero(); self.len()];
        let value = self.weights_into(xi, &mut weights);
        let mut gradient = vec![S::zero(); n];
        let mut hessian = vec![S::zero(); n * n];
        self.moments_from_weights(&weights, &mut gradient, &mut hessian);
        Geometry {
            value,
            gradient,
            hessian,
            weights,
        }
    }
}

/// `softmax_geometry` as a free function.
pub fn softmax_geometry<S: Scalar>(phi: &LogSumExpPotential<S>, xi: &[S]) -> Geometry<S> {
    phi.softmax_geometry(xi)
}

/// Result of a Legendre inversion at an interior point.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendrePoint<S> {
    pub value: S,
    pub xi: Vec<S>,
    /// `|∇φ(ξ*) − x|`.
    pub residual: S,
    pub iterations: usize,
}

pub const NEWTON_MAX_STEPS: usize = 60;
pub const NEWTON_TOL: f64 = 1e-10;

/// Minimum facet slack below which a point counts as boundary.
pub fn boundary_tolerance<S: Scalar>() -> S {
    S::lit(1e3 * S::eps_f64()).sqrt()
}

/// `u(x) = sup_ξ (⟨x, ξ⟩ − φ(ξ))` by damped Newton from `ξ = 0`.
pub fn legendre_dual_on_polytope<S: Scalar>(
    phi: &LogSumExpPotential<S>,
    polytope: &ReflexivePolytope,
    x: &[S],
) -> Result<LegendrePoint<S>> {
    let start = vec![S::zero(); x.len()];
    legendre_dual_from(phi, polytope, x, &start)
}

/// As [`legendre_dual_on_polytope`], starting Newton from `start`.
pub fn legendre_dual_from<S: Scalar>(
    phi: &LogSumExpPotential<S>,
    polytope: &ReflexivePolytope,
    x: &[S],
    start: &[S],
) -> Result<LegendrePoint<S>> {
    let slack = polytope.facet_slack(x);
    if !(slack > boundary_tolerance::<S>()) {
        return Err(Error::BoundaryPoint {
            slack: slack.to_f64().unwrap_or(f64::NAN),
        });
    }
    invert_gradient(phi, x, start)
}

/// Damped Newton for `∇φ(ξ) = x` on the concave objective `⟨x,ξ⟩ − φ(ξ)`.
pub fn invert_gradient<S: Scalar>(phi: &LogSumExpPotential<S>, x: &[S], start: &[S]) -> Result<LegendrePoint<S>> {
    let n = phi.dim();
    let tol = S::lit(NEWTON_TOL).max(S::lit(64.0) * S::epsilon());
    let mut xi = start.to_vec();
    let mut w = vec![S::zero(); phi.len()];
    let mut g = vec![S::zero(); n];
    let mut h = vec![S::zero(); n * n];
    let objective = |xi: &[S], w: &mut [S]| -> S {
        let v = phi.weights_into(xi, w);
        x.iter().zip(xi).fold(S::zero(), |a, (&p, &q)| a + p * q) - v
    };
    let mut f = objective(&xi, &mut w);
    let mut residual = S::infinity();
    for it in 0..=NEWTON_MAX_STEPS {
        phi.moments_from_weights(&w, &mut g, &mut h);
        let r: Vec<S> = x.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        residual = r.iter().fold(S::zero(), |a, &v| a + v * v).sqrt();
        if residual <= tol {
            return Ok(LegendrePoint {
                value: f,
                xi,
                residual,
                iterations: it,
            });
        }
        if it == NEWTON_MAX_STEPS {
            break;
        }
        let Some(step) = linalg::spd_solve(&h, &r, n) else { break };
        let slope = r.iter().zip(&step).fold(S::zero(), |a, (&p, &q)| a + p * q);
        let mut t = S::one();
        let mut accepted = false;
        let mut trial = xi.clone();
        for _ in 0..60 {
            for i in 0..n {
                trial[i] = xi[i] + t * step[i];
            }
            let ft = objective(&trial, &mut w);
            if ft >= f + S::lit(1e-4) * t * slope - S::lit(4.0) * S::epsilon() * f.abs() {
                f = ft;
                accepted = true;
                break;
            }
            t = t * S::lit(0.5);
        }
        if !accepted {
            phi.weights_into(&xi, &mut w);
            break;
        }
        std::mem::swap(&mut xi, &mut trial);
    }
    Err(Error::LegendreNoConvergence {
        residual: residual.to_f64().unwrap_or(f64::NAN),
    })
}

/// Solves `∇φ(ξ) = Σ_m q_m m` for target weights `q` over the same sample.
///
/// The residual is formed as `Σ_m (q_m − p_m)(m − c)` with `c` the sample
/// point of largest target weight, which keeps full relative precision when
/// the target sits exponentially close to the boundary. Newton steps are
/// accepted when they reduce the residual (halving otherwise); convergence
/// is declared once the step in `ξ` is below `1e−10·(1 + |ξ|)`.
pub fn invert_weights<S: Scalar>(phi: &LogSumExpPotential<S>, target: &[S], start: &[S]) -> Result<LegendrePoint<S>> {
    let n = phi.dim();
    let m = phi.len();
    let anchor = (0..m)
        .max_by(|&a, &b| target[a].partial_cmp(&target[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    let c: Vec<S> = phi.point(anchor).to_vec();
    let mut w = vec![S::zero(); m];
    let mut g = vec![S::zero(); n];
    let mut h = vec![S::zero(); n * n];
    let residual = |w: &[S]| -> Vec<S> {
        let mut r = vec![S::zero(); n];
        for k in 0..m {
            let dw = target[k] - w[k];
            if dw != S::zero() {
                for (i, ri) in r.iter_mut().enumerate() {
                    *ri = *ri + dw * (phi.point(k)[i] - c[i]);
                }
            }
        }
        r
    };
    let norm = |r: &[S]| r.iter().fold(S::zero(), |a, &v| a + v * v).sqrt();
    let mut xi = start.to_vec();
    let mut value = phi.weights_into(&xi, &mut w);
    let mut r = residual(&w);
    let tol = S::lit(NEWTON_TOL);
    for it in 0..NEWTON_MAX_STEPS {
        phi.moments_from_weights(&w, &mut g, &mut h);
        let Some(step) = linalg::spd_solve(&h, &r, n) else { break };
        let step_norm = norm(&step);
        let scale = S::one() + norm(&xi);
        let mut t = S::one();
        let base = norm(&r);
        let mut trial = xi.clone();
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                trial[i] = xi[i] + t * step[i];
            }
            let v = phi.weights_into(&trial, &mut w);
            let rt = residual(&w);
            if norm(&rt) < base || t * step_norm <= tol * scale {
                value = v;
                r = rt;
                accepted = true;
                break;
            }
            t = t * S::lit(0.5);
        }
        if !accepted {
            break;
        }
        std::mem::swap(&mut xi, &mut trial);
        if t * step_norm <= tol * scale {
            let x: Vec<S> = (0..n)
                .map(|i| (0..m).fold(S::zero(), |a, k| a + target[k] * phi.point(k)[i]))
                .collect();
            let u = x.iter().zip(&xi).fold(-value, |a, (&p, &q)| a + p * q);
            return Ok(LegendrePoint {
                value: u,
                xi,
                residual: norm(&r),
                iterations: it + 1,
            });
        }
    }
    Err(Error::LegendreNoConvergence {
        residual: norm(&r).to_f64().unwrap_or(f64::NAN),
    })
}

/// Uniform grid `[−R, R]ⁿ` with `nodes` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<S> {
    pub radius: S,
    pub nodes: usize,
    pub dim: usize,
}

impl<S: Scalar> GridSpec<S> {
    pub fn new(dim: usize, radius: S, nodes: usize) -> Result<Self> {
        if !(radius > S::zero()) || nodes < 3 || dim == 0 {
            return Err(Error::InvalidInput(format!(
                "grid needs R > 0 and at least 3 nodes per axis (got R = {radius}, {nodes} nodes)"
            )));
        }
        Ok(Self { radius, nodes, dim })
    }

    /// Grid with spacing at most `h`.
    pub fn with_spacing(dim: usize, radius: S, h: S) -> Result<Self> {
        let steps = (S::lit(2.0) * radius / h).ceil().to_usize().unwrap_or(2).max(2);
        Self::new(dim, radius, steps + 1)
    }

    pub fn spacing(&self) -> S {
        S::lit(2.0) * self.radius / S::from_count(self.nodes - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn axis(&self, i: usize) -> S {
        -self.radius + self.spacing() * S::from_count(i)
    }

    /// Coordinates of node `idx` (last axis fastest).
    pub fn node_into(&self, mut idx: usize, out: &mut [S]) {
        for d in (0..self.dim).rev() {
            out[d] = self.axis(idx % self.nodes);
            idx /= self.nodes;
        }
    }

    pub fn node(&self, idx: usize) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim];
        self.node_into(idx, &mut out);
        out
    }

    /// Trapezoidal weight of node `idx`.
    pub fn weight(&self, mut idx: usize) -> S {
        let h = self.spacing();
        let mut w = S::one();
        for _ in 0..self.dim {
            let i = idx % self.nodes;
            idx /= self.nodes;
            w = w * if i == 0 || i == self.nodes - 1 { h * S::lit(0.5) } else { h };
        }
        w
    }
}

/// Values on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<S> {
    pub spec: GridSpec<S>,
    pub values: Vec<S>,
}

impl<S: Scalar> GridFunction<S> {
    pub fn from_fn<F: Fn(&[S]) -> S + Sync>(spec: GridSpec<S>, f: F) -> Self {
        let values = (0..spec.len())
            .into_par_iter()
            .map(|i| f(&spec.node(i)))
            .collect();
        Self { spec, values }
    }

    pub fn min(&self) -> S {
        self.values.iter().copied().fold(S::infinity(), S::min)
    }

    /// Trapezoidal integral.
    pub fn integral(&self) -> S {
        ordered_sum(self.values.len(), |i| self.spec.weight(i) * self.values[i])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for d in 0..self.spec.dim {
            let _ = write!(out, "xi{},", d + 1);
        }
        out.push_str("value\n");
        for (i, v) in self.values.iter().enumerate() {
            for c in self.spec.node(i) {
                let _ = write!(out, "{c},");
            }
            let _ = writeln!(out, "{v}");
        }
        out
    }
}

pub const CHUNK: usize = 1024;

/// Deterministic parallel sum: fixed chunks, summed in index order.
pub fn ordered_sum<S: Scalar, F: Fn(usize) -> S + Sync>(len: usize, f: F) -> S {
    let partial: Vec<S> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK).min(len);
            (c * CHUNK..end).fold(S::zero(), |acc, i| acc + f(i))
        })
        .collect();
    partial.into_iter().fold(S::zero(), |a, b| a + b)
}

/// Points at which a PL `u` is evaluated to form its Legendre transform:
/// vertices of the linearity cells, plus `△ ∩ (1/k)ℤⁿ` when `u` carries a
/// smooth part.
pub fn legendre_sample(polytope: &ReflexivePolytope, u: &PLConvexFunction, k: u32) -> Vec<Point> {
    let mut pts: Vec<Point> = Vec::new();
    for (cell, _) in linearity_cells(polytope, u.pieces()) {
        for v in cell {
            if !pts.contains(&v) {
                pts.push(v);
            }
        }
    }
    if !u.is_piecewise_linear() {
        for p in polytope.lattice_sample(k) {
            if !pts.contains(&p) {
                pts.push(p);
            }
        }
    }
    pts
}

/// Dual pairs `(y, u(y))` used by [`legendre_to_phi`].
#[derive(Debug, Clone)]
pub struct DualSample<S> {
    pub dim: usize,
    pub points: Vec<S>,
    pub values: Vec<S>,
}

impl<S: Scalar> DualSample<S> {
    pub fn new(polytope: &ReflexivePolytope, u: &PLConvexFunction, k: u32) -> Self {
        let pts = legendre_sample(polytope, u, k);
        let dim = polytope.dim();
        let values = pts
            .iter()
            .map(|p| {
                let pl = S::from_rational(&u.pl_value(p));
                match u.guillemin_base() {
                    Some(g) => pl + g.eval(&to_scalars::<S>(p)),
                    None => pl,
                }
            })
            .collect();
        let points = pts.iter().flat_map(|p| to_scalars::<S>(p)).collect();
        Self { dim, points, values }
    }

    /// `φ(ξ) = max_y ⟨y, ξ⟩ − u(y)`.
    pub fn phi(&self, xi: &[S]) -> S {
        let n = self.dim;
        self.values
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                self.points[k * n..(k + 1) * n]
                    .iter()
                    .zip(xi)
                    .fold(-v, |a, (&y, &x)| a + y * x)
            })
            .fold(S::neg_infinity(), S::max)
    }

    pub fn max_value(&self) -> S {
        self.values.iter().copied().fold(S::neg_infinity(), S::max)
    }
}

/// Legendre transform of `u` sampled on a grid. Exact at every node for
/// piecewise-linear `u`, since `⟨y, ξ⟩ − u(y)` is linear on each cell.
pub fn legendre_to_phi<S: Scalar>(polytope: &ReflexivePolytope, u: &PLConvexFunction, spec: GridSpec<S>) -> GridFunction<S> {
    let dual = DualSample::<S>::new(polytope, u, 4);
    GridFunction::from_fn(spec, |xi| dual.phi(xi))
}

/// Normalization `u − u(0) − ⟨g, x⟩` with `g` a subgradient at the origin.
pub fn normalize(u: &PLConvexFunction) -> PLConvexFunction {
    u.normalized()
}

/// The canonical (Guillemin) symplectic potential, normalized.
pub fn guillemin_potential(polytope: &ReflexivePolytope) -> PLConvexFunction {
    PLConvexFunction::guillemin(polytope)
}

/// Exact rational sample as floats (helper for tests and reports).
pub fn sample_as_scalars<S: Scalar>(sample: &[Point]) -> Vec<Vec<S>> {
    sample.iter().map(|p| to_scalars::<S>(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::AffinePiece;
    use crate::scalar::{int, rat, Rational};

    fn p1() -> ReflexivePolytope {
        ReflexivePolytope::from_coords("P1", &[&[-1], &[1]]).unwrap()
    }

    fn two_point() -> LogSumExpPotential<f64> {
        LogSumExpPotential::new(vec![vec![int(-1)], vec![int(1)]], vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn two_point_softmax() {
        let phi = two_point();
        let g = phi.softmax_geometry(&[0.0]);
        assert!((g.value - 2f64.ln()).abs() < 1e-15);
        assert!(g.gradient[0].abs() < 1e-15);
        assert!((g.hessian[0] - 1.0).abs() < 1e-15);
        let g = phi.softmax_geometry(&[20.0]);
        let slacks = phi.facet_slacks(&p1(), &g.weights);
        assert!(slacks.iter().all(|&s| s > 0.0));
        let e40 = (-40f64).exp();
        assert!(slacks.iter().any(|&s| (s / (2.0 * e40) - 1.0).abs() < 1e-12));
        assert!((g.gradient[0] - 20f64.tanh()).abs() < 1e-15);
        let sech2 = 1.0 / 20f64.cosh().powi(2);
        assert!((g.hessian[0] / sech2 - 1.0).abs() < 1e-10);
        assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn legendre_examples_on_p1() {
        let phi = two_point();
        let p1 = p1();
        let u0 = legendre_dual_on_polytope(&phi, &p1, &[0.0]).unwrap();
        assert!((u0.value + 2f64.ln()).abs() < 1e-14);
        let x = 1f64.tanh();
        let u = legendre_dual_on_polytope(&phi, &p1, &[x]).unwrap();
        assert!((u.value - (x - (2.0 * 1f64.cosh()).ln())).abs() < 1e-12);
        assert!((u.xi[0] - 1.0).abs() < 1e-9);
        assert!(matches!(
            legendre_dual_on_polytope(&phi, &p1, &[1.0]),
            Err(Error::BoundaryPoint { .. })
        ));
        let near = legendre_dual_on_polytope(&phi, &p1, &[1.0 - 1e-6]).unwrap();
        assert!(near.residual <= 1e-10);
    }

    #[test]
    fn legendre_to_phi_examples() {
        let p1 = p1();
        let spec = GridSpec::<f64>::new(1, 4.0, 81).unwrap();
        let zero = legendre_to_phi(&p1, &PLConvexFunction::zero(1), spec);
        for (i, v) in zero.values.iter().enumerate() {
            assert!((v - spec.node(i)[0].abs()).abs() < 1e-14);
        }
        let abs = PLConvexFunction::new(1, vec![AffinePiece::new(vec![int(1)], int(0)), AffinePiece::new(vec![int(-1)], int(0))]).unwrap();
        let phi = legendre_to_phi(&p1, &abs, spec);
        for (i, v) in phi.values.iter().enumerate() {
            let xi = spec.node(i)[0];
            assert!((v - (xi.abs() - 1.0).max(0.0)).abs() < 1e-14);
        }
        assert_eq!(phi.min(), 0.0);
    }

    #[test]
    fn normalize_smooth_data() {
        // (x − 1/2)² sampled on (1/8)ℤ ∩ [−1, 1] normalizes to x² at the nodes.
        let pts: Vec<Point> = (-8..=8).map(|j| vec![rat(j, 8)]).collect();
        let vals: Vec<Rational> = pts.iter().map(|p| (&p[0] - rat(1, 2)) * (&p[0] - rat(1, 2))).collect();
        let u = PLConvexFunction::from_values(&pts, &vals).unwrap();
        let v = normalize(&u);
        for p in &pts {
            assert_eq!(v.pl_value(p), &p[0] * &p[0]);
        }
        assert_eq!(normalize(&v), v);
    }

    #[test]
    fn grid_weights_integrate_constants() {
        let spec = GridSpec::new(2, 1.0, 5).unwrap();
        let one = GridFunction::from_fn(spec, |_| 1.0f64);
        assert!((one.integral() - 4.0).abs() < 1e-14);
        assert!(GridSpec::<f64>::new(2, 1.0, 2).is_err());
    }

    #[test]
    fn guillemin_gradient_vanishes_at_origin() {
        let f1 = ReflexivePolytope::from_coords("F1", &[&[-1, -1], &[0, -1], &[2, 1], &[-1, 1]]).unwrap();
        let g = guillemin_potential(&f1);
        let base = g.guillemin_base().unwrap();
        assert!(base.gradient(&[0.0f64, 0.0]).iter().all(|v| v.abs() < 1e-15));
        assert_eq!(g.eval(&[0.0f64, 0.0]), 0.0);
        assert!(g.eval(&[0.3f64, -0.2]) > 0.0);
    }
}

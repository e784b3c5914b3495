//! The modified Ding functional
//! `D(φ) = −log ∫ e^{−φ} dξ + ∫_△ u·A dx` on a truncated grid, its
//! gradient in the log-sum-exp weights, and two property probes:
//! Prékopa convexity of the nonlinear term and linear properness.
//!
//! The linear term is evaluated by pushing the polytope integral forward
//! along the moment map, `∫ (⟨∇φ, ξ⟩ − φ) A(∇φ) det ∇²φ dξ`, so no Legendre
//! inversion is needed.

use rayon::prelude::*;

use crate::hull::Point;
use crate::duality::{invert_gradient, invert_weights, DualSample, GridFunction, GridSpec, LogSumExpPotential, CHUNK};
use crate::error::{Error, Result};
use crate::invariants::{ding_futaki_i, random_pl_function, wedge_function, AffineLinear, PLConvexFunction};
use crate::linalg;
use crate::polytope::ReflexivePolytope;
use crate::scalar::{rational_to_f64, Scalar};

/// Grid over `[−R, R]ⁿ` plus the data of the tail estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec<S> {
    pub grid: GridSpec<S>,
    /// Allowed bound on the neglected mass of `∫ e^{−φ}`, relative to the
    /// computed integral.
    pub tail_tol: S,
    /// `c` with `h_△(ξ) ≥ c|ξ|` (the inradius of the polytope).
    pub decay: S,
    /// `max_v |v|`, giving `h_△(ξ) ≤ H|ξ|`.
    pub reach: S,
    pub vertices: Vec<Point>,
}

pub const DEFAULT_TAIL_TOL: f64 = 1e-10;
pub const DEFAULT_SPACING: f64 = 0.25;

/// Surface area of the unit sphere in `ℝⁿ`.
fn sphere_area<S: Scalar>(n: usize) -> S {
    match n {
        1 => S::lit(2.0),
        2 => S::lit(2.0) * S::PI(),
        _ => {
            // 2π^{n/2}/Γ(n/2) via |S^{n+1}| = 2π |S^{n−1}|/n.
            let mut a = if n % 2 == 0 { S::lit(2.0) * S::PI() } else { S::lit(4.0) * S::PI() };
            let mut k = if n % 2 == 0 { 2 } else { 3 };
            while k < n {
                a = a * S::lit(2.0) * S::PI() / S::from_count(k);
                k += 2;
            }
            a
        }
    }
}

fn factorial<S: Scalar>(k: usize) -> S {
    (1..=k).fold(S::one(), |a, j| a * S::from_count(j))
}

/// `∫_{|ξ|>R} e^{−c|ξ|} dξ`.
pub fn exponential_tail<S: Scalar>(n: usize, c: S, radius: S) -> S {
    let mut sum = S::zero();
    for j in 0..n {
        sum = sum + factorial::<S>(n - 1) / factorial::<S>(j) * radius.powi(j as i32) / c.powi((n - j) as i32);
    }
    sphere_area::<S>(n) * (-c * radius).exp() * sum
}

impl<S: Scalar> QuadratureSpec<S> {
    pub fn new(polytope: &ReflexivePolytope, radius: S, nodes: usize, tail_tol: S) -> Result<Self> {
        let reach = polytope
            .vertices()
            .iter()
            .map(|v| v.0.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        Ok(Self {
            grid: GridSpec::new(polytope.dim(), radius, nodes)?,
            tail_tol,
            decay: polytope.inradius(),
            reach: S::lit(reach),
            vertices: polytope.vertices().iter().map(|v| v.to_rational()).collect(),
        })
    }

    pub fn with_spacing(polytope: &ReflexivePolytope, radius: S, h: S, tail_tol: S) -> Result<Self> {
        let g = GridSpec::with_spacing(polytope.dim(), radius, h)?;
        Self::new(polytope, radius, g.nodes, tail_tol)
    }

    /// Spacing `h` and the smallest radius (in steps of `h`) whose a-priori
    /// tail bound meets `tail_tol` for any potential with
    /// `h_△ + lower ≤ φ ≤ h_△ + upper`.
    pub fn for_offsets(polytope: &ReflexivePolytope, lower: S, upper: S, h: S, tail_tol: S) -> Result<Self> {
        let probe = Self::new(polytope, S::one(), 3, tail_tol)?;
        let n = polytope.dim();
        // ∫ e^{−h_△} ≥ ∫ e^{−H|ξ|} = S_{n−1} (n−1)!/Hⁿ.
        let z_low = (-upper).exp() * sphere_area::<S>(n) * factorial::<S>(n - 1) / probe.reach.powi(n as i32);
        let mut radius = h;
        while (-lower).exp() * exponential_tail(n, probe.decay, radius) > tail_tol * z_low {
            radius = radius + h;
            if radius > S::lit(1e4) {
                return Err(Error::InvalidInput("potential range too wide for a finite box".into()));
            }
        }
        Self::with_spacing(polytope, radius, h, tail_tol)
    }

    /// Default quadrature for a log-sum-exp potential.
    pub fn for_potential(polytope: &ReflexivePolytope, phi: &LogSumExpPotential<S>, h: S, tail_tol: S) -> Result<Self> {
        let (lo, hi) = potential_offsets(polytope, phi);
        Self::for_offsets(polytope, lo, hi, h, tail_tol)
    }

    /// Largest `c` with `φ ≥ h_△ + c` that is read off the weights.
    pub fn lower_offset(&self, phi: &LogSumExpPotential<S>) -> S {
        vertex_offset(&self.vertices, phi)
    }

    /// Bound on `∫_{outside box} e^{−φ}` for `φ ≥ h_△ + lower`.
    pub fn tail_mass(&self, lower: S) -> S {
        (-lower).exp() * exponential_tail(self.grid.dim, self.decay, self.grid.radius)
    }
}

/// `(min θ, log|sample| + max θ)`: the sandwich offsets of `φ_θ` around `h_△`.
pub fn lse_offsets<S: Scalar>(phi: &LogSumExpPotential<S>) -> (S, S) {
    (phi.theta_min(), S::from_count(phi.len()).ln() + phi.theta_max())
}

/// `min_v θ_v` over the sample points at vertices of the polytope, since
/// `φ(ξ) ≥ max_v (θ_v + ⟨v, ξ⟩) ≥ h_△(ξ) + min_v θ_v`. Falls back to
/// `min θ` if some vertex is missing from the sample.
fn vertex_offset<S: Scalar>(vertices: &[Point], phi: &LogSumExpPotential<S>) -> S {
    let mut lower = S::infinity();
    for v in vertices {
        match phi.sample().iter().position(|p| p == v) {
            Some(m) => lower = lower.min(phi.theta()[m]),
            None => return phi.theta_min(),
        }
    }
    lower
}

/// Tighter sandwich offsets: `(min_v θ_v, φ(0))`. The upper one bounds
/// `∫ e^{−φ}` from below through `φ(ξ) ≤ φ(0) + H|ξ|`.
pub fn potential_offsets<S: Scalar>(polytope: &ReflexivePolytope, phi: &LogSumExpPotential<S>) -> (S, S) {
    let vertices: Vec<Point> = polytope.vertices().iter().map(|v| v.to_rational()).collect();
    (vertex_offset(&vertices, phi), phi.value(&vec![S::zero(); phi.dim()]))
}

/// A probability density on the polytope, evaluated at moment-map images.
pub trait Density<S: Scalar>: Sync {
    fn eval(&self, x: &[S]) -> S;

    /// Value at `x = ∇φ(ξ)`; `ξ` may be used as a warm start.
    fn at_node(&self, _xi: &[S], x: &[S]) -> S {
        self.eval(x)
    }

    /// `∫_△ A dx` when known in closed form.
    fn mass(&self) -> Option<f64>;
}

/// Affine density `a + ⟨b, x⟩` with floating coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineDensity<S> {
    pub a: S,
    pub b: Vec<S>,
    mass: f64,
}

impl<S: Scalar> AffineDensity<S> {
    pub fn new(l: &AffineLinear, polytope: &ReflexivePolytope) -> Self {
        let (a, b) = l.to_scalars();
        Self {
            a,
            b,
            mass: rational_to_f64(&l.integral(&polytope.moments())),
        }
    }
}

impl<S: Scalar> Density<S> for AffineDensity<S> {
    fn eval(&self, x: &[S]) -> S {
        self.b.iter().zip(x).fold(self.a, |acc, (&b, &x)| acc + b * x)
    }

    fn mass(&self) -> Option<f64> {
        Some(self.mass)
    }
}

/// The density `e^{−ψ}/Z ∘ (∇ψ)^{-1} / det ∇²ψ` that a potential `ψ` itself
/// pushes forward to; `ψ` is a critical point of `D_A` for this `A`.
#[derive(Debug, Clone)]
pub struct PushforwardDensity<S> {
    source: LogSumExpPotential<S>,
    log_z: S,
}

impl<S: Scalar> PushforwardDensity<S> {
    pub fn new(source: LogSumExpPotential<S>, q: &QuadratureSpec<S>) -> Result<Self> {
        let log_z = -nonlinear_term(&source, q)?.0;
        Ok(Self { source, log_z })
    }

    fn value_at(&self, xi: &[S]) -> S {
        let g = self.source.softmax_geometry(xi);
        let n = xi.len();
        // Both factors underflow in the far tail; scale the Hessian first.
        let scale = (0..n).fold(S::zero(), |m, i| m.max(g.hessian[i * n + i]));
        if !(scale > S::zero()) {
            return S::zero();
        }
        let scaled: Vec<S> = g.hessian.iter().map(|&h| h / scale).collect();
        let det = linalg::det_dense(&scaled, n);
        if !(det > S::zero()) {
            return S::zero();
        }
        let v = (-g.value - self.log_z - S::from_count(n) * scale.ln() - det.ln()).exp();
        if v.is_finite() {
            v
        } else {
            S::zero()
        }
    }
}

impl<S: Scalar> Density<S> for PushforwardDensity<S> {
    fn eval(&self, x: &[S]) -> S {
        let start = vec![S::zero(); x.len()];
        self.at_node(&start, x)
    }

    fn at_node(&self, xi: &[S], x: &[S]) -> S {
        match invert_gradient(&self.source, x, xi) {
            Ok(p) => self.value_at(&p.xi),
            Err(_) => S::zero(),
        }
    }

    fn mass(&self) -> Option<f64> {
        None
    }
}

/// Value of `D` split into its two terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalValue<S> {
    /// `−log ∫ e^{−φ} dξ`.
    pub nonlinear: S,
    /// `∫_△ u·A dx`.
    pub linear: S,
    pub total: S,
    /// Bound on the neglected tail of `∫ e^{−φ}`, relative to the integral.
    pub tail_bound: S,
}

/// Everything one pass over the grid produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<S> {
    pub value: FunctionalValue<S>,
    /// `∂D/∂θ_m = ∫ p_m (e^{−φ}/Z − A(∇φ) det ∇²φ) dξ`.
    pub gradient: Vec<S>,
    /// `∫ A(∇φ) det ∇²φ dξ` over the box.
    pub pushforward_mass: S,
    /// `∫ |e^{−φ}/Z − A(∇φ) det ∇²φ| dξ` over the box.
    pub residual_l1: S,
}

struct Acc<S> {
    z: S,
    linear: S,
    mass: S,
    g1: Vec<S>,
    g2: Vec<S>,
    nodes: Vec<(S, S)>,
}

impl<S: Scalar> Acc<S> {
    fn new(m: usize) -> Self {
        Self {
            z: S::zero(),
            linear: S::zero(),
            mass: S::zero(),
            g1: vec![S::zero(); m],
            g2: vec![S::zero(); m],
            nodes: Vec::new(),
        }
    }

    fn absorb(&mut self, other: Acc<S>) {
        self.z = self.z + other.z;
        self.linear = self.linear + other.linear;
        self.mass = self.mass + other.mass;
        for (a, b) in self.g1.iter_mut().zip(other.g1) {
            *a = *a + b;
        }
        for (a, b) in self.g2.iter_mut().zip(other.g2) {
            *a = *a + b;
        }
        self.nodes.extend(other.nodes);
    }
}

fn check_mass<S: Scalar, A: Density<S> + ?Sized>(density: &A) -> Result<()> {
    if let Some(mass) = density.mass() {
        if (mass - 1.0).abs() > 1e-12 {
            return Err(Error::NonNormalizedDensity { mass });
        }
    }
    Ok(())
}

fn check_tail<S: Scalar>(q: &QuadratureSpec<S>, lower: S, z: S) -> Result<S> {
    let bound = q.tail_mass(lower) / z;
    if bound > q.tail_tol {
        return Err(Error::TailBoundViolated {
            bound: bound.to_f64().unwrap_or(f64::INFINITY),
            allowed: q.tail_tol.to_f64().unwrap_or(0.0),
        });
    }
    Ok(bound)
}

/// One deterministic pass computing `D`, its θ-gradient and the pushforward
/// mass. Exponentials are taken relative to `min θ ≤ φ`.
pub fn evaluate<S, A>(phi: &LogSumExpPotential<S>, density: &A, q: &QuadratureSpec<S>) -> Result<Evaluation<S>>
where
    S: Scalar,
    A: Density<S> + ?Sized,
{
    check_mass(density)?;
    let n = phi.dim();
    let m = phi.len();
    let grid = q.grid;
    let shift = phi.theta_min();
    let chunks: Vec<Acc<S>> = (0..grid.len().div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = Acc::new(m);
            let mut xi = vec![S::zero(); n];
            let mut w = vec![S::zero(); m];
            let mut g = vec![S::zero(); n];
            let mut h = vec![S::zero(); n * n];
            for idx in c * CHUNK..((c + 1) * CHUNK).min(grid.len()) {
                grid.node_into(idx, &mut xi);
                let tw = grid.weight(idx);
                let value = phi.weights_into(&xi, &mut w);
                phi.moments_from_weights(&w, &mut g, &mut h);
                let det = linalg::det_dense(&h, n).max(S::zero());
                let e = tw * (shift - value).exp();
                let a = tw * density.at_node(&xi, &g) * det;
                let u = g.iter().zip(&xi).fold(-value, |s, (&x, &y)| s + x * y);
                acc.z = acc.z + e;
                acc.linear = acc.linear + u * a;
                acc.mass = acc.mass + a;
                acc.nodes.push((e, a));
                for k in 0..m {
                    acc.g1[k] = acc.g1[k] + w[k] * e;
                    acc.g2[k] = acc.g2[k] + w[k] * a;
                }
            }
            acc
        })
        .collect();
    let mut total = Acc::new(m);
    for c in chunks {
        total.absorb(c);
    }
    let z_shifted = total.z;
    let tail_bound = check_tail(q, q.lower_offset(phi), z_shifted * (-shift).exp())?;
    let nonlinear = shift - z_shifted.ln();
    let residual_l1 = total.nodes.iter().fold(S::zero(), |s, &(e, a)| s + (e / z_shifted - a).abs());
    let gradient = total
        .g1
        .iter()
        .zip(&total.g2)
        .map(|(&a, &b)| a / z_shifted - b)
        .collect();
    Ok(Evaluation {
        value: FunctionalValue {
            nonlinear,
            linear: total.linear,
            total: nonlinear + total.linear,
            tail_bound,
        },
        gradient,
        pushforward_mass: total.mass,
        residual_l1,
    })
}

/// `−log ∫ e^{−φ}` and its relative tail bound.
pub fn nonlinear_term<S: Scalar>(phi: &LogSumExpPotential<S>, q: &QuadratureSpec<S>) -> Result<(S, S)> {
    let grid = q.grid;
    let shift = phi.theta_min();
    let partial: Vec<S> = (0..grid.len().div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut xi = vec![S::zero(); phi.dim()];
            let mut w = vec![S::zero(); phi.len()];
            let mut acc = S::zero();
            for idx in c * CHUNK..((c + 1) * CHUNK).min(grid.len()) {
                grid.node_into(idx, &mut xi);
                acc = acc + grid.weight(idx) * (shift - phi.weights_into(&xi, &mut w)).exp();
            }
            acc
        })
        .collect();
    let z = partial.into_iter().fold(S::zero(), |a, b| a + b);
    let bound = check_tail(q, q.lower_offset(phi), z * (-shift).exp())?;
    Ok((shift - z.ln(), bound))
}

pub fn modified_ding<S, A>(phi: &LogSumExpPotential<S>, density: &A, q: &QuadratureSpec<S>) -> Result<FunctionalValue<S>>
where
    S: Scalar,
    A: Density<S> + ?Sized,
{
    Ok(evaluate(phi, density, q)?.value)
}

pub fn grad_theta<S, A>(phi: &LogSumExpPotential<S>, density: &A, q: &QuadratureSpec<S>) -> Result<Vec<S>>
where
    S: Scalar,
    A: Density<S> + ?Sized,
{
    Ok(evaluate(phi, density, q)?.gradient)
}

/// Outcome of a Prékopa convexity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrekopaOutcome<S> {
    /// Nonlinear term of the interpolated potential.
    pub interpolated: S,
    /// `(1 − t)·N(φ₀) + t·N(φ₁)`.
    pub chord: S,
    /// `chord − interpolated`; convexity means this is `≥ 0`.
    pub slack: S,
    pub holds: bool,
    /// Grid nodes where the matching point could not be found. Their
    /// (positive) contribution to `∫ e^{−φ_t}` is dropped, so `slack` is then
    /// a lower bound.
    pub dropped_nodes: usize,
}

pub const PREKOPA_SLACK: f64 = 1e-8;

/// Checks `N(φ_t) ≤ (1 − t) N(φ₀) + t N(φ₁)` for `N = −log ∫ e^{−φ}`, where
/// `φ_t` is the Legendre transform of `(1 − t) u₀ + t u₁`.
///
/// With `ξ₁(ξ₀) = (∇φ₁)^{-1}(∇φ₀(ξ₀))`, the interpolant satisfies
/// `φ_t((1−t)ξ₀ + tξ₁) = (1−t)φ₀(ξ₀) + tφ₁(ξ₁)`, so
/// `∫ e^{−φ_t} = ∫ e^{−(1−t)φ₀(ξ₀) − tφ₁(ξ₁)} det((1−t)I + t H₁^{-1}H₀) dξ₀`
/// is evaluated on the grid of `ξ₀`.
pub fn prekopa_check<S: Scalar>(
    phi0: &LogSumExpPotential<S>,
    phi1: &LogSumExpPotential<S>,
    t: S,
    q: &QuadratureSpec<S>,
) -> Result<PrekopaOutcome<S>> {
    if !(t >= S::zero() && t <= S::one()) {
        return Err(Error::InvalidInput(format!("interpolation parameter {t} outside [0, 1]")));
    }
    if phi0.sample() != phi1.sample() {
        return Err(Error::InvalidInput("potentials must share their sample".into()));
    }
    let (n0, _) = nonlinear_term(phi0, q)?;
    let (n1, _) = nonlinear_term(phi1, q)?;
    let chord = (S::one() - t) * n0 + t * n1;
    let (interpolated, dropped_nodes) = if t == S::zero() {
        (n0, 0)
    } else if t == S::one() {
        (n1, 0)
    } else {
        interpolated_term(phi0, phi1, t, q)
    };
    let slack = chord - interpolated;
    Ok(PrekopaOutcome {
        interpolated,
        chord,
        slack,
        holds: slack >= -S::lit(PREKOPA_SLACK),
        dropped_nodes,
    })
}

fn interpolated_term<S: Scalar>(
    phi0: &LogSumExpPotential<S>,
    phi1: &LogSumExpPotential<S>,
    t: S,
    q: &QuadratureSpec<S>,
) -> (S, usize) {
    let n = phi0.dim();
    let grid = q.grid;
    let s = S::one() - t;
    let shift = s * phi0.theta_min() + t * phi1.theta_min();
    let parts: Vec<(S, usize)> = (0..grid.len().div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut xi = vec![S::zero(); n];
            let mut w = vec![S::zero(); phi0.len()];
            let mut g0 = vec![S::zero(); n];
            let mut h0 = vec![S::zero(); n * n];
            let mut warm: Option<Vec<S>> = None;
            let mut acc = S::zero();
            let mut dropped = 0;
            for idx in c * CHUNK..((c + 1) * CHUNK).min(grid.len()) {
                grid.node_into(idx, &mut xi);
                let v0 = phi0.weights_into(&xi, &mut w);
                phi0.moments_from_weights(&w, &mut g0, &mut h0);
                let start = warm.clone().unwrap_or_else(|| xi.clone());
                let found = invert_weights(phi1, &w, &start).or_else(|_| invert_weights(phi1, &w, &xi));
                let Ok(p) = found else {
                    dropped += 1;
                    warm = None;
                    continue;
                };
                let geo1 = phi1.softmax_geometry(&p.xi);
                let Some(h1_inv) = linalg::spd_inverse(&geo1.hessian, n) else {
                    dropped += 1;
                    continue;
                };
                let mut jac = vec![S::zero(); n * n];
                for i in 0..n {
                    for j in 0..n {
                        let mut v = S::zero();
                        for k in 0..n {
                            v = v + h1_inv[i * n + k] * h0[k * n + j];
                        }
                        jac[i * n + j] = t * v + if i == j { s } else { S::zero() };
                    }
                }
                let det = linalg::det_dense(&jac, n);
                acc = acc + grid.weight(idx) * (shift - s * v0 - t * geo1.value).exp() * det;
                warm = Some(p.xi);
            }
            (acc, dropped)
        })
        .collect();
    let (z, dropped) = parts
        .into_iter()
        .fold((S::zero(), 0), |(a, d), (b, e)| (a + b, d + e));
    (shift - z.ln(), dropped)
}

/// Midpoint checks `t = 1/2` on `count` random pairs of weight vectors on
/// the sample `△ ∩ (1/k)ℤⁿ`, entries uniform in `[−1, 1]`.
pub fn prekopa_suite<S: Scalar>(
    polytope: &ReflexivePolytope,
    k: u32,
    count: usize,
    seed: u64,
    h: S,
    tail_tol: S,
) -> Result<Vec<PrekopaOutcome<S>>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let base = LogSumExpPotential::<S>::on_polytope(polytope, k);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
        let theta = (0..base.len()).map(|_| S::lit(rng.gen_range(-1.0..=1.0))).collect();
        base.with_theta(theta)
    };
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let phi0 = draw(&mut rng);
        let phi1 = draw(&mut rng);
        let (lo0, hi0) = potential_offsets(polytope, &phi0);
        let (lo1, hi1) = potential_offsets(polytope, &phi1);
        let q = QuadratureSpec::for_offsets(polytope, lo0.min(lo1), hi0.max(hi1), h, tail_tol)?;
        out.push(prekopa_check(&phi0, &phi1, S::lit(0.5), &q)?);
    }
    Ok(out)
}

/// One member of a properness probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProperMember<S> {
    /// `∫_△ u dx`.
    pub mass: S,
    pub ding: S,
    /// `D(u) − (δ ∫u − C)`.
    pub margin: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProperFit<S> {
    pub delta: S,
    pub c: S,
    pub members: Vec<ProperMember<S>>,
}

/// Evaluates `D(u) = −log ∫ e^{−φ_u} + ∫ u·l` for each normalized member
/// (with `φ_u` the Legendre transform of `u` on a grid of spacing `h`) and
/// fits a lower bound `D ≥ δ ∫u − C`.
///
/// The fitted line is the steepest one through the member of largest `∫u`
/// that stays below every member: the last edge of the lower convex hull of
/// the points `(∫u, D)`.
pub fn properness_probe<S: Scalar>(
    polytope: &ReflexivePolytope,
    l: &AffineLinear,
    family: &[PLConvexFunction],
    h: S,
    tail_tol: S,
) -> Result<ProperFit<S>> {
    let one = AffineLinear::constant(num_traits::One::one(), polytope.dim());
    let mut points: Vec<(S, S)> = Vec::with_capacity(family.len());
    for u in family {
        let dual = DualSample::<S>::new(polytope, u, 4);
        let zero = vec![S::zero(); polytope.dim()];
        if u.eval(&zero).abs() > S::lit(1e-12) || dual.values.iter().any(|&v| v < -S::lit(1e-12)) {
            return Err(Error::InvalidInput("family members must be normalized (u ≥ u(0) = 0)".into()));
        }
        let q = QuadratureSpec::for_offsets(polytope, -dual.max_value(), S::zero(), h, tail_tol)?;
        let phi = GridFunction::from_fn(q.grid, |xi| dual.phi(xi));
        let z = phi.values.iter().enumerate().fold(S::zero(), |acc, (i, &v)| acc + q.grid.weight(i) * (-v).exp());
        check_tail(&q, -dual.max_value(), z)?;
        let linear: S = ding_futaki_i(polytope, l, u)?;
        let mass = integral_of(polytope, u, &one)?;
        points.push((mass, linear - z.ln()));
    }
    fit_lower_line(points)
}

/// Test family for [`properness_probe`]: wedges at every vertex (steps
/// `1, 2, 4, 8, …` that fit, unit mass) followed by random normalized PL
/// functions, `count` members in total.
pub fn properness_family(polytope: &ReflexivePolytope, count: usize, seed: u64) -> Result<Vec<PLConvexFunction>> {
    use rand::SeedableRng;
    let mut family = Vec::with_capacity(count);
    'wedges: for v in 0..polytope.vertices().len() {
        let mut i = 1;
        while i <= 64 {
            if family.len() >= count / 2 {
                break 'wedges;
            }
            if let Some(w) = wedge_function(polytope, v, 1.0, i)? {
                family.push(w);
            }
            i *= 2;
        }
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    while family.len() < count {
        let u = random_pl_function(polytope.dim(), &mut rng);
        // Skip members that are affine on the polytope; they carry no mass.
        if u.pieces().len() > 1 {
            family.push(u);
        }
    }
    Ok(family)
}

fn integral_of<S: Scalar>(polytope: &ReflexivePolytope, u: &PLConvexFunction, one: &AffineLinear) -> Result<S> {
    // ∫u = I_1(u) + u(0) with weight 1; members are normalized so u(0) = 0.
    ding_futaki_i(polytope, one, u)
}

fn fit_lower_line<S: Scalar>(points: Vec<(S, S)>) -> Result<ProperFit<S>> {
    let tiny = S::lit(1e-12);
    let top = points
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| {
            a.1 .0
                .partial_cmp(&b.1 .0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(b.1 .1.partial_cmp(&a.1 .1).unwrap_or(std::cmp::Ordering::Equal))
        })
        .ok_or_else(|| Error::DegenerateFamily("empty family".into()))?;
    let (s_top, d_top) = top.1;
    if s_top <= tiny {
        return Err(Error::DegenerateFamily(
            "every member integrates to zero after normalization".into(),
        ));
    }
    let delta = points
        .iter()
        .filter(|(s, _)| *s < s_top - tiny)
        .map(|&(s, d)| (d_top - d) / (s_top - s))
        .fold(None, |best: Option<S>, v| Some(best.map_or(v, |b| b.max(v))))
        .ok_or_else(|| Error::DegenerateFamily("all members have the same integral".into()))?;
    let c = delta * s_top - d_top;
    let members = points
        .into_iter()
        .map(|(mass, ding)| ProperMember {
            mass,
            ding,
            margin: ding - (delta * mass - c),
        })
        .collect();
    Ok(ProperFit { delta, c, members })
}

/// Pointwise residual of the equation `e^{−φ}/Z = A(∇φ) det ∇²φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual<S> {
    pub l1: S,
    pub sup: S,
    /// `∫ r dξ`, which vanishes up to quadrature and tail error.
    pub integral: S,
    pub field: GridFunction<S>,
}

pub fn residual<S, A>(phi: &LogSumExpPotential<S>, density: &A, q: &QuadratureSpec<S>) -> Result<Residual<S>>
where
    S: Scalar,
    A: Density<S> + ?Sized,
{
    let (nonlinear, _) = nonlinear_term(phi, q)?;
    let log_z = -nonlinear;
    let n = phi.dim();
    let field = GridFunction::from_fn(q.grid, |xi| {
        let g = phi.softmax_geometry(xi);
        let det = linalg::det_dense(&g.hessian, n).max(S::zero());
        (-g.value - log_z).exp() - density.at_node(xi, &g.gradient) * det
    });
    let grid = q.grid;
    let l1 = crate::duality::ordered_sum(grid.len(), |i| grid.weight(i) * field.values[i].abs());
    let integral = field.integral();
    let sup = field.values.iter().fold(S::zero(), |a, &v| a.max(v.abs()));
    Ok(Residual {
        l1,
        sup,
        integral,
        field,
    })
}

//! Minimization of the modified Ding functional over the log-sum-exp family.
//!
//! `D` is invariant under `θ ↦ θ + c + ⟨m, a⟩` (adding a constant to `φ`
//! and translating it), so iterates are kept on the slice
//! `Σ θ_m = 0`, `Σ θ_m m = 0` by projecting gradients and search
//! directions. The optimizer is BFGS (or plain gradient descent) with an
//! Armijo backtracking line search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::duality::{GridSpec, LogSumExpPotential};
use crate::error::{Error, Result};
use crate::functional::{evaluate, residual, AffineDensity, Density, Evaluation, QuadratureSpec, DEFAULT_SPACING, DEFAULT_TAIL_TOL};
use crate::hull::Point;
use crate::invariants::{alpha_invariant, AffineLinear};
use crate::linalg;
use crate::polytope::ReflexivePolytope;
use crate::scalar::{rational_string, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    Bfgs,
    GradientDescent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Sample `△ ∩ (1/k)ℤⁿ`.
    pub refinement: u32,
    pub spacing: f64,
    /// Fixed box radius; chosen from the tail bound when `None`.
    pub radius: Option<f64>,
    pub tail_tol: f64,
    pub optimizer: Optimizer,
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Random initial weights in `[−1/2, 1/2]` when set; `θ = 0` otherwise.
    pub seed: Option<u64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            refinement: 2,
            spacing: DEFAULT_SPACING,
            radius: None,
            tail_tol: DEFAULT_TAIL_TOL,
            optimizer: Optimizer::Bfgs,
            max_iter: 5000,
            grad_tol: 1e-8,
            seed: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.refinement < 1 {
            return Err(Error::InvalidInput("refinement must be at least 1".into()));
        }
        if !(self.grad_tol > 0.0) || !(self.spacing > 0.0) || !(self.tail_tol > 0.0) {
            return Err(Error::InvalidInput("tolerances and spacing must be positive".into()));
        }
        if let Some(r) = self.radius {
            if !(r > 0.0) {
                return Err(Error::InvalidInput("grid radius must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord<S> {
    pub iteration: usize,
    pub value: S,
    pub grad_norm: S,
    pub residual_l1: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport<S> {
    pub sample: Vec<Point>,
    pub theta_star: Vec<S>,
    pub d_value: S,
    pub nonlinear: S,
    pub linear: S,
    /// Norm of the gauge-projected gradient.
    pub grad_norm: S,
    pub residual_l1: S,
    pub residual_sup: S,
    pub pushforward_mass: S,
    pub pushforward_w1: S,
    pub tail_bound: S,
    pub iterations: usize,
    pub converged: bool,
    pub radius: S,
    pub nodes: usize,
    pub history: Vec<IterationRecord<S>>,
}

impl<S: Scalar> SolverReport<S> {
    pub fn potential(&self) -> LogSumExpPotential<S> {
        LogSumExpPotential::new(self.sample.clone(), self.theta_star.clone()).expect("report sample is valid")
    }
}

/// Orthogonal projector onto `{θ : Σθ = 0, Σ θ_m m = 0}`.
struct Gauge<S> {
    basis: Vec<Vec<S>>,
}

impl<S: Scalar> Gauge<S> {
    fn new(phi: &LogSumExpPotential<S>) -> Self {
        let n = phi.dim();
        let m = phi.len();
        let mut raw: Vec<Vec<S>> = vec![vec![S::one(); m]];
        for i in 0..n {
            raw.push((0..m).map(|k| phi.point(k)[i]).collect());
        }
        // Gram–Schmidt (twice for stability).
        let mut basis: Vec<Vec<S>> = Vec::new();
        for mut v in raw {
            for _ in 0..2 {
                for b in &basis {
                    let d = dot(&v, b);
                    for (vi, bi) in v.iter_mut().zip(b) {
                        *vi = *vi - d * *bi;
                    }
                }
            }
            let nv = dot(&v, &v).sqrt();
            if nv > S::lit(1e-12) {
                basis.push(v.into_iter().map(|x| x / nv).collect());
            }
        }
        Self { basis }
    }

    fn project(&self, v: &mut [S]) {
        for b in &self.basis {
            let d = dot(v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi = *vi - d * *bi;
            }
        }
    }
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

fn norm<S: Scalar>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

fn spec_for<S: Scalar>(polytope: &ReflexivePolytope, phi: &LogSumExpPotential<S>, cfg: &SolverConfig, margin: S) -> Result<QuadratureSpec<S>> {
    match cfg.radius {
        Some(r) => QuadratureSpec::with_spacing(polytope, S::lit(r), S::lit(cfg.spacing), S::lit(cfg.tail_tol)),
        None => {
            let (lo, hi) = crate::functional::potential_offsets(polytope, phi);
            QuadratureSpec::for_offsets(polytope, lo - margin, hi + margin, S::lit(cfg.spacing), S::lit(cfg.tail_tol))
        }
    }
}

/// Minimizes `D` for the density `l`. Refuses (without iterating) when
/// `α ≥ 1`, since no solution exists then.
pub fn solve<S: Scalar>(polytope: &ReflexivePolytope, l: &AffineLinear, cfg: &SolverConfig) -> Result<SolverReport<S>> {
    cfg.validate()?;
    let alpha = alpha_invariant(polytope, l);
    if alpha >= num_traits::One::one() {
        return Err(Error::UnstablePolytope {
            alpha: rational_string(&alpha),
        });
    }
    let mut phi = LogSumExpPotential::<S>::on_polytope(polytope, cfg.refinement);
    if let Some(seed) = cfg.seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta: Vec<S> = (0..phi.len()).map(|_| S::lit(rng.gen_range(-0.5..0.5))).collect();
        phi.set_theta(&theta);
    }
    let density = AffineDensity::new(l, polytope);
    minimize(polytope, phi, &density, cfg)
}

/// Minimizes `D_A` for an arbitrary density, starting from `phi`.
pub fn minimize<S: Scalar, A: Density<S> + ?Sized>(
    polytope: &ReflexivePolytope,
    mut phi: LogSumExpPotential<S>,
    density: &A,
    cfg: &SolverConfig,
) -> Result<SolverReport<S>> {
    cfg.validate()?;
    let gauge = Gauge::new(&phi);
    let mut theta = phi.theta().to_vec();
    gauge.project(&mut theta);
    phi.set_theta(&theta);
    let margin = S::lit(4.0);
    let mut q = spec_for(polytope, &phi, cfg, margin)?;
    let mut eval = evaluate(&phi, density, &q)?;
    let mut grad = projected(&gauge, &eval);
    let mut history = vec![IterationRecord {
        iteration: 0,
        value: eval.value.total,
        grad_norm: norm(&grad),
        residual_l1: eval.residual_l1,
    }];
    let m = phi.len();
    let mut hinv: Option<Vec<S>> = None;
    let tol = S::lit(cfg.grad_tol);
    let mut iterations = 0;
    let mut converged = norm(&grad) <= tol;
    while !converged && iterations < cfg.max_iter {
        let mut dir = match (&hinv, cfg.optimizer) {
            (Some(h), Optimizer::Bfgs) => mat_vec(h, &grad, m).into_iter().map(|v| -v).collect(),
            _ => grad.iter().map(|&g| -g).collect::<Vec<S>>(),
        };
        gauge.project(&mut dir);
        let mut slope = dot(&grad, &dir);
        if !(slope < S::zero()) {
            dir = grad.iter().map(|&g| -g).collect();
            slope = dot(&grad, &dir);
            hinv = None;
        }
        let step = match line_search(&phi, density, &q, &eval, &dir, slope) {
            Ok(found) => found,
            Err(Error::TailBoundViolated { .. }) if cfg.radius.is_none() => {
                // The weights spread out; enlarge the box and restart curvature.
                q = spec_for(polytope, &phi, cfg, margin * S::lit(2.0))?;
                eval = evaluate(&phi, density, &q)?;
                grad = projected(&gauge, &eval);
                hinv = None;
                continue;
            }
            Err(e) => return Err(e),
        };
        let Some((t, new_phi, new_eval)) = step else {
            if hinv.is_some() {
                hinv = None;
                continue;
            }
            break;
        };
        let new_grad = projected(&gauge, &new_eval);
        let s: Vec<S> = dir.iter().map(|&d| t * d).collect();
        let y: Vec<S> = new_grad.iter().zip(&grad).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        if cfg.optimizer == Optimizer::Bfgs && sy > S::epsilon() * norm(&s) * norm(&y) {
            let h = hinv.get_or_insert_with(|| {
                let gamma = sy / dot(&y, &y);
                identity_scaled(m, gamma, &gauge)
            });
            bfgs_update(h, &s, &y, sy, m);
        }
        phi = new_phi;
        eval = new_eval;
        grad = new_grad;
        iterations += 1;
        history.push(IterationRecord {
            iteration: iterations,
            value: eval.value.total,
            grad_norm: norm(&grad),
            residual_l1: eval.residual_l1,
        });
        converged = norm(&grad) <= tol;
    }
    let res = residual(&phi, density, &q)?;
    let w1 = pushforward_w1(&phi, density, &q);
    Ok(SolverReport {
        sample: phi.sample().to_vec(),
        theta_star: phi.theta().to_vec(),
        d_value: eval.value.total,
        nonlinear: eval.value.nonlinear,
        linear: eval.value.linear,
        grad_norm: norm(&grad),
        residual_l1: res.l1,
        residual_sup: res.sup,
        pushforward_mass: eval.pushforward_mass,
        pushforward_w1: w1,
        tail_bound: eval.value.tail_bound,
        iterations,
        converged,
        radius: q.grid.radius,
        nodes: q.grid.nodes,
        history,
    })
}

fn projected<S: Scalar>(gauge: &Gauge<S>, eval: &Evaluation<S>) -> Vec<S> {
    let mut g = eval.gradient.clone();
    gauge.project(&mut g);
    g
}

fn identity_scaled<S: Scalar>(m: usize, gamma: S, gauge: &Gauge<S>) -> Vec<S> {
    let mut h = vec![S::zero(); m * m];
    for j in 0..m {
        let mut col = vec![S::zero(); m];
        col[j] = gamma;
        gauge.project(&mut col);
        for i in 0..m {
            h[i * m + j] = col[i];
        }
    }
    h
}

fn mat_vec<S: Scalar>(h: &[S], v: &[S], m: usize) -> Vec<S> {
    (0..m).map(|i| dot(&h[i * m..(i + 1) * m], v)).collect()
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ`.
fn bfgs_update<S: Scalar>(h: &mut [S], s: &[S], y: &[S], sy: S, m: usize) {
    let rho = S::one() / sy;
    let hy = mat_vec(h, y, m);
    let yhy = dot(y, &hy);
    let coef = (S::one() + rho * yhy) * rho;
    for i in 0..m {
        for j in 0..m {
            h[i * m + j] = h[i * m + j] - rho * (hy[i] * s[j] + s[i] * hy[j]) + coef * s[i] * s[j];
        }
    }
}

type Step<S> = Option<(S, LogSumExpPotential<S>, Evaluation<S>)>;

/// Armijo backtracking (`c₁ = 1e−4`, factor ½). A step is only accepted if
/// it does not increase `D`; below the rounding floor of `D` the Armijo
/// decrease is not required.
fn line_search<S: Scalar, A: Density<S> + ?Sized>(
    phi: &LogSumExpPotential<S>,
    density: &A,
    q: &QuadratureSpec<S>,
    current: &Evaluation<S>,
    dir: &[S],
    slope: S,
) -> Result<Step<S>> {
    let d0 = current.value.total;
    let floor = S::lit(16.0) * S::epsilon() * (S::one() + d0.abs());
    let mut t = S::one();
    // Keep the first trial step moderate: weights move by at most 2.
    let dmax = dir.iter().fold(S::zero(), |a, &v| a.max(v.abs()));
    if dmax > S::lit(2.0) {
        t = S::lit(2.0) / dmax;
    }
    for _ in 0..60 {
        let theta: Vec<S> = phi.theta().iter().zip(dir).map(|(&a, &d)| a + t * d).collect();
        let trial = phi.with_theta(theta);
        let e = evaluate(&trial, density, q)?;
        let d1 = e.value.total;
        let armijo = d1 <= d0 + S::lit(1e-4) * t * slope;
        let flat = d1 <= d0 && (t * slope).abs() <= floor;
        if armijo || flat {
            return Ok(Some((t, trial, e)));
        }
        t = t * S::lit(0.5);
    }
    Ok(None)
}

/// Distance between the pushforward of `e^{−φ}/Z dξ` under `∇φ` and
/// `A dx`, both represented as atoms at the moment-map images of the grid
/// nodes. Exact 1-Wasserstein distance in one dimension; sliced
/// 1-Wasserstein (average over fixed directions) in higher dimensions.
pub fn pushforward_w1<S: Scalar, A: Density<S> + ?Sized>(phi: &LogSumExpPotential<S>, density: &A, q: &QuadratureSpec<S>) -> S {
    let n = phi.dim();
    let grid = q.grid;
    let shift = phi.theta_min();
    let mut xs: Vec<Vec<S>> = Vec::with_capacity(grid.len());
    let mut a: Vec<S> = Vec::with_capacity(grid.len());
    let mut b: Vec<S> = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let xi = grid.node(idx);
        let g = phi.softmax_geometry(&xi);
        let w = grid.weight(idx);
        let det = linalg::det_dense(&g.hessian, n).max(S::zero());
        a.push(w * (shift - g.value).exp());
        b.push(w * density.at_node(&xi, &g.gradient) * det);
        xs.push(g.gradient);
    }
    let sa = a.iter().fold(S::zero(), |s, &v| s + v);
    let sb = b.iter().fold(S::zero(), |s, &v| s + v);
    let diff: Vec<S> = a.iter().zip(&b).map(|(&x, &y)| x / sa - y / sb).collect();
    let dirs = directions::<S>(n);
    let total = dirs.iter().fold(S::zero(), |acc, d| {
        let proj: Vec<S> = xs.iter().map(|x| dot(x, d)).collect();
        acc + w1_1d(&proj, &diff)
    });
    total / S::from_count(dirs.len())
}

fn w1_1d<S: Scalar>(points: &[S], signed_mass: &[S]) -> S {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i].partial_cmp(&points[j]).unwrap_or(std::cmp::Ordering::Equal));
    let mut cdf = S::zero();
    let mut total = S::zero();
    for w in order.windows(2) {
        cdf = cdf + signed_mass[w[0]];
        total = total + cdf.abs() * (points[w[1]] - points[w[0]]);
    }
    total
}

fn directions<S: Scalar>(n: usize) -> Vec<Vec<S>> {
    match n {
        1 => vec![vec![S::one()]],
        2 => (0..32)
            .map(|k| {
                let a = S::PI() * S::from_count(k) / S::lit(32.0);
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            // Fibonacci points on the upper half of S^{n−1} for n = 3;
            // coordinate axes and diagonals otherwise.
            if n == 3 {
                let count = 64;
                let golden = S::PI() * (S::lit(3.0) - S::lit(5.0).sqrt());
                (0..count)
                    .map(|k| {
                        let z = S::one() - (S::from_count(k) + S::lit(0.5)) / S::from_count(count);
                        let r = (S::one() - z * z).sqrt();
                        let a = golden * S::from_count(k);
                        vec![r * a.cos(), r * a.sin(), z]
                    })
                    .collect()
            } else {
                let mut out = Vec::new();
                for i in 0..n {
                    let mut e = vec![S::zero(); n];
                    e[i] = S::one();
                    out.push(e);
                }
                let s = S::one() / S::from_count(n).sqrt();
                out.push(vec![s; n]);
                out
            }
        }
    }
}

/// One row of the metric table: `ξ`, the moment map and the Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow<S> {
    pub xi: Vec<S>,
    pub moment: Vec<S>,
    pub hessian: Vec<S>,
    pub positive_definite: bool,
}

/// `(ξ, ∇φ(ξ), ∇²φ(ξ))` at every node of `grid`.
pub fn export_metric<S: Scalar>(phi: &LogSumExpPotential<S>, grid: &GridSpec<S>) -> Vec<MetricRow<S>> {
    (0..grid.len())
        .map(|idx| {
            let xi = grid.node(idx);
            let g = phi.softmax_geometry(&xi);
            let mut l = g.hessian.clone();
            let positive_definite = linalg::cholesky(&mut l, phi.dim());
            MetricRow {
                xi,
                moment: g.gradient,
                hessian: g.hessian,
                positive_definite,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::solve_l;
    use crate::scalar::int;

    #[test]
    fn w1_of_a_shifted_atom() {
        let pts = [0.0, 1.0, 3.0];
        let mass = [0.5, -0.5, 0.0];
        assert!((w1_1d(&pts, &mass) - 0.5f64).abs() < 1e-15);
    }

    #[test]
    fn gauge_removes_constants_and_translations() {
        let p1 = ReflexivePolytope::from_coords("P1", &[&[-1], &[1]]).unwrap();
        let phi = LogSumExpPotential::<f64>::on_polytope(&p1, 1);
        let g = Gauge::new(&phi);
        let mut v = vec![3.0, 1.0, -1.0];
        g.project(&mut v);
        assert!(v.iter().all(|x| x.abs() < 1e-14));
        let mut v = vec![0.0, 1.0, 0.0];
        g.project(&mut v);
        for (a, b) in v.iter().zip([-1.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn refuses_unstable_input() {
        let p = ReflexivePolytope::from_coords("P1", &[&[-1], &[1]]).unwrap();
        let l = AffineLinear::new(int(1), vec![int(3)]);
        assert!(matches!(
            solve::<f64>(&p, &l, &SolverConfig::default()),
            Err(Error::UnstablePolytope { .. })
        ));
    }

    #[test]
    fn p1_recovers_fubini_study() {
        let p1 = ReflexivePolytope::from_coords("P1", &[&[-1], &[1]]).unwrap();
        let l = solve_l(&p1.moments()).unwrap();
        let cfg = SolverConfig {
            refinement: 1,
            ..SolverConfig::default()
        };
        let r = solve::<f64>(&p1, &l, &cfg).unwrap();
        assert!(r.converged);
        let phi = r.potential();
        let c = phi.value(&[0.0]) - 2.0 * 2f64.ln();
        for k in -100..=100 {
            let x = k as f64 / 10.0;
            let fs = 2.0 * (2.0 * (x / 2.0).cosh()).ln();
            assert!((phi.value(&[x]) - c - fs).abs() < 1e-6, "{x}");
        }
        assert!(r.residual_sup < 1e-8, "{}", r.residual_sup);
    }
}

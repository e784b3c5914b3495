//! Stability invariants of a reflexive polytope: the affine function `l`,
//! the `α` invariant and verdict, the relative Ding–Futaki invariant `I` on
//! piecewise-linear convex test functions, and the wedge probe.
//!
//! Everything here is exact except the Guillemin part of `I`, which goes
//! through [`crate::cubature`].

use num_traits::{One, Signed, Zero};

use crate::cubature::{integrate_polytope, CubatureOptions};
use crate::error::{Error, Result};
use crate::hull::{self, Point};
use crate::linalg;
use crate::polytope::{simplex_moments, LatticePoint, RationalMoments, ReflexivePolytope};
use crate::scalar::{int, rat, rational_from_f64, rational_to_f64, Rational, Scalar};

/// `l(x) = a + ⟨b, x⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLinear {
    pub a: Rational,
    pub b: Vec<Rational>,
}

impl AffineLinear {
    pub fn new(a: Rational, b: Vec<Rational>) -> Self {
        Self { a, b }
    }

    pub fn constant(a: Rational, dim: usize) -> Self {
        Self {
            a,
            b: vec![Rational::zero(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        &self.a + hull::dot(&self.b, x)
    }

    pub fn eval_lattice(&self, p: &LatticePoint) -> Rational {
        self.eval(&p.to_rational())
    }

    pub fn eval_f<S: Scalar>(&self, x: &[S]) -> S {
        self.b
            .iter()
            .zip(x)
            .fold(S::from_rational(&self.a), |acc, (b, &xi)| acc + S::from_rational(b) * xi)
    }

    /// `(a, b)` converted to floats.
    pub fn to_scalars<S: Scalar>(&self) -> (S, Vec<S>) {
        (S::from_rational(&self.a), self.b.iter().map(S::from_rational).collect())
    }

    /// `∫ l dx` for the given moments.
    pub fn integral(&self, mom: &RationalMoments) -> Rational {
        &self.a * &mom.volume + hull::dot(&self.b, &mom.first)
    }

    /// `∫ x_i l dx` for each `i`.
    pub fn first_moments(&self, mom: &RationalMoments) -> Vec<Rational> {
        (0..mom.dim())
            .map(|i| &self.a * &mom.first[i] + hull::dot(&self.b, &mom.second[i]))
            .collect()
    }
}

/// One affine piece `⟨c, x⟩ + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePiece {
    pub c: Vec<Rational>,
    pub d: Rational,
}

impl AffinePiece {
    pub fn new(c: Vec<Rational>, d: Rational) -> Self {
        Self { c, d }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            c: vec![Rational::zero(); dim],
            d: Rational::zero(),
        }
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        hull::dot(&self.c, x) + &self.d
    }

    pub fn eval_f<S: Scalar>(&self, x: &[S]) -> S {
        self.c
            .iter()
            .zip(x)
            .fold(S::from_rational(&self.d), |acc, (c, &xi)| acc + S::from_rational(c) * xi)
    }

    pub fn scaled(&self, t: &Rational) -> Self {
        Self {
            c: self.c.iter().map(|c| c * t).collect(),
            d: &self.d * t,
        }
    }
}

/// The normalized Guillemin potential
/// `ũ₀(x) = ½ Σ_F δ_F log δ_F − ½ ⟨Σ_F n_F, x⟩`, `δ_F = ⟨n_F, x⟩ + 1`.
///
/// The linear correction makes `ũ₀(0) = 0` and `∇ũ₀(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GuilleminBase {
    pub normals: Vec<Vec<i64>>,
}

impl GuilleminBase {
    pub fn of(polytope: &ReflexivePolytope) -> Self {
        Self {
            normals: polytope.facets().iter().map(|f| f.normal.clone()).collect(),
        }
    }

    pub fn eval<S: Scalar>(&self, x: &[S]) -> S {
        let half = S::lit(0.5);
        let mut acc = S::zero();
        for n in &self.normals {
            let lin = n.iter().zip(x).fold(S::zero(), |a, (&ni, &xi)| a + S::lit(ni as f64) * xi);
            let delta = lin + S::one();
            if delta > S::zero() {
                acc = acc + delta * delta.ln();
            }
            acc = acc - lin;
        }
        half * acc
    }

    pub fn gradient<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let half = S::lit(0.5);
        let mut g = vec![S::zero(); x.len()];
        for n in &self.normals {
            let delta = n.iter().zip(x).fold(S::one(), |a, (&ni, &xi)| a + S::lit(ni as f64) * xi);
            let w = half * delta.ln();
            for (gi, &ni) in g.iter_mut().zip(n) {
                *gi = *gi + w * S::lit(ni as f64);
            }
        }
        g
    }
}

/// `u(x) = max_j (⟨c_j, x⟩ + d_j)`, optionally plus the Guillemin base.
#[derive(Debug, Clone, PartialEq)]
pub struct PLConvexFunction {
    dim: usize,
    pieces: Vec<AffinePiece>,
    guillemin: Option<GuilleminBase>,
}

impl PLConvexFunction {
    pub fn new(dim: usize, pieces: Vec<AffinePiece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidInput("a PL function needs at least one piece".into()));
        }
        if let Some(p) = pieces.iter().find(|p| p.c.len() != dim) {
            return Err(Error::InvalidInput(format!(
                "piece gradient has length {}, expected {dim}",
                p.c.len()
            )));
        }
        Ok(Self {
            dim,
            pieces,
            guillemin: None,
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            pieces: vec![AffinePiece::zero(dim)],
            guillemin: None,
        }
    }

    pub fn affine(c: Vec<Rational>, d: Rational) -> Self {
        Self {
            dim: c.len(),
            pieces: vec![AffinePiece::new(c, d)],
            guillemin: None,
        }
    }

    /// The normalized Guillemin potential with no PL part.
    pub fn guillemin(polytope: &ReflexivePolytope) -> Self {
        Self {
            dim: polytope.dim(),
            pieces: vec![AffinePiece::zero(polytope.dim())],
            guillemin: Some(GuilleminBase::of(polytope)),
        }
    }

    pub fn with_guillemin(mut self, polytope: &ReflexivePolytope) -> Self {
        self.guillemin = Some(GuilleminBase::of(polytope));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn guillemin_base(&self) -> Option<&GuilleminBase> {
        self.guillemin.as_ref()
    }

    pub fn is_piecewise_linear(&self) -> bool {
        self.guillemin.is_none()
    }

    /// Value of the PL part, exact.
    pub fn pl_value(&self, x: &[Rational]) -> Rational {
        self.pieces
            .iter()
            .map(|p| p.eval(x))
            .max()
            .expect("at least one piece")
    }

    pub fn eval<S: Scalar>(&self, x: &[S]) -> S {
        let pl = self
            .pieces
            .iter()
            .map(|p| p.eval_f(x))
            .fold(S::neg_infinity(), S::max);
        match &self.guillemin {
            Some(g) => pl + g.eval(x),
            None => pl,
        }
    }

    pub fn scaled(&self, t: &Rational) -> Result<Self> {
        if t.is_negative() {
            return Err(Error::InvalidInput("scaling a convex function by a negative factor".into()));
        }
        if self.guillemin.is_some() && !t.is_one() {
            return Err(Error::InvalidInput("the Guillemin base cannot be rescaled".into()));
        }
        Ok(Self {
            dim: self.dim,
            pieces: self.pieces.iter().map(|p| p.scaled(t)).collect(),
            guillemin: self.guillemin.clone(),
        })
    }

    /// Subtracts `u(0) + ⟨g, x⟩` for a subgradient `g` at the origin (the
    /// mean gradient of the pieces active there), so that the result is
    /// `≥ 0` with value `0` at the origin.
    pub fn normalized(&self) -> Self {
        let zero = vec![Rational::zero(); self.dim];
        let top = self.pl_value(&zero);
        let active: Vec<&AffinePiece> = self.pieces.iter().filter(|p| p.d == top).collect();
        let count = int(active.len() as i64);
        let g: Vec<Rational> = (0..self.dim)
            .map(|i| active.iter().map(|p| &p.c[i]).sum::<Rational>() / &count)
            .collect();
        let mut pieces: Vec<AffinePiece> = Vec::new();
        for p in &self.pieces {
            let q = AffinePiece::new(
                p.c.iter().zip(&g).map(|(c, gi)| c - gi).collect(),
                &p.d - &top,
            );
            if !pieces.contains(&q) {
                pieces.push(q);
            }
        }
        Self {
            dim: self.dim,
            pieces,
            guillemin: self.guillemin.clone(),
        }
    }

    /// Builds the convex PL function interpolating scattered data, i.e. the
    /// lower convex envelope of `(x_k, v_k)`. Fails with `NonConvexInput`
    /// when some data point lies strictly above that envelope.
    pub fn from_values(points: &[Point], values: &[Rational]) -> Result<Self> {
        if points.len() != values.len() || points.is_empty() {
            return Err(Error::InvalidInput("need one value per point".into()));
        }
        let n = points[0].len();
        let idx: Vec<usize> = (0..points.len()).collect();
        if hull::affine_rank(points, &idx) < n {
            return Err(Error::InvalidInput("data points do not span the space".into()));
        }
        let lifted: Vec<Point> = points
            .iter()
            .zip(values)
            .map(|(p, v)| {
                let mut q = p.clone();
                q.push(v.clone());
                q
            })
            .collect();
        let pieces: Vec<AffinePiece> = if hull::affine_rank(&lifted, &idx) < n + 1 {
            // All data on one hyperplane: a single affine piece through it.
            let basis = independent_subset(points, n);
            let rows: Vec<Vec<Rational>> = basis
                .iter()
                .map(|&k| {
                    let mut r = points[k].clone();
                    r.push(Rational::one());
                    r
                })
                .collect();
            let rhs: Vec<Rational> = basis.iter().map(|&k| values[k].clone()).collect();
            let sol = linalg::solve(&rows, &rhs).ok_or(Error::SingularMoments)?;
            vec![AffinePiece::new(sol[..n].to_vec(), sol[n].clone())]
        } else {
            hull::facets(&lifted)
                .into_iter()
                .filter(|f| f.normal[n].is_positive())
                .map(|f| {
                    let h = &f.normal[n];
                    AffinePiece::new(f.normal[..n].iter().map(|a| -a / h).collect(), &f.offset / h)
                })
                .collect()
        };
        let u = Self::new(n, pieces)?;
        for (p, v) in points.iter().zip(values) {
            let env = u.pl_value(p);
            if &env != v {
                return Err(Error::NonConvexInput(format!(
                    "value {v} at {p:?} lies above the convex envelope {env}"
                )));
            }
        }
        Ok(u)
    }
}

fn independent_subset(points: &[Point], n: usize) -> Vec<usize> {
    let mut chosen = vec![0usize];
    for k in 1..points.len() {
        if chosen.len() == n + 1 {
            break;
        }
        let mut trial = chosen.clone();
        trial.push(k);
        if hull::affine_rank(points, &trial) == trial.len() - 1 {
            chosen = trial;
        }
    }
    chosen
}

/// Solves the moment conditions `∫ l = 1`, `∫ x_i l = 0` exactly.
pub fn solve_l(mom: &RationalMoments) -> Result<AffineLinear> {
    let n = mom.dim();
    let mut rhs = vec![Rational::zero(); n + 1];
    rhs[0] = Rational::one();
    let sol = linalg::solve(&mom.gram(), &rhs).ok_or(Error::SingularMoments)?;
    let l = AffineLinear::new(sol[0].clone(), sol[1..].to_vec());
    if !l.integral(mom).is_one() || l.first_moments(mom).iter().any(|v| !v.is_zero()) || !l.a.is_positive() {
        return Err(Error::SingularMoments);
    }
    Ok(l)
}

/// `α = max over vertices of 1 − |△|·l(p)`.
pub fn alpha_invariant(polytope: &ReflexivePolytope, l: &AffineLinear) -> Rational {
    let vol = polytope.moments().volume;
    alpha_with_volume(polytope, l, &vol)
}

fn alpha_with_volume(polytope: &ReflexivePolytope, l: &AffineLinear, vol: &Rational) -> Rational {
    polytope
        .vertices()
        .iter()
        .map(|p| Rational::one() - vol * l.eval_lattice(p))
        .max()
        .expect("polytope has vertices")
}

#[derive(Debug, Clone, PartialEq)]
pub struct WedgeStep {
    pub step: usize,
    /// Level `τ` of the corner simplex `{Σ_F δ_F ≤ τ}` carrying the wedge.
    pub radius: f64,
    pub peak: f64,
    pub mass: f64,
    pub ratio: Rational,
    pub ratio_f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WedgeProbe {
    pub vertex: LatticePoint,
    /// The limit the ratios approach, `l(p)`.
    pub limit: Rational,
    pub steps: Vec<WedgeStep>,
    /// Steps skipped because the wedge did not fit in the vertex corner.
    pub skipped: Vec<usize>,
    /// Richardson extrapolation in the radius from the last two steps.
    pub extrapolated: f64,
}

impl WedgeProbe {
    pub fn ratios(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.ratio_f).collect()
    }

    pub fn last_ratio(&self) -> Option<f64> {
        self.steps.last().map(|s| s.ratio_f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub l: AffineLinear,
    pub volume: Rational,
    pub vertex_values: Vec<(LatticePoint, Rational)>,
    pub alpha: Rational,
    pub stable: bool,
    /// Certified lower-bound constant `(1 − α)/|△|`.
    pub lambda: Rational,
    pub probes: Vec<WedgeProbe>,
}

impl StabilityReport {
    pub fn min_vertex_value(&self) -> &Rational {
        self.vertex_values
            .iter()
            .map(|(_, v)| v)
            .min()
            .expect("polytope has vertices")
    }
}

pub const DEFAULT_WEDGE_STEPS: usize = 50;

/// Full report for `P`, with `l` from its moments and default wedge probes.
pub fn stability_report(polytope: &ReflexivePolytope) -> Result<StabilityReport> {
    let l = solve_l(&polytope.moments())?;
    stability_report_for(polytope, &l, DEFAULT_WEDGE_STEPS)
}

/// Report for an arbitrary affine `l`; `probe_steps = 0` skips the probes.
pub fn stability_report_for(polytope: &ReflexivePolytope, l: &AffineLinear, probe_steps: usize) -> Result<StabilityReport> {
    let volume = polytope.moments().volume;
    let vertex_values: Vec<(LatticePoint, Rational)> = polytope
        .vertices()
        .iter()
        .map(|p| (p.clone(), l.eval_lattice(p)))
        .collect();
    let alpha = alpha_with_volume(polytope, l, &volume);
    let stable = alpha < Rational::one();
    let lambda = (Rational::one() - &alpha) / &volume;
    let min_l = vertex_values.iter().map(|(_, v)| v).min().expect("vertices");
    assert_eq!(stable, min_l.is_positive(), "α < 1 must agree with min l > 0");
    assert_eq!(&lambda, min_l);
    let mut probes = Vec::new();
    if probe_steps > 0 {
        for v in 0..polytope.vertices().len() {
            probes.push(wedge_probe(polytope, l, v, 1.0, probe_steps)?);
        }
    }
    Ok(StabilityReport {
        l: l.clone(),
        volume,
        vertex_values,
        alpha,
        stable,
        lambda,
        probes,
    })
}

/// `(∫ u dx, ∫ u·A dx)` for a piecewise-linear `u` and affine `A`, exact.
#[derive(Debug, Clone, PartialEq)]
pub struct PlIntegrals {
    pub integral: Rational,
    pub weighted: Rational,
}

/// Refines the triangulation of `P` until each cell lies in the linearity
/// domain of one piece. Returns `(cell, piece index)` pairs.
pub fn linearity_cells(polytope: &ReflexivePolytope, pieces: &[AffinePiece]) -> Vec<(Vec<Point>, usize)> {
    let mut out = Vec::new();
    let all: Vec<usize> = (0..pieces.len()).collect();
    for s in polytope.simplices() {
        refine(s, all.clone(), pieces, &mut out);
    }
    out
}

fn refine(simplex: Vec<Point>, active: Vec<usize>, pieces: &[AffinePiece], out: &mut Vec<(Vec<Point>, usize)>) {
    let vals: Vec<Vec<Rational>> = active
        .iter()
        .map(|&j| simplex.iter().map(|v| pieces[j].eval(v)).collect())
        .collect();
    let dominated = |a: usize| {
        (0..active.len()).any(|b| {
            b != a
                && vals[b].iter().zip(&vals[a]).all(|(vb, va)| vb >= va)
                && (active[b] < active[a] || vals[b].iter().zip(&vals[a]).any(|(vb, va)| vb > va))
        })
    };
    let keep: Vec<usize> = (0..active.len()).filter(|&a| !dominated(a)).map(|a| active[a]).collect();
    if keep.len() == 1 {
        out.push((simplex, keep[0]));
        return;
    }
    let (j, k) = (keep[0], keep[1]);
    let a: Vec<Rational> = pieces[j].c.iter().zip(&pieces[k].c).map(|(x, y)| x - y).collect();
    let b = &pieces[j].d - &pieces[k].d;
    let (pos, neg) = hull::split_simplex(&simplex, &a, &b);
    let without = |drop: usize| -> Vec<usize> { keep.iter().copied().filter(|&x| x != drop).collect() };
    for cell in pos {
        refine(cell, without(k), pieces, out);
    }
    for cell in neg {
        refine(cell, without(j), pieces, out);
    }
}

pub fn integrate_pl(polytope: &ReflexivePolytope, pieces: &[AffinePiece], weight: &AffineLinear) -> PlIntegrals {
    let mut integral = Rational::zero();
    let mut weighted = Rational::zero();
    for (cell, j) in linearity_cells(polytope, pieces) {
        let (v, m, mm) = simplex_moments(&cell);
        let p = &pieces[j];
        let cm = hull::dot(&p.c, &m);
        integral += &p.d * &v + &cm;
        let mut quad = Rational::zero();
        for (ci, row) in p.c.iter().zip(&mm) {
            quad += ci * hull::dot(&weight.b, row);
        }
        weighted += &p.d * &weight.a * &v + &p.d * hull::dot(&weight.b, &m) + &weight.a * cm + quad;
    }
    PlIntegrals { integral, weighted }
}

/// `I(u) = −u(0) + ∫ u·l dx` for piecewise-linear `u`, exact.
pub fn ding_futaki_exact(polytope: &ReflexivePolytope, l: &AffineLinear, u: &PLConvexFunction) -> Result<Rational> {
    if !u.is_piecewise_linear() {
        return Err(Error::InvalidInput(
            "the Guillemin base has no exact integral; use ding_futaki_i".into(),
        ));
    }
    check_dim(polytope, u)?;
    let zero = vec![Rational::zero(); u.dim()];
    Ok(integrate_pl(polytope, u.pieces(), l).weighted - u.pl_value(&zero))
}

/// `I(u)` in floating point; the Guillemin part, if any, by adaptive
/// cubature at relative tolerance `1e−10`.
pub fn ding_futaki_i<S: Scalar>(polytope: &ReflexivePolytope, l: &AffineLinear, u: &PLConvexFunction) -> Result<S> {
    check_dim(polytope, u)?;
    let zero = vec![Rational::zero(); u.dim()];
    let exact = integrate_pl(polytope, u.pieces(), l).weighted - u.pl_value(&zero);
    let mut total = S::from_rational(&exact);
    if let Some(g) = u.guillemin_base() {
        let r = integrate_polytope::<S, _>(polytope, |x| g.eval(x) * l.eval_f(x), CubatureOptions::default());
        total = total + r.value;
    }
    Ok(total)
}

fn check_dim(polytope: &ReflexivePolytope, u: &PLConvexFunction) -> Result<()> {
    if u.dim() != polytope.dim() {
        return Err(Error::InvalidInput(format!(
            "function has dimension {}, polytope {}",
            u.dim(),
            polytope.dim()
        )));
    }
    Ok(())
}

/// Level data of the wedges at a vertex: the facet-normal sum `g` (so that
/// `t(x) = Σ_{F∋p} δ_F(x) = ⟨g, p⟩ − ⟨g, x⟩` on the vertex corner) and the
/// largest admissible level.
struct Corner {
    p: LatticePoint,
    g: Vec<Rational>,
    gp: Rational,
    max_level: f64,
}

fn corner(polytope: &ReflexivePolytope, vertex: usize) -> Result<Corner> {
    let p = polytope
        .vertices()
        .get(vertex)
        .ok_or_else(|| Error::InvalidInput(format!("no vertex with index {vertex}")))?
        .clone();
    let n = polytope.dim();
    let cone = polytope.vertex_cone(vertex);
    let mut g = vec![0i64; n];
    for &f in &cone.facets {
        for (gi, ni) in g.iter_mut().zip(&polytope.facets()[f].normal) {
            *gi += ni;
        }
    }
    let g: Vec<Rational> = g.iter().map(|&x| int(x)).collect();
    let gp = hull::dot(&g, &p.to_rational());
    let min_edge = *cone.edge_lengths.iter().min().expect("edges") as f64;
    Ok(Corner {
        p,
        g,
        gp,
        max_level: min_edge.min(n as f64),
    })
}

fn wedge_level(n: usize, i: usize) -> f64 {
    let fact = (1..=n + 1).product::<usize>() as f64;
    (fact / i as f64).powf(1.0 / n as f64)
}

fn wedge_at(c: &Corner, n: usize, k: &Rational, i: usize, tau: f64) -> Result<PLConvexFunction> {
    let tau_q = rational_from_f64(tau).expect("finite");
    let peak = k * int(i as i64);
    let slope = &peak / &tau_q;
    let wedge = AffinePiece::new(c.g.iter().map(|x| -(x * &slope)).collect(), &peak + &slope * &c.gp);
    PLConvexFunction::new(n, vec![AffinePiece::zero(n), wedge])
}

/// Member `i` of the wedge family at a vertex, or `None` if its corner does
/// not fit (see [`wedge_probe`]).
pub fn wedge_function(polytope: &ReflexivePolytope, vertex: usize, k: f64, i: usize) -> Result<Option<PLConvexFunction>> {
    if !(k > 0.0 && k.is_finite()) || i == 0 {
        return Err(Error::InvalidInput(format!("wedge needs positive mass and step, got {k}, {i}")));
    }
    let c = corner(polytope, vertex)?;
    let n = polytope.dim();
    let tau = wedge_level(n, i);
    if tau > c.max_level {
        return Ok(None);
    }
    wedge_at(&c, n, &rational_from_f64(k).expect("finite"), i, tau).map(Some)
}

/// Wedge family at the vertex with index `vertex`.
///
/// Member `i` is `ŵ_i = max(0, K i (1 − t/τ_i))` with `t = Σ_{F∋p} δ_F`,
/// which is supported on the corner simplex `conv(p, p + τ_i e_k)` spanned by
/// the primitive edges. `τ_iⁿ = (n+1)!/i` gives `∫ ŵ_i = K` and
/// `ŵ_i(p) = K i`. Steps whose corner does not fit inside the polytope, or
/// would make `ŵ_i(0) > 0`, are skipped.
pub fn wedge_probe(
    polytope: &ReflexivePolytope,
    l: &AffineLinear,
    vertex: usize,
    k: f64,
    steps: usize,
) -> Result<WedgeProbe> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidInput(format!("wedge mass must be positive, got {k}")));
    }
    let c = corner(polytope, vertex)?;
    let n = polytope.dim();
    let k_q = rational_from_f64(k).expect("finite");
    let zero = vec![Rational::zero(); n];
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for i in 1..=steps {
        let tau = wedge_level(n, i);
        if tau > c.max_level {
            skipped.push(i);
            continue;
        }
        let u = wedge_at(&c, n, &k_q, i, tau)?;
        let ints = integrate_pl(polytope, u.pieces(), l);
        let i_val = &ints.weighted - u.pl_value(&zero);
        let ratio = &i_val / &ints.integral;
        out.push(WedgeStep {
            step: i,
            radius: tau,
            peak: rational_to_f64(&(&k_q * int(i as i64))),
            mass: rational_to_f64(&ints.integral),
            ratio_f: rational_to_f64(&ratio),
            ratio,
        });
    }
    if out.is_empty() {
        return Err(Error::DegenerateWedge { steps });
    }
    let extrapolated = match out.as_slice() {
        [.., a, b] if a.radius != b.radius => b.ratio_f - b.radius * (a.ratio_f - b.ratio_f) / (a.radius - b.radius),
        [.., b] => b.ratio_f,
        [] => unreachable!(),
    };
    Ok(WedgeProbe {
        limit: l.eval_lattice(&c.p),
        vertex: c.p,
        steps: out,
        skipped,
        extrapolated,
    })
}

/// A random normalized PL convex function: the maximum of `2..=5` affine
/// pieces with slopes and offsets on a grid of spacing `1/4`, normalized.
pub fn random_pl_function<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> PLConvexFunction {
    let count = rng.gen_range(2..=5);
    let pieces: Vec<AffinePiece> = (0..count)
        .map(|_| {
            let c = (0..dim).map(|_| rat(rng.gen_range(-12..=12), 4)).collect();
            AffinePiece::new(c, rat(rng.gen_range(-8..=8), 4))
        })
        .collect();
    PLConvexFunction::new(dim, pieces).expect("non-empty").normalized()
}

//! Reflexive Delzant polytopes and their exact moments.
//!
//! A [`ReflexivePolytope`] is built from its vertex list; construction
//! validates full-dimensionality, reflexivity (every facet at lattice
//! distance one from the origin) and smoothness (unimodular vertex cones).
//! Moments up to degree two are computed exactly over a canonical
//! triangulation: each facet is pulled from its lexicographically first
//! vertex and the resulting cells are coned over the origin.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull::{self, Point};
use crate::linalg;
use crate::scalar::{int, Field, Rational, Scalar};

pub const MAX_DIM: usize = 6;

/// Sentinel used in triangulation index tuples for the origin.
pub const ORIGIN: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePoint(pub Vec<i64>);

impl LatticePoint {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_rational(&self) -> Point {
        self.0.iter().map(|&x| int(x)).collect()
    }

    pub fn to_scalars<S: Scalar>(&self) -> Vec<S> {
        self.0.iter().map(|&x| S::lit(x as f64)).collect()
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// Facet `⟨normal, x⟩ ≥ −1` with primitive integer normal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FacetData {
    pub normal: Vec<i64>,
    /// Indices into the polytope's vertex list.
    pub vertices: Vec<usize>,
}

/// Local data at a vertex: the `n` facets through it and the primitive edge
/// directions, ordered so that edge `k` leaves facet `facets[k]` and lies on
/// all the others.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexCone {
    pub facets: Vec<usize>,
    pub edges: Vec<Vec<i64>>,
    /// Lattice length of each edge (number of primitive steps to the
    /// neighbouring vertex).
    pub edge_lengths: Vec<i64>,
}

#[derive(Debug, Clone)]
pub struct ReflexivePolytope {
    name: String,
    dim: usize,
    vertices: Vec<LatticePoint>,
    facets: Vec<FacetData>,
    cones: Vec<VertexCone>,
    triangulation: Vec<Vec<usize>>,
}

impl PartialEq for ReflexivePolytope {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.vertices == other.vertices
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RationalMoments {
    pub volume: Rational,
    /// `∫ x_i dx`.
    pub first: Vec<Rational>,
    /// `∫ x_i x_j dx`.
    pub second: Vec<Vec<Rational>>,
}

impl RationalMoments {
    pub fn dim(&self) -> usize {
        self.first.len()
    }

    /// Gram matrix of `1, x₁, …, xₙ` in `L²(△)`.
    pub fn gram(&self) -> Vec<Vec<Rational>> {
        let n = self.dim();
        let mut g = vec![vec![Rational::zero(); n + 1]; n + 1];
        g[0][0] = self.volume.clone();
        for i in 0..n {
            g[0][i + 1] = self.first[i].clone();
            g[i + 1][0] = self.first[i].clone();
            for j in 0..n {
                g[i + 1][j + 1] = self.second[i][j].clone();
            }
        }
        g
    }

    /// Exact positive-definiteness of the Gram matrix via leading minors.
    pub fn gram_is_positive_definite(&self) -> bool {
        let g = self.gram();
        (1..=g.len()).all(|k| {
            let minor: Vec<Vec<Rational>> = g[..k].iter().map(|r| r[..k].to_vec()).collect();
            linalg::det(&minor).is_positive()
        })
    }

    pub fn centroid(&self) -> Vec<Rational> {
        self.first.iter().map(|m| m / &self.volume).collect()
    }
}

fn small<T: Field>(k: usize) -> T {
    (0..k).fold(T::zero(), |acc, _| acc + T::one())
}

/// Volume, first and second moments of one simplex, over any field.
///
/// For vertices `v₀…vₙ` with volume `V` and coordinate sums `S_i`:
/// `∫ x_i = V S_i/(n+1)` and
/// `∫ x_i x_j = V/((n+1)(n+2)) · (Σ_k v_{k,i} v_{k,j} + S_i S_j)`.
pub fn simplex_moments<T: Field>(vertices: &[Vec<T>]) -> (T, Vec<T>, Vec<Vec<T>>) {
    let n = vertices.len() - 1;
    let rows: Vec<Vec<T>> = vertices[1..]
        .iter()
        .map(|v| v.iter().zip(&vertices[0]).map(|(a, b)| a.clone() - b.clone()).collect())
        .collect();
    let fact: T = (1..=n).fold(T::one(), |acc, k| acc * small::<T>(k));
    let vol = linalg::det(&rows).abs() / fact;
    let sums: Vec<T> = (0..n)
        .map(|i| vertices.iter().fold(T::zero(), |acc, v| acc + v[i].clone()))
        .collect();
    let first: Vec<T> = sums
        .iter()
        .map(|s| vol.clone() * s.clone() / small::<T>(n + 1))
        .collect();
    let scale = vol.clone() / (small::<T>(n + 1) * small::<T>(n + 2));
    let mut second = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let cross = vertices
                .iter()
                .fold(T::zero(), |acc, v| acc + v[i].clone() * v[j].clone());
            second[i][j] = scale.clone() * (cross + sums[i].clone() * sums[j].clone());
        }
    }
    (vol, first, second)
}

/// Sums simplex moments over a list of simplices.
pub fn moments_of(simplices: &[Vec<Point>], dim: usize) -> RationalMoments {
    let mut m = RationalMoments {
        volume: Rational::zero(),
        first: vec![Rational::zero(); dim],
        second: vec![vec![Rational::zero(); dim]; dim],
    };
    for s in simplices {
        let (v, f, q) = simplex_moments(s);
        m.volume += v;
        for i in 0..dim {
            m.first[i] += &f[i];
            for j in 0..dim {
                m.second[i][j] += &q[i][j];
            }
        }
    }
    m
}

fn primitive(v: &[Rational]) -> Vec<i64> {
    let lcm = v
        .iter()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let ints: Vec<BigInt> = v.iter().map(|q| (q * Rational::from_integer(lcm.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    ints.iter()
        .map(|x| (x / &g).to_i64().expect("normal fits in i64"))
        .collect()
}

fn dot_i(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl ReflexivePolytope {
    /// Validates and builds a reflexive Delzant polytope from its vertices.
    pub fn from_vertices(name: impl Into<String>, vertices: Vec<LatticePoint>) -> Result<Self> {
        let name = name.into();
        let dim = vertices
            .first()
            .map(LatticePoint::dim)
            .ok_or_else(|| Error::InvalidInput("no vertices".into()))?;
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::DimensionOutOfRange(dim));
        }
        if let Some(bad) = vertices.iter().find(|v| v.dim() != dim) {
            return Err(Error::InvalidInput(format!(
                "vertex {bad} has dimension {} but expected {dim}",
                bad.dim()
            )));
        }
        let mut vertices = vertices;
        vertices.sort();
        vertices.dedup();

        let points: Vec<Point> = vertices.iter().map(LatticePoint::to_rational).collect();
        let all: Vec<usize> = (0..points.len()).collect();
        let rank = hull::affine_rank(&points, &all);
        if rank < dim {
            return Err(Error::NotFullDimensional { rank, dim });
        }

        let mut facets = Vec::new();
        for f in hull::facets(&points) {
            let normal = primitive(&f.normal);
            let distance = dot_i(&normal, &vertices[f.points[0]].0);
            if distance >= 0 {
                return Err(Error::OriginNotInterior { normal });
            }
            if distance != -1 {
                return Err(Error::NotReflexive {
                    normal,
                    distance: (-distance).to_string(),
                });
            }
            facets.push(FacetData {
                normal,
                vertices: f.points,
            });
        }
        facets.sort_by(|a, b| a.vertices.cmp(&b.vertices));

        let mut cones = Vec::with_capacity(vertices.len());
        for (vi, v) in vertices.iter().enumerate() {
            let through: Vec<usize> = (0..facets.len())
                .filter(|&f| facets[f].vertices.contains(&vi))
                .collect();
            let normals: Vec<Vec<Rational>> = through
                .iter()
                .map(|&f| facets[f].normal.iter().map(|&x| int(x)).collect())
                .collect();
            if linalg::rank(&normals) < dim {
                return Err(Error::RedundantVertex(v.0.clone()));
            }
            if through.len() != dim {
                return Err(Error::NotDelzant {
                    vertex: v.0.clone(),
                    reason: format!("vertex lies on {} facets (not simple)", through.len()),
                });
            }
            let mut edges = Vec::with_capacity(dim);
            let mut lengths = Vec::with_capacity(dim);
            for k in 0..dim {
                let others: Vec<Vec<Rational>> = (0..dim)
                    .filter(|&j| j != k)
                    .map(|j| normals[j].clone())
                    .collect();
                let dir = if dim == 1 {
                    vec![Rational::one()]
                } else {
                    linalg::null_vector(&others, dim).expect("simple vertex has rank-n normals")
                };
                let mut e = primitive(&dir);
                if dot_i(&facets[through[k]].normal, &e) < 0 {
                    e.iter_mut().for_each(|x| *x = -*x);
                }
                let shared: Vec<usize> = (0..dim).filter(|&j| j != k).map(|j| through[j]).collect();
                let neighbour = (0..vertices.len())
                    .find(|&w| w != vi && shared.iter().all(|&f| facets[f].vertices.contains(&w)))
                    .expect("every edge of a polytope has two endpoints");
                let diff: Vec<i64> = vertices[neighbour].0.iter().zip(&v.0).map(|(a, b)| a - b).collect();
                let len = diff
                    .iter()
                    .zip(&e)
                    .find(|(_, &ek)| ek != 0)
                    .map(|(d, ek)| d / ek)
                    .unwrap_or(0);
                edges.push(e);
                lengths.push(len);
            }
            let erows: Vec<Vec<Rational>> = edges
                .iter()
                .map(|e| e.iter().map(|&x| int(x)).collect())
                .collect();
            let d = linalg::det(&erows);
            if d.abs() != Rational::one() {
                return Err(Error::NotDelzant {
                    vertex: v.0.clone(),
                    reason: format!("edge-direction determinant {}", d.abs()),
                });
            }
            cones.push(VertexCone {
                facets: through,
                edges,
                edge_lengths: lengths,
            });
        }

        let facet_sets: Vec<Vec<usize>> = facets.iter().map(|f| f.vertices.clone()).collect();
        let mut triangulation = Vec::new();
        for f in &facet_sets {
            for mut s in hull::pull(&points, &facet_sets, f, dim - 1) {
                s.push(ORIGIN);
                triangulation.push(s);
            }
        }

        Ok(Self {
            name,
            dim,
            vertices,
            facets,
            cones,
            triangulation,
        })
    }

    pub fn from_coords(name: impl Into<String>, coords: &[&[i64]]) -> Result<Self> {
        Self::from_vertices(name, coords.iter().map(|c| LatticePoint(c.to_vec())).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Vertices in canonical (lexicographic) order.
    pub fn vertices(&self) -> &[LatticePoint] {
        &self.vertices
    }

    pub fn facets(&self) -> &[FacetData] {
        &self.facets
    }

    pub fn vertex_cone(&self, vertex: usize) -> &VertexCone {
        &self.cones[vertex]
    }

    /// Triangulation as vertex-index tuples; [`ORIGIN`] marks the origin.
    pub fn triangulation(&self) -> &[Vec<usize>] {
        &self.triangulation
    }

    fn point(&self, idx: usize) -> Point {
        if idx == ORIGIN {
            vec![Rational::zero(); self.dim]
        } else {
            self.vertices[idx].to_rational()
        }
    }

    /// Triangulation simplices with explicit rational coordinates.
    pub fn simplices(&self) -> Vec<Vec<Point>> {
        self.triangulation
            .iter()
            .map(|s| s.iter().map(|&i| self.point(i)).collect())
            .collect()
    }

    /// A second, independent triangulation: pulling from the first vertex
    /// over the whole polytope (no origin cone).
    pub fn pulling_triangulation(&self) -> Vec<Vec<Point>> {
        let points: Vec<Point> = self.vertices.iter().map(LatticePoint::to_rational).collect();
        let facet_sets: Vec<Vec<usize>> = self.facets.iter().map(|f| f.vertices.clone()).collect();
        let all: Vec<usize> = (0..points.len()).collect();
        hull::pull(&points, &facet_sets, &all, self.dim)
            .into_iter()
            .map(|s| s.into_iter().map(|i| points[i].clone()).collect())
            .collect()
    }

    /// Exact volume and moments of degree ≤ 2.
    pub fn moments(&self) -> RationalMoments {
        moments_of(&self.simplices(), self.dim)
    }

    /// `h(ξ) = max_v ⟨v, ξ⟩`.
    pub fn support_function<S: Scalar>(&self, xi: &[S]) -> S {
        self.vertices
            .iter()
            .map(|v| {
                v.0.iter()
                    .zip(xi)
                    .fold(S::zero(), |acc, (&a, &b)| acc + S::lit(a as f64) * b)
            })
            .fold(S::neg_infinity(), S::max)
    }

    /// Largest `c` with `h(ξ) ≥ c|ξ|`: the radius of the largest origin
    /// ball inside the polytope, `min_F 1/‖n_F‖`.
    pub fn inradius<S: Scalar>(&self) -> S {
        self.facets
            .iter()
            .map(|f| {
                let sq: i64 = f.normal.iter().map(|x| x * x).sum();
                S::one() / S::lit(sq as f64).sqrt()
            })
            .fold(S::infinity(), S::min)
    }

    /// `min_F (⟨n_F, x⟩ + 1)`; positive exactly in the interior.
    pub fn facet_slack<S: Scalar>(&self, x: &[S]) -> S {
        self.facets
            .iter()
            .map(|f| {
                f.normal
                    .iter()
                    .zip(x)
                    .fold(S::one(), |acc, (&a, &b)| acc + S::lit(a as f64) * b)
            })
            .fold(S::infinity(), S::min)
    }

    pub fn contains_exact(&self, x: &[Rational]) -> bool {
        self.facets.iter().all(|f| {
            let v: Rational = f.normal.iter().zip(x).map(|(&a, b)| int(a) * b).sum();
            v >= -Rational::one()
        })
    }

    /// Points of `△ ∩ (1/k)ℤⁿ`, in lexicographic order of `k·x`.
    pub fn lattice_sample(&self, k: u32) -> Vec<Point> {
        let k = k.max(1) as i64;
        let lo: Vec<i64> = (0..self.dim)
            .map(|i| self.vertices.iter().map(|v| v.0[i]).min().unwrap() * k)
            .collect();
        let hi: Vec<i64> = (0..self.dim)
            .map(|i| self.vertices.iter().map(|v| v.0[i]).max().unwrap() * k)
            .collect();
        let mut out = Vec::new();
        let mut y = lo.clone();
        loop {
            if self.facets.iter().all(|f| dot_i(&f.normal, &y) >= -k) {
                out.push(y.iter().map(|&c| Rational::new(BigInt::from(c), BigInt::from(k))).collect());
            }
            let mut i = self.dim;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if y[i] < hi[i] {
                    y[i] += 1;
                    for j in i + 1..self.dim {
                        y[j] = lo[j];
                    }
                    break;
                }
            }
        }
    }

    /// Image under an integer matrix with determinant ±1 (acting on column
    /// vectors, `v ↦ U v`).
    pub fn unimodular_transform(&self, u: &[Vec<i64>]) -> Result<Self> {
        if u.len() != self.dim || u.iter().any(|r| r.len() != self.dim) {
            return Err(Error::InvalidInput(format!(
                "transform must be {}×{}",
                self.dim, self.dim
            )));
        }
        let rows: Vec<Vec<Rational>> = u.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect();
        let d = linalg::det(&rows);
        if d.abs() != Rational::one() {
            return Err(Error::NotUnimodular(d.to_string()));
        }
        let vertices = self
            .vertices
            .iter()
            .map(|v| LatticePoint(u.iter().map(|row| dot_i(row, &v.0)).collect()))
            .collect();
        Self::from_vertices(self.name.clone(), vertices)
    }

    /// Index of a vertex given its coordinates.
    pub fn vertex_index(&self, coords: &[i64]) -> Option<usize> {
        self.vertices.iter().position(|v| v.0 == coords)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn f1() -> ReflexivePolytope {
        ReflexivePolytope::from_coords("F1", &[&[-1, -1], &[0, -1], &[2, 1], &[-1, 1]]).unwrap()
    }

    #[test]
    fn p1_is_valid() {
        let p = ReflexivePolytope::from_coords("P1", &[&[-1], &[1]]).unwrap();
        let mut normals: Vec<Vec<i64>> = p.facets().iter().map(|f| f.normal.clone()).collect();
        normals.sort();
        assert_eq!(normals, vec![vec![-1], vec![1]]);
        let m = p.moments();
        assert_eq!(m.volume, int(2));
        assert_eq!(m.first, vec![int(0)]);
        assert_eq!(m.second, vec![vec![rat(2, 3)]]);
    }

    #[test]
    fn p2_facets_and_volume() {
        let p = ReflexivePolytope::from_coords("P2", &[&[2, -1], &[-1, 2], &[-1, -1]]).unwrap();
        let mut normals: Vec<Vec<i64>> = p.facets().iter().map(|f| f.normal.clone()).collect();
        normals.sort();
        assert_eq!(normals, vec![vec![-1, -1], vec![0, 1], vec![1, 0]]);
        let m = p.moments();
        assert_eq!(m.volume, rat(9, 2));
        assert_eq!(m.first, vec![int(0), int(0)]);
    }

    #[test]
    fn non_delzant_triangle_is_rejected() {
        let err = ReflexivePolytope::from_coords("T", &[&[1, 0], &[0, 1], &[-1, -1]]).unwrap_err();
        match err {
            Error::NotDelzant { reason, .. } => assert!(reason.contains('3'), "{reason}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            ReflexivePolytope::from_coords("flat", &[&[-1, 0], &[1, 0], &[0, 0]]),
            Err(Error::NotFullDimensional { .. })
        ));
        assert!(matches!(
            ReflexivePolytope::from_coords("big", &[&[-2], &[2]]),
            Err(Error::NotReflexive { .. })
        ));
        assert!(matches!(
            ReflexivePolytope::from_coords("off", &[&[0], &[1]]),
            Err(Error::OriginNotInterior { .. })
        ));
        assert!(matches!(
            ReflexivePolytope::from_coords("mixed", &[&[0], &[1, 2]]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            ReflexivePolytope::from_coords("redundant", &[&[-1], &[0], &[1]]),
            Err(Error::RedundantVertex(_))
        ));
        assert!(matches!(
            ReflexivePolytope::from_vertices("empty", vec![]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn f1_moments() {
        let m = f1().moments();
        assert_eq!(m.volume, int(4));
        assert_eq!(m.first, vec![rat(1, 3), rat(2, 3)]);
        assert_eq!(m.second, vec![vec![int(2), rat(2, 3)], vec![rat(2, 3), rat(4, 3)]]);
        assert!(m.gram_is_positive_definite());
    }

    #[test]
    fn support_function_examples() {
        let p1 = ReflexivePolytope::from_coords("P1", &[&[-1], &[1]]).unwrap();
        assert_eq!(p1.support_function(&[3.0]), 3.0);
        let sq = ReflexivePolytope::from_coords("sq", &[&[-1, -1], &[1, -1], &[1, 1], &[-1, 1]]).unwrap();
        assert_eq!(sq.support_function(&[1.0, 2.0]), 3.0);
        assert_eq!(f1().support_function(&[1.0, 1.0]), 3.0);
        assert_eq!(f1().support_function(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn unimodular_examples() {
        let p2 = ReflexivePolytope::from_coords("P2", &[&[2, -1], &[-1, 2], &[-1, -1]]).unwrap();
        assert_eq!(p2.unimodular_transform(&[vec![1, 0], vec![0, 1]]).unwrap(), p2);
        let p1 = ReflexivePolytope::from_coords("P1", &[&[-1], &[1]]).unwrap();
        assert_eq!(p1.unimodular_transform(&[vec![-1]]).unwrap(), p1);
        let t = f1().unimodular_transform(&[vec![1, 1], vec![0, 1]]).unwrap();
        assert_eq!(t.moments().volume, int(4));
        assert!(matches!(
            f1().unimodular_transform(&[vec![2, 0], vec![0, 1]]),
            Err(Error::NotUnimodular(_))
        ));
    }

    #[test]
    fn vertex_cones_and_lattice_sample() {
        let p = f1();
        let top = p.vertex_index(&[2, 1]).unwrap();
        let cone = p.vertex_cone(top);
        let mut edges = cone.edges.clone();
        edges.sort();
        assert_eq!(edges, vec![vec![-1, -1], vec![-1, 0]]);
        let mut lens = cone.edge_lengths.clone();
        lens.sort();
        assert_eq!(lens, vec![2, 3]);
        // Pick: 8 boundary points and 4 - 8/2 + 1 = 1 interior point.
        assert_eq!(p.lattice_sample(1).len(), 9);
        assert_eq!(p.inradius::<f64>(), 1.0 / 2f64.sqrt());
    }
}

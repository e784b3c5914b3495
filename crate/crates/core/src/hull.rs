//! Exact convex hulls of small rational point sets.
//!
//! Facets are found by brute force over affinely independent `n`-subsets,
//! which is fine for the handful of points that lattice polytopes in
//! dimension ≤ 6 and their refinement cells carry. Triangulations are
//! pulling triangulations built recursively over the face lattice.

use num_traits::{One, Signed, Zero};

use crate::linalg;
use crate::scalar::Rational;

pub type Point = Vec<Rational>;

#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    /// Inward normal: `⟨normal, x⟩ ≥ offset` on the hull.
    pub normal: Vec<Rational>,
    pub offset: Rational,
    /// Indices of the points lying on the facet, ascending.
    pub points: Vec<usize>,
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Dimension of the affine hull of the selected points (`-1` encoded as 0
/// points is reported as 0).
pub fn affine_rank(points: &[Point], idx: &[usize]) -> usize {
    if idx.len() <= 1 {
        return 0;
    }
    let base = &points[idx[0]];
    let rows: Vec<Vec<Rational>> = idx[1..].iter().map(|&i| sub(&points[i], base)).collect();
    linalg::rank(&rows)
}

/// Facets of the convex hull of a full-dimensional point set in `ℝⁿ`.
pub fn facets(points: &[Point]) -> Vec<Facet> {
    let n = points.first().map_or(0, Vec::len);
    let mut out: Vec<Facet> = Vec::new();
    if n == 0 || points.len() < n + 1 {
        return out;
    }
    let mut combo: Vec<usize> = (0..n).collect();
    loop {
        if let Some(f) = supporting_facet(points, &combo, n) {
            if !out.iter().any(|g| g.points == f.points) {
                out.push(f);
            }
        }
        if !next_combination(&mut combo, points.len()) {
            break;
        }
    }
    out
}

fn supporting_facet(points: &[Point], combo: &[usize], n: usize) -> Option<Facet> {
    let base = &points[combo[0]];
    let rows: Vec<Vec<Rational>> = combo[1..].iter().map(|&i| sub(&points[i], base)).collect();
    let normal = if n == 1 {
        vec![Rational::one()]
    } else {
        linalg::null_vector(&rows, n)?
    };
    let offset = dot(&normal, base);
    let vals: Vec<Rational> = points.iter().map(|p| dot(&normal, p) - &offset).collect();
    let has_pos = vals.iter().any(|v| v.is_positive());
    let has_neg = vals.iter().any(|v| v.is_negative());
    let (normal, offset) = match (has_pos, has_neg) {
        (true, true) | (false, false) => return None,
        (true, false) => (normal, offset),
        (false, true) => (normal.iter().map(|x| -x).collect(), -offset),
    };
    let on: Vec<usize> = (0..points.len()).filter(|&i| vals[i].is_zero()).collect();
    if affine_rank(points, &on) != n - 1 {
        return None;
    }
    Some(Facet {
        normal,
        offset,
        points: on,
    })
}

/// Advances `combo` to the next `k`-subset of `0..n` in lexicographic order.
pub fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Pulling triangulation of the face `face` (point indices, affine dimension
/// `dim`), using the hull facets `facets` to enumerate sub-faces.
///
/// The first point of every face is the apex coned over the sub-faces that
/// avoid it. Works with redundant (non-vertex) points on faces.
pub fn pull(points: &[Point], facets: &[Vec<usize>], face: &[usize], dim: usize) -> Vec<Vec<usize>> {
    if dim == 0 {
        return vec![vec![face[0]]];
    }
    if face.len() == dim + 1 {
        return vec![face.to_vec()];
    }
    let apex = face[0];
    let mut subfaces: Vec<Vec<usize>> = Vec::new();
    for f in facets {
        let s: Vec<usize> = face.iter().copied().filter(|i| f.contains(i)).collect();
        if s.len() < dim || s.contains(&apex) || subfaces.contains(&s) {
            continue;
        }
        if affine_rank(points, &s) == dim - 1 {
            subfaces.push(s);
        }
    }
    let mut out = Vec::new();
    for s in subfaces {
        for mut simplex in pull(points, facets, &s, dim - 1) {
            simplex.insert(0, apex);
            out.push(simplex);
        }
    }
    out
}

/// Triangulates the convex hull of a full-dimensional point set. Simplices
/// are index tuples into `points`.
pub fn triangulate(points: &[Point]) -> Vec<Vec<usize>> {
    let n = points.first().map_or(0, Vec::len);
    if n == 1 {
        let (lo, hi) = (0..points.len()).fold((0, 0), |(lo, hi), i| {
            (
                if points[i][0] < points[lo][0] { i } else { lo },
                if points[i][0] > points[hi][0] { i } else { hi },
            )
        });
        return vec![vec![lo, hi]];
    }
    let fs: Vec<Vec<usize>> = facets(points).into_iter().map(|f| f.points).collect();
    let all: Vec<usize> = (0..points.len()).collect();
    pull(points, &fs, &all, n)
}

/// Signed `n!`-scaled volume `det(v₁−v₀, …, vₙ−v₀)` of a simplex.
pub fn simplex_det(vertices: &[&Point]) -> Rational {
    let base = vertices[0];
    let rows: Vec<Vec<Rational>> = vertices[1..].iter().map(|v| sub(v, base)).collect();
    linalg::det(&rows)
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Splits a simplex by the affine function `h(x) = ⟨a, x⟩ + b` into
/// simplices on which `h ≥ 0` and simplices on which `h ≤ 0`.
pub fn split_simplex(simplex: &[Point], a: &[Rational], b: &Rational) -> (Vec<Vec<Point>>, Vec<Vec<Point>>) {
    let vals: Vec<Rational> = simplex.iter().map(|v| dot(a, v) + b).collect();
    let pos = vals.iter().any(|v| v.is_positive());
    let neg = vals.iter().any(|v| v.is_negative());
    if !neg {
        return (vec![simplex.to_vec()], vec![]);
    }
    if !pos {
        return (vec![], vec![simplex.to_vec()]);
    }
    let mut cut: Vec<Point> = Vec::new();
    for i in 0..simplex.len() {
        for j in i + 1..simplex.len() {
            if (vals[i].is_positive() && vals[j].is_negative())
                || (vals[i].is_negative() && vals[j].is_positive())
            {
                let t = &vals[i] / (&vals[i] - &vals[j]);
                let p: Point = simplex[i]
                    .iter()
                    .zip(&simplex[j])
                    .map(|(x, y)| x + &t * (y - x))
                    .collect();
                cut.push(p);
            }
        }
    }
    let side = |keep_pos: bool| -> Vec<Vec<Point>> {
        let mut pts: Vec<Point> = cut.clone();
        for (v, h) in simplex.iter().zip(&vals) {
            let keep = if keep_pos { !h.is_negative() } else { !h.is_positive() };
            if keep && !pts.contains(v) {
                pts.push(v.clone());
            }
        }
        triangulate(&pts)
            .into_iter()
            .map(|s| s.into_iter().map(|i| pts[i].clone()).collect::<Vec<Point>>())
            .filter(|s: &Vec<Point>| {
                let refs: Vec<&Point> = s.iter().collect();
                !simplex_det(&refs).is_zero()
            })
            .collect()
    };
    (side(true), side(false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    fn pts(raw: &[&[i64]]) -> Vec<Point> {
        raw.iter().map(|p| p.iter().map(|&x| int(x)).collect()).collect()
    }

    fn total_volume(points: &[Point], simplices: &[Vec<usize>]) -> Rational {
        simplices
            .iter()
            .map(|s| {
                let refs: Vec<&Point> = s.iter().map(|&i| &points[i]).collect();
                simplex_det(&refs).abs()
            })
            .sum::<Rational>()
            / int(factorial(points[0].len()) as i64)
    }

    #[test]
    fn square_facets_and_triangulation() {
        let p = pts(&[&[-1, -1], &[1, -1], &[1, 1], &[-1, 1]]);
        assert_eq!(facets(&p).len(), 4);
        let t = triangulate(&p);
        assert_eq!(t.len(), 2);
        assert_eq!(total_volume(&p, &t), int(4));
    }

    #[test]
    fn cube_with_redundant_points() {
        let mut p = Vec::new();
        for x in [-1, 1] {
            for y in [-1, 1] {
                for z in [-1, 1] {
                    p.push(vec![int(x), int(y), int(z)]);
                }
            }
        }
        p.insert(0, vec![int(0), int(0), int(1)]);
        p.push(vec![int(0), int(0), int(0)]);
        assert_eq!(facets(&p).len(), 6);
        let t = triangulate(&p);
        assert_eq!(total_volume(&p, &t), int(8));
    }

    #[test]
    fn split_preserves_volume() {
        let s = pts(&[&[0, 0, 0], &[3, 0, 0], &[0, 3, 0], &[0, 0, 3]]);
        let a = vec![int(1), int(-2), int(1)];
        let (pos, neg) = split_simplex(&s, &a, &rat(1, 2));
        let vol = |cells: &Vec<Vec<Point>>| -> Rational {
            cells
                .iter()
                .map(|c| simplex_det(&c.iter().collect::<Vec<_>>()).abs())
                .sum()
        };
        assert_eq!(vol(&pos) + vol(&neg), int(27));
        for c in &pos {
            for v in c {
                assert!(!(dot(&a, v) + rat(1, 2)).is_negative());
            }
        }
    }

    #[test]
    fn combinations_enumerate_all() {
        let mut c = vec![0, 1];
        let mut count = 1;
        while next_combination(&mut c, 5) {
            count += 1;
        }
        assert_eq!(count, 10);
    }
}

//! Small dense linear algebra: exact elimination over any [`Field`] and
//! Cholesky helpers for the floating-point Hessians.


use crate::scalar::{Field, Scalar};

/// Row-echelon form in place; returns the pivot columns.
fn echelon<T: Field>(rows: &mut [Vec<T>]) -> Vec<usize> {
    let m = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m {
            break;
        }
        let best = (r..m)
            .filter(|&i| !rows[i][c].is_zero())
            .max_by(|&a, &b| {
                rows[a][c]
                    .abs()
                    .partial_cmp(&rows[b][c].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
        let Some(p) = best else { continue };
        rows.swap(r, p);
        for i in r + 1..m {
            if rows[i][c].is_zero() {
                continue;
            }
            let f = rows[i][c].clone() / rows[r][c].clone();
            for j in c..ncols {
                let t = f.clone() * rows[r][j].clone();
                rows[i][j] = rows[i][j].clone() - t;
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<T: Field>(rows: &[Vec<T>]) -> usize {
    let mut a = rows.to_vec();
    echelon(&mut a).len()
}

/// Determinant of a square matrix.
pub fn det<T: Field>(rows: &[Vec<T>]) -> T {
    let n = rows.len();
    let mut a = rows.to_vec();
    let mut sign_flip = false;
    let mut acc = T::one();
    for c in 0..n {
        let best = (c..n).filter(|&i| !a[i][c].is_zero()).max_by(|&x, &y| {
            a[x][c]
                .abs()
                .partial_cmp(&a[y][c].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let Some(p) = best else { return T::zero() };
        if p != c {
            a.swap(p, c);
            sign_flip = !sign_flip;
        }
        for i in c + 1..n {
            if a[i][c].is_zero() {
                continue;
            }
            let f = a[i][c].clone() / a[c][c].clone();
            for j in c..n {
                let t = f.clone() * a[c][j].clone();
                a[i][j] = a[i][j].clone() - t;
            }
        }
        acc = acc * a[c][c].clone();
    }
    if sign_flip {
        -acc
    } else {
        acc
    }
}

/// Solves `A x = b` for square non-singular `A`.
pub fn solve<T: Field>(a: &[Vec<T>], b: &[T]) -> Option<Vec<T>> {
    let n = a.len();
    let mut aug: Vec<Vec<T>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let piv = echelon(&mut aug);
    if piv.len() < n || piv.iter().enumerate().any(|(i, &c)| c != i) {
        return None;
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = aug[i][n].clone();
        for j in i + 1..n {
            s = s - aug[i][j].clone() * x[j].clone();
        }
        x[i] = s / aug[i][i].clone();
    }
    Some(x)
}

/// A non-zero vector orthogonal to every row, when the rows have corank one.
pub fn null_vector<T: Field>(rows: &[Vec<T>], ncols: usize) -> Option<Vec<T>> {
    let mut a = rows.to_vec();
    let piv = echelon(&mut a);
    if piv.len() + 1 != ncols {
        return None;
    }
    let free = (0..ncols).find(|c| !piv.contains(c))?;
    let mut x = vec![T::zero(); ncols];
    x[free] = T::one();
    for (r, &c) in piv.iter().enumerate().rev() {
        let mut s = T::zero();
        for j in c + 1..ncols {
            s = s - a[r][j].clone() * x[j].clone();
        }
        x[c] = s / a[r][c].clone();
    }
    Some(x)
}

/// In-place Cholesky of a row-major `n×n` SPD matrix (lower factor).
/// Returns `false` when the matrix is not numerically positive definite.
pub fn cholesky<S: Scalar>(a: &mut [S], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d = d - a[j * n + k] * a[j * n + k];
        }
        if !(d > S::zero()) {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    true
}

/// Determinant of an SPD matrix via Cholesky, `None` if not positive definite.
pub fn spd_det<S: Scalar>(a: &[S], n: usize) -> Option<S> {
    let mut l = a.to_vec();
    if !cholesky(&mut l, n) {
        return None;
    }
    let mut d = S::one();
    for i in 0..n {
        d = d * l[i * n + i];
    }
    Some(d * d)
}

/// Solves `A x = b` for SPD `A` (row-major).
pub fn spd_solve<S: Scalar>(a: &[S], b: &[S], n: usize) -> Option<Vec<S>> {
    let mut l = a.to_vec();
    if !cholesky(&mut l, n) {
        return None;
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] = y[i] - l[i * n + k] * y[k];
        }
        y[i] = y[i] / l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] = y[i] - l[k * n + i] * y[k];
        }
        y[i] = y[i] / l[i * n + i];
    }
    Some(y)
}

/// Inverse of an SPD matrix (row-major), `None` if not positive definite.
pub fn spd_inverse<S: Scalar>(a: &[S], n: usize) -> Option<Vec<S>> {
    let mut inv = vec![S::zero(); n * n];
    for j in 0..n {
        let mut e = vec![S::zero(); n];
        e[j] = S::one();
        let col = spd_solve(a, &e, n)?;
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    Some(inv)
}

/// Determinant of a general small float matrix (row-major) by partial pivoting.
pub fn det_dense<S: Scalar>(a: &[S], n: usize) -> S {
    let rows: Vec<Vec<S>> = (0..n).map(|i| a[i * n..(i + 1) * n].to_vec()).collect();
    let mut m = rows;
    let mut acc = S::one();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| m[x][c].abs().partial_cmp(&m[y][c].abs()).unwrap())
            .unwrap();
        if m[p][c] == S::zero() {
            return S::zero();
        }
        if p != c {
            m.swap(p, c);
            acc = -acc;
        }
        for i in c + 1..n {
            let f = m[i][c] / m[c][c];
            for j in c..n {
                let t = f * m[c][j];
                m[i][j] = m[i][j] - t;
            }
        }
        acc = acc * m[c][c];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat, Rational};

    fn q(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
        rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect()
    }

    #[test]
    fn exact_det_and_solve() {
        let a = q(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]);
        assert_eq!(det(&a), int(18));
        let x = solve(&a, &[int(1), int(0), int(0)]).unwrap();
        assert_eq!(x, vec![rat(11, 18), rat(-4, 18), rat(1, 18)]);
        let sing = q(&[&[1, 2], &[2, 4]]);
        assert_eq!(det(&sing), int(0));
        assert!(solve(&sing, &[int(1), int(1)]).is_none());
        assert_eq!(rank(&sing), 1);
    }

    #[test]
    fn null_vector_is_orthogonal() {
        let rows = q(&[&[1, 1, 0], &[0, 1, 1]]);
        let v = null_vector(&rows, 3).unwrap();
        for r in &rows {
            let dot: Rational = r.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert_eq!(dot, int(0));
        }
        assert!(null_vector(&q(&[&[1, 0, 0]]), 3).is_none());
    }

    #[test]
    fn spd_helpers() {
        let a = [4.0, 2.0, 2.0, 3.0];
        assert!((spd_det(&a, 2).unwrap() - 8.0f64).abs() < 1e-14);
        let x = spd_solve(&a, &[2.0, 1.0], 2).unwrap();
        assert!((x[0] - 0.5f64).abs() < 1e-14 && x[1].abs() < 1e-14);
        assert!(spd_det(&[1.0, 2.0, 2.0, 1.0f64], 2).is_none());
        assert!((det_dense(&[0.0, 1.0, 1.0, 0.0f64], 2) + 1.0).abs() < 1e-15);
        let inv = spd_inverse(&a, 2).unwrap();
        assert!((inv[0] - 0.375f64).abs() < 1e-14);
    }
}

//! Dense row-major matrices and the small symmetric eigensolver.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Row-major dense matrix of f64.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Mat> {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        if rows.iter().any(|v| v.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Mat {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// max |A_ij - A_ji| over all pairs.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

impl std::ops::Sub<&Mat> for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for v in x.iter_mut() {
        *v *= alpha;
    }
}

/// Off-diagonal Frobenius norm of a square matrix.
fn off_diagonal_norm(a: &Mat) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                s += a.get(p, q) * a.get(p, q);
            }
        }
    }
    s.sqrt()
}

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations,
/// ascending. Sweeps run in a fixed row-major order until the off-diagonal
/// norm drops below `tol`.
///
/// Classic plane-rotation scheme, cf. Numerical Recipes §11.1; adequate for
/// the dense matrices of a few hundred rows used here.
pub fn sym_eigenvalues(a: &Mat, tol: f64) -> Result<Vec<f64>> {
    if a.rows != a.cols {
        return Err(Error::DimensionMismatch(format!(
            "eigensolver needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    if n == 0 {
        return Ok(vec![]);
    }
    if a.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite matrix entry".into()));
    }
    let mut m = a.clone();
    const MAX_SWEEPS: usize = 100;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&m) <= tol {
            let mut ev: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
            ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
            return Ok(ev);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                // smaller root of t^2 + 2 t theta - 1 = 0
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                m.set(p, p, app - t * apq);
                m.set(q, q, aqq + t * apq);
                m.set(p, q, 0.0);
                m.set(q, p, 0.0);
                for k in 0..n {
                    if k != p && k != q {
                        let akp = m.get(k, p);
                        let akq = m.get(k, q);
                        let new_kp = akp - s * (akq + tau * akp);
                        let new_kq = akq + s * (akp - tau * akq);
                        m.set(k, p, new_kp);
                        m.set(p, k, new_kp);
                        m.set(k, q, new_kq);
                        m.set(q, k, new_kq);
                    }
                }
            }
        }
    }
    Err(Error::Numerical(format!(
        "Jacobi did not reach off-diagonal norm {tol:.1e} in {MAX_SWEEPS} sweeps"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Mat {
        Mat::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identity_eigenvalues() {
        let mut m = Mat::zeros(4, 4);
        for i in 0..4 {
            m.set(i, i, 1.0);
        }
        let ev = sym_eigenvalues(&m, 1e-11).unwrap();
        for v in ev {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_cubic_roots_on_3x3() {
        // Oracle: roots of the characteristic polynomial, found by bisection
        // on det(A - x I) which is cubic with three real roots.
        let a = mat(&[&[2.0, 1.0, 0.3], &[1.0, -1.0, 0.5], &[0.3, 0.5, 0.7]]);
        let det = |x: f64| {
            let b = [
                [a.get(0, 0) - x, a.get(0, 1), a.get(0, 2)],
                [a.get(1, 0), a.get(1, 1) - x, a.get(1, 2)],
                [a.get(2, 0), a.get(2, 1), a.get(2, 2) - x],
            ];
            b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
                - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
                + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0])
        };
        let mut roots = vec![];
        let mut prev_x = -10.0;
        let mut prev = det(prev_x);
        let mut x = prev_x;
        while x < 10.0 {
            x += 1e-3;
            let v = det(x);
            if prev.signum() != v.signum() {
                let (mut lo, mut hi) = (prev_x, x);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if det(lo).signum() == det(mid).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev_x = x;
            prev = v;
        }
        assert_eq!(roots.len(), 3);
        let ev = sym_eigenvalues(&a, 1e-11).unwrap();
        for (e, r) in ev.iter().zip(&roots) {
            assert!((e - r).abs() < 1e-9, "eig {e} vs root {r}");
        }
    }

    #[test]
    fn rejects_non_square() {
        assert!(sym_eigenvalues(&Mat::zeros(2, 3), 1e-11).is_err());
    }
}

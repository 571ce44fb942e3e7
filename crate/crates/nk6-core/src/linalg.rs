//! Small dense linear algebra: row-major matrices on `Vec<f64>`, a cyclic
//! Jacobi eigensolver for symmetric matrices, and 3x3 helpers.
//!
//! Sizes here stay in the tens to low hundreds (representation-theoretic
//! constructions, per-tet Gram work); anything large lives in the lab crate.

use alloc::vec;
use alloc::vec::Vec;

use crate::fp;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            a: vec![0.0; rows * cols],
        }
    }

    pub fn eye(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len());
        Mat { rows, cols, a: data }
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let v = self[(i, k)];
                if v == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += v * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut s = 0.0;
            for j in 0..self.cols {
                s += self[(i, j)] * x[j];
            }
            y[i] = s;
        }
        y
    }

    pub fn scale(&mut self, c: f64) {
        for v in self.a.iter_mut() {
            *v *= c;
        }
    }

    pub fn add_scaled(&mut self, other: &Mat, c: f64) {
        assert_eq!(self.a.len(), other.a.len());
        for (v, w) in self.a.iter_mut().zip(other.a.iter()) {
            *v += c * w;
        }
    }

    pub fn frob_norm(&self) -> f64 {
        fp::sqrt(self.a.iter().map(|v| v * v).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0f64, |m, v| m.max(fp::abs(*v)))
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }
}

impl core::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.a[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.a[i * self.cols + j]
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns (eigenvalues ascending, eigenvector matrix with columns matching).
pub fn jacobi_eig_sym(m: &Mat) -> (Vec<f64>, Mat) {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut a = m.clone();
    let mut v = Mat::eye(n);
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off < 1e-28 * (1.0 + a.frob_norm()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if fp::abs(apq) < 1e-300 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + fp::hypot(1.0, theta))
                } else {
                    -1.0 / (-theta + fp::hypot(1.0, theta))
                };
                let c = 1.0 / fp::hypot(1.0, t);
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vecs = Mat::zeros(n, n);
    for (newj, &oldj) in order.iter().enumerate() {
        for i in 0..n {
            vecs[(i, newj)] = v[(i, oldj)];
        }
    }
    (vals, vecs)
}

/// Modified Gram-Schmidt on the columns; returns the orthonormalized matrix.
/// Columns with norm below `tol` are dropped.
pub fn orthonormalize_columns(m: &Mat, tol: f64) -> Mat {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for j in 0..m.cols {
        let mut c = m.col(j);
        for prev in &cols {
            let d: f64 = c.iter().zip(prev.iter()).map(|(a, b)| a * b).sum();
            for (x, p) in c.iter_mut().zip(prev.iter()) {
                *x -= d * p;
            }
        }
        // second pass for stability
        for prev in &cols {
            let d: f64 = c.iter().zip(prev.iter()).map(|(a, b)| a * b).sum();
            for (x, p) in c.iter_mut().zip(prev.iter()) {
                *x -= d * p;
            }
        }
        let nrm = fp::sqrt(c.iter().map(|x| x * x).sum());
        if nrm > tol {
            for x in c.iter_mut() {
                *x /= nrm;
            }
            cols.push(c);
        }
    }
    let mut out = Mat::zeros(m.rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        for i in 0..m.rows {
            out[(i, j)] = c[i];
        }
    }
    out
}

pub fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn inv3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let d = det3(m);
    let id = 1.0 / d;
    [
        [
            (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * id,
            (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * id,
            (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * id,
        ],
        [
            (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * id,
            (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * id,
            (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * id,
        ],
        [
            (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * id,
            (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * id,
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * id,
        ],
    ]
}

pub fn mat3_vec(m: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Sorted (ascending) eigenvalues of a symmetric 3x3 matrix.
pub fn eigvals_sym3(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let mut mm = Mat::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            mm[(i, j)] = m[i][j];
        }
    }
    let (vals, _) = jacobi_eig_sym(&mm);
    [vals[0], vals[1], vals[2]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // diag(1,2,5) conjugated by a rotation
        let c = fp::cos(0.7);
        let s = fp::sin(0.7);
        let r = Mat::from_rows(3, 3, vec![c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
        let d = Mat::from_rows(3, 3, vec![1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 5.0]);
        let m = r.matmul(&d).matmul(&r.transpose());
        let (vals, vecs) = jacobi_eig_sym(&m);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 2.0).abs() < 1e-12);
        assert!((vals[2] - 5.0).abs() < 1e-12);
        // residual check
        for j in 0..3 {
            let v = vecs.col(j);
            let mv = m.apply(&v);
            for i in 0..3 {
                assert!((mv[i] - vals[j] * v[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn inv3_roundtrip() {
        let m = [[2.0, 0.3, 0.1], [0.3, 1.5, -0.2], [0.1, -0.2, 0.9]];
        let mi = inv3(&m);
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += m[i][k] * mi[k][j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-12);
            }
        }
    }
}

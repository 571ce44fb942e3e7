//! CSR sparse matrices and the handful of kernels the spectral side needs:
//! deterministic parallel mat-vec, sparse products for Galerkin coarsening,
//! and a conjugate-gradient solver for the well-conditioned mass systems.
//!
//! Reductions are chunked with a fixed chunk size and summed in chunk order,
//! so results are bit-identical across thread counts.

use rayon::prelude::*;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<u32>,
    pub data: Vec<f64>,
}

impl Csr {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Csr {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    /// Build from unsorted COO triplets, summing duplicates.
    pub fn from_coo(nrows: usize, ncols: usize, mut coo: Vec<(u32, u32, f64)>) -> Self {
        coo.sort_unstable_by_key(|&(r, c, _)| ((r as u64) << 32) | c as u64);
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices: Vec<u32> = Vec::with_capacity(coo.len());
        let mut data: Vec<f64> = Vec::with_capacity(coo.len());
        for &(r, c, v) in &coo {
            indices.push(c);
            data.push(v);
            indptr[r as usize + 1] = indices.len();
        }
        for i in 1..=nrows {
            if indptr[i] < indptr[i - 1] {
                indptr[i] = indptr[i - 1];
            }
        }
        let mut out = Csr {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        };
        out.dedup_rows();
        out
    }

    fn dedup_rows(&mut self) {
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut data = Vec::with_capacity(self.data.len());
        let mut indptr = vec![0usize; self.nrows + 1];
        for r in 0..self.nrows {
            let (s, e) = (self.indptr[r], self.indptr[r + 1]);
            let mut last: Option<u32> = None;
            for k in s..e {
                let c = self.indices[k];
                let v = self.data[k];
                if last == Some(c) {
                    *data.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    data.push(v);
                    last = Some(c);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indices = indices;
        self.data = data;
        self.indptr = indptr;
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let (s, e) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[s..e], &self.data[s..e])
    }

    /// y = A x (parallel over rows; deterministic).
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, chunk)| {
            let base = ci * CHUNK;
            for (i, yi) in chunk.iter_mut().enumerate() {
                let r = base + i;
                let (cols, vals) = {
                    let (s, e) = (self.indptr[r], self.indptr[r + 1]);
                    (&self.indices[s..e], &self.data[s..e])
                };
                let mut acc = 0.0;
                for (c, v) in cols.iter().zip(vals.iter()) {
                    acc += v * x[*c as usize];
                }
                *yi = acc;
            }
        });
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Csr {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c as usize + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let mut indptr = counts.clone();
        let mut indices = vec![0u32; self.nnz()];
        let mut data = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            let (s, e) = (self.indptr[r], self.indptr[r + 1]);
            for k in s..e {
                let c = self.indices[k] as usize;
                let slot = indptr[c];
                indices[slot] = r as u32;
                data[slot] = self.data[k];
                indptr[c] += 1;
            }
        }
        Csr {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr: counts,
            indices,
            data,
        }
    }

    /// C = A * B (sparse-sparse, deterministic).
    pub fn matmul(&self, other: &Csr) -> Csr {
        assert_eq!(self.ncols, other.nrows);
        let rows: Vec<(Vec<u32>, Vec<f64>)> = (0..self.nrows)
            .into_par_iter()
            .map(|r| {
                let mut acc: Vec<(u32, f64)> = Vec::new();
                let (cols, vals) = self.row(r);
                for (c, v) in cols.iter().zip(vals.iter()) {
                    let (bc, bv) = other.row(*c as usize);
                    for (c2, v2) in bc.iter().zip(bv.iter()) {
                        acc.push((*c2, v * v2));
                    }
                }
                acc.sort_unstable_by_key(|&(c, _)| c);
                let mut cols_out: Vec<u32> = Vec::with_capacity(acc.len());
                let mut vals_out: Vec<f64> = Vec::with_capacity(acc.len());
                for (c, v) in acc {
                    if cols_out.last() == Some(&c) {
                        *vals_out.last_mut().unwrap() += v;
                    } else {
                        cols_out.push(c);
                        vals_out.push(v);
                    }
                }
                (cols_out, vals_out)
            })
            .collect();
        let mut indptr = vec![0usize; self.nrows + 1];
        for (r, (c, _)) in rows.iter().enumerate() {
            indptr[r + 1] = indptr[r] + c.len();
        }
        let mut indices = Vec::with_capacity(indptr[self.nrows]);
        let mut data = Vec::with_capacity(indptr[self.nrows]);
        for (c, v) in rows {
            indices.extend(c);
            data.extend(v);
        }
        Csr {
            nrows: self.nrows,
            ncols: other.ncols,
            indptr,
            indices,
            data,
        }
    }

    /// A + alpha * B (same shape).
    pub fn add_scaled(&self, other: &Csr, alpha: f64) -> Csr {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for r in 0..self.nrows {
            let (c1, v1) = self.row(r);
            let (c2, v2) = other.row(r);
            let (mut i, mut j) = (0, 0);
            while i < c1.len() || j < c2.len() {
                let take_left = j >= c2.len() || (i < c1.len() && c1[i] <= c2[j]);
                let take_right = i >= c1.len() || (j < c2.len() && c2[j] <= c1[i]);
                if take_left && take_right {
                    indices.push(c1[i]);
                    data.push(v1[i] + alpha * v2[j]);
                    i += 1;
                    j += 1;
                } else if take_left {
                    indices.push(c1[i]);
                    data.push(v1[i]);
                    i += 1;
                } else {
                    indices.push(c2[j]);
                    data.push(alpha * v2[j]);
                    j += 1;
                }
            }
            indptr[r + 1] = indices.len();
        }
        Csr {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows.min(self.ncols)];
        for r in 0..d.len() {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals.iter()) {
                if *c as usize == r {
                    d[r] += v;
                }
            }
        }
        d
    }

    pub fn symmetrize(&self) -> Csr {
        let t = self.transpose();
        let mut s = self.add_scaled(&t, 1.0);
        for v in s.data.iter_mut() {
            *v *= 0.5;
        }
        s
    }

    pub fn max_abs_asymmetry(&self) -> f64 {
        let t = self.transpose();
        let d = self.add_scaled(&t, -1.0);
        d.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, c: f64) {
        for v in self.data.iter_mut() {
            *v *= c;
        }
    }
}

/// Deterministic dot product (chunked, fixed summation order).
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let partials: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(ca, cb)| {
            let mut s = 0.0;
            for (x, y) in ca.iter().zip(cb.iter()) {
                s += x * y;
            }
            s
        })
        .collect();
    partials.iter().sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    y.par_chunks_mut(CHUNK).zip(x.par_chunks(CHUNK)).for_each(|(cy, cx)| {
        for (yi, xi) in cy.iter_mut().zip(cx.iter()) {
            *yi += alpha * xi;
        }
    });
}

pub fn scale(y: &mut [f64], alpha: f64) {
    for v in y.iter_mut() {
        *v *= alpha;
    }
}

/// Conjugate gradients for SPD systems (mass matrices, scalar laplacians).
/// Returns the iteration count; panics only on dimension mismatch.
pub fn cg(
    apply: &dyn Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol_rel: f64,
    max_iter: usize,
    diag_precond: Option<&[f64]>,
) -> usize {
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    for i in 0..n {
        r[i] = b[i] - ax[i];
    }
    let bnorm = norm(b).max(1e-300);
    let precond = |z: &mut [f64], r: &[f64]| {
        if let Some(d) = diag_precond {
            for i in 0..r.len() {
                z[i] = r[i] / d[i];
            }
        } else {
            z.copy_from_slice(r);
        }
    };
    let mut z = vec![0.0; n];
    precond(&mut z, &r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut it = 0;
    while it < max_iter {
        if norm(&r) <= tol_rel * bnorm {
            break;
        }
        apply(&p, &mut ax);
        let pap = dot(&p, &ax);
        if pap.abs() < 1e-300 {
            break;
        }
        let alpha = rz / pap;
        axpy(x, alpha, &p);
        axpy(&mut r, -alpha, &ax);
        precond(&mut z, &r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
    }
    it
}

/// Preconditioned MINRES for symmetric (possibly indefinite) systems; the
/// preconditioner is a positive diagonal. Returns the preconditioned
/// relative residual estimate at exit.
pub fn minres(
    apply: &dyn Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol_rel: f64,
    max_iter: usize,
    inv_diag: Option<&[f64]>,
) -> f64 {
    let n = b.len();
    let prec = |r: &[f64], out: &mut [f64]| {
        if let Some(d) = inv_diag {
            for i in 0..n {
                out[i] = r[i] * d[i];
            }
        } else {
            out.copy_from_slice(r);
        }
    };
    let mut tmp = vec![0.0; n];
    apply(x, &mut tmp);
    let mut v: Vec<f64> = (0..n).map(|i| b[i] - tmp[i]).collect();
    let mut v_old = vec![0.0; n];
    let mut z = vec![0.0; n];
    prec(&v, &mut z);
    let mut gamma = dot(&z, &v).max(0.0).sqrt();
    let norm_b0 = gamma.max(1e-300);
    if gamma < 1e-300 {
        return 0.0;
    }
    let mut gamma_old = 1.0f64;
    let mut eta = gamma;
    let (mut s_old, mut s) = (0.0f64, 0.0f64);
    let (mut c_old, mut c) = (1.0f64, 1.0f64);
    let mut w = vec![0.0; n];
    let mut w_old = vec![0.0; n];
    let mut rel = 1.0f64;
    for _ in 0..max_iter {
        for zi in z.iter_mut() {
            *zi /= gamma;
        }
        apply(&z, &mut tmp);
        let delta = dot(&tmp, &z);
        let mut v_new = tmp.clone();
        for i in 0..n {
            v_new[i] -= (delta / gamma) * v[i] + (gamma / gamma_old) * v_old[i];
        }
        let mut z_new = vec![0.0; n];
        prec(&v_new, &mut z_new);
        let gamma_new = dot(&z_new, &v_new).max(0.0).sqrt();
        let alpha0 = c * delta - c_old * s * gamma;
        let alpha1 = (alpha0 * alpha0 + gamma_new * gamma_new).sqrt().max(1e-300);
        let alpha2 = s * delta + c_old * c * gamma;
        let alpha3 = s_old * gamma;
        let c_new = alpha0 / alpha1;
        let s_new = gamma_new / alpha1;
        let w_new: Vec<f64> = (0..n)
            .map(|i| (z[i] - alpha3 * w_old[i] - alpha2 * w[i]) / alpha1)
            .collect();
        axpy(x, c_new * eta, &w_new);
        eta = -s_new * eta;
        rel = eta.abs() / norm_b0;
        v_old = v;
        v = v_new;
        z = z_new;
        gamma_old = gamma;
        gamma = gamma_new;
        c_old = c;
        c = c_new;
        s_old = s;
        s = s_new;
        w_old = w;
        w = w_new;
        if rel < tol_rel || gamma < 1e-300 {
            break;
        }
    }
    rel
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coo_assembly_sums_duplicates() {
        let coo = vec![(0, 0, 1.0), (1, 2, 2.0), (0, 0, 3.0), (1, 1, 1.0)];
        let m = Csr::from_coo(2, 3, coo);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.apply(&[1.0, 1.0, 1.0]), vec![4.0, 3.0]);
    }

    #[test]
    fn transpose_roundtrip() {
        let coo = vec![(0, 1, 2.0), (2, 0, -1.0), (1, 1, 5.0), (2, 2, 7.0)];
        let m = Csr::from_coo(3, 3, coo);
        let t = m.transpose().transpose();
        assert_eq!(m, t);
    }

    #[test]
    fn matmul_against_dense() {
        let a = Csr::from_coo(2, 3, vec![(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]);
        let b = Csr::from_coo(3, 2, vec![(0, 0, 1.0), (1, 0, -1.0), (2, 1, 4.0)]);
        let c = a.matmul(&b);
        assert_eq!(c.apply(&[1.0, 0.0]), vec![1.0, -3.0]);
        assert_eq!(c.apply(&[0.0, 1.0]), vec![8.0, 0.0]);
    }

    #[test]
    fn cg_solves_spd() {
        // small SPD system: tridiagonal
        let n = 50;
        let mut coo = Vec::new();
        for i in 0..n {
            coo.push((i as u32, i as u32, 2.5));
            if i + 1 < n {
                coo.push((i as u32, i as u32 + 1, -1.0));
                coo.push((i as u32 + 1, i as u32, -1.0));
            }
        }
        let m = Csr::from_coo(n, n, coo);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut x = vec![0.0; n];
        let diag = m.diagonal();
        cg(&|v, out| m.mul_vec(v, out), &b, &mut x, 1e-13, 500, Some(&diag));
        let mut ax = vec![0.0; n];
        m.mul_vec(&x, &mut ax);
        for i in 0..n {
            assert!((ax[i] - b[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn minres_solves_indefinite_system() {
        // symmetric indefinite: diag blocks with mixed signs plus coupling
        let n = 60;
        let mut coo = Vec::new();
        for i in 0..n {
            let d = if i % 3 == 0 { -2.0 } else { 3.0 };
            coo.push((i as u32, i as u32, d));
            if i + 1 < n {
                coo.push((i as u32, (i + 1) as u32, 0.7));
                coo.push(((i + 1) as u32, i as u32, 0.7));
            }
        }
        let a = Csr::from_coo(n, n, coo);
        let b: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.71).cos()).collect();
        let mut x = vec![0.0; n];
        let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d.abs()).collect();
        minres(
            &|v, out| a.mul_vec(v, out),
            &b,
            &mut x,
            1e-12,
            600,
            Some(&inv_diag),
        );
        let ax = a.apply(&x);
        for i in 0..n {
            assert!((ax[i] - b[i]).abs() < 1e-9, "row {i}: {} vs {}", ax[i], b[i]);
        }
    }

    #[test]
    fn deterministic_dot() {
        let a: Vec<f64> = (0..100_000).map(|i| ((i * 37) % 101) as f64 * 0.01 - 0.5).collect();
        let b: Vec<f64> = (0..100_000).map(|i| ((i * 53) % 97) as f64 * 0.02 - 1.0).collect();
        let d1 = dot(&a, &b);
        let d2 = dot(&a, &b);
        assert_eq!(d1.to_bits(), d2.to_bits());
    }
}

//! Symmetric generalized eigensolvers for the DEC pencils: a dense fallback
//! for small problems and a locking LOBPCG with a Hiptmair-smoothed geometric
//! multigrid preconditioner for the large curl-curl pencils.
//!
//! The multigrid hierarchy rides on the nested red-refined meshes: edge
//! prolongation is the Whitney interpolation of coarse 1-forms integrated
//! over fine edges, coarse operators are Galerkin products, and the smoother
//! combines damped edge Jacobi with a scalar correction in the gradient
//! subspace (where curl-curl operators lose ellipticity).

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::mesh::{RefineLink, SimplicialComplex3, LOCAL_PAIRS};
use crate::sparse::{dot, norm, Csr};
use crate::LabError;
use nk6_core::rng::Rng;

/// Column-major dense block.
#[derive(Debug, Clone)]
pub struct Block {
    pub n: usize,
    pub k: usize,
    pub data: Vec<f64>,
}

impl Block {
    pub fn zeros(n: usize, k: usize) -> Self {
        Block {
            n,
            k,
            data: vec![0.0; n * k],
        }
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn random(n: usize, k: usize, rng: &mut Rng) -> Self {
        let mut b = Block::zeros(n, k);
        rng.fill_normal(&mut b.data);
        b
    }

    pub fn hstack(blocks: &[&Block]) -> Block {
        let n = blocks[0].n;
        let k: usize = blocks.iter().map(|b| b.k).sum();
        let mut out = Block::zeros(n, k);
        let mut at = 0;
        for b in blocks {
            out.data[at * n..(at + b.k) * n].copy_from_slice(&b.data);
            at += b.k;
        }
        out
    }

    /// A * self for sparse A (column-parallel, deterministic).
    pub fn spmm(&self, a: &Csr) -> Block {
        let mut out = Block::zeros(a.nrows, self.k);
        out.data
            .par_chunks_mut(a.nrows)
            .zip(self.data.par_chunks(self.n))
            .for_each(|(oc, ic)| {
                a.mul_vec(ic, oc);
            });
        out
    }

    /// self * c for small dense c (k x m).
    pub fn dense_mul(&self, c: &DMatrix<f64>) -> Block {
        assert_eq!(self.k, c.nrows());
        let m = c.ncols();
        let mut out = Block::zeros(self.n, m);
        out.data
            .par_chunks_mut(self.n)
            .enumerate()
            .for_each(|(j, oc)| {
                for l in 0..self.k {
                    let w = c[(l, j)];
                    if w == 0.0 {
                        continue;
                    }
                    let src = self.col(l);
                    for (o, s) in oc.iter_mut().zip(src.iter()) {
                        *o += w * s;
                    }
                }
            });
        out
    }

    /// self^T other (k x m Gram block).
    pub fn gram(&self, other: &Block) -> DMatrix<f64> {
        assert_eq!(self.n, other.n);
        let pairs: Vec<(usize, usize)> = (0..self.k)
            .flat_map(|i| (0..other.k).map(move |j| (i, j)))
            .collect();
        let vals: Vec<f64> = pairs
            .par_iter()
            .map(|&(i, j)| dot(self.col(i), other.col(j)))
            .collect();
        let mut m = DMatrix::zeros(self.k, other.k);
        for (idx, &(i, j)) in pairs.iter().enumerate() {
            m[(i, j)] = vals[idx];
        }
        m
    }

    pub fn keep_columns(&self, cols: &[usize]) -> Block {
        let mut out = Block::zeros(self.n, cols.len());
        for (jj, &j) in cols.iter().enumerate() {
            out.col_mut(jj).copy_from_slice(self.col(j));
        }
        out
    }
}

/// Symmetric eigendecomposition (ascending) of a small dense matrix.
pub fn sym_eig(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let se = nalgebra::SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..se.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(m.nrows(), m.ncols());
    for (newj, &oldj) in order.iter().enumerate() {
        vecs.set_column(newj, &se.eigenvectors.column(oldj));
    }
    (vals, vecs)
}

/// Dense generalized symmetric eigensolver for pencils (A, M) with M SPD:
/// returns all eigenpairs ascending. Used below the sparse threshold.
pub fn dense_gevp(a: &Csr, m: &Csr) -> Result<(Vec<f64>, DMatrix<f64>), LabError> {
    let n = a.nrows;
    let mut da = DMatrix::zeros(n, n);
    for r in 0..n {
        let (cols, vals) = a.row(r);
        for (c, v) in cols.iter().zip(vals.iter()) {
            da[(r, *c as usize)] += v;
        }
    }
    let mut dm = DMatrix::zeros(n, n);
    for r in 0..n {
        let (cols, vals) = m.row(r);
        for (c, v) in cols.iter().zip(vals.iter()) {
            dm[(r, *c as usize)] += v;
        }
    }
    let chol = nalgebra::Cholesky::new(dm).ok_or_else(|| {
        LabError::Solver("mass matrix not positive definite in dense solve".into())
    })?;
    let l = chol.l();
    // W = L^{-1} A L^{-T}
    let mut w = da;
    // solve L X = A  (column-wise forward substitution), then W = X L^{-T}
    for j in 0..n {
        let mut col = w.column(j).clone_owned();
        l.solve_lower_triangular_mut(&mut col);
        w.set_column(j, &col);
    }
    let wt = w.transpose();
    let mut w2 = wt;
    for j in 0..n {
        let mut col = w2.column(j).clone_owned();
        l.solve_lower_triangular_mut(&mut col);
        w2.set_column(j, &col);
    }
    let w2 = (&w2 + &w2.transpose()) * 0.5;
    let (vals, vecs) = sym_eig(&w2);
    // back-transform x = L^{-T} y
    let lt = l.transpose();
    let mut out = DMatrix::zeros(n, vecs.ncols());
    for j in 0..vecs.ncols() {
        let mut col: DVector<f64> = vecs.column(j).clone_owned();
        lt.solve_upper_triangular_mut(&mut col);
        out.set_column(j, &col);
    }
    Ok((vals, out))
}

pub trait Preconditioner: Sync {
    fn apply(&self, r: &[f64], out: &mut [f64]);
}

pub struct IdentityPrec;

impl Preconditioner for IdentityPrec {
    fn apply(&self, r: &[f64], out: &mut [f64]) {
        out.copy_from_slice(r);
    }
}

pub struct DiagPrec {
    pub inv_diag: Vec<f64>,
}

impl DiagPrec {
    pub fn new(diag: &[f64]) -> Self {
        DiagPrec {
            inv_diag: diag.iter().map(|d| 1.0 / d.max(1e-300)).collect(),
        }
    }
}

impl Preconditioner for DiagPrec {
    fn apply(&self, r: &[f64], out: &mut [f64]) {
        for i in 0..r.len() {
            out[i] = r[i] * self.inv_diag[i];
        }
    }
}

/// Whitney edge prolongation for one red-refinement step: fine-edge
/// integrals of coarse Whitney 1-forms. Children of coarse tet t occupy
/// fine tet slots 8t..8t+8 (the refinement emits them in order).
pub fn edge_prolongation(
    coarse: &SimplicialComplex3,
    fine: &SimplicialComplex3,
    link: &RefineLink,
) -> Csr {
    let mut coo: Vec<(u32, u32, f64)> = Vec::with_capacity(fine.edges.len() * 2);
    let mut filled = vec![false; fine.edges.len()];
    for (ti, tverts) in link.tet_vertices.iter().enumerate() {
        // lambda coordinates of the 4 + 6 fine vertices inside this tet
        let mut lam: Vec<(usize, [f64; 4])> = Vec::with_capacity(10);
        for (k, &v) in tverts.iter().enumerate() {
            let mut l = [0.0; 4];
            l[k] = 1.0;
            lam.push((v, l));
        }
        for (p, &(a, b)) in LOCAL_PAIRS.iter().enumerate() {
            let mut l = [0.0; 4];
            l[a] = 0.5;
            l[b] = 0.5;
            lam.push((link.tet_midpoints[ti][p], l));
        }
        let lam_of = |v: usize| -> Option<[f64; 4]> {
            lam.iter().find(|(w, _)| *w == v).map(|(_, l)| *l)
        };
        // coarse edge ids
        let ceid: Vec<usize> = LOCAL_PAIRS
            .iter()
            .map(|&(a, b)| coarse.edge_id(tverts[a], tverts[b]).unwrap())
            .collect();
        for child in 8 * ti..8 * (ti + 1) {
            let t = fine.tets[child];
            for (a, b) in LOCAL_PAIRS {
                let fe = fine.edge_id(t[a], t[b]).unwrap();
                if filled[fe] {
                    continue;
                }
                filled[fe] = true;
                let e = fine.edges[fe];
                let la = lam_of(e[0]).expect("fine vertex in parent tet");
                let lb = lam_of(e[1]).expect("fine vertex in parent tet");
                let dl = [lb[0] - la[0], lb[1] - la[1], lb[2] - la[2], lb[3] - la[3]];
                for (p, &(i, j)) in LOCAL_PAIRS.iter().enumerate() {
                    let val = la[i] * dl[j] - la[j] * dl[i];
                    if val.abs() > 1e-14 {
                        coo.push((fe as u32, ceid[p] as u32, val));
                    }
                }
            }
        }
    }
    Csr::from_coo(fine.edges.len(), coarse.edges.len(), coo)
}

/// One level of the Hiptmair multigrid hierarchy.
pub struct MgLevel {
    pub b: Csr,
    pub g: Csr,
    pub a0: Csr,
    pub inv_diag_b: Vec<f64>,
    pub inv_diag_a0: Vec<f64>,
    /// prolongation from the NEXT-COARSER level into this one (None on the
    /// coarsest level)
    pub prol: Option<Csr>,
}

pub struct MgPrec {
    /// levels ordered coarse -> fine
    pub levels: Vec<MgLevel>,
    coarse_solve: DMatrix<f64>,
}

/// One Gauss-Seidel sweep x <- x + L^{-1}(b - A x), forward or backward.
fn gs_sweep(a: &Csr, b: &[f64], x: &mut [f64], forward: bool) {
    let n = a.nrows;
    let run = |x: &mut [f64], i: usize| {
        let (cols, vals) = a.row(i);
        let mut acc = b[i];
        let mut diag = 0.0;
        for (c, v) in cols.iter().zip(vals.iter()) {
            let c = *c as usize;
            if c == i {
                diag = *v;
            } else {
                acc -= v * x[c];
            }
        }
        if diag.abs() > 1e-300 {
            x[i] = acc / diag;
        }
    };
    if forward {
        for i in 0..n {
            run(x, i);
        }
    } else {
        for i in (0..n).rev() {
            run(x, i);
        }
    }
}

impl MgPrec {
    /// Builds the hierarchy by Galerkin projection of the fine operator
    /// through the provided prolongations (ordered coarse->fine, matching
    /// mesh levels) and the per-level gradient incidence matrices.
    pub fn new(b_fine: Csr, grads: Vec<Csr>, prols: Vec<Csr>) -> Result<Self, LabError> {
        let nlev = grads.len();
        assert_eq!(prols.len(), nlev - 1);
        let mut bs: Vec<Option<Csr>> = vec![None; nlev];
        bs[nlev - 1] = Some(b_fine);
        for l in (0..nlev - 1).rev() {
            let p = &prols[l];
            let bf = bs[l + 1].as_ref().unwrap();
            let bc = p.transpose().matmul(&bf.matmul(p)).symmetrize();
            bs[l] = Some(bc);
        }
        let mut levels = Vec::with_capacity(nlev);
        for (l, bo) in bs.into_iter().enumerate() {
            let b = bo.unwrap();
            let g = grads[l].clone();
            let a0 = g.transpose().matmul(&b.matmul(&g)).symmetrize();
            let inv_diag_b = b
                .diagonal()
                .iter()
                .map(|d| 1.0 / d.max(1e-300))
                .collect();
            let inv_diag_a0 = a0
                .diagonal()
                .iter()
                .map(|d| if *d > 1e-300 { 1.0 / d } else { 0.0 })
                .collect();
            levels.push(MgLevel {
                b,
                g,
                a0,
                inv_diag_b,
                inv_diag_a0,
                prol: if l == 0 {
                    None
                } else {
                    Some(prols[l - 1].clone())
                },
            });
        }
        // dense pseudo-solve on the coarsest level (regularized inverse)
        let b0 = &levels[0].b;
        let n0 = b0.nrows;
        let mut dense: DMatrix<f64> = DMatrix::zeros(n0, n0);
        for r in 0..n0 {
            let (cols, vals) = b0.row(r);
            for (c, v) in cols.iter().zip(vals.iter()) {
                dense[(r, *c as usize)] += v;
            }
        }
        let scale = dense.diagonal().amax().max(1e-300);
        let reg = &dense + DMatrix::identity(n0, n0) * (1e-12 * scale);
        let coarse_solve = reg
            .try_inverse()
            .ok_or_else(|| LabError::Solver("coarse-level operator is singular".into()))?;
        Ok(MgPrec {
            levels,
            coarse_solve,
        })
    }

    /// Hiptmair smoothing: Gauss-Seidel on the edge operator combined with a
    /// symmetric Gauss-Seidel correction in the gradient subspace; the post
    /// pass runs the transposed order so the V-cycle stays symmetric.
    fn smooth(&self, l: usize, x: &mut [f64], b: &[f64], post: bool) {
        let lev = &self.levels[l];
        let n = x.len();
        let mut r = vec![0.0; n];
        let sweep_grad = |x: &mut [f64], r: &mut [f64]| {
            lev.b.mul_vec(x, r);
            for i in 0..n {
                r[i] = b[i] - r[i];
            }
            let rs = lev.g.transpose().apply(r);
            let mut y = vec![0.0; rs.len()];
            gs_sweep(&lev.a0, &rs, &mut y, true);
            gs_sweep(&lev.a0, &rs, &mut y, false);
            let gy = lev.g.apply(&y);
            for i in 0..n {
                x[i] += gy[i];
            }
        };
        if post {
            sweep_grad(x, &mut r);
            gs_sweep(&lev.b, b, x, false);
        } else {
            gs_sweep(&lev.b, b, x, true);
            sweep_grad(x, &mut r);
        }
    }

    fn vcycle(&self, l: usize, b: &[f64]) -> Vec<f64> {
        if l == 0 {
            let rv = DVector::from_column_slice(b);
            let x = &self.coarse_solve * rv;
            return x.as_slice().to_vec();
        }
        let lev = &self.levels[l];
        let n = lev.b.nrows;
        let mut x = vec![0.0; n];
        self.smooth(l, &mut x, b, false);
        let mut r = vec![0.0; n];
        lev.b.mul_vec(&x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let rc = lev.prol.as_ref().unwrap().transpose().apply(&r);
        let xc = self.vcycle(l - 1, &rc);
        let up = lev.prol.as_ref().unwrap().apply(&xc);
        for i in 0..n {
            x[i] += up[i];
        }
        self.smooth(l, &mut x, b, true);
        x
    }
}

impl Preconditioner for MgPrec {
    fn apply(&self, r: &[f64], out: &mut [f64]) {
        let x = self.vcycle(self.levels.len() - 1, r);
        out.copy_from_slice(&x);
    }
}

/// Result of the iterative block solve.
pub struct EigResult {
    pub values: Vec<f64>,
    pub vectors: Block,
    /// ||B x - theta M x||_2 / (||B x|| + |theta| ||M x||) per pair
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Locking LOBPCG for the lowest `nev` eigenpairs of (B, M), both SPD.
/// Stable block-orthogonal variant: W and P are M-orthonormalized against
/// the current blocks before the Rayleigh-Ritz step, converged leading
/// pairs are locked out of the working set.
pub fn lobpcg(
    b_op: &Csr,
    m_op: &Csr,
    prec: &dyn Preconditioner,
    nev: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<EigResult, LabError> {
    let n = b_op.nrows;
    let mut rng = Rng::new(seed);
    let block = (nev + 6).min(n);
    let mut x = Block::random(n, block, &mut rng);
    let mut locked: Option<Block> = None;
    let mut locked_m: Option<Block> = None;
    let mut locked_vals: Vec<f64> = Vec::new();
    let mut p: Option<Block> = None;
    let mut iterations = 0;
    let verbose = std::env::var("NK6_DEBUG").is_ok();

    // z -= q (qm^T z) for qm = M q precomputed
    fn project_out(z: &mut Block, q: &Block, qm: &Block) {
        let coef = qm.gram(z);
        let corr = q.dense_mul(&coef);
        for (zi, ci) in z.data.iter_mut().zip(corr.data.iter()) {
            *zi -= ci;
        }
    }

    // M-orthonormalize a block in place (whitening with rank drop);
    // returns None if the block collapses entirely
    let m_orthonormalize = |z: &Block| -> Option<Block> {
        let mz = z.spmm(m_op);
        let g = z.gram(&mz);
        let gs = (&g + &g.transpose()) * 0.5;
        let (vals, vecs) = sym_eig(&gs);
        let vmax = vals.last().copied().unwrap_or(0.0).max(1e-300);
        let keep: Vec<usize> = (0..vals.len())
            .filter(|&i| vals[i] > 1e-8 * vmax)
            .collect();
        if keep.is_empty() {
            return None;
        }
        let mut c = DMatrix::zeros(z.k, keep.len());
        for (jj, &j) in keep.iter().enumerate() {
            let sc = 1.0 / vals[j].sqrt();
            for i in 0..z.k {
                c[(i, jj)] = vecs[(i, j)] * sc;
            }
        }
        Some(z.dense_mul(&c))
    };

    let finish = |locked_vals: &[f64],
                  locked: &Option<Block>,
                  theta: &[f64],
                  x2: &Block,
                  skip: usize,
                  iterations: usize|
     -> EigResult {
        let mut values = locked_vals.to_vec();
        let mut cols: Vec<usize> = Vec::new();
        for j in skip..x2.k {
            if values.len() + cols.len() >= nev + 4 {
                break;
            }
            cols.push(j);
            values.push(theta[j]);
        }
        let extra = x2.keep_columns(&cols);
        let vectors = match locked {
            None => extra,
            Some(y) => Block::hstack(&[y, &extra]),
        };
        let bx = vectors.spmm(b_op);
        let mx = vectors.spmm(m_op);
        let mut residuals = Vec::with_capacity(vectors.k);
        for j in 0..vectors.k {
            let mut r = bx.col(j).to_vec();
            for i in 0..vectors.n {
                r[i] -= values[j] * mx.col(j)[i];
            }
            let den = norm(bx.col(j)) + values[j].abs() * norm(mx.col(j));
            residuals.push(norm(&r) / den.max(1e-300));
        }
        EigResult {
            values,
            vectors,
            residuals,
            iterations,
        }
    };

    loop {
        if let (Some(y), Some(ym)) = (&locked, &locked_m) {
            project_out(&mut x, y, ym);
        }
        x = m_orthonormalize(&x).ok_or_else(|| LabError::Solver("lobpcg basis collapse".into()))?;
        let bx = x.spmm(b_op);
        let xbx = x.gram(&bx);
        let (theta, cx) = sym_eig(&((&xbx + &xbx.transpose()) * 0.5));
        let x2 = x.dense_mul(&cx);
        let bx2 = bx.dense_mul(&cx);
        let mx2 = x2.spmm(m_op);
        let mut resid = Vec::with_capacity(x2.k);
        let mut rblock = Block::zeros(n, x2.k);
        for j in 0..x2.k {
            let rj = rblock.col_mut(j);
            let bj = bx2.col(j);
            let mj = mx2.col(j);
            for i in 0..n {
                rj[i] = bj[i] - theta[j] * mj[i];
            }
            let den = norm(bj) + theta[j].abs() * norm(mj);
            resid.push(norm(rj) / den.max(1e-300));
        }
        if verbose && iterations % 10 == 0 {
            eprintln!(
                "lobpcg it {iterations}: locked {}, active {}, theta[0..4] {:?}, resid[0..4] {:?}",
                locked_vals.len(),
                x2.k,
                &theta[..theta.len().min(4)],
                &resid[..resid.len().min(4)]
            );
        }
        // lock converged leading pairs
        let mut conv = 0;
        while conv < x2.k && resid[conv] < tol && locked_vals.len() + conv < nev {
            conv += 1;
        }
        if conv > 0 {
            let newly = x2.keep_columns(&(0..conv).collect::<Vec<_>>());
            locked_vals.extend_from_slice(&theta[..conv]);
            locked = Some(match locked.take() {
                None => newly,
                Some(y) => Block::hstack(&[&y, &newly]),
            });
            locked_m = locked.as_ref().map(|y| y.spmm(m_op));
            // restart the history block after locking
            p = None;
        }
        if locked_vals.len() >= nev || iterations >= max_iter {
            return Ok(finish(&locked_vals, &locked, &theta, &x2, conv, iterations));
        }
        let active: Vec<usize> = (conv..x2.k).collect();
        let xa = x2.keep_columns(&active);
        let xam = mx2.keep_columns(&active);
        let ra = rblock.keep_columns(&active);
        // preconditioned residuals
        let mut w = Block::zeros(n, ra.k);
        for j in 0..ra.k {
            prec.apply(ra.col(j), w.col_mut(j));
        }
        if let (Some(y), Some(ym)) = (&locked, &locked_m) {
            project_out(&mut w, y, ym);
        }
        project_out(&mut w, &xa, &xam);
        let w = match m_orthonormalize(&w) {
            Some(w) => w,
            None => return Ok(finish(&locked_vals, &locked, &theta, &x2, conv, iterations)),
        };
        let wm = w.spmm(m_op);
        let p_block = match p.take() {
            Some(mut pb) => {
                if let (Some(y), Some(ym)) = (&locked, &locked_m) {
                    project_out(&mut pb, y, ym);
                }
                project_out(&mut pb, &xa, &xam);
                project_out(&mut pb, &w, &wm);
                m_orthonormalize(&pb)
            }
            None => None,
        };
        let z = match &p_block {
            Some(pb) => Block::hstack(&[&xa, &w, pb]),
            None => Block::hstack(&[&xa, &w]),
        };
        let bz = z.spmm(b_op);
        let zbz = z.gram(&bz);
        let (_tvals, tvecs) = sym_eig(&((&zbz + &zbz.transpose()) * 0.5));
        let keep = xa.k.min(tvecs.ncols());
        let cnew = tvecs.columns(0, keep).clone_owned();
        let xnew = z.dense_mul(&cnew);
        // history: the Ritz combination restricted to the [W, P] tail
        let mut cp = cnew.clone();
        for i in 0..xa.k {
            for j in 0..cp.ncols() {
                cp[(i, j)] = 0.0;
            }
        }
        let pnew = z.dense_mul(&cp);
        x = xnew;
        p = Some(pnew);
        iterations += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> (Csr, Csr) {
        let mut coo = Vec::new();
        let mut moo = Vec::new();
        for i in 0..n {
            coo.push((i as u32, i as u32, 2.0));
            moo.push((i as u32, i as u32, 1.0));
            if i + 1 < n {
                coo.push((i as u32, (i + 1) as u32, -1.0));
                coo.push(((i + 1) as u32, i as u32, -1.0));
            }
        }
        (Csr::from_coo(n, n, coo), Csr::from_coo(n, n, moo))
    }

    #[test]
    fn dense_gevp_matches_known_spectrum() {
        let (a, m) = laplace_1d(40);
        let (vals, vecs) = dense_gevp(&a, &m).unwrap();
        // eigenvalues of the Dirichlet 1d laplacian: 2 - 2 cos(k pi / (n+1))
        for k in 0..5 {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / 41.0).cos();
            assert!((vals[k] - exact).abs() < 1e-10, "{} vs {exact}", vals[k]);
        }
        // residual of the first eigenvector
        let x: Vec<f64> = vecs.column(0).iter().copied().collect();
        let ax = a.apply(&x);
        let mx = m.apply(&x);
        for i in 0..x.len() {
            assert!((ax[i] - vals[0] * mx[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn lobpcg_matches_dense_on_laplacian() {
        let (a, m) = laplace_1d(200);
        let prec = DiagPrec::new(&a.diagonal());
        let res = lobpcg(&a, &m, &prec, 6, 1e-9, 400, 42).unwrap();
        let (dvals, _) = dense_gevp(&a, &m).unwrap();
        for k in 0..6 {
            assert!(
                (res.values[k] - dvals[k]).abs() < 1e-7,
                "pair {k}: {} vs {}",
                res.values[k],
                dvals[k]
            );
        }
    }
}

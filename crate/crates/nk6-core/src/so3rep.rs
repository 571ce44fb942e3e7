//! The irreducible SO(3)-action on harmonic cubic polynomials H^3(R^3) and
//! the equivariant cross product that identifies it with Im O.
//!
//! Construction: orthonormalize the 7-dimensional harmonic cubics under the
//! rotation-invariant sphere inner product, compute the so(3) generators
//! exactly on polynomial coefficients, solve the Schur intertwiner equation
//! for the unique equivariant map Lambda^2 V_7 -> V_7 (the spin-3 summand
//! appears once), rescale so the Lagrange identity holds, and align a Cayley
//! frame with the octonion basis to obtain the isometry Psi intertwining the
//! two cross products. Immersions of the SO(3)-orbits of x(x^2-3y^2) and xyz
//! are then built through Psi.

use alloc::vec;
use alloc::vec::Vec;

use crate::fp;
use crate::linalg::{jacobi_eig_sym, Mat};
use crate::octonion::{cayley_frame, ImOctonion};
use crate::quat::Quat;
use crate::GeomError;

/// Monomial exponents of homogeneous cubics, fixed order.
pub const CUBIC_MONOMIALS: [(u8, u8, u8); 10] = [
    (3, 0, 0),
    (0, 3, 0),
    (0, 0, 3),
    (2, 1, 0),
    (2, 0, 1),
    (1, 2, 0),
    (0, 2, 1),
    (1, 0, 2),
    (0, 1, 2),
    (1, 1, 1),
];

/// Integral over S^2 of x^a y^b z^c, up to the common 4*pi factor.
fn s2_integral(a: u32, b: u32, c: u32) -> f64 {
    if a % 2 == 1 || b % 2 == 1 || c % 2 == 1 {
        return 0.0;
    }
    fn dfact(mut n: i64) -> f64 {
        let mut r = 1.0;
        while n > 1 {
            r *= n as f64;
            n -= 2;
        }
        r
    }
    let n = (a + b + c) as i64;
    dfact(a as i64 - 1) * dfact(b as i64 - 1) * dfact(c as i64 - 1) / dfact(n + 1)
}

/// Invariant inner product of two homogeneous cubics given by coefficients.
pub fn cubic_inner(p: &[f64; 10], q: &[f64; 10]) -> f64 {
    let mut s = 0.0;
    for (i, &(a1, b1, c1)) in CUBIC_MONOMIALS.iter().enumerate() {
        if p[i] == 0.0 {
            continue;
        }
        for (j, &(a2, b2, c2)) in CUBIC_MONOMIALS.iter().enumerate() {
            if q[j] == 0.0 {
                continue;
            }
            s += p[i]
                * q[j]
                * s2_integral((a1 + a2) as u32, (b1 + b2) as u32, (c1 + c2) as u32);
        }
    }
    s
}

/// Laplacian of a homogeneous cubic: coefficients of (x, y, z).
fn cubic_laplacian(p: &[f64; 10]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (i, &(a, b, c)) in CUBIC_MONOMIALS.iter().enumerate() {
        if p[i] == 0.0 {
            continue;
        }
        let (a, b, c) = (a as i32, b as i32, c as i32);
        // d^2/dx^2 x^a y^b z^c = a(a-1) x^(a-2) y^b z^c, etc.
        let mut add = |na: i32, nb: i32, nc: i32, coef: f64| {
            if coef == 0.0 {
                return;
            }
            // the result is linear: exactly one exponent is 1
            let idx = if na == 1 {
                0
            } else if nb == 1 {
                1
            } else {
                2
            };
            debug_assert_eq!(na + nb + nc, 1);
            out[idx] += coef;
        };
        if a >= 2 {
            add(a - 2, b, c, p[i] * (a * (a - 1)) as f64);
        }
        if b >= 2 {
            add(a, b - 2, c, p[i] * (b * (b - 1)) as f64);
        }
        if c >= 2 {
            add(a, b, c - 2, p[i] * (c * (c - 1)) as f64);
        }
    }
    out
}

fn mono_index(a: u8, b: u8, c: u8) -> usize {
    CUBIC_MONOMIALS
        .iter()
        .position(|&m| m == (a, b, c))
        .expect("cubic monomial")
}

/// so(3) generator L_a acting on cubic coefficients (exact).
/// L_x = z d/dy - y d/dz, L_y = -z d/dx + x d/dz, L_z = y d/dx - x d/dy.
fn generator_apply(axis: usize, p: &[f64; 10]) -> [f64; 10] {
    let mut out = [0.0; 10];
    for (i, &(a, b, c)) in CUBIC_MONOMIALS.iter().enumerate() {
        let coef = p[i];
        if coef == 0.0 {
            continue;
        }
        let (a, b, c) = (a as i32, b as i32, c as i32);
        let mut add = |na: i32, nb: i32, nc: i32, v: f64| {
            if v != 0.0 && na >= 0 && nb >= 0 && nc >= 0 {
                out[mono_index(na as u8, nb as u8, nc as u8)] += v;
            }
        };
        match axis {
            0 => {
                // z d/dy - y d/dz
                if b >= 1 {
                    add(a, b - 1, c + 1, coef * b as f64);
                }
                if c >= 1 {
                    add(a, b + 1, c - 1, -coef * c as f64);
                }
            }
            1 => {
                // -z d/dx + x d/dz
                if a >= 1 {
                    add(a - 1, b, c + 1, -coef * a as f64);
                }
                if c >= 1 {
                    add(a + 1, b, c - 1, coef * c as f64);
                }
            }
            _ => {
                // y d/dx - x d/dy
                if a >= 1 {
                    add(a - 1, b + 1, c, coef * a as f64);
                }
                if b >= 1 {
                    add(a + 1, b - 1, c, -coef * b as f64);
                }
            }
        }
    }
    out
}

/// (rho(R) p)(x) = p(R^T x), computed exactly by expanding powers of the
/// substituted linear forms.
fn rotate_cubic(r: &[[f64; 3]; 3], p: &[f64; 10]) -> [f64; 10] {
    // linear forms l_i(x) = (R^T x)_i = sum_j R[j][i] x_j
    let l: [[f64; 3]; 3] = [
        [r[0][0], r[1][0], r[2][0]],
        [r[0][1], r[1][1], r[2][1]],
        [r[0][2], r[1][2], r[2][2]],
    ];
    // products of linear forms as quadratic then cubic coefficient tables
    // quadratic monomials: xx, yy, zz, xy, xz, yz
    let quad_mul = |u: &[f64; 3], v: &[f64; 3]| -> [f64; 6] {
        [
            u[0] * v[0],
            u[1] * v[1],
            u[2] * v[2],
            u[0] * v[1] + u[1] * v[0],
            u[0] * v[2] + u[2] * v[0],
            u[1] * v[2] + u[2] * v[1],
        ]
    };
    let cubic_mul = |q: &[f64; 6], v: &[f64; 3]| -> [f64; 10] {
        let mut out = [0.0; 10];
        const QM: [(u8, u8, u8); 6] = [(2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1), (0, 1, 1)];
        for (qi, &(a, b, c)) in QM.iter().enumerate() {
            if q[qi] == 0.0 {
                continue;
            }
            for (vi, exp) in [(0usize, (1u8, 0u8, 0u8)), (1, (0, 1, 0)), (2, (0, 0, 1))] {
                if v[vi] == 0.0 {
                    continue;
                }
                out[mono_index(a + exp.0, b + exp.1, c + exp.2)] += q[qi] * v[vi];
            }
        }
        out
    };
    let mut out = [0.0; 10];
    for (i, &(a, b, c)) in CUBIC_MONOMIALS.iter().enumerate() {
        if p[i] == 0.0 {
            continue;
        }
        // expand l0^a l1^b l2^c
        let mut factors: Vec<usize> = Vec::new();
        for _ in 0..a {
            factors.push(0);
        }
        for _ in 0..b {
            factors.push(1);
        }
        for _ in 0..c {
            factors.push(2);
        }
        debug_assert_eq!(factors.len(), 3);
        let q = quad_mul(&l[factors[0]], &l[factors[1]]);
        let cub = cubic_mul(&q, &l[factors[2]]);
        for k in 0..10 {
            out[k] += p[i] * cub[k];
        }
    }
    out
}

fn wedge_index(i: usize, j: usize) -> usize {
    // pairs (i < j) over 7 indices, lexicographic
    debug_assert!(i < j && j < 7);
    let mut idx = 0;
    for a in 0..i {
        idx += 6 - a;
    }
    idx + (j - i - 1)
}

/// The data of the irreducible SO(3)-action on Im O.
#[derive(Debug, Clone)]
pub struct IrrepData {
    /// Orthonormal basis of harmonic cubics (coefficient vectors).
    pub basis: [[f64; 10]; 7],
    /// so(3) generators in that basis (antisymmetric 7x7).
    pub gens: [Mat; 3],
    /// Structure constants of the equivariant cross product:
    /// cross[i][j] = b(f_i, f_j) as a 7-vector.
    pub cross: [[[f64; 7]; 7]; 7],
    /// Isometry V_7 -> Im O intertwining b with the octonion cross product
    /// (rows: octonion coordinates of the images of f_1..f_7... psi[a] maps
    /// component a of Im O; psi is orthogonal).
    pub psi: Mat,
    /// Unit coefficient vectors of the two completely reducible cubics,
    /// rotated so that their stabilizers sit inside the icosahedral group
    /// of `binary_icosahedral`.
    pub p3: [f64; 7],
    pub p4: [f64; 7],
}

impl IrrepData {
    /// Representation matrix of a rotation in the orthonormal basis.
    pub fn rho(&self, r: &[[f64; 3]; 3]) -> Mat {
        let mut m = Mat::zeros(7, 7);
        for j in 0..7 {
            let rp = rotate_cubic(r, &self.basis[j]);
            for i in 0..7 {
                m[(i, j)] = self.coords_inner(&rp, i);
            }
        }
        m
    }

    fn coords_inner(&self, p: &[f64; 10], i: usize) -> f64 {
        cubic_inner(&self.basis[i], p)
    }

    /// Equivariant bilinear product b(u, v) in basis coordinates.
    pub fn product(&self, u: &[f64; 7], v: &[f64; 7]) -> [f64; 7] {
        let mut out = [0.0; 7];
        for i in 0..7 {
            if u[i] == 0.0 {
                continue;
            }
            for j in 0..7 {
                if v[j] == 0.0 {
                    continue;
                }
                for k in 0..7 {
                    out[k] += u[i] * v[j] * self.cross[i][j][k];
                }
            }
        }
        out
    }

    /// Map V_7 coordinates into Im O through the aligned frame.
    pub fn to_im_octonion(&self, u: &[f64; 7]) -> ImOctonion {
        let v = self.psi.apply(u);
        let mut c = [0.0; 7];
        c.copy_from_slice(&v);
        ImOctonion(c)
    }

    /// The generators pushed to Im O: 7x7 matrices in G2.
    pub fn g2_generator(&self, axis: usize) -> Mat {
        // psi G psi^T
        self.psi.matmul(&self.gens[axis]).matmul(&self.psi.transpose())
    }

    /// rho pushed to Im O coordinates (a G2 element).
    pub fn g2_of_rotation(&self, r: &[[f64; 3]; 3]) -> Mat {
        self.psi.matmul(&self.rho(r)).matmul(&self.psi.transpose())
    }
}

/// Orthonormal basis of harmonic cubics under the invariant inner product.
fn harmonic_basis() -> [[f64; 10]; 7] {
    // kernel of the laplacian map (10 -> 3)
    let mut raw: Vec<[f64; 10]> = Vec::new();
    // Gaussian elimination on the 3x10 laplacian matrix to get a kernel basis
    let mut lap = [[0.0f64; 10]; 3];
    for j in 0..10 {
        let mut e = [0.0; 10];
        e[j] = 1.0;
        let l = cubic_laplacian(&e);
        for i in 0..3 {
            lap[i][j] = l[i];
        }
    }
    // pivot columns by partial pivoting
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..10 {
        if row >= 3 {
            break;
        }
        let mut best = row;
        for r in row..3 {
            if fp::abs(lap[r][col]) > fp::abs(lap[best][col]) {
                best = r;
            }
        }
        if fp::abs(lap[best][col]) < 1e-12 {
            continue;
        }
        lap.swap(row, best);
        let piv = lap[row][col];
        for c in 0..10 {
            lap[row][c] /= piv;
        }
        for r in 0..3 {
            if r != row {
                let f = lap[r][col];
                for c in 0..10 {
                    lap[r][c] -= f * lap[row][c];
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    assert_eq!(pivots.len(), 3);
    for free in 0..10 {
        if pivots.contains(&free) {
            continue;
        }
        let mut v = [0.0; 10];
        v[free] = 1.0;
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -lap[r][free];
        }
        raw.push(v);
    }
    assert_eq!(raw.len(), 7);
    // Gram-Schmidt under cubic_inner
    let mut basis: Vec<[f64; 10]> = Vec::new();
    for mut v in raw {
        for b in &basis {
            let d = cubic_inner(&v, b);
            for k in 0..10 {
                v[k] -= d * b[k];
            }
        }
        // repeat once for stability
        for b in &basis {
            let d = cubic_inner(&v, b);
            for k in 0..10 {
                v[k] -= d * b[k];
            }
        }
        let n = fp::sqrt(cubic_inner(&v, &v));
        for k in 0..10 {
            v[k] /= n;
        }
        basis.push(v);
    }
    let mut out = [[0.0; 10]; 7];
    for (i, b) in basis.into_iter().enumerate() {
        out[i] = b;
    }
    out
}

/// Builds the full irreducible SO(3) package. Deterministic.
pub fn build_irreducible_so3() -> Result<IrrepData, GeomError> {
    let basis = harmonic_basis();
    // generators in the ONB
    let mut gens: [Mat; 3] = [Mat::zeros(7, 7), Mat::zeros(7, 7), Mat::zeros(7, 7)];
    for a in 0..3 {
        for j in 0..7 {
            let lp = generator_apply(a, &basis[j]);
            for i in 0..7 {
                gens[a][(i, j)] = cubic_inner(&basis[i], &lp);
            }
        }
    }

    // wedge-square generators (21x21)
    let mut wgens: [Mat; 3] = [Mat::zeros(21, 21), Mat::zeros(21, 21), Mat::zeros(21, 21)];
    for a in 0..3 {
        for k in 0..7 {
            for l in (k + 1)..7 {
                let col = wedge_index(k, l);
                // L(f_k ^ f_l) = (L f_k) ^ f_l + f_k ^ (L f_l)
                for i in 0..7 {
                    let c1 = gens[a][(i, k)];
                    if c1 != 0.0 && i != l {
                        let (p, q, s) = if i < l { (i, l, 1.0) } else { (l, i, -1.0) };
                        wgens[a][(wedge_index(p, q), col)] += s * c1;
                    }
                    let c2 = gens[a][(i, l)];
                    if c2 != 0.0 && i != k {
                        let (p, q, s) = if k < i { (k, i, 1.0) } else { (i, k, -1.0) };
                        wgens[a][(wedge_index(p, q), col)] += s * c2;
                    }
                }
            }
        }
    }

    // Schur intertwiner: T (7x21) with T Lw_a = L_a T for all a.
    // Assemble the normal matrix of the linear system and take its kernel.
    let unknowns = 7 * 21;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for a in 0..3 {
        for i in 0..7 {
            for e in 0..21 {
                let mut r = vec![0.0; unknowns];
                for f in 0..21 {
                    r[i * 21 + f] += wgens[a][(f, e)];
                }
                for k in 0..7 {
                    r[k * 21 + e] -= gens[a][(i, k)];
                }
                rows.push(r);
            }
        }
    }
    let mut normal = Mat::zeros(unknowns, unknowns);
    for r in &rows {
        for i in 0..unknowns {
            if r[i] == 0.0 {
                continue;
            }
            for j in 0..unknowns {
                normal[(i, j)] += r[i] * r[j];
            }
        }
    }
    let (vals, vecs) = jacobi_eig_sym(&normal);
    let scale = vals[unknowns - 1].max(1.0);
    if vals[0] > 1e-16 * scale || vals[1] < 1e-8 * scale {
        return Err(GeomError::IrrepProjectionRank);
    }
    let tvec = vecs.col(0);
    let mut t = Mat::zeros(7, 21);
    for i in 0..7 {
        for e in 0..21 {
            t[(i, e)] = tvec[i * 21 + e];
        }
    }
    // canonical sign: largest-magnitude entry positive
    let mut best = 0.0f64;
    for v in t.a.iter() {
        if fp::abs(*v) > fp::abs(best) {
            best = *v;
        }
    }
    if best < 0.0 {
        t.scale(-1.0);
    }

    // rescale so the Lagrange identity holds: ||b(f1, f2)|| = 1
    let apply_t = |t: &Mat, u: &[f64; 7], v: &[f64; 7]| -> [f64; 7] {
        let mut w = [0.0f64; 21];
        for i in 0..7 {
            for j in (i + 1)..7 {
                w[wedge_index(i, j)] = u[i] * v[j] - u[j] * v[i];
            }
        }
        let mut out = [0.0; 7];
        for i in 0..7 {
            let mut s = 0.0;
            for e in 0..21 {
                s += t[(i, e)] * w[e];
            }
            out[i] = s;
        }
        out
    };
    let mut e1 = [0.0; 7];
    e1[0] = 1.0;
    let mut e2 = [0.0; 7];
    e2[1] = 1.0;
    let b12 = apply_t(&t, &e1, &e2);
    let n12 = fp::sqrt(b12.iter().map(|x| x * x).sum());
    if n12 < 1e-12 {
        return Err(GeomError::IrrepProjectionRank);
    }
    t.scale(1.0 / n12);

    // structure constants
    let mut cross = [[[0.0f64; 7]; 7]; 7];
    for i in 0..7 {
        for j in 0..7 {
            let mut u = [0.0; 7];
            u[i] = 1.0;
            let mut v = [0.0; 7];
            v[j] = 1.0;
            cross[i][j] = apply_t(&t, &u, &v);
        }
    }

    // Cayley frame in (V7, b), deterministic seeds, then Psi maps it onto the
    // octonion standard basis (itself a Cayley frame for our convention).
    let prod = |x: &[f64], y: &[f64]| -> Vec<f64> {
        let mut u = [0.0; 7];
        let mut v = [0.0; 7];
        u.copy_from_slice(x);
        v.copy_from_slice(y);
        let mut out = [0.0; 7];
        for i in 0..7 {
            if u[i] == 0.0 {
                continue;
            }
            for j in 0..7 {
                if v[j] == 0.0 {
                    continue;
                }
                for k in 0..7 {
                    out[k] += u[i] * v[j] * cross[i][j][k];
                }
            }
        }
        out.to_vec()
    };
    let seed_a = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let seed_b = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    // seed_c must have a component outside the associative algebra of f1, f2;
    // try basis directions in order
    let mut frame = None;
    for c in 2..7 {
        let mut seed_c = [0.0; 7];
        seed_c[c] = 1.0;
        if let Some(fr) = cayley_frame(&prod, &seed_a, &seed_b, &seed_c) {
            frame = Some(fr);
            break;
        }
    }
    let frame = frame.ok_or(GeomError::IrrepProjectionRank)?;
    // psi: coordinates x in V7 -> octonion coords (f_i . x) for the frame
    let mut psi = Mat::zeros(7, 7);
    for (a, f) in frame.iter().enumerate() {
        for j in 0..7 {
            psi[(a, j)] = f[j];
        }
    }

    // orbit polynomials, aligned into the icosahedral group
    let p3_raw = cubic_from_closure(|x, y, _z| x * (x * x - 3.0 * y * y));
    let p4_raw = cubic_from_closure(|x, y, z| x * y * z);
    let coords = |p: &[f64; 10]| -> [f64; 7] {
        let mut out = [0.0; 7];
        for i in 0..7 {
            out[i] = cubic_inner(&basis[i], p);
        }
        let n = fp::sqrt(out.iter().map(|x| x * x).sum());
        for x in out.iter_mut() {
            *x /= n;
        }
        out
    };
    let mut data = IrrepData {
        basis,
        gens,
        cross,
        psi,
        p3: coords(&p3_raw),
        p4: coords(&p4_raw),
    };
    align_orbit_polynomials(&mut data)?;
    Ok(data)
}

/// Exact cubic coefficients from a closure by sampling the 10 monomials.
fn cubic_from_closure<F: Fn(f64, f64, f64) -> f64>(f: F) -> [f64; 10] {
    // solve V c = y on 10 sample points (Vandermonde-ish); use a fixed
    // well-conditioned sample set and Gaussian elimination
    let pts: [[f64; 3]; 10] = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 1.0, 0.0],
        [1.0, 0.0, 1.0],
        [0.0, 1.0, 1.0],
        [1.0, -1.0, 0.0],
        [1.0, 0.0, -1.0],
        [0.0, 1.0, -1.0],
        [1.0, 1.0, 1.0],
    ];
    let mut a = [[0.0f64; 11]; 10];
    for (r, p) in pts.iter().enumerate() {
        for (c, &(i, j, k)) in CUBIC_MONOMIALS.iter().enumerate() {
            let mut v = 1.0;
            for _ in 0..i {
                v *= p[0];
            }
            for _ in 0..j {
                v *= p[1];
            }
            for _ in 0..k {
                v *= p[2];
            }
            a[r][c] = v;
        }
        a[r][10] = f(p[0], p[1], p[2]);
    }
    // gaussian elimination
    for col in 0..10 {
        let mut best = col;
        for r in col..10 {
            if fp::abs(a[r][col]) > fp::abs(a[best][col]) {
                best = r;
            }
        }
        a.swap(col, best);
        let piv = a[col][col];
        for c in col..11 {
            a[col][c] /= piv;
        }
        for r in 0..10 {
            if r != col {
                let f = a[r][col];
                for c in col..11 {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut out = [0.0; 10];
    for i in 0..10 {
        out[i] = a[i][10];
    }
    out
}

/// The binary icosahedral group as 120 unit quaternions (the 600-cell
/// vertex set), generated by closure from two standard generators.
pub fn binary_icosahedral() -> Vec<Quat> {
    let phi = (1.0 + fp::sqrt(5.0)) / 2.0;
    let g1 = Quat::new(0.5, 0.5, 0.5, 0.5);
    let g2 = Quat::new(phi / 2.0, 1.0 / (2.0 * phi), 0.5, 0.0);
    let mut elems: Vec<Quat> = vec![Quat::ONE];
    let close_enough = |a: &Quat, b: &Quat| a.0.iter().zip(b.0.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() < 1e-16;
    let mut frontier = vec![Quat::ONE];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for q in &frontier {
            for g in [&g1, &g2] {
                let n = q.mul(g).normalized();
                if !elems.iter().any(|e| close_enough(e, &n)) {
                    elems.push(n);
                    next.push(n);
                }
            }
        }
        frontier = next;
    }
    assert_eq!(elems.len(), 120, "binary icosahedral closure");
    elems
}

/// Rotate p3 and p4 so that their stabilizers land inside the icosahedral
/// rotation group, so the 600-cell mesh on the Sp(1) cover carries the deck
/// action. Verified by counting stabilizer elements (12 resp. 24 on Sp(1)).
fn align_orbit_polynomials(data: &mut IrrepData) -> Result<(), GeomError> {
    let group = binary_icosahedral();
    fn stab_count(data: &IrrepData, group: &[Quat], p: &[f64; 7]) -> usize {
        group
            .iter()
            .filter(|q| {
                let rp = data.rho(&q.rotation_matrix()).apply(p);
                rp.iter().zip(p.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < 1e-16
            })
            .count()
    }

    // 3-fold and 2-fold axes of the icosahedral group
    let mut axes3: Vec<[f64; 3]> = Vec::new();
    let mut axes2: Vec<[f64; 3]> = Vec::new();
    for q in &group {
        let w = q.w();
        let im = q.imag();
        let n = fp::sqrt(im[0] * im[0] + im[1] * im[1] + im[2] * im[2]);
        if n < 1e-9 {
            continue;
        }
        let axis = [im[0] / n, im[1] / n, im[2] / n];
        if fp::abs(w - 0.5) < 1e-9 {
            axes3.push(axis);
        } else if fp::abs(w) < 1e-9 {
            axes2.push(axis);
        }
    }

    // L3: map the z-axis (3-fold of D3) to a 3-fold axis and the x-axis
    // (2-fold of D3) to an orthogonal 2-fold axis.
    let mut done3 = false;
    'outer3: for a3 in &axes3 {
        for a2 in &axes2 {
            let dot = a3[0] * a2[0] + a3[1] * a2[1] + a3[2] * a2[2];
            if fp::abs(dot) > 1e-9 {
                continue;
            }
            let r0 = frame_rotation(a2, a3);
            let cand = data.rho(&r0).apply(&data.p3);
            let mut p = [0.0; 7];
            p.copy_from_slice(&cand);
            if stab_count(data, &group, &p) == 12 {
                data.p3 = p;
                done3 = true;
                break 'outer3;
            }
        }
    }
    if !done3 {
        return Err(GeomError::IrrepProjectionRank);
    }

    // L4: three mutually orthogonal 2-fold axes whose diagonal is a 3-fold
    // axis give an inscribed-tetrahedron A4.
    let mut done4 = false;
    'outer4: for i in 0..axes2.len() {
        for j in 0..axes2.len() {
            let (a, b) = (&axes2[i], &axes2[j]);
            let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
            if fp::abs(dot) > 1e-9 {
                continue;
            }
            let c = [
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ];
            let r0 = [
                [a[0], b[0], c[0]],
                [a[1], b[1], c[1]],
                [a[2], b[2], c[2]],
            ];
            let cand = data.rho(&r0).apply(&data.p4);
            let mut p = [0.0; 7];
            p.copy_from_slice(&cand);
            if stab_count(data, &group, &p) == 24 {
                data.p4 = p;
                done4 = true;
                break 'outer4;
            }
        }
    }
    if !done4 {
        return Err(GeomError::IrrepProjectionRank);
    }
    Ok(())
}

/// Rotation with columns (x_img, z_img x x_img, z_img): maps x to x_img and
/// z to z_img (assumed orthonormal).
fn frame_rotation(x_img: &[f64; 3], z_img: &[f64; 3]) -> [[f64; 3]; 3] {
    let y = [
        z_img[1] * x_img[2] - z_img[2] * x_img[1],
        z_img[2] * x_img[0] - z_img[0] * x_img[2],
        z_img[0] * x_img[1] - z_img[1] * x_img[0],
    ];
    [
        [x_img[0], y[0], z_img[0]],
        [x_img[1], y[1], z_img[1]],
        [x_img[2], y[2], z_img[2]],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::octonion::phi3;
    use crate::rng::Rng;

    fn rand7(rng: &mut Rng) -> [f64; 7] {
        let mut v = [0.0; 7];
        rng.fill_normal(&mut v);
        v
    }

    fn norm7(v: &[f64; 7]) -> f64 {
        fp::sqrt(v.iter().map(|x| x * x).sum())
    }

    #[test]
    fn representation_is_orthogonal_homomorphism() {
        let data = build_irreducible_so3().unwrap();
        let mut rng = Rng::new(101);
        for _ in 0..20 {
            let q1 = Quat::exp_imag([rng.normal(), rng.normal(), rng.normal()]);
            let q2 = Quat::exp_imag([rng.normal(), rng.normal(), rng.normal()]);
            let r1 = data.rho(&q1.rotation_matrix());
            let r2 = data.rho(&q2.rotation_matrix());
            let r12 = data.rho(&q1.mul(&q2).rotation_matrix());
            let prod = r1.matmul(&r2);
            let mut diff = prod.clone();
            diff.add_scaled(&r12, -1.0);
            assert!(diff.max_abs() < 1e-12, "homomorphism defect {}", diff.max_abs());
            let mut rtr = r1.transpose().matmul(&r1);
            rtr.add_scaled(&Mat::eye(7), -1.0);
            assert!(rtr.max_abs() < 1e-12, "orthogonality defect {}", rtr.max_abs());
        }
    }

    #[test]
    fn generators_exponentiate_representation() {
        let data = build_irreducible_so3().unwrap();
        for a in 0..3 {
            let eps = 1e-6;
            let mut axis = [0.0; 3];
            axis[a] = eps / 2.0; // exp_imag(v) rotates by 2|v|
            let q = Quat::exp_imag(axis);
            let r = data.rho(&q.rotation_matrix());
            // (rho(exp(eps a)) - I)/eps ~ G_a
            for i in 0..7 {
                for j in 0..7 {
                    let fd = (r[(i, j)] - if i == j { 1.0 } else { 0.0 }) / eps;
                    assert!(
                        (fd - data.gens[a][(i, j)]).abs() < 1e-5,
                        "axis {a} entry ({i},{j}): fd {fd} vs {}",
                        data.gens[a][(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn product_is_equivariant_and_satisfies_lagrange() {
        let data = build_irreducible_so3().unwrap();
        let mut rng = Rng::new(103);
        for _ in 0..200 {
            let u = rand7(&mut rng);
            let v = rand7(&mut rng);
            let q = Quat::exp_imag([rng.normal(), rng.normal(), rng.normal()]);
            let r = data.rho(&q.rotation_matrix());
            let ru: [f64; 7] = r.apply(&u).try_into().unwrap();
            let rv: [f64; 7] = r.apply(&v).try_into().unwrap();
            let lhs: [f64; 7] = r.apply(&data.product(&u, &v)).try_into().unwrap();
            let rhs = data.product(&ru, &rv);
            let scale = 1.0 + norm7(&lhs);
            for k in 0..7 {
                assert!((lhs[k] - rhs[k]).abs() < 1e-10 * scale);
            }
            // Lagrange identity
            let b = data.product(&u, &v);
            let uu: f64 = u.iter().map(|x| x * x).sum();
            let vv: f64 = v.iter().map(|x| x * x).sum();
            let uv: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            let want = uu * vv - uv * uv;
            let got: f64 = b.iter().map(|x| x * x).sum();
            assert!((got - want).abs() < 1e-10 * (1.0 + want), "{got} vs {want}");
        }
    }

    #[test]
    fn character_quadrature_projector_agrees_with_intertwiner_range() {
        // Schur-uniqueness oracle: the spin-3 isotypic projector on
        // Lambda^2 V_7 from character averaging over a Haar quadrature must
        // fix the graph of the product tensor.
        let data = build_irreducible_so3().unwrap();
        let mut rng = Rng::new(105);
        let n = 20_000;
        let mut proj = Mat::zeros(21, 21);
        for _ in 0..n {
            let mut raw = [0.0; 4];
            rng.fill_normal(&mut raw);
            let q = Quat(raw).normalized();
            let chi = {
                // chi_{spin 3} = U_6(cos(theta/2)) = U_6(q0), Chebyshev U
                let x = q.w();
                let mut u = [0.0f64; 8];
                u[0] = 1.0;
                u[1] = 2.0 * x;
                for k in 2..8 {
                    u[k] = 2.0 * x * u[k - 1] - u[k - 2];
                }
                u[6]
            };
            let r = data.rho(&q.rotation_matrix());
            // wedge square of r
            for i in 0..7 {
                for j in (i + 1)..7 {
                    let row = wedge_index(i, j);
                    for k in 0..7 {
                        for l in (k + 1)..7 {
                            let col = wedge_index(k, l);
                            let v = r[(i, k)] * r[(j, l)] - r[(i, l)] * r[(j, k)];
                            proj[(row, col)] += chi * v * 7.0 / n as f64;
                        }
                    }
                }
            }
        }
        // the product tensor rows span the spin-3 summand; P should fix them
        let mut rng2 = Rng::new(106);
        for _ in 0..20 {
            let u = rand7(&mut rng2);
            let v = rand7(&mut rng2);
            let mut w = [0.0f64; 21];
            for i in 0..7 {
                for j in (i + 1)..7 {
                    w[wedge_index(i, j)] = u[i] * v[j] - u[j] * v[i];
                }
            }
            // component of w in the spin-3 summand: since b = T w and T has
            // the summand as coimage, compare b(P w) with b(w)
            let pw = proj.apply(&w);
            let to_pair = |wv: &[f64]| -> [f64; 7] {
                // contract the wedge vector against the structure tensor
                let mut out = [0.0; 7];
                for i in 0..7 {
                    for j in (i + 1)..7 {
                        let c = wv[wedge_index(i, j)];
                        for k in 0..7 {
                            out[k] += c * data.cross[i][j][k];
                        }
                    }
                }
                out
            };
            let b1 = to_pair(&w);
            let b2 = to_pair(&pw);
            let scale = 1.0 + norm7(&b1);
            for k in 0..7 {
                assert!(
                    (b1[k] - b2[k]).abs() < 0.05 * scale,
                    "quadrature projector mismatch {} vs {}",
                    b1[k],
                    b2[k]
                );
            }
        }
    }

    #[test]
    fn psi_intertwines_with_octonion_cross() {
        let data = build_irreducible_so3().unwrap();
        let mut rng = Rng::new(107);
        for _ in 0..200 {
            let u = rand7(&mut rng);
            let v = rand7(&mut rng);
            let pu = data.to_im_octonion(&u);
            let pv = data.to_im_octonion(&v);
            let lhs = pu.cross(&pv);
            let rhs = data.to_im_octonion(&data.product(&u, &v));
            assert!(lhs.sub(&rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
        }
    }

    #[test]
    fn g2_of_rotation_preserves_phi() {
        let data = build_irreducible_so3().unwrap();
        let mut rng = Rng::new(108);
        for _ in 0..20 {
            let q = Quat::exp_imag([rng.normal(), rng.normal(), rng.normal()]);
            let g = data.g2_of_rotation(&q.rotation_matrix());
            for _ in 0..20 {
                let u = crate::octonion::random_unit_im(&mut rng);
                let v = crate::octonion::random_unit_im(&mut rng);
                let w = crate::octonion::random_unit_im(&mut rng);
                let gu = ImOctonion(g.apply(&u.0).try_into().unwrap());
                let gv = ImOctonion(g.apply(&v.0).try_into().unwrap());
                let gw = ImOctonion(g.apply(&w.0).try_into().unwrap());
                assert!((phi3(&gu, &gv, &gw) - phi3(&u, &v, &w)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn irrep_phi_has_comass_one() {
        let data = build_irreducible_so3().unwrap();
        let mut rng = Rng::new(109);
        let mut max_val = 0.0f64;
        for _ in 0..100_000 {
            // random orthonormal triple in V7
            let mut a = rand7(&mut rng);
            let na = norm7(&a);
            for x in a.iter_mut() {
                *x /= na;
            }
            let mut b = rand7(&mut rng);
            let d: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
            for (x, y) in b.iter_mut().zip(a.iter()) {
                *x -= d * y;
            }
            let nb = norm7(&b);
            if nb < 1e-6 {
                continue;
            }
            for x in b.iter_mut() {
                *x /= nb;
            }
            let mut c = rand7(&mut rng);
            let da: f64 = a.iter().zip(c.iter()).map(|(x, y)| x * y).sum();
            let db: f64 = b.iter().zip(c.iter()).map(|(x, y)| x * y).sum();
            for k in 0..7 {
                c[k] -= da * a[k] + db * b[k];
            }
            let nc = norm7(&c);
            if nc < 1e-6 {
                continue;
            }
            for x in c.iter_mut() {
                *x /= nc;
            }
            let bab = data.product(&a, &b);
            let val: f64 = bab.iter().zip(c.iter()).map(|(x, y)| x * y).sum();
            assert!(val.abs() <= 1.0 + 1e-9, "comass violation {val}");
            max_val = max_val.max(val.abs());
        }
        assert!(max_val > 0.98, "sup {max_val}");
    }

    #[test]
    fn binary_icosahedral_has_120_elements_closed_under_product() {
        let g = binary_icosahedral();
        assert_eq!(g.len(), 120);
        let mut rng = Rng::new(110);
        for _ in 0..50 {
            let a = g[rng.below(120)];
            let b = g[rng.below(120)];
            let p = a.mul(&b);
            assert!(
                g.iter().any(|e| e.0.iter().zip(p.0.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() < 1e-14),
                "not closed"
            );
        }
    }

    #[test]
    fn orbit_polynomials_have_aligned_stabilizers() {
        let data = build_irreducible_so3().unwrap();
        let group = binary_icosahedral();
        let count = |p: &[f64; 7]| -> usize {
            group
                .iter()
                .filter(|q| {
                    let rp = data.rho(&q.rotation_matrix()).apply(p);
                    rp.iter().zip(p.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < 1e-16
                })
                .count()
        };
        assert_eq!(count(&data.p3), 12);
        assert_eq!(count(&data.p4), 24);
    }
}

//! The deformation theory made numerical: the nonlinear pullback map F, the
//! linearized operator on 1-forms plus mean-zero functions, the second
//! variation of volume, the Kuranishi bilinear map, obstruction pairings and
//! truncated tau-series coefficients.
//!
//! Everything nonlinear works on pointwise coframe samples at tet
//! barycenters (Whitney interpolation exchanges data with the spectral
//! side); the deformed map uses the closed-form sphere exponential and its
//! analytic chart differential, so the only finite differences left are in
//! the deformation parameter itself.

use rayon::prelude::*;

use nk6_core::fp;
use nk6_core::immersion::Immersion;
use nk6_core::linalg::mat3_vec;
use nk6_core::nk6::NkSphere;
use nk6_core::octonion::ImOctonion;

use crate::dec::Cochain;
use crate::mesh::{SimplicialComplex3, LOCAL_PAIRS};
use crate::metric::{MetricData, TetGeometry};
use crate::sparse::{cg, dot, minres, Csr};
use crate::LabError;

/// Pointwise 1-form data on one tet in its barycenter chart: the covector
/// value at the chart origin and its full first-derivative matrix.
#[derive(Debug, Clone, Copy, Default)]
pub struct TetField {
    pub value: [f64; 3],
    /// jac[a][b] = d alpha_b / d s_a
    pub jac: [[f64; 3]; 3],
}

impl TetField {
    pub fn scaled(&self, t: f64) -> TetField {
        let mut out = *self;
        for v in out.value.iter_mut() {
            *v *= t;
        }
        for row in out.jac.iter_mut() {
            for v in row.iter_mut() {
                *v *= t;
            }
        }
        out
    }

    pub fn axpy(&self, t: f64, other: &TetField, s: f64) -> TetField {
        let mut out = TetField::default();
        for a in 0..3 {
            out.value[a] = t * self.value[a] + s * other.value[a];
            for b in 0..3 {
                out.jac[a][b] = t * self.jac[a][b] + s * other.jac[a][b];
            }
        }
        out
    }
}

/// Whitney interpolation of a 1-cochain to per-tet field samples.
pub fn whitney_field(
    mesh: &SimplicialComplex3,
    metric: &MetricData,
    c: &Cochain,
) -> Result<Vec<TetField>, LabError> {
    if c.degree != 1 || c.values.len() != mesh.edges.len() {
        return Err(LabError::Mesh("whitney_field wants a 1-cochain".into()));
    }
    let mut out = vec![TetField::default(); mesh.tets.len()];
    for (ti, t) in mesh.tets.iter().enumerate() {
        let geo = &metric.tets[ti];
        let mut f = TetField::default();
        for &(i, j) in LOCAL_PAIRS.iter() {
            let e = mesh.edge_id(t[i], t[j]).unwrap();
            let x = c.values[e];
            if x == 0.0 {
                continue;
            }
            let (li, lj) = (geo.lambda0[i], geo.lambda0[j]);
            let (gi, gj) = (geo.grad_lambda[i], geo.grad_lambda[j]);
            for b in 0..3 {
                f.value[b] += x * (li * gj[b] - lj * gi[b]);
                for a in 0..3 {
                    f.jac[a][b] += x * (gi[a] * gj[b] - gj[a] * gi[b]);
                }
            }
        }
        out[ti] = f;
    }
    Ok(out)
}

/// Precomputed immersion jets at the tet barycenters (the expensive part of
/// the quadrature context, built once per mesh).
pub struct FQuad {
    pub jets: Vec<nk6_core::immersion::Jet2>,
}

impl FQuad {
    pub fn build(metric: &MetricData, imm: &dyn Immersion) -> Self {
        let jets: Vec<_> = metric
            .tets
            .par_iter()
            .map(|geo| imm.jet2(&geo.bary))
            .collect();
        FQuad { jets }
    }
}

/// V = -J(alpha sharp): the normal field with V interior-product omega
/// equal to alpha, given pointwise samples. Returns per-tet ambient vectors.
pub fn normal_field_from_form(
    quad: &FQuad,
    metric: &MetricData,
    fields: &[TetField],
) -> Result<Vec<ImOctonion>, LabError> {
    if fields.len() != metric.tets.len() {
        return Err(LabError::Mesh("field count mismatch".into()));
    }
    Ok(metric
        .tets
        .par_iter()
        .zip(quad.jets.par_iter())
        .zip(fields.par_iter())
        .map(|((geo, jet), f)| {
            let sharp = mat3_vec(&geo.ginv, &f.value);
            let mut tvec = ImOctonion::zero();
            for a in 0..3 {
                tvec = tvec.add(&jet.jacobian[a].scale(sharp[a]));
            }
            jet.point.cross(&tvec).scale(-1.0)
        })
        .collect())
}

/// One pullback sample: the deformed point and the three chart-tangent
/// images, computed analytically.
fn deformed_frame(
    jet: &nk6_core::immersion::Jet2,
    geo: &TetGeometry,
    f: &TetField,
) -> (ImOctonion, [ImOctonion; 3]) {
    let p = &jet.point;
    let jac = &jet.jacobian;
    let hess = &jet.hessian;
    // metric at the sample and its chart derivatives
    let g = &geo.g;
    let ginv = &geo.ginv;
    let sharp = mat3_vec(ginv, &f.value);
    let mut tvec = ImOctonion::zero();
    for a in 0..3 {
        tvec = tvec.add(&jac[a].scale(sharp[a]));
    }
    let v = p.cross(&tvec).scale(-1.0);
    // dG[a][b][c] = d_a g_{bc}
    let mut dsharp = [[0.0; 3]; 3];
    for a in 0..3 {
        let mut dg = [[0.0; 3]; 3];
        for b in 0..3 {
            for cc in 0..3 {
                dg[b][cc] = hess[a][b].dot(&jac[cc]) + jac[b].dot(&hess[a][cc]);
            }
        }
        // d_a sharp = -Ginv dG Ginv alpha + Ginv d_a alpha
        let ga = mat3_vec(&dg, &sharp);
        let t1 = mat3_vec(ginv, &ga);
        let da = [f.jac[a][0], f.jac[a][1], f.jac[a][2]];
        let t2 = mat3_vec(ginv, &da);
        for b in 0..3 {
            dsharp[a][b] = -t1[b] + t2[b];
        }
    }
    let mut dv = [ImOctonion::zero(); 3];
    for a in 0..3 {
        let mut dt = ImOctonion::zero();
        for b in 0..3 {
            dt = dt
                .add(&jac[b].scale(dsharp[a][b]))
                .add(&hess[a][b].scale(sharp[b]));
        }
        dv[a] = jac[a].cross(&tvec).add(&p.cross(&dt)).scale(-1.0);
    }
    let u = v.dot(&v);
    let big_a = fp::cos_sqrt(u);
    let big_b = fp::sinc_sqrt(u);
    let da_du = fp::dcos_sqrt(u);
    let db_du = fp::dsinc_sqrt(u);
    let q = p.scale(big_a).add(&v.scale(big_b));
    let mut frame = [ImOctonion::zero(); 3];
    for a in 0..3 {
        let ua = 2.0 * v.dot(&dv[a]);
        frame[a] = p
            .scale(da_du * ua)
            .add(&jac[a].scale(big_a))
            .add(&v.scale(db_du * ua))
            .add(&dv[a].scale(big_b));
    }
    let _ = g;
    (q, frame)
}

/// Pullback of omega through the deformed map, sampled at the barycenters.
/// Returns per-tet 2-form components [F_01, F_02, F_12] in the chart frame.
pub fn pullback_f(
    quad: &FQuad,
    metric: &MetricData,
    fields: &[TetField],
    sup_bound: f64,
) -> Result<Vec<[f64; 3]>, LabError> {
    if fields.len() != metric.tets.len() {
        return Err(LabError::Mesh("field count mismatch".into()));
    }
    // amplitude guard: metric norm of the covector samples
    let sup = metric
        .tets
        .par_iter()
        .zip(fields.par_iter())
        .map(|(geo, f)| {
            let sharp = mat3_vec(&geo.ginv, &f.value);
            (0..3).map(|a| sharp[a] * f.value[a]).sum::<f64>().max(0.0)
        })
        .reduce(|| 0.0, f64::max)
        .sqrt();
    if sup > sup_bound {
        return Err(LabError::Solver(format!(
            "deformation amplitude {sup:.3} exceeds the chart bound {sup_bound}"
        )));
    }
    let nk = NkSphere::standard();
    let out: Vec<[f64; 3]> = metric
        .tets
        .par_iter()
        .zip(quad.jets.par_iter())
        .zip(fields.par_iter())
        .map(|((geo, jet), f)| {
            let (q, frame) = deformed_frame(jet, geo, f);
            [
                nk.omega_raw(&q, &frame[0], &frame[1]),
                nk.omega_raw(&q, &frame[0], &frame[2]),
                nk.omega_raw(&q, &frame[1], &frame[2]),
            ]
        })
        .collect();
    // immersion-regime guard: the deformed frame must stay nondegenerate
    let degenerate = metric
        .tets
        .par_iter()
        .zip(quad.jets.par_iter())
        .zip(fields.par_iter())
        .map(|((geo, jet), f)| {
            let (_, frame) = deformed_frame(jet, geo, f);
            let mut gg = [[0.0; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    gg[a][b] = frame[a].dot(&frame[b]);
                }
            }
            nk6_core::linalg::det3(&gg)
        })
        .reduce(|| f64::INFINITY, f64::min);
    if degenerate <= 1e-14 {
        return Err(LabError::Solver(
            "deformed map left the immersion regime (singular differential)".into(),
        ));
    }
    Ok(out)
}

/// d beta - 3 * beta per tet (the linearization target), from field samples.
pub fn linearization_target(metric: &MetricData, fields: &[TetField]) -> Vec<[f64; 3]> {
    metric
        .tets
        .iter()
        .zip(fields.iter())
        .map(|(geo, f)| {
            let dbeta = [
                f.jac[0][1] - f.jac[1][0],
                f.jac[0][2] - f.jac[2][0],
                f.jac[1][2] - f.jac[2][1],
            ];
            let sb = hodge_star1(geo, &f.value);
            [
                dbeta[0] - 3.0 * sb[0],
                dbeta[1] - 3.0 * sb[1],
                dbeta[2] - 3.0 * sb[2],
            ]
        })
        .collect()
}

/// Hodge star of a 1-form sample into 2-form components [01, 02, 12].
pub fn hodge_star1(geo: &TetGeometry, value: &[f64; 3]) -> [f64; 3] {
    let w = mat3_vec(&geo.ginv, value);
    let sd = geo.chart_orient * nk6_core::linalg::det3(&geo.g).sqrt();
    [sd * w[2], -sd * w[1], sd * w[0]]
}

/// Hodge star of a 2-form sample into 1-form components.
pub fn hodge_star2(geo: &TetGeometry, k: &[f64; 3]) -> [f64; 3] {
    let sd = geo.chart_orient / nk6_core::linalg::det3(&geo.g).sqrt();
    let v = [k[2], -k[1], k[0]];
    let gv = mat3_vec(&geo.g, &v);
    [sd * gv[0], sd * gv[1], sd * gv[2]]
}

/// Pointwise metric norm squared of a 2-form sample.
pub fn norm2_2form(geo: &TetGeometry, k: &[f64; 3]) -> f64 {
    // |k|^2 = (1/2) k_ab k_cd g^ac g^bd with k antisymmetric
    let comp = |a: usize, b: usize| -> f64 {
        match (a, b) {
            (0, 1) => k[0],
            (1, 0) => -k[0],
            (0, 2) => k[1],
            (2, 0) => -k[1],
            (1, 2) => k[2],
            (2, 1) => -k[2],
            _ => 0.0,
        }
    };
    let gi = &geo.ginv;
    let mut s = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    s += comp(a, b) * comp(c, d) * gi[a][c] * gi[b][d];
                }
            }
        }
    }
    0.5 * s
}

/// L2 norm of per-tet 2-form samples under the barycenter quadrature.
pub fn l2_norm_2form(metric: &MetricData, samples: &[[f64; 3]]) -> f64 {
    let mut s = 0.0;
    for (geo, k) in metric.tets.iter().zip(samples.iter()) {
        s += geo.volume * norm2_2form(geo, k);
    }
    s.sqrt()
}

/// The Kuranishi bilinear map: mixed second parameter-difference of the
/// pullback, one Richardson level. Returns per-tet 2-form samples.
pub fn kuranishi(
    quad: &FQuad,
    metric: &MetricData,
    a1: &[TetField],
    a2: &[TetField],
    h: f64,
    sup_bound: f64,
) -> Result<Vec<[f64; 3]>, LabError> {
    if !(h > 0.0 && h <= 0.2) {
        return Err(LabError::Solver(format!("kuranishi step {h} outside (0, 0.2]")));
    }
    let stencil = |hh: f64| -> Result<Vec<[f64; 3]>, LabError> {
        let combine = |t1: f64, t2: f64| -> Vec<TetField> {
            a1.iter()
                .zip(a2.iter())
                .map(|(f1, f2)| f1.axpy(t1, f2, t2))
                .collect()
        };
        let fpp = pullback_f(quad, metric, &combine(hh, hh), sup_bound)?;
        let fpm = pullback_f(quad, metric, &combine(hh, -hh), sup_bound)?;
        let fmp = pullback_f(quad, metric, &combine(-hh, hh), sup_bound)?;
        let fmm = pullback_f(quad, metric, &combine(-hh, -hh), sup_bound)?;
        let inv = 1.0 / (4.0 * hh * hh);
        Ok(fpp
            .iter()
            .zip(fpm.iter())
            .zip(fmp.iter().zip(fmm.iter()))
            .map(|((pp, pm), (mp, mm))| {
                [
                    (pp[0] - pm[0] - mp[0] + mm[0]) * inv,
                    (pp[1] - pm[1] - mp[1] + mm[1]) * inv,
                    (pp[2] - pm[2] - mp[2] + mm[2]) * inv,
                ]
            })
            .collect())
    };
    let k_h = stencil(h)?;
    let k_h2 = stencil(h / 2.0)?;
    Ok(k_h
        .iter()
        .zip(k_h2.iter())
        .map(|(a, b)| {
            [
                (4.0 * b[0] - a[0]) / 3.0,
                (4.0 * b[1] - a[1]) / 3.0,
                (4.0 * b[2] - a[2]) / 3.0,
            ]
        })
        .collect())
}

/// Third directional derivative d^3/dt^3 F(t alpha) by central differences
/// with one Richardson level.
pub fn third_derivative(
    quad: &FQuad,
    metric: &MetricData,
    a: &[TetField],
    h: f64,
    sup_bound: f64,
) -> Result<Vec<[f64; 3]>, LabError> {
    let stencil = |hh: f64| -> Result<Vec<[f64; 3]>, LabError> {
        let at = |t: f64| -> Vec<TetField> { a.iter().map(|f| f.scaled(t)).collect() };
        let f2 = pullback_f(quad, metric, &at(2.0 * hh), sup_bound)?;
        let f1 = pullback_f(quad, metric, &at(hh), sup_bound)?;
        let fm1 = pullback_f(quad, metric, &at(-hh), sup_bound)?;
        let fm2 = pullback_f(quad, metric, &at(-2.0 * hh), sup_bound)?;
        let inv = 1.0 / (2.0 * hh * hh * hh);
        Ok((0..f2.len())
            .map(|i| {
                [
                    (f2[i][0] - 2.0 * f1[i][0] + 2.0 * fm1[i][0] - fm2[i][0]) * inv,
                    (f2[i][1] - 2.0 * f1[i][1] + 2.0 * fm1[i][1] - fm2[i][1]) * inv,
                    (f2[i][2] - 2.0 * f1[i][2] + 2.0 * fm1[i][2] - fm2[i][2]) * inv,
                ]
            })
            .collect())
    };
    let k_h = stencil(h)?;
    let k_h2 = stencil(h / 2.0)?;
    Ok(k_h
        .iter()
        .zip(k_h2.iter())
        .map(|(a, b)| {
            [
                (4.0 * b[0] - a[0]) / 3.0,
                (4.0 * b[1] - a[1]) / 3.0,
                (4.0 * b[2] - a[2]) / 3.0,
            ]
        })
        .collect())
}

/// Integral of (2-form samples) wedge (Whitney 1-cochain) over the oriented
/// manifold: the obstruction pairing kernel.
pub fn wedge_pair_21(
    mesh: &SimplicialComplex3,
    metric: &MetricData,
    k: &[[f64; 3]],
    beta: &Cochain,
) -> Result<f64, LabError> {
    let fields = whitney_field(mesh, metric, beta)?;
    let mut total = 0.0;
    for ((geo, kk), f) in metric.tets.iter().zip(k.iter()).zip(fields.iter()) {
        let b = &f.value;
        // (K ^ beta)(e0,e1,e2) = k01 b2 - k02 b1 + k12 b0
        let comp = kk[0] * b[2] - kk[1] * b[1] + kk[2] * b[0];
        total += comp * geo.coord_vol6 / 6.0;
    }
    Ok(total)
}

/// The mixed Galerkin block operator (beta, g) -> (*d beta - 3 beta + dg,
/// delta beta) on 1-cochains plus mean-zero 0-cochains.
pub struct LinearizedOperator {
    /// symmetric weak-form block matrix on (edges + vertices)
    pub ahat: Csr,
    /// block-diagonal mass (M1, M0)
    pub mass: Csr,
    pub ne: usize,
    pub nv: usize,
    /// M-normalized constant vector spanning the deflated (0, const) kernel
    pub const_vec: Vec<f64>,
}

impl LinearizedOperator {
    pub fn assemble(mesh: &SimplicialComplex3, metric: &MetricData) -> Self {
        let ne = mesh.edges.len();
        let nv = mesh.vertices.len();
        let m1g = metric.m1.matmul(&mesh.d0);
        let mut coo: Vec<(u32, u32, f64)> = Vec::new();
        // block (0,0): curl - 3 M1
        let block00 = metric.curl.add_scaled(&metric.m1, -3.0);
        for r in 0..ne {
            let (cols, vals) = block00.row(r);
            for (c, v) in cols.iter().zip(vals.iter()) {
                coo.push((r as u32, *c, *v));
            }
        }
        // block (0,1) and (1,0): M1 G and its transpose
        for r in 0..ne {
            let (cols, vals) = m1g.row(r);
            for (c, v) in cols.iter().zip(vals.iter()) {
                coo.push((r as u32, ne as u32 + c, *v));
                coo.push((ne as u32 + c, r as u32, *v));
            }
        }
        let ahat = Csr::from_coo(ne + nv, ne + nv, coo);
        // block mass
        let mut mcoo: Vec<(u32, u32, f64)> = Vec::new();
        for r in 0..ne {
            let (cols, vals) = metric.m1.row(r);
            for (c, v) in cols.iter().zip(vals.iter()) {
                mcoo.push((r as u32, *c, *v));
            }
        }
        for r in 0..nv {
            let (cols, vals) = metric.m0.row(r);
            for (c, v) in cols.iter().zip(vals.iter()) {
                mcoo.push((ne as u32 + r as u32, ne as u32 + c, *v));
            }
        }
        let mass = Csr::from_coo(ne + nv, ne + nv, mcoo);
        let mut const_vec = vec![0.0; ne + nv];
        for v in const_vec[ne..].iter_mut() {
            *v = 1.0;
        }
        let mnorm = dot(&const_vec, &mass.apply(&const_vec)).sqrt();
        for v in const_vec.iter_mut() {
            *v /= mnorm;
        }
        LinearizedOperator {
            ahat,
            mass,
            ne,
            nv,
            const_vec,
        }
    }

    /// Strong-form application: x -> M^{-1} Ahat x (two mass solves).
    pub fn apply_strong(&self, x: &[f64]) -> Vec<f64> {
        let weak = self.ahat.apply(x);
        let mut out = vec![0.0; weak.len()];
        let diag = self.mass.diagonal();
        cg(
            &|v, o| self.mass.mul_vec(v, o),
            &weak,
            &mut out,
            1e-13,
            4000,
            Some(&diag),
        );
        out
    }

    /// Solves Ahat z = M r_strong (given as a weak-form right-hand side)
    /// with the kernel directions deflated. `kernel` are M-orthonormal
    /// cochain pairs spanning T_L; the constant 0-block direction is always
    /// deflated.
    pub fn solve_deflated(
        &self,
        rhs_weak: &[f64],
        kernel: &[Vec<f64>],
        tol: f64,
    ) -> Result<Vec<f64>, LabError> {
        let n = self.ne + self.nv;
        let mut rhs = rhs_weak.to_vec();
        // deflate: rhs_weak -= (y^T rhs_weak) M y for M-orthonormal y
        let deflate = |r: &mut Vec<f64>| {
            let coef = dot(&self.const_vec, r);
            let mc = self.mass.apply(&self.const_vec);
            for i in 0..n {
                r[i] -= coef * mc[i];
            }
            for y in kernel {
                let c = dot(y, r);
                let my = self.mass.apply(y);
                for i in 0..n {
                    r[i] -= c * my[i];
                }
            }
        };
        deflate(&mut rhs);
        let inv_diag: Vec<f64> = self
            .mass
            .diagonal()
            .iter()
            .map(|d| 1.0 / d.max(1e-300))
            .collect();
        let mut z = vec![0.0; n];
        let rel = minres(
            &|v, out| self.ahat.mul_vec(v, out),
            &rhs,
            &mut z,
            tol,
            20_000,
            Some(&inv_diag),
        );
        if rel > 1e-6 {
            return Err(LabError::Solver(format!(
                "deflated linearized solve stalled at relative residual {rel:.2e}"
            )));
        }
        // project the solution off the kernel as well
        let mz = self.mass.apply(&z);
        let c0 = dot(&self.const_vec, &mz);
        for i in 0..n {
            z[i] -= c0 * self.const_vec[i];
        }
        for y in kernel {
            let my = self.mass.apply(y);
            let c = dot(&z, &my);
            for i in 0..n {
                z[i] -= c * y[i];
            }
        }
        Ok(z)
    }
}

/// Result of the second-variation quadratic form.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct QuadraticFormResult {
    pub value: f64,
    /// <d beta - 3 lambda * beta, d beta + lambda * beta>
    pub first_integral: f64,
    /// || d * beta ||^2
    pub second_integral: f64,
    pub lambda: f64,
}

/// Q(beta) = <d beta - 3 lambda * beta, d beta + lambda * beta> + ||d * beta||^2
/// assembled from the DEC operators.
pub fn second_variation(
    mesh: &SimplicialComplex3,
    metric: &MetricData,
    beta: &Cochain,
    lambda: f64,
) -> Result<QuadraticFormResult, LabError> {
    if beta.degree != 1 {
        return Err(LabError::Mesh("second variation wants a 1-cochain".into()));
    }
    let db = mesh.d1.apply(&beta.values);
    let stiff = dot(&db, &metric.m2.apply(&db));
    let cross = dot(&beta.values, &metric.curl.apply(&beta.values));
    let mass = dot(&beta.values, &metric.m1.apply(&beta.values));
    let first = stiff - 2.0 * lambda * cross - 3.0 * lambda * lambda * mass;
    // *beta as a 2-cochain: M2 s = P12^T beta
    let rhs = metric.pair12.transpose().apply(&beta.values);
    let mut s = vec![0.0; rhs.len()];
    let diag = metric.m2.diagonal();
    cg(
        &|v, o| metric.m2.mul_vec(v, o),
        &rhs,
        &mut s,
        1e-13,
        4000,
        Some(&diag),
    );
    let ds = mesh.d2.apply(&s);
    let second = dot(&ds, &metric.m3.apply(&ds));
    Ok(QuadraticFormResult {
        value: first + second,
        first_integral: first,
        second_integral: second,
        lambda,
    })
}

/// Obstruction pairings of one deformation direction against a basis:
/// integral of K(alpha, alpha) wedge beta_j, raw and relative.
pub struct ObstructionResult {
    pub raw: Vec<f64>,
    pub relative: Vec<f64>,
    pub kuranishi_symmetry_defect: f64,
}

pub fn obstruction(
    quad: &FQuad,
    mesh: &SimplicialComplex3,
    metric: &MetricData,
    basis: &[Cochain],
    alpha: &Cochain,
    fd_step: f64,
    sup_bound: f64,
) -> Result<ObstructionResult, LabError> {
    let af = whitney_field(mesh, metric, alpha)?;
    let k = kuranishi(quad, metric, &af, &af, fd_step, sup_bound)?;
    let alpha_norm2 = dot(&alpha.values, &metric.m1.apply(&alpha.values));
    let mut raw = Vec::with_capacity(basis.len());
    let mut relative = Vec::with_capacity(basis.len());
    for b in basis {
        let pairing = wedge_pair_21(mesh, metric, &k, b)?;
        let bnorm = dot(&b.values, &metric.m1.apply(&b.values)).sqrt();
        raw.push(pairing);
        relative.push(pairing.abs() / (alpha_norm2 * bnorm).max(1e-300));
    }
    // symmetry defect on a split of alpha into two halves of the basis span
    let defect = {
        let a2 = whitney_field(mesh, metric, alpha)?;
        let k12 = kuranishi(quad, metric, &af, &a2, fd_step, sup_bound)?;
        let k21 = kuranishi(quad, metric, &a2, &af, fd_step, sup_bound)?;
        let mut d = 0.0f64;
        for (x, y) in k12.iter().zip(k21.iter()) {
            for c in 0..3 {
                d = d.max((x[c] - y[c]).abs());
            }
        }
        d
    };
    Ok(ObstructionResult {
        raw,
        relative,
        kuranishi_symmetry_defect: defect,
    })
}

/// tau-series coefficients in an M-orthonormal kernel basis.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TauSeries {
    pub tau2: Vec<f64>,
    pub tau3: Option<Vec<f64>>,
}

/// Load vector of 1-form samples against Whitney edge functions:
/// b_e = sum_T vol_T <sample(T), W_e(T)>_g.
fn load_1form(
    mesh: &SimplicialComplex3,
    metric: &MetricData,
    samples: &[[f64; 3]],
) -> Vec<f64> {
    let mut out = vec![0.0; mesh.edges.len()];
    for (ti, t) in mesh.tets.iter().enumerate() {
        let geo = &metric.tets[ti];
        let raised = mat3_vec(&geo.ginv, &samples[ti]);
        for &(i, j) in LOCAL_PAIRS.iter() {
            let e = mesh.edge_id(t[i], t[j]).unwrap();
            let (li, lj) = (geo.lambda0[i], geo.lambda0[j]);
            let (gi, gj) = (geo.grad_lambda[i], geo.grad_lambda[j]);
            let mut w = [0.0; 3];
            for b in 0..3 {
                w[b] = li * gj[b] - lj * gi[b];
            }
            let mut inner = 0.0;
            for b in 0..3 {
                inner += raised[b] * w[b];
            }
            out[e] += geo.volume * inner;
        }
    }
    out
}

/// Weak right-hand side of *(3 - d) K as a (1-form, 0-form) cochain pair:
/// the 1-form block is the load of 3 *K, the 0-form block is the pairing
/// -<*dK, phi_v> computed without differentiating K (discrete integration
/// by parts against the vertex hats).
fn weak_rhs_star3d(
    mesh: &SimplicialComplex3,
    metric: &MetricData,
    k: &[[f64; 3]],
    linop: &LinearizedOperator,
) -> Vec<f64> {
    let star_k: Vec<[f64; 3]> = metric
        .tets
        .iter()
        .zip(k.iter())
        .map(|(geo, kk)| hodge_star2(geo, kk))
        .collect();
    let mut rhs = vec![0.0; linop.ne + linop.nv];
    let load1 = load_1form(mesh, metric, &star_k);
    for (i, v) in load1.iter().enumerate() {
        rhs[i] = 3.0 * v;
    }
    // 0-block: -<*dK, phi_v> = + sum_T coordvol6/6 (dphi_v wedge K)
    for (ti, t) in mesh.tets.iter().enumerate() {
        let geo = &metric.tets[ti];
        let kk = &k[ti];
        for (loc, &v) in t.iter().enumerate() {
            let xi = geo.grad_lambda[loc];
            let comp = xi[0] * kk[2] - xi[1] * kk[1] + xi[2] * kk[0];
            rhs[linop.ne + v] += comp * geo.coord_vol6 / 6.0;
        }
    }
    rhs
}

/// Coefficients of the projection of *X (X 2-form samples) on the basis:
/// <*X, beta_j> computed through the wedge integral.
fn project_star(
    mesh: &SimplicialComplex3,
    metric: &MetricData,
    x: &[[f64; 3]],
    basis: &[Cochain],
) -> Result<Vec<f64>, LabError> {
    basis
        .iter()
        .map(|b| wedge_pair_21(mesh, metric, x, b))
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub fn tau_series(
    quad: &FQuad,
    mesh: &SimplicialComplex3,
    metric: &MetricData,
    linop: &LinearizedOperator,
    basis: &[Cochain],
    alpha: &Cochain,
    order: usize,
    fd_step: f64,
    sup_bound: f64,
) -> Result<TauSeries, LabError> {
    if !(2..=3).contains(&order) {
        return Err(LabError::Solver("tau order must be 2 or 3".into()));
    }
    let af = whitney_field(mesh, metric, alpha)?;
    let k = kuranishi(quad, metric, &af, &af, fd_step, sup_bound)?;
    // tau_2 through the cochain route: project *K on the basis via the mass
    // inner product (the obstruction pairing is the independent route)
    let star_k: Vec<[f64; 3]> = metric
        .tets
        .iter()
        .zip(k.iter())
        .map(|(geo, kk)| hodge_star2(geo, kk))
        .collect();
    let load = load_1form(mesh, metric, &star_k);
    let mut star_k_cochain = vec![0.0; mesh.edges.len()];
    let diag = metric.m1.diagonal();
    cg(
        &|v, o| metric.m1.mul_vec(v, o),
        &load,
        &mut star_k_cochain,
        1e-12,
        4000,
        Some(&diag),
    );
    let tau2: Vec<f64> = basis
        .iter()
        .map(|b| dot(&star_k_cochain, &metric.m1.apply(&b.values)))
        .collect();
    if order == 2 {
        return Ok(TauSeries { tau2, tau3: None });
    }
    // tau_3 = 3 pi * K(alpha, tauhat2) + pi * <omega_3; alpha^3>
    // with tauhat2 = (1/3) (dFhat)^{-1} *(3 - d) K
    let kernel: Vec<Vec<f64>> = basis
        .iter()
        .map(|b| {
            let mut z = vec![0.0; linop.ne + linop.nv];
            z[..linop.ne].copy_from_slice(&b.values);
            z
        })
        .collect();
    let rhs = weak_rhs_star3d(mesh, metric, &k, linop);
    let z = linop.solve_deflated(&rhs, &kernel, 1e-10)?;
    let tauhat2 = Cochain {
        degree: 1,
        values: z[..linop.ne].iter().map(|v| v / 3.0).collect(),
    };
    let t2f = whitney_field(mesh, metric, &tauhat2)?;
    let k_mixed = kuranishi(quad, metric, &af, &t2f, fd_step, sup_bound)?;
    let omega3 = third_derivative(quad, metric, &af, fd_step, sup_bound)?;
    let p1 = project_star(mesh, metric, &k_mixed, basis)?;
    let p2 = project_star(mesh, metric, &omega3, basis)?;
    let tau3: Vec<f64> = p1
        .iter()
        .zip(p2.iter())
        .map(|(a, b)| 3.0 * a + b)
        .collect();
    Ok(TauSeries {
        tau2,
        tau3: Some(tau3),
    })
}

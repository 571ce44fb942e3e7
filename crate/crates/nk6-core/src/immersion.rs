//! The homogeneous Lagrangian submanifolds of the nearly Kahler S^6 as
//! parametrized immersions from the group cover Sp(1), plus Hopf lifts of
//! smooth plane conics.
//!
//! Every immersion works in moving left-exponential charts: around a center
//! q the chart is s -> q exp(s_1 i + s_2 j + s_3 k), and `jet2` returns the
//! value together with analytic first and second chart derivatives. All five
//! examples and the conic lifts have closed-form jets (Lie-algebra
//! differentiation for the SO(3) orbits), so mean curvatures come out at
//! roundoff rather than finite-difference accuracy.
//!
//! Quotient topologies are handled on the cover: an immersion reports its
//! deck group (right translations under which it is invariant) and mesh-side
//! code samples the cover, asserting deck invariance of everything computed.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::fp;
use crate::linalg::{self, Mat};
use crate::nk6::NkSphere;
use crate::octonion::ImOctonion;
use crate::quat::Quat;
use crate::so3rep::IrrepData;
use crate::GeomError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TopologyTag {
    S3,
    Rp3,
    So3ModD3,
    So3ModA4,
    Custom,
}

/// Chart value with first and second derivatives at the chart center.
#[derive(Debug, Clone)]
pub struct Jet2 {
    pub point: ImOctonion,
    pub jacobian: [ImOctonion; 3],
    pub hessian: [[ImOctonion; 3]; 3],
}

/// One chart domain of the atlas: the left-exponential chart at `center`
/// covers the geodesic ball of the given radius in Sp(1).
#[derive(Debug, Clone)]
pub struct ChartSpec {
    pub center: Quat,
    pub radius: f64,
}

pub fn chart_point(center: &Quat, s: &[f64; 3]) -> Quat {
    center.mul(&Quat::exp_imag(*s))
}

pub fn chart_coords(center: &Quat, q: &Quat) -> [f64; 3] {
    center.conj().mul(q).log_imag()
}

/// A parametrized Lagrangian candidate L^3 -> S^6.
pub trait Immersion: Send + Sync {
    fn eval(&self, q: &Quat) -> ImOctonion;
    fn jet2(&self, q: &Quat) -> Jet2;
    fn topology(&self) -> TopologyTag;
    /// +1 or -1; multiplies the chart frame orientation so that
    /// Im Phi(xi) = -1 on the oriented unit tangent 3-vector.
    fn orientation_sign(&self) -> f64;
    /// Right translations q -> q h leaving the immersion pointwise invariant
    /// (the deck group of the cover), identity included.
    fn deck_group(&self) -> Vec<Quat>;
    /// Finite chart atlas covering the manifold.
    fn atlas(&self) -> Vec<ChartSpec> {
        // the 16-cell vertices cover Sp(1) with geodesic radius pi/3
        let mut charts = Vec::new();
        for k in 0..4 {
            for sign in [1.0, -1.0] {
                let mut c = [0.0; 4];
                c[k] = sign;
                charts.push(ChartSpec {
                    center: Quat(c),
                    radius: core::f64::consts::PI / 3.0 + 0.2,
                });
            }
        }
        charts
    }
}

/// epsilon = e4 = ImOctonion::basis(3), the doubling generator of H -> O.
pub const EPSILON_INDEX: usize = 3;

fn embed_h_eps(q: &Quat) -> ImOctonion {
    // (q, 0) * (0, 1) = (0, q) in the doubling: coordinates e4..e7
    ImOctonion([0.0, 0.0, 0.0, q.0[0], q.0[1], q.0[2], q.0[3]])
}

fn embed_im_h(q: &Quat) -> ImOctonion {
    debug_assert!(fp::abs(q.w()) < 1e-9);
    ImOctonion([q.0[1], q.0[2], q.0[3], 0.0, 0.0, 0.0, 0.0])
}

fn quat_basis(a: usize) -> Quat {
    let mut c = [0.0; 4];
    c[a + 1] = 1.0;
    Quat(c)
}

/// L0: the totally geodesic sphere q -> q epsilon, the unit sphere of the
/// coassociative 4-plane H epsilon.
pub struct GreatSphere {
    orientation: f64,
}

impl GreatSphere {
    pub fn new() -> Self {
        let mut s = GreatSphere { orientation: 1.0 };
        s.orientation = calibrate_orientation(&s);
        s
    }
}

impl Default for GreatSphere {
    fn default() -> Self {
        Self::new()
    }
}

impl Immersion for GreatSphere {
    fn eval(&self, q: &Quat) -> ImOctonion {
        embed_h_eps(q)
    }

    fn jet2(&self, q: &Quat) -> Jet2 {
        let point = embed_h_eps(q);
        let mut jacobian = [ImOctonion::zero(); 3];
        for a in 0..3 {
            jacobian[a] = embed_h_eps(&q.mul(&quat_basis(a)));
        }
        let mut hessian = [[ImOctonion::zero(); 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                // e_a e_b + e_b e_a = -2 delta_ab
                if a == b {
                    hessian[a][b] = point.scale(-1.0);
                }
            }
        }
        Jet2 {
            point,
            jacobian,
            hessian,
        }
    }

    fn topology(&self) -> TopologyTag {
        TopologyTag::S3
    }

    fn orientation_sign(&self) -> f64 {
        self.orientation
    }

    fn deck_group(&self) -> Vec<Quat> {
        vec![Quat::ONE]
    }
}

/// L1: the squashed sphere q -> (sqrt5/3) q i conj(q) + (2/3) conj(q) epsilon.
pub struct SquashedSphere {
    orientation: f64,
}

impl SquashedSphere {
    pub fn new() -> Self {
        let mut s = SquashedSphere { orientation: 1.0 };
        s.orientation = calibrate_orientation(&s);
        s
    }
}

impl Default for SquashedSphere {
    fn default() -> Self {
        Self::new()
    }
}

const SQRT5_OVER_3: f64 = 0.745_355_992_499_929_9; // sqrt(5)/3
const TWO_THIRDS: f64 = 2.0 / 3.0;

impl Immersion for SquashedSphere {
    fn eval(&self, q: &Quat) -> ImOctonion {
        let i = quat_basis(0);
        let ad = q.mul(&i).mul(&q.conj());
        embed_im_h(&ad)
            .scale(SQRT5_OVER_3)
            .add(&embed_h_eps(&q.conj()).scale(TWO_THIRDS))
    }

    fn jet2(&self, q: &Quat) -> Jet2 {
        let i = quat_basis(0);
        let qc = q.conj();
        let point = self.eval(q);
        let comm = |a: &Quat, b: &Quat| a.mul(b).add(&b.mul(a).scale(-1.0));
        let mut jacobian = [ImOctonion::zero(); 3];
        let mut hessian = [[ImOctonion::zero(); 3]; 3];
        let e: [Quat; 3] = [quat_basis(0), quat_basis(1), quat_basis(2)];
        for a in 0..3 {
            // Ad term: q [e_a, i] conj(q)
            let ad = q.mul(&comm(&e[a], &i)).mul(&qc);
            // conj term: -e_a conj(q) times epsilon
            let cj = e[a].mul(&qc).scale(-1.0);
            jacobian[a] = embed_im_h(&ad)
                .scale(SQRT5_OVER_3)
                .add(&embed_h_eps(&cj).scale(TWO_THIRDS));
        }
        for a in 0..3 {
            for b in a..3 {
                // Ad term: (1/2) q ([e_a,[e_b,i]] + [e_b,[e_a,i]]) conj(q)
                let inner = comm(&e[a], &comm(&e[b], &i)).add(&comm(&e[b], &comm(&e[a], &i)));
                let ad = q.mul(&inner).mul(&qc).scale(0.5);
                // conj term: (e_a e_b + e_b e_a)/2 conj(q) = -delta_ab conj(q)
                let mut h = embed_im_h(&ad).scale(SQRT5_OVER_3);
                if a == b {
                    h = h.add(&embed_h_eps(&qc).scale(-TWO_THIRDS));
                }
                hessian[a][b] = h;
                hessian[b][a] = h;
            }
        }
        Jet2 {
            point,
            jacobian,
            hessian,
        }
    }

    fn topology(&self) -> TopologyTag {
        TopologyTag::S3
    }

    fn orientation_sign(&self) -> f64 {
        self.orientation
    }

    fn deck_group(&self) -> Vec<Quat> {
        vec![Quat::ONE]
    }
}

// ---------------------------------------------------------------------------
// complex 3x3 helpers for conic lifts

type C64 = [f64; 2];

fn cadd(a: C64, b: C64) -> C64 {
    [a[0] + b[0], a[1] + b[1]]
}

fn cmul(a: C64, b: C64) -> C64 {
    [a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]]
}

fn csub(a: C64, b: C64) -> C64 {
    [a[0] - b[0], a[1] - b[1]]
}

fn cscale(a: C64, t: f64) -> C64 {
    [a[0] * t, a[1] * t]
}

fn cinv(a: C64) -> C64 {
    let d = a[0] * a[0] + a[1] * a[1];
    [a[0] / d, -a[1] / d]
}

type CMat3 = [[C64; 3]; 3];
type CVec3 = [C64; 3];

fn cmat_mul(a: &CMat3, b: &CMat3) -> CMat3 {
    let mut out = [[[0.0; 2]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut s = [0.0; 2];
            for k in 0..3 {
                s = cadd(s, cmul(a[i][k], b[k][j]));
            }
            out[i][j] = s;
        }
    }
    out
}

fn cmat_vec(a: &CMat3, v: &CVec3) -> CVec3 {
    let mut out = [[0.0; 2]; 3];
    for i in 0..3 {
        let mut s = [0.0; 2];
        for k in 0..3 {
            s = cadd(s, cmul(a[i][k], v[k]));
        }
        out[i] = s;
    }
    out
}

fn cmat_det(a: &CMat3) -> C64 {
    let m = |i: usize, j: usize| a[i][j];
    let t1 = cmul(m(0, 0), csub(cmul(m(1, 1), m(2, 2)), cmul(m(1, 2), m(2, 1))));
    let t2 = cmul(m(0, 1), csub(cmul(m(1, 0), m(2, 2)), cmul(m(1, 2), m(2, 0))));
    let t3 = cmul(m(0, 2), csub(cmul(m(1, 0), m(2, 1)), cmul(m(1, 1), m(2, 0))));
    cadd(csub(t1, t2), t3)
}

fn cmat_inv(a: &CMat3) -> CMat3 {
    let d = cinv(cmat_det(a));
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| {
        csub(cmul(a[r0][c0], a[r1][c1]), cmul(a[r0][c1], a[r1][c0]))
    };
    let mut adj = [[[0.0; 2]; 3]; 3];
    adj[0][0] = cof(1, 2, 1, 2);
    adj[0][1] = csub([0.0; 2], cof(0, 2, 1, 2));
    adj[0][2] = cof(0, 1, 1, 2);
    adj[1][0] = csub([0.0; 2], cof(1, 2, 0, 2));
    adj[1][1] = cof(0, 2, 0, 2);
    adj[1][2] = csub([0.0; 2], cof(0, 1, 0, 2));
    adj[2][0] = cof(1, 2, 0, 1);
    adj[2][1] = csub([0.0; 2], cof(0, 2, 0, 1));
    adj[2][2] = cof(0, 1, 0, 1);
    let mut out = [[[0.0; 2]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = cmul(adj[i][j], d);
        }
    }
    out
}

/// Principal square root of a complex (symmetric) 3x3 matrix by the
/// Denman-Beavers iteration. The caller scales/rotates the input so no
/// eigenvalue sits on the negative real axis.
fn cmat_sqrt(c: &CMat3) -> Option<CMat3> {
    let mut y = *c;
    let mut z: CMat3 = [[[0.0; 2]; 3]; 3];
    for (i, row) in z.iter_mut().enumerate() {
        row[i] = [1.0, 0.0];
    }
    for _ in 0..80 {
        let yi = cmat_inv(&y);
        let zi = cmat_inv(&z);
        let mut ynew = [[[0.0; 2]; 3]; 3];
        let mut znew = [[[0.0; 2]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                ynew[i][j] = cscale(cadd(y[i][j], zi[i][j]), 0.5);
                znew[i][j] = cscale(cadd(z[i][j], yi[i][j]), 0.5);
            }
        }
        let mut diff = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let d = csub(ynew[i][j], y[i][j]);
                diff = diff.max(fp::abs(d[0]) + fp::abs(d[1]));
            }
        }
        y = ynew;
        z = znew;
        if diff < 1e-15 {
            break;
        }
    }
    // verify y y = c
    let yy = cmat_mul(&y, &y);
    let mut res = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let d = csub(yy[i][j], c[i][j]);
            res = res.max(fp::abs(d[0]) + fp::abs(d[1]));
        }
    }
    if res < 1e-9 {
        Some(y)
    } else {
        None
    }
}

/// Hopf lift of a smooth plane conic z^T C z = 0: the circle bundle
/// { z in S^5 : conic(z) = 0 } immersed into S^5 = eps-perp cap S^6, with
/// C^3 realized as the J_eps-complex structure on T_eps S^6. Parametrized by
/// the SO(3) cover: q -> normalize(B^{-1} R(q) z0) with C = B^T B.
pub struct HopfLift {
    binv: CMat3,
    orientation: f64,
}

impl HopfLift {
    pub fn new(conic: CMat3) -> Result<Self, GeomError> {
        // symmetrize defensively and check smoothness
        let mut c = conic;
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] = cscale(cadd(conic[i][j], conic[j][i]), 0.5);
            }
        }
        let det = cmat_det(&c);
        let mut scale = 0.0f64;
        for row in &c {
            for v in row {
                scale = scale.max(fp::abs(v[0]) + fp::abs(v[1]));
            }
        }
        let det_abs = fp::hypot(det[0], det[1]);
        if det_abs < 1e-12 * scale * scale * scale {
            return Err(GeomError::SingularConic { det_abs });
        }
        // the conic is invariant under global complex scaling; rotate the
        // phase until the principal square root converges
        let mut b = None;
        for k in 0..8 {
            let theta = 0.37 * k as f64;
            let ph = [fp::cos(theta) / scale, fp::sin(theta) / scale];
            let mut cs = c;
            for row in cs.iter_mut() {
                for v in row.iter_mut() {
                    *v = cmul(*v, ph);
                }
            }
            if let Some(s) = cmat_sqrt(&cs) {
                b = Some(s);
                break;
            }
        }
        let b = b.ok_or(GeomError::SingularConic { det_abs })?;
        let mut lift = HopfLift {
            binv: cmat_inv(&b),
            orientation: 1.0,
        };
        lift.orientation = calibrate_orientation(&lift);
        Ok(lift)
    }

    /// The standard quadric z1^2 + z2^2 + z3^2 = 0, whose lift is L2.
    pub fn standard_quadric() -> Self {
        let mut c: CMat3 = [[[0.0; 2]; 3]; 3];
        for (i, row) in c.iter_mut().enumerate() {
            row[i] = [1.0, 0.0];
        }
        HopfLift::new(c).expect("identity conic is smooth")
    }

    fn xi_jet(&self, q: &Quat) -> (CVec3, [CVec3; 3], [[CVec3; 3]; 3]) {
        // z0 = (1, i, 0)/sqrt2; xi(s) = Binv R(q) exp(2 [v]x) z0
        let r = q.rotation_matrix();
        let inv_sqrt2 = core::f64::consts::FRAC_1_SQRT_2;
        // columns of the real actions on the real and imaginary parts
        let apply_real = |m: &[[f64; 3]; 3], v: &CVec3| -> CVec3 {
            let mut out = [[0.0; 2]; 3];
            for i in 0..3 {
                let mut re = 0.0;
                let mut im = 0.0;
                for k in 0..3 {
                    re += m[i][k] * v[k][0];
                    im += m[i][k] * v[k][1];
                }
                out[i] = [re, im];
            }
            out
        };
        let z0: CVec3 = [[inv_sqrt2, 0.0], [0.0, inv_sqrt2], [0.0, 0.0]];
        let ax = |a: usize| -> [[f64; 3]; 3] {
            // cross-product matrix of the basis axis
            let mut m = [[0.0; 3]; 3];
            let e: [f64; 3] = {
                let mut v = [0.0; 3];
                v[a] = 1.0;
                v
            };
            m[0][1] = -e[2];
            m[0][2] = e[1];
            m[1][0] = e[2];
            m[1][2] = -e[0];
            m[2][0] = -e[1];
            m[2][1] = e[0];
            m
        };
        let matmul3 = |a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]| -> [[f64; 3]; 3] {
            let mut out = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        out[i][j] += a[i][k] * b[k][j];
                    }
                }
            }
            out
        };
        let val = apply_real(&r, &z0);
        let mut dv = [[[0.0; 2]; 3]; 3];
        let mut ddv = [[[[0.0; 2]; 3]; 3]; 3];
        for a in 0..3 {
            let ra = matmul3(&r, &ax(a));
            dv[a] = apply_real(&ra, &z0);
            for b in 0..3 {
                let mut m = matmul3(&matmul3(&r, &ax(a)), &ax(b));
                let m2 = matmul3(&matmul3(&r, &ax(b)), &ax(a));
                for i in 0..3 {
                    for j in 0..3 {
                        m[i][j] = 2.0 * (m[i][j] + m2[i][j]);
                    }
                }
                ddv[a][b] = apply_real(&m, &z0);
            }
            for v in dv[a].iter_mut() {
                *v = cscale(*v, 2.0);
            }
        }
        let bi = &self.binv;
        let val = cmat_vec(bi, &val);
        let mut out_d = [[[0.0; 2]; 3]; 3];
        let mut out_dd = [[[[0.0; 2]; 3]; 3]; 3];
        for a in 0..3 {
            out_d[a] = cmat_vec(bi, &dv[a]);
            for b in 0..3 {
                out_dd[a][b] = cmat_vec(bi, &ddv[a][b]);
            }
        }
        (val, out_d, out_dd)
    }
}

/// Unitary identification C^3 -> eps-perp subset Im O: the basis vector u_a
/// is e_{a+1} and i u_a maps to J_eps u_a = eps x u_a = -e_{a+5}.
fn embed_c3(z: &CVec3) -> ImOctonion {
    let mut c = [0.0; 7];
    for a in 0..3 {
        c[a] = z[a][0];
        c[4 + a] = -z[a][1];
    }
    ImOctonion(c)
}

impl Immersion for HopfLift {
    fn eval(&self, q: &Quat) -> ImOctonion {
        let (xi, _, _) = self.xi_jet(q);
        embed_c3(&xi).normalized()
    }

    fn jet2(&self, q: &Quat) -> Jet2 {
        let (xi, dxi, ddxi) = self.xi_jet(q);
        let u = embed_c3(&xi);
        let mut du = [ImOctonion::zero(); 3];
        let mut ddu = [[ImOctonion::zero(); 3]; 3];
        for a in 0..3 {
            du[a] = embed_c3(&dxi[a]);
            for b in 0..3 {
                ddu[a][b] = embed_c3(&ddxi[a][b]);
            }
        }
        normalize_jet2(&u, &du, &ddu)
    }

    fn topology(&self) -> TopologyTag {
        TopologyTag::Rp3
    }

    fn orientation_sign(&self) -> f64 {
        self.orientation
    }

    fn deck_group(&self) -> Vec<Quat> {
        vec![Quat::ONE, Quat::ONE.scale(-1.0)]
    }
}

/// L3 / L4: SO(3)-orbits of the completely reducible harmonic cubics inside
/// the irreducible 7-dimensional representation, pushed to Im O through the
/// cross-product intertwiner.
pub struct IrrepOrbit {
    data: IrrepData,
    p: [f64; 7],
    tag: TopologyTag,
    orientation: f64,
    deck: Vec<Quat>,
}

impl IrrepOrbit {
    pub fn new(data: &IrrepData, which: usize) -> Self {
        let (p, tag) = if which == 3 {
            (data.p3, TopologyTag::So3ModD3)
        } else {
            (data.p4, TopologyTag::So3ModA4)
        };
        // deck group: binary-icosahedral elements stabilizing p
        let deck: Vec<Quat> = crate::so3rep::binary_icosahedral()
            .into_iter()
            .filter(|q| {
                let rp = data.rho(&q.rotation_matrix()).apply(&p);
                rp.iter()
                    .zip(p.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    < 1e-16
            })
            .collect();
        let mut orbit = IrrepOrbit {
            data: data.clone(),
            p,
            tag,
            orientation: 1.0,
            deck,
        };
        orbit.orientation = calibrate_orientation(&orbit);
        orbit
    }
}

impl Immersion for IrrepOrbit {
    fn eval(&self, q: &Quat) -> ImOctonion {
        let rho = self.data.rho(&q.rotation_matrix());
        let v: [f64; 7] = rho.apply(&self.p).try_into().unwrap();
        self.data.to_im_octonion(&v)
    }

    fn jet2(&self, q: &Quat) -> Jet2 {
        let rho = self.data.rho(&q.rotation_matrix());
        let gp = |m: &Mat| -> [f64; 7] { m.apply(&self.p).try_into().unwrap() };
        let point7 = gp(&rho);
        let mut jacobian = [ImOctonion::zero(); 3];
        let mut hessian = [[ImOctonion::zero(); 3]; 3];
        // d/ds rho(R(q exp(s e_a))) = rho(R(q)) 2 G_a
        let g = &self.data.gens;
        for a in 0..3 {
            let ga_p: [f64; 7] = g[a].apply(&self.p).try_into().unwrap();
            let mut v = [0.0; 7];
            for (i, vi) in v.iter_mut().enumerate() {
                let mut s = 0.0;
                for k in 0..7 {
                    s += rho[(i, k)] * ga_p[k];
                }
                *vi = 2.0 * s;
            }
            jacobian[a] = self.data.to_im_octonion(&v);
        }
        for a in 0..3 {
            for b in a..3 {
                let gb_p = g[b].apply(&self.p);
                let ga_p = g[a].apply(&self.p);
                let gab = g[a].apply(&gb_p);
                let gba = g[b].apply(&ga_p);
                let mut v = [0.0; 7];
                for (i, vi) in v.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for k in 0..7 {
                        s += rho[(i, k)] * (gab[k] + gba[k]);
                    }
                    *vi = 2.0 * s;
                }
                let h = self.data.to_im_octonion(&v);
                hessian[a][b] = h;
                hessian[b][a] = h;
            }
        }
        Jet2 {
            point: self.data.to_im_octonion(&point7),
            jacobian,
            hessian,
        }
    }

    fn topology(&self) -> TopologyTag {
        self.tag
    }

    fn orientation_sign(&self) -> f64 {
        self.orientation
    }

    fn deck_group(&self) -> Vec<Quat> {
        self.deck.clone()
    }
}

/// An immersion composed with a fixed G2 element (used for invariance tests).
pub struct Rotated {
    g: Mat,
    inner: Box<dyn Immersion>,
    orientation: f64,
}

impl Rotated {
    pub fn new(g: Mat, inner: Box<dyn Immersion>) -> Self {
        let orientation = inner.orientation_sign();
        Rotated {
            g,
            inner,
            orientation,
        }
    }

    fn map(&self, v: &ImOctonion) -> ImOctonion {
        let out = self.g.apply(&v.0);
        let mut c = [0.0; 7];
        c.copy_from_slice(&out);
        ImOctonion(c)
    }
}

impl Immersion for Rotated {
    fn eval(&self, q: &Quat) -> ImOctonion {
        self.map(&self.inner.eval(q))
    }

    fn jet2(&self, q: &Quat) -> Jet2 {
        let j = self.inner.jet2(q);
        let mut jacobian = [ImOctonion::zero(); 3];
        let mut hessian = [[ImOctonion::zero(); 3]; 3];
        for a in 0..3 {
            jacobian[a] = self.map(&j.jacobian[a]);
            for b in 0..3 {
                hessian[a][b] = self.map(&j.hessian[a][b]);
            }
        }
        Jet2 {
            point: self.map(&j.point),
            jacobian,
            hessian,
        }
    }

    fn topology(&self) -> TopologyTag {
        self.inner.topology()
    }

    fn orientation_sign(&self) -> f64 {
        self.orientation
    }

    fn deck_group(&self) -> Vec<Quat> {
        self.inner.deck_group()
    }
}

/// Example ids L0..L4 from the homogeneous classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ExampleId {
    L0,
    L1,
    L2,
    L3,
    L4,
}

impl ExampleId {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "L0" | "l0" => Some(ExampleId::L0),
            "L1" | "l1" => Some(ExampleId::L1),
            "L2" | "l2" => Some(ExampleId::L2),
            "L3" | "l3" => Some(ExampleId::L3),
            "L4" | "l4" => Some(ExampleId::L4),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExampleId::L0 => "L0",
            ExampleId::L1 => "L1",
            ExampleId::L2 => "L2",
            ExampleId::L3 => "L3",
            ExampleId::L4 => "L4",
        }
    }
}

/// Construct one of the five homogeneous examples. L3 and L4 require the
/// irreducible SO(3) data.
pub fn example_immersion(id: ExampleId, irrep: Option<&IrrepData>) -> Result<Box<dyn Immersion>, GeomError> {
    match id {
        ExampleId::L0 => Ok(Box::new(GreatSphere::new())),
        ExampleId::L1 => Ok(Box::new(SquashedSphere::new())),
        ExampleId::L2 => Ok(Box::new(HopfLift::standard_quadric())),
        ExampleId::L3 => {
            let data = irrep.ok_or(GeomError::IrrepDataMissing)?;
            Ok(Box::new(IrrepOrbit::new(data, 3)))
        }
        ExampleId::L4 => {
            let data = irrep.ok_or(GeomError::IrrepDataMissing)?;
            Ok(Box::new(IrrepOrbit::new(data, 4)))
        }
    }
}

/// Second-order jet of u/|u| from the jet of u.
pub fn normalize_jet2(u: &ImOctonion, du: &[ImOctonion; 3], ddu: &[[ImOctonion; 3]; 3]) -> Jet2 {
    let n2 = u.dot(u);
    let n = fp::sqrt(n2);
    let n3 = n2 * n;
    let n5 = n2 * n3;
    let point = u.scale(1.0 / n);
    let c: [f64; 3] = [u.dot(&du[0]), u.dot(&du[1]), u.dot(&du[2])];
    let mut jacobian = [ImOctonion::zero(); 3];
    for a in 0..3 {
        jacobian[a] = du[a].scale(1.0 / n).sub(&u.scale(c[a] / n3));
    }
    let mut hessian = [[ImOctonion::zero(); 3]; 3];
    for a in 0..3 {
        for b in a..3 {
            let cab = du[a].dot(&du[b]) + u.dot(&ddu[a][b]);
            let h = ddu[a][b]
                .scale(1.0 / n)
                .sub(&du[a].scale(c[b] / n3))
                .sub(&du[b].scale(c[a] / n3))
                .sub(&u.scale(cab / n3))
                .add(&u.scale(3.0 * c[a] * c[b] / n5));
            hessian[a][b] = h;
            hessian[b][a] = h;
        }
    }
    Jet2 {
        point,
        jacobian,
        hessian,
    }
}

/// Pointwise geometry of an immersion at a chart point.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeometrySample {
    /// chart center (unit quaternion components)
    pub point: [f64; 4],
    pub gram: [[f64; 3]; 3],
    pub omega_residual: f64,
    pub mean_curvature: [f64; 7],
    pub mean_curvature_norm: f64,
    /// components of -2 omega(H, .) in the chart coframe
    pub maslov: [f64; 3],
    pub phi_abs: f64,
    /// Im Phi on the oriented unit tangent 3-vector
    pub im_phi_oriented: f64,
}

/// Computes the induced metric, Lagrangian residual, mean curvature (removing
/// the sphere's own second fundamental form), Maslov components and the
/// calibration values at a chart point.
pub fn geometry_sample(imm: &dyn Immersion, q: &Quat) -> Result<GeometrySample, GeomError> {
    let nk = NkSphere::standard();
    let jet = imm.jet2(q);
    let p = &jet.point;
    let mut gram = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            gram[a][b] = jet.jacobian[a].dot(&jet.jacobian[b]);
        }
    }
    let det_g = linalg::det3(&gram);
    if det_g < 1e-16 {
        return Err(GeomError::DegenerateJacobian {
            min_singular: det_g.max(0.0),
        });
    }
    let ginv = linalg::inv3(&gram);

    let mut omega_residual = 0.0f64;
    for a in 0..3 {
        for b in (a + 1)..3 {
            omega_residual =
                omega_residual.max(fp::abs(nk.omega_raw(p, &jet.jacobian[a], &jet.jacobian[b])));
        }
    }

    // mean curvature: trace of the second fundamental form of L in S^6
    let mut h = ImOctonion::zero();
    for a in 0..3 {
        for b in 0..3 {
            // remove the sphere's second fundamental form: hess + g_ab p is
            // tangent to S^6
            let hab = jet.hessian[a][b].add(&p.scale(gram[a][b]));
            h = h.add(&hab.scale(ginv[a][b]));
        }
    }
    // project off T L
    let t = [
        h.dot(&jet.jacobian[0]),
        h.dot(&jet.jacobian[1]),
        h.dot(&jet.jacobian[2]),
    ];
    let coef = linalg::mat3_vec(&ginv, &t);
    for a in 0..3 {
        h = h.sub(&jet.jacobian[a].scale(coef[a]));
    }
    // and off the radial direction (analytically zero, clears roundoff)
    h = h.sub(&p.scale(p.dot(&h)));

    let maslov = [
        -2.0 * nk.omega_raw(p, &h, &jet.jacobian[0]),
        -2.0 * nk.omega_raw(p, &h, &jet.jacobian[1]),
        -2.0 * nk.omega_raw(p, &h, &jet.jacobian[2]),
    ];

    let (re, im) = nk.complex_volume_raw(p, &jet.jacobian[0], &jet.jacobian[1], &jet.jacobian[2]);
    let sd = fp::sqrt(det_g);
    let or = imm.orientation_sign();
    let re_phi = or * re / sd;
    let im_phi = or * im / sd;

    Ok(GeometrySample {
        point: q.0,
        gram,
        omega_residual,
        mean_curvature: h.0,
        mean_curvature_norm: h.norm(),
        maslov,
        phi_abs: fp::hypot(re_phi, im_phi),
        im_phi_oriented: im_phi,
    })
}

/// Orientation sign making Im Phi(xi) = -1 at the identity chart point.
fn calibrate_orientation(imm: &dyn Immersion) -> f64 {
    let nk = NkSphere::standard();
    let jet = imm.jet2(&Quat::ONE);
    let (_, im) = nk.complex_volume_raw(
        &jet.point,
        &jet.jacobian[0],
        &jet.jacobian[1],
        &jet.jacobian[2],
    );
    if im > 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Sorted eigenvalues of the induced metric in the moving chart frame;
/// constant over the manifold exactly for the homogeneous examples.
pub fn gram_eigenvalues(imm: &dyn Immersion, q: &Quat) -> Result<[f64; 3], GeomError> {
    let s = geometry_sample(imm, q)?;
    Ok(linalg::eigvals_sym3(&s.gram))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::octonion::random_g2;
    use crate::rng::Rng;
    use crate::so3rep::build_irreducible_so3;

    fn random_unit_quat(rng: &mut Rng) -> Quat {
        let mut c = [0.0; 4];
        rng.fill_normal(&mut c);
        Quat(c).normalized()
    }

    fn fd_check_jet(imm: &dyn Immersion, q: &Quat) {
        // first and second chart derivatives against central differences
        let jet = imm.jet2(q);
        let h = 1e-5;
        for a in 0..3 {
            let mut sp = [0.0; 3];
            sp[a] = h;
            let mut sm = [0.0; 3];
            sm[a] = -h;
            let fp_ = imm.eval(&chart_point(q, &sp));
            let fm = imm.eval(&chart_point(q, &sm));
            let fd = fp_.sub(&fm).scale(1.0 / (2.0 * h));
            assert!(
                fd.sub(&jet.jacobian[a]).norm() < 1e-8,
                "jacobian {a} mismatch {}",
                fd.sub(&jet.jacobian[a]).norm()
            );
        }
        for a in 0..3 {
            for b in 0..3 {
                let eval_at = |sa: f64, sb: f64| -> ImOctonion {
                    let mut s = [0.0; 3];
                    s[a] += sa;
                    s[b] += sb;
                    imm.eval(&chart_point(q, &s))
                };
                let fd = eval_at(h, h)
                    .sub(&eval_at(h, -h))
                    .sub(&eval_at(-h, h))
                    .add(&eval_at(-h, -h))
                    .scale(1.0 / (4.0 * h * h));
                let got = if a == b {
                    // diagonal: use standard second difference
                    let f0 = imm.eval(q);
                    let mut sp = [0.0; 3];
                    sp[a] = h;
                    let mut sm = [0.0; 3];
                    sm[a] = -h;
                    imm.eval(&chart_point(q, &sp))
                        .add(&imm.eval(&chart_point(q, &sm)))
                        .sub(&f0.scale(2.0))
                        .scale(1.0 / (h * h))
                } else {
                    fd
                };
                assert!(
                    got.sub(&jet.hessian[a][b]).norm() < 5e-5,
                    "hessian ({a},{b}) mismatch {}",
                    got.sub(&jet.hessian[a][b]).norm()
                );
            }
        }
    }

    #[test]
    fn l0_hits_epsilon_at_identity() {
        let l0 = GreatSphere::new();
        let p = l0.eval(&Quat::ONE);
        assert!(p.sub(&ImOctonion::basis(EPSILON_INDEX)).norm() < 1e-15);
    }

    #[test]
    fn l1_value_and_norm() {
        let l1 = SquashedSphere::new();
        let p = l1.eval(&Quat::ONE);
        let expect = ImOctonion::basis(0)
            .scale(SQRT5_OVER_3)
            .add(&ImOctonion::basis(EPSILON_INDEX).scale(TWO_THIRDS));
        assert!(p.sub(&expect).norm() < 1e-15);
        let mut rng = Rng::new(51);
        for _ in 0..200 {
            let q = random_unit_quat(&mut rng);
            assert!((l1.eval(&q).norm() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn jets_match_finite_differences() {
        let mut rng = Rng::new(53);
        let data = build_irreducible_so3().unwrap();
        let imms: Vec<Box<dyn Immersion>> = vec![
            Box::new(GreatSphere::new()),
            Box::new(SquashedSphere::new()),
            Box::new(HopfLift::standard_quadric()),
            Box::new(IrrepOrbit::new(&data, 3)),
            Box::new(IrrepOrbit::new(&data, 4)),
        ];
        for imm in &imms {
            for _ in 0..3 {
                let q = random_unit_quat(&mut rng);
                fd_check_jet(imm.as_ref(), &q);
            }
        }
    }

    #[test]
    fn all_examples_are_minimal_calibrated_lagrangians() {
        let mut rng = Rng::new(55);
        let data = build_irreducible_so3().unwrap();
        let imms: Vec<(&str, Box<dyn Immersion>)> = vec![
            ("L0", Box::new(GreatSphere::new())),
            ("L1", Box::new(SquashedSphere::new())),
            ("L2", Box::new(HopfLift::standard_quadric())),
            ("L3", Box::new(IrrepOrbit::new(&data, 3))),
            ("L4", Box::new(IrrepOrbit::new(&data, 4))),
        ];
        for (name, imm) in &imms {
            let mut max_omega = 0.0f64;
            let mut max_h = 0.0f64;
            let mut max_phi_dev = 0.0f64;
            let mut max_imphi_dev = 0.0f64;
            let mut max_maslov = 0.0f64;
            for _ in 0..60 {
                let q = random_unit_quat(&mut rng);
                let s = geometry_sample(imm.as_ref(), &q).unwrap();
                max_omega = max_omega.max(s.omega_residual);
                max_h = max_h.max(s.mean_curvature_norm);
                max_phi_dev = max_phi_dev.max((s.phi_abs - 1.0).abs());
                max_imphi_dev = max_imphi_dev.max((s.im_phi_oriented + 1.0).abs());
                max_maslov = max_maslov.max(s.maslov.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            }
            assert!(max_omega < 1e-9, "{name}: omega residual {max_omega}");
            assert!(max_h < 1e-6, "{name}: |H| = {max_h}");
            assert!(max_phi_dev < 1e-9, "{name}: |Phi| dev {max_phi_dev}");
            assert!(max_imphi_dev < 1e-9, "{name}: Im Phi dev {max_imphi_dev}");
            assert!(
                max_maslov < 10.0 * max_h + 1e-12,
                "{name}: maslov {max_maslov} vs H {max_h}"
            );
        }
    }

    #[test]
    fn l0_is_totally_geodesic() {
        let l0 = GreatSphere::new();
        let mut rng = Rng::new(57);
        for _ in 0..100 {
            let q = random_unit_quat(&mut rng);
            let s = geometry_sample(&l0, &q).unwrap();
            assert!(s.mean_curvature_norm < 1e-13);
        }
    }

    #[test]
    fn coassociative_plane_of_l0() {
        // phi vanishes identically on H epsilon
        let mut rng = Rng::new(59);
        for _ in 0..500 {
            let a = Quat([rng.normal(), rng.normal(), rng.normal(), rng.normal()]);
            let b = Quat([rng.normal(), rng.normal(), rng.normal(), rng.normal()]);
            let c = Quat([rng.normal(), rng.normal(), rng.normal(), rng.normal()]);
            let v = crate::octonion::phi3(&embed_h_eps(&a), &embed_h_eps(&b), &embed_h_eps(&c));
            assert!(v.abs() < 1e-13);
        }
    }

    #[test]
    fn homogeneity_of_induced_metrics() {
        let mut rng = Rng::new(61);
        let data = build_irreducible_so3().unwrap();
        let imms: Vec<(&str, Box<dyn Immersion>, bool)> = vec![
            ("L1", Box::new(SquashedSphere::new()), false),
            ("L2", Box::new(HopfLift::standard_quadric()), false),
            ("L3", Box::new(IrrepOrbit::new(&data, 3)), false),
            ("L4", Box::new(IrrepOrbit::new(&data, 4)), true),
        ];
        for (name, imm, constant_curv) in &imms {
            let base = gram_eigenvalues(imm.as_ref(), &Quat::ONE).unwrap();
            for _ in 0..30 {
                let q = random_unit_quat(&mut rng);
                let ev = gram_eigenvalues(imm.as_ref(), &q).unwrap();
                for k in 0..3 {
                    assert!(
                        (ev[k] - base[k]).abs() < 1e-9,
                        "{name}: eigenvalue {k} drifts: {} vs {}",
                        ev[k],
                        base[k]
                    );
                }
            }
            if *constant_curv {
                assert!(
                    (base[0] - base[2]).abs() < 1e-9,
                    "{name}: expected round metric, got {base:?}"
                );
            }
        }
        // L1 and L2: Berger metrics, exactly two distinct eigenvalues
        for name in ["L1", "L2"] {
            let imm: Box<dyn Immersion> = if name == "L1" {
                Box::new(SquashedSphere::new())
            } else {
                Box::new(HopfLift::standard_quadric())
            };
            let ev = gram_eigenvalues(imm.as_ref(), &Quat::ONE).unwrap();
            let distinct = (ev[0] - ev[1]).abs() > 1e-6 || (ev[1] - ev[2]).abs() > 1e-6;
            let pair = (ev[0] - ev[1]).abs() < 1e-9 || (ev[1] - ev[2]).abs() < 1e-9;
            assert!(distinct && pair, "{name}: not a Berger spectrum: {ev:?}");
        }
    }

    #[test]
    fn hopf_lift_identity_matches_l2_and_lies_in_s5() {
        let lift = HopfLift::standard_quadric();
        let mut rng = Rng::new(63);
        let eps = ImOctonion::basis(EPSILON_INDEX);
        for _ in 0..200 {
            let q = random_unit_quat(&mut rng);
            let p = lift.eval(&q);
            assert!(p.dot(&eps).abs() < 1e-12, "not in eps-perp");
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(lift.topology(), TopologyTag::Rp3);
        // deck invariance under the antipode
        for _ in 0..50 {
            let q = random_unit_quat(&mut rng);
            let p1 = lift.eval(&q);
            let p2 = lift.eval(&q.scale(-1.0));
            assert!(p1.sub(&p2).norm() < 1e-13);
        }
    }

    #[test]
    fn general_conic_lift_is_lagrangian() {
        // a non-diagonal smooth conic
        let mut c: CMat3 = [[[0.0; 2]; 3]; 3];
        c[0][0] = [1.0, 0.3];
        c[1][1] = [0.5, -0.2];
        c[2][2] = [1.0, 0.0];
        c[0][1] = [0.2, 0.1];
        c[1][0] = [0.2, 0.1];
        c[1][2] = [-0.1, 0.4];
        c[2][1] = [-0.1, 0.4];
        let lift = HopfLift::new(c).unwrap();
        let mut rng = Rng::new(65);
        for _ in 0..100 {
            let q = random_unit_quat(&mut rng);
            let s = geometry_sample(&lift, &q).unwrap();
            assert!(s.omega_residual < 1e-9, "omega residual {}", s.omega_residual);
            assert!((s.phi_abs - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn singular_conic_is_rejected() {
        let mut c: CMat3 = [[[0.0; 2]; 3]; 3];
        c[0][0] = [1.0, 0.0];
        c[1][1] = [1.0, 0.0];
        // rank 2: det = 0
        match HopfLift::new(c) {
            Err(GeomError::SingularConic { .. }) => {}
            Err(other) => panic!("expected singular conic, got {other:?}"),
            Ok(_) => panic!("expected singular conic, got a lift"),
        }
    }

    #[test]
    fn deck_groups_have_expected_orders() {
        let data = build_irreducible_so3().unwrap();
        let l3 = IrrepOrbit::new(&data, 3);
        let l4 = IrrepOrbit::new(&data, 4);
        assert_eq!(l3.deck_group().len(), 12);
        assert_eq!(l4.deck_group().len(), 24);
        let mut rng = Rng::new(67);
        for imm in [&l3, &l4] {
            for h in imm.deck_group() {
                let q = random_unit_quat(&mut rng);
                let p1 = imm.eval(&q);
                let p2 = imm.eval(&q.mul(&h));
                assert!(p1.sub(&p2).norm() < 1e-12, "deck invariance broken");
            }
        }
    }

    #[test]
    fn g2_rotation_preserves_geometry() {
        let mut rng = Rng::new(69);
        let g = random_g2(&mut rng);
        let inner = Box::new(SquashedSphere::new());
        let rotated = Rotated::new(g, inner);
        for _ in 0..40 {
            let q = random_unit_quat(&mut rng);
            let s = geometry_sample(&rotated, &q).unwrap();
            assert!(s.omega_residual < 1e-9);
            assert!(s.mean_curvature_norm < 1e-6);
            assert!((s.phi_abs - 1.0).abs() < 1e-9);
            assert!((s.im_phi_oriented + 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_jacobian_is_reported() {
        struct Collapsed;
        impl Immersion for Collapsed {
            fn eval(&self, _q: &Quat) -> ImOctonion {
                ImOctonion::basis(0)
            }
            fn jet2(&self, _q: &Quat) -> Jet2 {
                Jet2 {
                    point: ImOctonion::basis(0),
                    jacobian: [ImOctonion::zero(); 3],
                    hessian: [[ImOctonion::zero(); 3]; 3],
                }
            }
            fn topology(&self) -> TopologyTag {
                TopologyTag::Custom
            }
            fn orientation_sign(&self) -> f64 {
                1.0
            }
            fn deck_group(&self) -> Vec<Quat> {
                vec![Quat::ONE]
            }
        }
        match geometry_sample(&Collapsed, &Quat::ONE) {
            Err(GeomError::DegenerateJacobian { .. }) => {}
            other => panic!("expected degenerate jacobian, got {other:?}"),
        }
    }

    #[test]
    fn chart_transitions_roundtrip() {
        let mut rng = Rng::new(71);
        for _ in 0..100 {
            let c = random_unit_quat(&mut rng);
            let s = [rng.range(-0.8, 0.8), rng.range(-0.8, 0.8), rng.range(-0.8, 0.8)];
            let q = chart_point(&c, &s);
            let back = chart_coords(&c, &q);
            for k in 0..3 {
                assert!((back[k] - s[k]).abs() < 1e-12);
            }
        }
    }
}

//! The standard strict nearly Kahler structure on S^6 in Im O: metric, J,
//! fundamental 2-form, its exterior derivative, the complex volume form, the
//! cone 3-form, and a verifier suite for the structure equations.
//!
//! Closed forms used throughout: for p on the sphere and tangent u, v, w,
//!   J u = p x u,
//!   omega(u, v) = phi(p, u, v),
//!   d omega(u, v, w) = 3 phi(u, v, w),
//!   (nabla_u J) v = u x v - phi(p, u, v) p.
//! Each closed form is cross-validated against a finite-difference route in
//! the verifier (the derivative of J never gets written down in ambient
//! coordinates otherwise).

use alloc::string::String;
use alloc::vec::Vec;

use crate::fp;
use crate::octonion::{phi3, random_unit_im, ImOctonion};
use crate::rng::Rng;
use crate::GeomError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    p: ImOctonion,
}

impl SpherePoint {
    /// Renormalizes on construction; the direction must be nonzero.
    pub fn new(v: ImOctonion) -> Self {
        let n = v.norm();
        assert!(n > 1e-100, "cannot normalize the zero vector onto S^6");
        SpherePoint { p: v.scale(1.0 / n) }
    }

    #[inline]
    pub fn coords(&self) -> &ImOctonion {
        &self.p
    }

    pub fn basis(k: usize) -> Self {
        SpherePoint {
            p: ImOctonion::basis(k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    base: SpherePoint,
    vec: ImOctonion,
}

impl TangentVector {
    /// Projects out the radial component (which must be below 1e-12 relative
    /// for already-tangent data; larger components are simply removed).
    pub fn new(base: SpherePoint, v: ImOctonion) -> Self {
        let radial = base.p.dot(&v);
        TangentVector {
            base,
            vec: v.sub(&base.p.scale(radial)),
        }
    }

    #[inline]
    pub fn base(&self) -> &SpherePoint {
        &self.base
    }

    #[inline]
    pub fn vec(&self) -> &ImOctonion {
        &self.vec
    }

    pub fn dot(&self, o: &TangentVector) -> f64 {
        self.vec.dot(&o.vec)
    }

    pub fn norm(&self) -> f64 {
        self.vec.norm()
    }
}

fn same_base(a: &SpherePoint, b: &SpherePoint) -> bool {
    a.p.sub(&b.p).norm() < 1e-12
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConePoint {
    pub r: f64,
    pub p: SpherePoint,
}

impl ConePoint {
    pub fn new(r: f64, p: SpherePoint) -> Result<Self, GeomError> {
        if r <= 0.0 {
            return Err(GeomError::NonPositiveRadius);
        }
        Ok(ConePoint { r, p })
    }
}

/// A cone tangent vector split into radial and spherical parts.
#[derive(Debug, Clone, Copy)]
pub struct ConeVector {
    pub radial: f64,
    pub spherical: ImOctonion,
}

/// One structure-equation check inside a [`VerificationReport`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckResult {
    pub check_name: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
    pub all_pass: bool,
}

impl VerificationReport {
    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.pass)
    }
}

/// Tolerances and steps for the verifier; one record so convergence studies
/// have a single knob.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerifyConfig {
    pub fd_step: f64,
    pub tol_nearly_kahler: f64,
    pub tol_constant_type: f64,
    pub tol_re_phi: f64,
    pub tol_im_phi: f64,
    pub tol_cone_closed: f64,
    pub tol_cone_normal_form: f64,
    pub tol_domega_fd: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            fd_step: 1e-4,
            tol_nearly_kahler: 1e-7,
            tol_constant_type: 1e-8,
            tol_re_phi: 1e-10,
            tol_im_phi: 1e-6,
            tol_cone_closed: 1e-6,
            tol_cone_normal_form: 1e-9,
            tol_domega_fd: 1e-6,
        }
    }
}

/// The nearly Kahler 6-sphere. `lambda` is the constant type (1 for the
/// round structure; it only rescales the complex volume form here, the
/// deformation-side quadratic form takes its own lambda). `convention_sign`
/// exists as a negative control: setting it to -1 corrupts the complex
/// volume form so the structure-equation checks must fail.
#[derive(Debug, Clone, Copy)]
pub struct NkSphere {
    pub lambda: f64,
    pub convention_sign: f64,
}

impl Default for NkSphere {
    fn default() -> Self {
        Self::standard()
    }
}

impl NkSphere {
    pub fn standard() -> Self {
        NkSphere {
            lambda: 1.0,
            convention_sign: 1.0,
        }
    }

    pub fn corrupted() -> Self {
        NkSphere {
            lambda: 1.0,
            convention_sign: -1.0,
        }
    }

    /// J u = p x u.
    pub fn almost_complex(&self, p: &SpherePoint, u: &TangentVector) -> Result<TangentVector, GeomError> {
        if !same_base(p, u.base()) {
            return Err(GeomError::BaseMismatch);
        }
        Ok(TangentVector {
            base: *p,
            vec: p.p.cross(&u.vec),
        })
    }

    /// Raw J on an ambient vector that is assumed tangent at p.
    #[inline]
    pub fn j_raw(&self, p: &ImOctonion, u: &ImOctonion) -> ImOctonion {
        p.cross(u)
    }

    /// omega(u, v) = <J u, v> = phi(p, u, v).
    pub fn fundamental_form(&self, p: &SpherePoint, u: &TangentVector, v: &TangentVector) -> Result<f64, GeomError> {
        if !same_base(p, u.base()) || !same_base(p, v.base()) {
            return Err(GeomError::BaseMismatch);
        }
        Ok(phi3(&p.p, &u.vec, &v.vec))
    }

    #[inline]
    pub fn omega_raw(&self, p: &ImOctonion, u: &ImOctonion, v: &ImOctonion) -> f64 {
        phi3(p, u, v)
    }

    /// Closed-form d omega on tangent vectors: 3 phi(u, v, w).
    pub fn d_omega(&self, p: &SpherePoint, u: &TangentVector, v: &TangentVector, w: &TangentVector) -> Result<f64, GeomError> {
        if !same_base(p, u.base()) || !same_base(p, v.base()) || !same_base(p, w.base()) {
            return Err(GeomError::BaseMismatch);
        }
        Ok(3.0 * phi3(&u.vec, &v.vec, &w.vec))
    }

    #[inline]
    pub fn d_omega_raw(&self, u: &ImOctonion, v: &ImOctonion, w: &ImOctonion) -> f64 {
        3.0 * phi3(u, v, w)
    }

    /// Finite-difference exterior derivative of omega, via the commuting
    /// coordinate fields of the chart s -> normalize(p + s_i b_i).
    pub fn d_omega_fd(&self, p: &SpherePoint, u: &ImOctonion, v: &ImOctonion, w: &ImOctonion, h: f64) -> f64 {
        let dirs = [*u, *v, *w];
        let mut total = 0.0;
        for i in 0..3 {
            let (a, b) = match i {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let sign = if i == 1 { -1.0 } else { 1.0 };
            let eval = |t: f64| -> f64 {
                let mut s = [0.0; 3];
                s[i] = t;
                let (x, dx) = chart_eval(&p.p, &dirs, &s);
                self.omega_raw(&x, &dx[a], &dx[b])
            };
            total += sign * (eval(h) - eval(-h)) / (2.0 * h);
        }
        total
    }

    /// Complex volume form Phi(u,v,w) = (d omega(u,v,w) - i d omega(u,v,Jw)) / (3 lambda),
    /// returned as (re, im).
    pub fn complex_volume(&self, p: &SpherePoint, u: &TangentVector, v: &TangentVector, w: &TangentVector) -> Result<(f64, f64), GeomError> {
        if !same_base(p, u.base()) || !same_base(p, v.base()) || !same_base(p, w.base()) {
            return Err(GeomError::BaseMismatch);
        }
        Ok(self.complex_volume_raw(&p.p, &u.vec, &v.vec, &w.vec))
    }

    pub fn complex_volume_raw(&self, p: &ImOctonion, u: &ImOctonion, v: &ImOctonion, w: &ImOctonion) -> (f64, f64) {
        let jw = self.j_raw(p, w);
        let re = self.d_omega_raw(u, v, w) / (3.0 * self.lambda);
        let im = -self.d_omega_raw(u, v, &jw) / (3.0 * self.lambda);
        (self.convention_sign * re, self.convention_sign * im)
    }

    /// Im Phi evaluated on tangent vectors.
    pub fn im_phi_raw(&self, p: &ImOctonion, u: &ImOctonion, v: &ImOctonion, w: &ImOctonion) -> f64 {
        self.complex_volume_raw(p, u, v, w).1
    }

    /// Analytic (nabla_u J) v = u x v - phi(p, u, v) p.
    pub fn nabla_j(&self, p: &SpherePoint, u: &TangentVector, v: &TangentVector) -> Result<TangentVector, GeomError> {
        if !same_base(p, u.base()) || !same_base(p, v.base()) {
            return Err(GeomError::BaseMismatch);
        }
        let c = u.vec.cross(&v.vec);
        let radial = phi3(&p.p, &u.vec, &v.vec);
        Ok(TangentVector {
            base: *p,
            vec: c.sub(&p.p.scale(radial)),
        })
    }

    /// Finite-difference (nabla_u J) v: extends v by parallel transport along
    /// the great circle in direction u and differentiates J v centrally, with
    /// one Richardson level. `u` should be unit for the stated step to mean
    /// what it says.
    pub fn nabla_j_fd(&self, p: &SpherePoint, u: &ImOctonion, v: &ImOctonion, h: f64) -> ImOctonion {
        let eval = |t: f64| -> ImOctonion {
            // geodesic x(t) = cos(t) p + sin(t) u, transported frame
            let (c, s) = (fp::cos(t), fp::sin(t));
            let x = p.p.scale(c).add(&u.scale(s));
            let upar = u.dot(v);
            // transport: the u-component rotates with the frame, the rest is constant
            let vperp = v.sub(&u.scale(upar));
            let vt = vperp.add(&u.scale(upar * c)).add(&p.p.scale(-upar * s));
            x.cross(&vt)
        };
        let diff = |step: f64| -> ImOctonion {
            eval(step).sub(&eval(-step)).scale(1.0 / (2.0 * step))
        };
        let d1 = diff(h);
        let d2 = diff(h / 2.0);
        // Richardson: (4 d2 - d1) / 3, then project tangentially
        let d = d2.scale(4.0 / 3.0).sub(&d1.scale(1.0 / 3.0));
        let radial = p.p.dot(&d);
        d.sub(&p.p.scale(radial))
    }

    /// Baer's 3-form on the cone, phi(r, x) = (r^3/3) d omega + r^2 dr wedge omega.
    pub fn cone_form(&self, c: &ConePoint, a: &ConeVector, b: &ConeVector, d: &ConeVector) -> Result<f64, GeomError> {
        if c.r <= 0.0 {
            return Err(GeomError::NonPositiveRadius);
        }
        let r = c.r;
        let p = &c.p.p;
        let spherical = r * r * r / 3.0 * self.d_omega_raw(&a.spherical, &b.spherical, &d.spherical);
        let radial = r
            * r
            * (a.radial * self.omega_raw(p, &b.spherical, &d.spherical)
                - b.radial * self.omega_raw(p, &a.spherical, &d.spherical)
                + d.radial * self.omega_raw(p, &a.spherical, &b.spherical));
        Ok(spherical + radial)
    }

    /// Structure-equation verifier. Residual maxima over `samples` random
    /// points per check; see [`VerifyConfig`] for steps and tolerances.
    pub fn verify_structure(&self, samples: usize, cfg: &VerifyConfig, seed: u64) -> VerificationReport {
        let mut rng = Rng::new(seed);
        let h = cfg.fd_step;
        let mut checks: Vec<CheckResult> = Vec::new();

        // (a) nearly Kahler: (nabla_X J) X = 0 via finite differences
        let mut res_a = 0.0f64;
        // (b) constant type lambda = 1 via finite-difference nabla J
        let mut res_b = 0.0f64;
        // (c) d omega = 3 lambda Re Phi (algebraic at lambda = 1)
        let mut res_c = 0.0f64;
        // closed form vs finite difference d omega
        let mut res_fd = 0.0f64;
        // (d) d Im Phi = -2 lambda omega wedge omega
        let mut res_d = 0.0f64;
        for _ in 0..samples {
            let p = random_point(&mut rng);
            let fr = random_tangent_frame(&p, &mut rng, 3);
            let (u, v, w) = (fr[0], fr[1], fr[2]);

            let nx = self.nabla_j_fd(&p, &u, &u, h);
            res_a = res_a.max(nx.norm());

            let njf = self.nabla_j_fd(&p, &u, &v, h);
            let ju = self.j_raw(&p.p, &v);
            let ct = njf.dot(&njf)
                - self.lambda
                    * self.lambda
                    * (u.dot(&u) * v.dot(&v) - u.dot(&v) * u.dot(&v) - u.dot(&ju) * u.dot(&ju));
            res_b = res_b.max(fp::abs(ct));

            let dom = self.d_omega_raw(&u, &v, &w);
            let (re, _) = self.complex_volume_raw(&p.p, &u, &v, &w);
            res_c = res_c.max(fp::abs(dom - 3.0 * self.lambda * re));

            res_fd = res_fd.max(fp::abs(dom - self.d_omega_fd(&p, &u, &v, &w, h)));

            let frame4 = random_tangent_frame(&p, &mut rng, 4);
            let dimphi = self.d_imphi_fd(&p, &frame4, h);
            let ww = 2.0
                * (self.omega_raw(&p.p, &frame4[0], &frame4[1]) * self.omega_raw(&p.p, &frame4[2], &frame4[3])
                    - self.omega_raw(&p.p, &frame4[0], &frame4[2]) * self.omega_raw(&p.p, &frame4[1], &frame4[3])
                    + self.omega_raw(&p.p, &frame4[0], &frame4[3]) * self.omega_raw(&p.p, &frame4[1], &frame4[2]));
            res_d = res_d.max(fp::abs(dimphi + 2.0 * self.lambda * ww));
        }

        // (e) cone form: closedness and the pointwise G2 normal-form invariants
        let mut res_e_closed = 0.0f64;
        let mut res_e_nf = 0.0f64;
        for _ in 0..samples {
            let p = random_point(&mut rng);
            let r = rng.range(0.5, 2.0);
            let cp = ConePoint { r, p };
            res_e_closed = res_e_closed.max(fp::abs(self.cone_dphi_fd(&cp, &mut rng, h)));
            res_e_nf = res_e_nf.max(self.cone_normal_form_residual(&cp, &mut rng));
        }

        checks.push(CheckResult {
            check_name: String::from("nearly_kahler_condition"),
            samples,
            max_residual: res_a,
            tolerance: cfg.tol_nearly_kahler,
            pass: res_a < cfg.tol_nearly_kahler,
        });
        checks.push(CheckResult {
            check_name: String::from("constant_type_lambda"),
            samples,
            max_residual: res_b,
            tolerance: cfg.tol_constant_type,
            pass: res_b < cfg.tol_constant_type,
        });
        checks.push(CheckResult {
            check_name: String::from("domega_equals_3_re_phi"),
            samples,
            max_residual: res_c,
            tolerance: cfg.tol_re_phi,
            pass: res_c < cfg.tol_re_phi,
        });
        checks.push(CheckResult {
            check_name: String::from("domega_closed_vs_fd"),
            samples,
            max_residual: res_fd,
            tolerance: cfg.tol_domega_fd,
            pass: res_fd < cfg.tol_domega_fd,
        });
        checks.push(CheckResult {
            check_name: String::from("d_im_phi_equals_minus_2_omega_wedge_omega"),
            samples,
            max_residual: res_d,
            tolerance: cfg.tol_im_phi,
            pass: res_d < cfg.tol_im_phi,
        });
        checks.push(CheckResult {
            check_name: String::from("cone_form_closed"),
            samples,
            max_residual: res_e_closed,
            tolerance: cfg.tol_cone_closed,
            pass: res_e_closed < cfg.tol_cone_closed,
        });
        checks.push(CheckResult {
            check_name: String::from("cone_g2_normal_form"),
            samples,
            max_residual: res_e_nf,
            tolerance: cfg.tol_cone_normal_form,
            pass: res_e_nf < cfg.tol_cone_normal_form,
        });

        let all_pass = checks.iter().all(|c| c.pass);
        VerificationReport { checks, all_pass }
    }

    /// FD exterior derivative of Im Phi on four tangent directions.
    fn d_imphi_fd(&self, p: &SpherePoint, dirs: &[ImOctonion], h: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..4 {
            let mut others = [ImOctonion::zero(); 3];
            let mut n = 0;
            for (k, d) in dirs.iter().enumerate() {
                if k != i {
                    others[n] = *d;
                    n += 1;
                }
            }
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let dirs4: [ImOctonion; 4] = [dirs[0], dirs[1], dirs[2], dirs[3]];
            let eval = |t: f64| -> f64 {
                let mut s = [0.0; 4];
                s[i] = t;
                let (x, dx) = chart_eval4(&p.p, &dirs4, &s);
                let mut ot = [ImOctonion::zero(); 3];
                let mut m = 0;
                for (k, d) in dx.iter().enumerate() {
                    if k != i {
                        ot[m] = *d;
                        m += 1;
                    }
                }
                let _ = others;
                self.im_phi_raw(&x, &ot[0], &ot[1], &ot[2])
            };
            total += sign * (eval(h) - eval(-h)) / (2.0 * h);
        }
        total
    }

    /// FD exterior derivative of the cone form on four random cone directions.
    fn cone_dphi_fd(&self, c: &ConePoint, rng: &mut Rng, h: f64) -> f64 {
        let mut rad = [0.0f64; 4];
        let mut sph = [ImOctonion::zero(); 4];
        for k in 0..4 {
            rad[k] = rng.normal();
            sph[k] = random_tangent(&c.p, rng);
        }
        let mut total = 0.0;
        for i in 0..4 {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let eval = |t: f64| -> f64 {
                let mut s = [0.0; 4];
                s[i] = t;
                let r = c.r + s[0] * rad[0] + s[1] * rad[1] + s[2] * rad[2] + s[3] * rad[3];
                let (x, dx) = chart_eval4(&c.p.p, &sph, &s);
                let cp = ConePoint {
                    r,
                    p: SpherePoint { p: x },
                };
                let mut vecs = [ConeVector {
                    radial: 0.0,
                    spherical: ImOctonion::zero(),
                }; 3];
                let mut m = 0;
                for k in 0..4 {
                    if k != i {
                        vecs[m] = ConeVector {
                            radial: rad[k],
                            spherical: dx[k],
                        };
                        m += 1;
                    }
                }
                self.cone_form(&cp, &vecs[0], &vecs[1], &vecs[2]).unwrap()
            };
            total += sign * (eval(h) - eval(-h)) / (2.0 * h);
        }
        total
    }

    /// Pointwise invariants of the Baer normal form: |phi|^2 = 7 in any cone
    /// orthonormal frame and the Lagrange identity of the induced cross
    /// product on the cone. Returns the max residual of both.
    fn cone_normal_form_residual(&self, c: &ConePoint, rng: &mut Rng) -> f64 {
        let frame = random_tangent_frame(&c.p, rng, 6);
        // orthonormal cone frame: spherical / r and the radial direction
        let mut fr: Vec<ConeVector> = frame
            .iter()
            .map(|e| ConeVector {
                radial: 0.0,
                spherical: e.scale(1.0 / c.r),
            })
            .collect();
        fr.push(ConeVector {
            radial: 1.0,
            spherical: ImOctonion::zero(),
        });
        let mut phinorm2 = 0.0;
        let mut vals = [[[0.0f64; 7]; 7]; 7];
        for i in 0..7 {
            for j in (i + 1)..7 {
                for k in (j + 1)..7 {
                    let v = self.cone_form(c, &fr[i], &fr[j], &fr[k]).unwrap();
                    vals[i][j][k] = v;
                    phinorm2 += v * v;
                }
            }
        }
        let mut res = fp::abs(phinorm2 - 7.0);
        // induced cross product on two random frame pairs: Lagrange identity
        for _ in 0..4 {
            let i = rng.below(7);
            let mut j = rng.below(7);
            while j == i {
                j = rng.below(7);
            }
            // (f_i x f_j)_k = phi(f_i, f_j, f_k); orthonormal frame
            let mut cross_norm2 = 0.0;
            for k in 0..7 {
                if k == i || k == j {
                    continue;
                }
                let (a, b, cc, sign) = sort3(i, j, k);
                cross_norm2 += vals[a][b][cc] * vals[a][b][cc] * sign * sign;
            }
            res = res.max(fp::abs(cross_norm2 - 1.0));
        }
        res
    }
}

fn sort3(i: usize, j: usize, k: usize) -> (usize, usize, usize, f64) {
    let mut v = [(i, 0), (j, 1), (k, 2)];
    v.sort_by_key(|t| t.0);
    // parity of the permutation
    let perm = [v[0].1, v[1].1, v[2].1];
    let even = matches!(perm, [0, 1, 2] | [1, 2, 0] | [2, 0, 1]);
    (v[0].0, v[1].0, v[2].0, if even { 1.0 } else { -1.0 })
}

/// Chart x(s) = normalize(p + s_i b_i) with analytic coordinate fields.
fn chart_eval(p: &ImOctonion, dirs: &[ImOctonion; 3], s: &[f64; 3]) -> (ImOctonion, [ImOctonion; 3]) {
    let mut y = *p;
    for (si, b) in s.iter().zip(dirs.iter()) {
        y = y.add(&b.scale(*si));
    }
    let n2 = y.dot(&y);
    let n = fp::sqrt(n2);
    let x = y.scale(1.0 / n);
    let mut dx = [ImOctonion::zero(); 3];
    for (k, b) in dirs.iter().enumerate() {
        let by = b.dot(&y);
        dx[k] = b.scale(1.0 / n).sub(&y.scale(by / (n2 * n)));
    }
    (x, dx)
}

fn chart_eval4(p: &ImOctonion, dirs: &[ImOctonion; 4], s: &[f64; 4]) -> (ImOctonion, [ImOctonion; 4]) {
    let mut y = *p;
    for (si, b) in s.iter().zip(dirs.iter()) {
        y = y.add(&b.scale(*si));
    }
    let n2 = y.dot(&y);
    let n = fp::sqrt(n2);
    let x = y.scale(1.0 / n);
    let mut dx = [ImOctonion::zero(); 4];
    for (k, b) in dirs.iter().enumerate() {
        let by = b.dot(&y);
        dx[k] = b.scale(1.0 / n).sub(&y.scale(by / (n2 * n)));
    }
    (x, dx)
}

pub fn random_point(rng: &mut Rng) -> SpherePoint {
    SpherePoint::new(random_unit_im(rng))
}

/// Random unit tangent vector at p.
pub fn random_tangent(p: &SpherePoint, rng: &mut Rng) -> ImOctonion {
    loop {
        let v = random_unit_im(rng);
        let t = v.sub(&p.p.scale(p.p.dot(&v)));
        let n = t.norm();
        if n > 1e-3 {
            return t.scale(1.0 / n);
        }
    }
}

/// Random orthonormal tangent k-frame at p (k <= 6).
pub fn random_tangent_frame(p: &SpherePoint, rng: &mut Rng, k: usize) -> Vec<ImOctonion> {
    let mut frame: Vec<ImOctonion> = Vec::new();
    while frame.len() < k {
        let mut v = random_tangent(p, rng);
        for f in &frame {
            v = v.sub(&f.scale(f.dot(&v)));
        }
        let n = v.norm();
        if n > 1e-3 {
            frame.push(v.scale(1.0 / n));
        }
    }
    frame
}

/// Random orthonormal basis (u, v, w) of a Lagrangian 3-plane at p:
/// v is taken orthogonal to u and J u, w orthogonal to u, Ju, v, Jv.
pub fn random_lagrangian_frame(p: &SpherePoint, rng: &mut Rng) -> [ImOctonion; 3] {
    let nk = NkSphere::standard();
    loop {
        let u = random_tangent(p, rng);
        let ju = nk.j_raw(&p.p, &u);
        let mut v = random_tangent(p, rng);
        v = v.sub(&u.scale(u.dot(&v)));
        v = v.sub(&ju.scale(ju.dot(&v)));
        let nv = v.norm();
        if nv < 1e-3 {
            continue;
        }
        let v = v.scale(1.0 / nv);
        let jv = nk.j_raw(&p.p, &v);
        let mut w = random_tangent(p, rng);
        for f in [&u, &ju, &v, &jv] {
            w = w.sub(&f.scale(f.dot(&w)));
        }
        let nw = w.norm();
        if nw < 1e-3 {
            continue;
        }
        return [u, v, w.scale(1.0 / nw)];
    }
}

/// Unitary tangent frame (u1, Ju1, u2, Ju2, u3, Ju3) at p.
pub fn unitary_frame(p: &SpherePoint, rng: &mut Rng) -> [ImOctonion; 6] {
    let nk = NkSphere::standard();
    let lag = random_lagrangian_frame(p, rng);
    let mut out = [ImOctonion::zero(); 6];
    for (i, u) in lag.iter().enumerate() {
        out[2 * i] = *u;
        out[2 * i + 1] = nk.j_raw(&p.p, u);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::octonion::ImOctonion;

    #[test]
    fn j_squares_to_minus_one_and_is_orthogonal() {
        let nk = NkSphere::standard();
        let mut rng = Rng::new(1);
        for _ in 0..500 {
            let p = random_point(&mut rng);
            let u = random_tangent(&p, &mut rng);
            let v = random_tangent(&p, &mut rng);
            let ju = nk.j_raw(&p.p, &u);
            let jju = nk.j_raw(&p.p, &ju);
            assert!(jju.add(&u).norm() < 1e-12);
            let jv = nk.j_raw(&p.p, &v);
            assert!((ju.dot(&jv) - u.dot(&v)).abs() < 1e-12);
        }
    }

    #[test]
    fn j_on_basis_matches_cross_table() {
        let nk = NkSphere::standard();
        let p = SpherePoint::basis(0); // e1
        let u = TangentVector::new(p, ImOctonion::basis(1)); // e2
        let ju = nk.almost_complex(&p, &u).unwrap();
        // e1 x e2 = e3
        assert!(ju.vec().sub(&ImOctonion::basis(2)).norm() < 1e-15);
    }

    #[test]
    fn omega_antisymmetric_and_j_invariant() {
        let nk = NkSphere::standard();
        let mut rng = Rng::new(2);
        for _ in 0..500 {
            let p = random_point(&mut rng);
            let u = random_tangent(&p, &mut rng);
            let v = random_tangent(&p, &mut rng);
            assert!(nk.omega_raw(&p.p, &u, &u).abs() < 1e-13);
            let ju = nk.j_raw(&p.p, &u);
            assert!((nk.omega_raw(&p.p, &u, &ju) - u.dot(&u)).abs() < 1e-12);
            let jv = nk.j_raw(&p.p, &v);
            assert!((nk.omega_raw(&p.p, &ju, &jv) - nk.omega_raw(&p.p, &u, &v)).abs() < 1e-12);
        }
    }

    #[test]
    fn d_omega_alternating_and_type_30_03() {
        let nk = NkSphere::standard();
        let mut rng = Rng::new(3);
        for _ in 0..500 {
            let p = random_point(&mut rng);
            let fr = random_tangent_frame(&p, &mut rng, 3);
            let (u, v, w) = (fr[0], fr[1], fr[2]);
            assert!(nk.d_omega_raw(&u, &v, &u).abs() < 1e-12);
            let (ju, jv, jw) = (nk.j_raw(&p.p, &u), nk.j_raw(&p.p, &v), nk.j_raw(&p.p, &w));
            let base = nk.d_omega_raw(&ju, &v, &w);
            assert!((base - nk.d_omega_raw(&u, &jv, &w)).abs() < 1e-9);
            assert!((base - nk.d_omega_raw(&u, &v, &jw)).abs() < 1e-9);
        }
    }

    #[test]
    fn d_omega_closed_form_matches_fd() {
        let nk = NkSphere::standard();
        let mut rng = Rng::new(4);
        for _ in 0..100 {
            let p = random_point(&mut rng);
            let fr = random_tangent_frame(&p, &mut rng, 3);
            let closed = nk.d_omega_raw(&fr[0], &fr[1], &fr[2]);
            let fd = nk.d_omega_fd(&p, &fr[0], &fr[1], &fr[2], 1e-4);
            assert!((closed - fd).abs() < 1e-6, "closed {closed} fd {fd}");
        }
    }

    #[test]
    fn nabla_j_analytic_matches_fd_and_vanishes_on_diagonal() {
        let nk = NkSphere::standard();
        let mut rng = Rng::new(5);
        for _ in 0..100 {
            let p = random_point(&mut rng);
            let u = random_tangent(&p, &mut rng);
            let v = random_tangent(&p, &mut rng);
            let tu = TangentVector::new(p, u);
            let tv = TangentVector::new(p, v);
            let analytic = nk.nabla_j(&p, &tu, &tv).unwrap();
            let fd = nk.nabla_j_fd(&p, &u, &v, 1e-4);
            assert!(analytic.vec().sub(&fd).norm() < 1e-9);
            let diag = nk.nabla_j_fd(&p, &u, &u, 1e-4);
            assert!(diag.norm() < 1e-10);
        }
    }

    #[test]
    fn lagrangian_planes_are_phi_calibrated() {
        // |Phi(xi)| = 1 exactly when omega restricted to xi vanishes
        let nk = NkSphere::standard();
        let mut rng = Rng::new(6);
        for _ in 0..300 {
            let p = random_point(&mut rng);
            let [u, v, w] = random_lagrangian_frame(&p, &mut rng);
            assert!(nk.omega_raw(&p.p, &u, &v).abs() < 1e-12);
            assert!(nk.omega_raw(&p.p, &u, &w).abs() < 1e-12);
            assert!(nk.omega_raw(&p.p, &v, &w).abs() < 1e-12);
            let (re, im) = nk.complex_volume_raw(&p.p, &u, &v, &w);
            let m = fp::sqrt(re * re + im * im);
            assert!((m - 1.0).abs() < 1e-10, "|Phi| = {m}");
        }
    }

    #[test]
    fn unitary_frame_identity_of_harvey_lawson() {
        // |Phi(xi)|^2 + sum_i |dz_i wedge omega (xi)|^2 = |xi|^2
        let nk = NkSphere::standard();
        let mut rng = Rng::new(7);
        for _ in 0..200 {
            let p = random_point(&mut rng);
            let uf = unitary_frame(&p, &mut rng);
            let fr = random_tangent_frame(&p, &mut rng, 3);
            let (x, y, z) = (fr[0], fr[1], fr[2]);
            let (re, im) = nk.complex_volume_raw(&p.p, &x, &y, &z);
            let mut total = re * re + im * im;
            for i in 0..3 {
                let e = uf[2 * i];
                let je = uf[2 * i + 1];
                // dz_i = e* + i (Je)*; (dz wedge omega)(x,y,z) expansion
                let dz = |a: &ImOctonion| -> (f64, f64) { (e.dot(a), je.dot(a)) };
                let om = |a: &ImOctonion, b: &ImOctonion| nk.omega_raw(&p.p, a, b);
                let (rx, ix) = dz(&x);
                let (ry, iy) = dz(&y);
                let (rz, iz) = dz(&z);
                let re_w = rx * om(&y, &z) - ry * om(&x, &z) + rz * om(&x, &y);
                let im_w = ix * om(&y, &z) - iy * om(&x, &z) + iz * om(&x, &y);
                total += re_w * re_w + im_w * im_w;
            }
            // |xi|^2 = Gram determinant of the orthonormal frame = 1
            assert!((total - 1.0).abs() < 1e-10, "sum {total}");
        }
    }

    #[test]
    fn lagrangian_sup_of_domega_over_three_is_one() {
        // on a Lagrangian plane the phase can be rotated so that
        // d omega / 3 attains |Phi| = 1
        let nk = NkSphere::standard();
        let mut rng = Rng::new(8);
        let mut sup = 0.0f64;
        for _ in 0..2000 {
            let p = random_point(&mut rng);
            let [u, v, w] = random_lagrangian_frame(&p, &mut rng);
            let (re, im) = nk.complex_volume_raw(&p.p, &u, &v, &w);
            sup = sup.max(fp::sqrt(re * re + im * im));
        }
        assert!((sup - 1.0).abs() < 1e-8, "sup {sup}");
    }

    #[test]
    fn cone_form_reduces_to_domega_and_omega() {
        let nk = NkSphere::standard();
        let mut rng = Rng::new(9);
        let p = random_point(&mut rng);
        let fr = random_tangent_frame(&p, &mut rng, 3);
        let c = ConePoint { r: 1.0, p };
        let cv = |v: &ImOctonion| ConeVector {
            radial: 0.0,
            spherical: *v,
        };
        let all_sph = nk
            .cone_form(&c, &cv(&fr[0]), &cv(&fr[1]), &cv(&fr[2]))
            .unwrap();
        assert!((all_sph - nk.d_omega_raw(&fr[0], &fr[1], &fr[2]) / 3.0).abs() < 1e-13);
        let radial = ConeVector {
            radial: 1.0,
            spherical: ImOctonion::zero(),
        };
        let with_radial = nk.cone_form(&c, &radial, &cv(&fr[0]), &cv(&fr[1])).unwrap();
        assert!((with_radial - nk.omega_raw(&p.p, &fr[0], &fr[1])).abs() < 1e-13);
        assert!(NkSphere::standard()
            .cone_form(
                &ConePoint { r: -1.0, p },
                &radial,
                &cv(&fr[0]),
                &cv(&fr[1])
            )
            .is_err());
    }

    #[test]
    fn verify_structure_passes_with_standard_convention() {
        let nk = NkSphere::standard();
        let report = nk.verify_structure(60, &VerifyConfig::default(), 1234);
        for c in &report.checks {
            assert!(c.pass, "{} residual {} tol {}", c.check_name, c.max_residual, c.tolerance);
        }
        assert!(report.all_pass);
    }

    #[test]
    fn verify_structure_fails_with_corrupted_convention() {
        let nk = NkSphere::corrupted();
        let report = nk.verify_structure(30, &VerifyConfig::default(), 99);
        assert!(!report.all_pass);
        let fail = report.first_failure().unwrap();
        assert_eq!(fail.check_name, "domega_equals_3_re_phi");
    }

    #[test]
    fn base_mismatch_is_reported() {
        let nk = NkSphere::standard();
        let mut rng = Rng::new(10);
        let p = random_point(&mut rng);
        let q = random_point(&mut rng);
        let u = TangentVector::new(p, random_tangent(&p, &mut rng));
        let v = TangentVector::new(q, random_tangent(&q, &mut rng));
        assert_eq!(nk.fundamental_form(&p, &u, &v), Err(crate::GeomError::BaseMismatch));
    }
}

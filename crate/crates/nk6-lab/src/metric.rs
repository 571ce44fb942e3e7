//! Metric data pulled back through an immersion: per-tet chart geometry at
//! barycenters and the Whitney-form Galerkin matrices (mass matrices M0..M3,
//! the curl pairing, and the 1-2 wedge pairing).
//!
//! Each tet is described in the left-exponential chart at its barycenter:
//! vertex chart coordinates from the quaternion log, the pullback metric
//! from the immersion jacobian (piecewise constant, sampled at the
//! barycenter), and barycentric gradients from the inverse edge matrix.
//! Wedge integrals are metric-free and carry the global orientation, which
//! is fixed by the immersion's calibration sign (Im Phi = -1).

use nk6_core::immersion::{chart_coords, Immersion};
use nk6_core::linalg::{det3, inv3};
use nk6_core::quat::Quat;

use crate::mesh::{SimplicialComplex3, LOCAL_PAIRS};
use crate::sparse::Csr;
use crate::LabError;

#[derive(Debug, Clone)]
pub struct TetGeometry {
    /// chart center (barycenter projected to the group sphere)
    pub bary: Quat,
    /// chart coordinates of the four (sorted) vertices
    pub svert: [[f64; 3]; 4],
    /// barycentric gradients in chart coordinates
    pub grad_lambda: [[f64; 3]; 4],
    /// barycentric coordinates of the chart origin
    pub lambda0: [f64; 4],
    /// pullback metric at the barycenter in chart coordinates
    pub g: [[f64; 3]; 3],
    pub ginv: [[f64; 3]; 3],
    /// <d lambda_i, d lambda_j> under g
    pub gd: [[f64; 4]; 4],
    /// oriented coordinate volume times 6: chart_orient * |det E| (the
    /// factor wedge integrals over the manifold carry in chart coordinates)
    pub coord_vol6: f64,
    /// metric volume (positive)
    pub volume: f64,
    /// calibrated manifold orientation relative to the chart orientation
    pub chart_orient: f64,
    /// orientation of the sorted vertex tuple w.r.t. the manifold
    /// orientation (the sign relating 3-cochain values to integrals)
    pub orient: f64,
}

#[derive(Debug, Clone)]
pub struct MetricData {
    pub tets: Vec<TetGeometry>,
    pub m0: Csr,
    pub m1: Csr,
    pub m2: Csr,
    pub m3: Csr,
    /// integral of dW_e wedge W_e' (symmetrized; exact on closed meshes)
    pub curl: Csr,
    /// integral of W_e wedge W2_f (edges x faces)
    pub pair12: Csr,
    pub m0_lumped: Vec<f64>,
    pub total_volume: f64,
    /// symmetry defect of the curl pairing before symmetrization
    pub curl_asym: f64,
}

fn tet_geometry_from_chart(
    bary: Quat,
    svert: [[f64; 3]; 4],
    g: [[f64; 3]; 3],
    orientation_sign: f64,
) -> Result<TetGeometry, LabError> {
    let e = [
        [
            svert[1][0] - svert[0][0],
            svert[2][0] - svert[0][0],
            svert[3][0] - svert[0][0],
        ],
        [
            svert[1][1] - svert[0][1],
            svert[2][1] - svert[0][1],
            svert[3][1] - svert[0][1],
        ],
        [
            svert[1][2] - svert[0][2],
            svert[2][2] - svert[0][2],
            svert[3][2] - svert[0][2],
        ],
    ];
    let det_e = det3(&e);
    if det_e.abs() < 1e-300 {
        return Err(LabError::Mesh("degenerate tet (zero chart volume)".into()));
    }
    let einv = inv3(&e);
    let mut grad_lambda = [[0.0; 3]; 4];
    for i in 0..3 {
        grad_lambda[i + 1] = einv[i];
        for k in 0..3 {
            grad_lambda[0][k] -= einv[i][k];
        }
    }
    // lambda at the chart origin
    let mut lam123 = [0.0; 3];
    for i in 0..3 {
        for k in 0..3 {
            lam123[i] += einv[i][k] * (0.0 - svert[0][k]);
        }
    }
    let lambda0 = [
        1.0 - lam123[0] - lam123[1] - lam123[2],
        lam123[0],
        lam123[1],
        lam123[2],
    ];
    let det_g = det3(&g);
    if det_g <= 0.0 {
        return Err(LabError::Mesh("pullback metric not positive definite".into()));
    }
    let ginv = inv3(&g);
    let mut gd = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    s += grad_lambda[i][a] * ginv[a][b] * grad_lambda[j][b];
                }
            }
            gd[i][j] = s;
        }
    }
    let volume = det_e.abs() * det_g.sqrt() / 6.0;
    let orient = det_e.signum() * orientation_sign;
    Ok(TetGeometry {
        bary,
        svert,
        grad_lambda,
        lambda0,
        g,
        ginv,
        gd,
        coord_vol6: orientation_sign * det_e.abs(),
        volume,
        chart_orient: orientation_sign,
        orient,
    })
}

/// Metric data for a sphere-cover mesh, pulled back through an immersion.
/// `min_quality` rejects tets whose metric shape degenerates after
/// projection (volume over cubed longest metric edge, scaled).
pub fn metric_from_immersion(
    mesh: &SimplicialComplex3,
    imm: &dyn Immersion,
    min_quality: f64,
) -> Result<MetricData, LabError> {
    let orientation_sign = imm.orientation_sign();
    let mut tets = Vec::with_capacity(mesh.tets.len());
    let mut bad: Vec<usize> = Vec::new();
    for (ti, t) in mesh.tets.iter().enumerate() {
        let mut sum = [0.0; 4];
        for &v in t {
            for k in 0..4 {
                sum[k] += mesh.vertices[v][k];
            }
        }
        let bary = Quat(sum).normalized();
        let mut svert = [[0.0; 3]; 4];
        for (k, &v) in t.iter().enumerate() {
            svert[k] = chart_coords(&bary, &Quat(mesh.vertices[v]));
        }
        let jet = imm.jet2(&bary);
        let mut g = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                g[a][b] = jet.jacobian[a].dot(&jet.jacobian[b]);
            }
        }
        let geo = tet_geometry_from_chart(bary, svert, g, orientation_sign)?;
        // metric shape quality: 6 sqrt2 vol / (longest metric edge)^3 is 1
        // for the regular tet
        let mut lmax2 = 0.0f64;
        for (a, b) in LOCAL_PAIRS {
            let d = [
                svert[b][0] - svert[a][0],
                svert[b][1] - svert[a][1],
                svert[b][2] - svert[a][2],
            ];
            let mut l2 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    l2 += d[i] * g[i][j] * d[j];
                }
            }
            lmax2 = lmax2.max(l2);
        }
        let quality = 6.0 * 2.0f64.sqrt() * geo.volume / lmax2.powf(1.5);
        if quality < min_quality {
            bad.push(ti);
        }
        tets.push(geo);
    }
    if !bad.is_empty() {
        return Err(LabError::Mesh(format!(
            "{} tets below quality threshold, first indices {:?}",
            bad.len(),
            &bad[..bad.len().min(8)]
        )));
    }
    Ok(assemble(mesh, tets))
}

/// Metric data for the flat reference mesh (identity metric, coordinates
/// from the per-tet unwrapped corners).
pub fn metric_flat(mesh: &SimplicialComplex3) -> Result<MetricData, LabError> {
    let mut tets = Vec::with_capacity(mesh.tets.len());
    for ti in 0..mesh.tets.len() {
        let mut svert = [[0.0; 3]; 4];
        for k in 0..4 {
            let c = mesh.corner(ti, k);
            svert[k] = [c[0], c[1], c[2]];
        }
        let eye = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        tets.push(tet_geometry_from_chart(Quat::ONE, svert, eye, 1.0)?);
    }
    Ok(assemble(mesh, tets))
}

fn det_rows(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

fn assemble(mesh: &SimplicialComplex3, tets: Vec<TetGeometry>) -> MetricData {
    let nv = mesh.vertices.len();
    let ne = mesh.edges.len();
    let nf = mesh.faces.len();
    let nt = mesh.tets.len();
    let mut coo0 = Vec::new();
    let mut coo1 = Vec::new();
    let mut coo2 = Vec::new();
    let mut coo3 = Vec::new();
    let mut coo_curl = Vec::new();
    let mut coo_p12 = Vec::new();
    let mut m0_lumped = vec![0.0; nv];
    let mut total_volume = 0.0;

    for (ti, t) in mesh.tets.iter().enumerate() {
        let geo = &tets[ti];
        let vol = geo.volume;
        let gd = &geo.gd;
        total_volume += vol;
        // vertex mass
        for a in 0..4 {
            for b in 0..4 {
                let w = vol * if a == b { 0.1 } else { 0.05 };
                coo0.push((t[a] as u32, t[b] as u32, w));
            }
            m0_lumped[t[a]] += vol * 0.25;
        }
        // edge ids and local pairs
        let eid: Vec<usize> = LOCAL_PAIRS
            .iter()
            .map(|&(a, b)| mesh.edge_id(t[a], t[b]).unwrap())
            .collect();
        // edge mass: W_(ij) = li dlj - lj dli
        for (p, &(i, j)) in LOCAL_PAIRS.iter().enumerate() {
            for (q, &(k, l)) in LOCAL_PAIRS.iter().enumerate() {
                let dl = |a: usize, b: usize| -> f64 { if a == b { 2.0 } else { 1.0 } };
                let w = vol / 20.0
                    * (dl(i, k) * gd[j][l] - dl(i, l) * gd[j][k] - dl(j, k) * gd[i][l]
                        + dl(j, l) * gd[i][k]);
                coo1.push((eid[p] as u32, eid[q] as u32, w));
            }
        }
        // face ids
        let fid: Vec<usize> = LOCAL_FACES
            .iter()
            .map(|lf| {
                let tri = [t[lf[0]], t[lf[1]], t[lf[2]]];
                mesh.face_id(&tri).expect("face lookup")
            })
            .collect();
        // face mass: W_(ijk) = 2(li dlj^dlk - lj dli^dlk + lk dli^dlj)
        let wedge2 = |p: usize, q: usize, r: usize, s: usize| -> f64 {
            gd[p][r] * gd[q][s] - gd[p][s] * gd[q][r]
        };
        for (pa, lfa) in LOCAL_FACES.iter().enumerate() {
            let terms_a = [
                (1.0, lfa[0], lfa[1], lfa[2]),
                (-1.0, lfa[1], lfa[0], lfa[2]),
                (1.0, lfa[2], lfa[0], lfa[1]),
            ];
            for (pb, lfb) in LOCAL_FACES.iter().enumerate() {
                let terms_b = [
                    (1.0, lfb[0], lfb[1], lfb[2]),
                    (-1.0, lfb[1], lfb[0], lfb[2]),
                    (1.0, lfb[2], lfb[0], lfb[1]),
                ];
                let mut s = 0.0;
                for &(sa, a, p, q) in &terms_a {
                    for &(sb, b, r, ss) in &terms_b {
                        let lm = if a == b { 2.0 } else { 1.0 };
                        s += sa * sb * lm / 20.0 * wedge2(p, q, r, ss);
                    }
                }
                coo2.push((fid[pa] as u32, fid[pb] as u32, 4.0 * vol * s));
            }
        }
        // tet mass (single dof per tet)
        coo3.push((ti as u32, ti as u32, 1.0 / vol));

        // curl pairing: dW_e ^ W_e'
        for (p, &(i, j)) in LOCAL_PAIRS.iter().enumerate() {
            for (q, &(k, l)) in LOCAL_PAIRS.iter().enumerate() {
                let d1 = det_rows(&geo.grad_lambda[i], &geo.grad_lambda[j], &geo.grad_lambda[l]);
                let d2 = det_rows(&geo.grad_lambda[i], &geo.grad_lambda[j], &geo.grad_lambda[k]);
                let val = 2.0 * geo.coord_vol6 / 24.0 * (d1 - d2);
                coo_curl.push((eid[p] as u32, eid[q] as u32, val));
            }
        }
        // wedge pairing W_e ^ W2_f
        for (p, &(i, j)) in LOCAL_PAIRS.iter().enumerate() {
            let terms_e = [(1.0, i, j), (-1.0, j, i)];
            for (pf, lf) in LOCAL_FACES.iter().enumerate() {
                let terms_f = [
                    (1.0, lf[0], lf[1], lf[2]),
                    (-1.0, lf[1], lf[0], lf[2]),
                    (1.0, lf[2], lf[0], lf[1]),
                ];
                let mut s = 0.0;
                for &(se, a, de) in &terms_e {
                    for &(sf, b, p1, p2) in &terms_f {
                        let lm = if a == b { 2.0 } else { 1.0 };
                        s += se * sf * lm / 20.0
                            * det_rows(
                                &geo.grad_lambda[de],
                                &geo.grad_lambda[p1],
                                &geo.grad_lambda[p2],
                            );
                    }
                }
                coo_p12.push((eid[p] as u32, fid[pf] as u32, 2.0 * geo.coord_vol6 / 6.0 * s));
            }
        }
    }

    let m0 = Csr::from_coo(nv, nv, coo0);
    let m1 = Csr::from_coo(ne, ne, coo1);
    let m2 = Csr::from_coo(nf, nf, coo2);
    let m3 = Csr::from_coo(nt, nt, coo3);
    let curl_raw = Csr::from_coo(ne, ne, coo_curl);
    let curl_asym = curl_raw.max_abs_asymmetry();
    let curl = curl_raw.symmetrize();
    let pair12 = Csr::from_coo(ne, nf, coo_p12);
    MetricData {
        tets,
        m0,
        m1,
        m2,
        m3,
        curl,
        pair12,
        m0_lumped,
        total_volume,
        curl_asym,
    }
}

/// Max deck defect of the per-tet volumes: images of tets under each deck
/// permutation must carry identical metric volumes.
pub fn deck_volume_defect(
    mesh: &SimplicialComplex3,
    deck: &crate::mesh::DeckGroup,
    data: &MetricData,
) -> f64 {
    use std::collections::HashMap;
    let lookup: HashMap<[usize; 4], usize> = mesh
        .tets
        .iter()
        .enumerate()
        .map(|(i, t)| (*t, i))
        .collect();
    let mut defect = 0.0f64;
    for perm in &deck.perms {
        for (ti, t) in mesh.tets.iter().enumerate() {
            let mut img = [perm[t[0]], perm[t[1]], perm[t[2]], perm[t[3]]];
            img.sort_unstable();
            let tj = lookup[&img];
            defect = defect.max((data.tets[ti].volume - data.tets[tj].volume).abs());
        }
    }
    defect
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{cell16, cell16_antipodal_deck, flat_torus, MeshHierarchy};
    use nk6_core::immersion::GreatSphere;

    #[test]
    fn round_sphere_volume_converges() {
        let imm = GreatSphere::new();
        let hier = MeshHierarchy::build(cell16(), cell16_antipodal_deck(), 4);
        let exact = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
        let mut errs = Vec::new();
        for level in 2..=4 {
            let data = metric_from_immersion(&hier.levels[level], &imm, 1e-3).unwrap();
            errs.push((data.total_volume - exact).abs() / exact);
        }
        assert!(errs[2] < 0.01, "volume error at refinement 4: {}", errs[2]);
        // roughly quadratic decay
        assert!(errs[0] / errs[2] > 8.0, "volume errors {errs:?}");
    }

    #[test]
    fn mass_matrices_are_spd_and_curl_symmetric() {
        let imm = GreatSphere::new();
        let hier = MeshHierarchy::build(cell16(), cell16_antipodal_deck(), 2);
        let mesh = hier.finest();
        let data = metric_from_immersion(mesh, &imm, 1e-3).unwrap();
        assert!(data.curl_asym < 1e-13, "curl asymmetry {}", data.curl_asym);
        assert!(data.m0.max_abs_asymmetry() < 1e-14);
        assert!(data.m1.max_abs_asymmetry() < 1e-14);
        assert!(data.m2.max_abs_asymmetry() < 1e-14);
        // positive definiteness: x^T M x > 0 on pseudo-random vectors
        let mut rng = nk6_core::rng::Rng::new(5);
        for m in [&data.m0, &data.m1, &data.m2, &data.m3] {
            for _ in 0..5 {
                let x: Vec<f64> = (0..m.nrows).map(|_| rng.normal()).collect();
                let quad = crate::sparse::dot(&x, &m.apply(&x));
                assert!(quad > 0.0);
            }
        }
    }

    #[test]
    fn deck_invariance_of_volumes() {
        let imm = GreatSphere::new();
        let hier = MeshHierarchy::build(cell16(), cell16_antipodal_deck(), 2);
        let data = metric_from_immersion(hier.finest(), &imm, 1e-3).unwrap();
        let defect = deck_volume_defect(hier.finest(), hier.finest_deck(), &data);
        assert!(defect < 1e-13, "deck volume defect {defect}");
    }

    #[test]
    fn flat_torus_total_volume_is_one() {
        let mesh = flat_torus(4);
        let data = metric_flat(&mesh).unwrap();
        assert!((data.total_volume - 1.0).abs() < 1e-12);
    }
}

//! Cochain calculus on the metric complex: exterior derivative through the
//! signed incidence matrices, L2 inner products and codifferentials through
//! the Whitney mass matrices, and the simplicial deck action with its
//! invariant-sector (quotient) reduction.

use std::collections::HashMap;

use crate::mesh::{DeckGroup, SimplicialComplex3};
use crate::metric::MetricData;
use crate::sparse::{cg, dot, Csr};
use crate::LabError;

#[derive(Debug, Clone, PartialEq)]
pub struct Cochain {
    pub degree: u8,
    pub values: Vec<f64>,
}

impl Cochain {
    pub fn zeros(degree: u8, len: usize) -> Self {
        Cochain {
            degree,
            values: vec![0.0; len],
        }
    }
}

pub fn simplex_count(mesh: &SimplicialComplex3, degree: u8) -> usize {
    match degree {
        0 => mesh.vertices.len(),
        1 => mesh.edges.len(),
        2 => mesh.faces.len(),
        3 => mesh.tets.len(),
        _ => panic!("bad degree"),
    }
}

/// Exterior derivative: signed incidence product; d(d(c)) = 0 exactly.
pub fn d(mesh: &SimplicialComplex3, c: &Cochain) -> Result<Cochain, LabError> {
    let op = match c.degree {
        0 => &mesh.d0,
        1 => &mesh.d1,
        2 => &mesh.d2,
        _ => {
            return Err(LabError::Mesh(format!(
                "cannot take d of a degree-{} cochain",
                c.degree
            )))
        }
    };
    if c.values.len() != op.ncols {
        return Err(LabError::Mesh("cochain length mismatch".into()));
    }
    Ok(Cochain {
        degree: c.degree + 1,
        values: op.apply(&c.values),
    })
}

pub fn mass(metric: &MetricData, degree: u8) -> &Csr {
    match degree {
        0 => &metric.m0,
        1 => &metric.m1,
        2 => &metric.m2,
        3 => &metric.m3,
        _ => panic!("bad degree"),
    }
}

/// L2 inner product <a, b> = a^T M_k b.
pub fn hodge_inner(metric: &MetricData, a: &Cochain, b: &Cochain) -> Result<f64, LabError> {
    if a.degree != b.degree {
        return Err(LabError::Mesh("degree mismatch in inner product".into()));
    }
    let m = mass(metric, a.degree);
    Ok(dot(&a.values, &m.apply(&b.values)))
}

/// Codifferential delta = M_{k-1}^{-1} d^T M_k, realized with a conjugate
/// gradient solve on the (well-conditioned) mass matrix.
pub fn codifferential(
    mesh: &SimplicialComplex3,
    metric: &MetricData,
    c: &Cochain,
) -> Result<Cochain, LabError> {
    let op = match c.degree {
        1 => &mesh.d0,
        2 => &mesh.d1,
        3 => &mesh.d2,
        _ => {
            return Err(LabError::Mesh(format!(
                "cannot take delta of a degree-{} cochain",
                c.degree
            )))
        }
    };
    let mk = mass(metric, c.degree);
    let mk1 = mass(metric, c.degree - 1);
    let rhs = {
        let t = mk.apply(&c.values);
        op.transpose().apply(&t)
    };
    let mut x = vec![0.0; rhs.len()];
    let diag = mk1.diagonal();
    cg(
        &|v, out| mk1.mul_vec(v, out),
        &rhs,
        &mut x,
        1e-13,
        2000,
        Some(&diag),
    );
    Ok(Cochain {
        degree: c.degree - 1,
        values: x,
    })
}

/// Integral of a 3-cochain over the oriented manifold: cochain values live
/// on sorted tets, the metric layer knows their sign against the calibrated
/// orientation.
pub fn oriented_integral_3(metric: &MetricData, c: &Cochain) -> Result<f64, LabError> {
    if c.degree != 3 {
        return Err(LabError::Mesh("oriented integral wants a 3-cochain".into()));
    }
    Ok(c
        .values
        .iter()
        .zip(metric.tets.iter())
        .map(|(v, t)| v * t.orient)
        .sum())
}

/// Parity sign of the permutation sorting a small tuple.
fn sort_sign(v: &mut [usize]) -> f64 {
    let mut sign = 1.0;
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            if v[i] > v[j] {
                v.swap(i, j);
                sign = -sign;
            }
        }
    }
    sign
}

/// Simplicial action of one deck permutation on k-cochains: pullback along
/// the automorphism, with orientation signs from re-sorting.
pub fn deck_action(
    mesh: &SimplicialComplex3,
    perm: &[usize],
    c: &Cochain,
) -> Result<Cochain, LabError> {
    let mut out = Cochain::zeros(c.degree, c.values.len());
    match c.degree {
        0 => {
            for (v, val) in out.values.iter_mut().enumerate() {
                *val = c.values[perm[v]];
            }
        }
        1 => {
            for (ei, e) in mesh.edges.iter().enumerate() {
                let mut img = [perm[e[0]], perm[e[1]]];
                let sign = sort_sign(&mut img);
                let id = mesh
                    .edge_id(img[0], img[1])
                    .ok_or_else(|| LabError::Mesh("deck image edge missing".into()))?;
                out.values[ei] = sign * c.values[id];
            }
        }
        2 => {
            for (fi, f) in mesh.faces.iter().enumerate() {
                let mut img = [perm[f[0]], perm[f[1]], perm[f[2]]];
                let sign = sort_sign(&mut img);
                let id = mesh
                    .face_id(&img)
                    .ok_or_else(|| LabError::Mesh("deck image face missing".into()))?;
                out.values[fi] = sign * c.values[id];
            }
        }
        3 => {
            let lookup: HashMap<[usize; 4], usize> = mesh
                .tets
                .iter()
                .enumerate()
                .map(|(i, t)| (*t, i))
                .collect();
            for (ti, t) in mesh.tets.iter().enumerate() {
                let mut img = [perm[t[0]], perm[t[1]], perm[t[2]], perm[t[3]]];
                let sign = sort_sign(&mut img);
                let id = *lookup
                    .get(&img)
                    .ok_or_else(|| LabError::Mesh("deck image tet missing".into()))?;
                out.values[ti] = sign * c.values[id];
            }
        }
        _ => return Err(LabError::Mesh("bad degree".into())),
    }
    Ok(out)
}

/// Group average: the projector onto the deck-invariant sector.
pub fn deck_average(
    mesh: &SimplicialComplex3,
    deck: &DeckGroup,
    c: &Cochain,
) -> Result<Cochain, LabError> {
    let mut acc = Cochain::zeros(c.degree, c.values.len());
    for perm in &deck.perms {
        let a = deck_action(mesh, perm, c)?;
        for (x, y) in acc.values.iter_mut().zip(a.values.iter()) {
            *x += y;
        }
    }
    let inv = 1.0 / deck.perms.len() as f64;
    for x in acc.values.iter_mut() {
        *x *= inv;
    }
    Ok(acc)
}

/// Orthonormal basis of the deck-invariant sector for vertex (degree 0) or
/// edge (degree 1) cochains, as a sparse full-by-reduced matrix whose
/// columns are signed orbit indicators scaled by 1/sqrt(orbit size).
pub struct OrbitReduction {
    pub basis: Csr,
    pub degree: u8,
}

impl OrbitReduction {
    pub fn build(mesh: &SimplicialComplex3, deck: &DeckGroup, degree: u8) -> Result<Self, LabError> {
        let n = simplex_count(mesh, degree);
        // signed image of simplex under each permutation
        let image = |perm: &[usize], s: usize| -> Result<(usize, f64), LabError> {
            match degree {
                0 => Ok((perm[s], 1.0)),
                1 => {
                    let e = mesh.edges[s];
                    let mut img = [perm[e[0]], perm[e[1]]];
                    let sign = sort_sign(&mut img);
                    Ok((
                        mesh.edge_id(img[0], img[1])
                            .ok_or_else(|| LabError::Mesh("orbit image missing".into()))?,
                        sign,
                    ))
                }
                _ => Err(LabError::Mesh("orbit reduction implemented for degrees 0 and 1".into())),
            }
        };
        let mut orbit_sign = vec![0.0f64; n];
        let mut orbit_of = vec![usize::MAX; n];
        let mut orbits: Vec<Vec<usize>> = Vec::new();
        for s in 0..n {
            if orbit_of[s] != usize::MAX {
                continue;
            }
            let oid = orbits.len();
            let mut members = Vec::new();
            orbit_of[s] = oid;
            orbit_sign[s] = 1.0;
            members.push(s);
            // the deck group is closed, one sweep of all elements suffices
            for perm in &deck.perms {
                let (img, sign) = image(perm, s)?;
                if orbit_of[img] == usize::MAX {
                    orbit_of[img] = oid;
                    orbit_sign[img] = sign;
                    members.push(img);
                } else if orbit_of[img] == oid && (orbit_sign[img] - sign).abs() > 1e-9 {
                    return Err(LabError::Mesh(
                        "orbit with inconsistent orientation signs (flipped orbit)".into(),
                    ));
                }
            }
            orbits.push(members);
        }
        let mut coo = Vec::with_capacity(n);
        for (oid, members) in orbits.iter().enumerate() {
            let w = 1.0 / (members.len() as f64).sqrt();
            for &m in members {
                coo.push((m as u32, oid as u32, orbit_sign[m] * w));
            }
        }
        Ok(OrbitReduction {
            basis: Csr::from_coo(n, orbits.len(), coo),
            degree,
        })
    }

    pub fn reduced_dim(&self) -> usize {
        self.basis.ncols
    }

    /// V^T A V
    pub fn reduce_matrix(&self, a: &Csr) -> Csr {
        self.basis.transpose().matmul(&a.matmul(&self.basis))
    }

    /// V^T A W for mixed-degree operators (W the other reduction).
    pub fn reduce_matrix_mixed(&self, a: &Csr, other: &OrbitReduction) -> Csr {
        self.basis.transpose().matmul(&a.matmul(&other.basis))
    }

    pub fn reduce_vec(&self, x: &[f64]) -> Vec<f64> {
        self.basis.transpose().apply(x)
    }

    pub fn lift(&self, x: &[f64]) -> Vec<f64> {
        self.basis.apply(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{cell16, cell16_antipodal_deck, MeshHierarchy};
    use crate::metric::metric_from_immersion;
    use nk6_core::immersion::{GreatSphere, HopfLift, Immersion};
    use nk6_core::rng::Rng;

    fn setup(level: usize) -> (MeshHierarchy, MetricData) {
        let imm = GreatSphere::new();
        let hier = MeshHierarchy::build(cell16(), cell16_antipodal_deck(), level);
        let metric = metric_from_immersion(hier.finest(), &imm, 1e-3).unwrap();
        (hier, metric)
    }

    #[test]
    fn d_squared_is_zero_and_constant_functions_are_closed() {
        let (hier, _) = setup(2);
        let mesh = hier.finest();
        let ones = Cochain {
            degree: 0,
            values: vec![1.0; mesh.vertices.len()],
        };
        let d1 = d(mesh, &ones).unwrap();
        assert!(d1.values.iter().all(|v| *v == 0.0));
        let mut rng = Rng::new(9);
        let random0 = Cochain {
            degree: 0,
            values: (0..mesh.vertices.len()).map(|_| rng.normal()).collect(),
        };
        // the incidence composition is exactly zero; applying it to floats
        // leaves only rounding residue
        assert!(mesh.boundary_squared_is_zero());
        let dd = d(mesh, &d(mesh, &random0).unwrap()).unwrap();
        assert!(dd.values.iter().all(|v| v.abs() < 1e-13));
        let random1 = Cochain {
            degree: 1,
            values: (0..mesh.edges.len()).map(|_| rng.normal()).collect(),
        };
        let dd1 = d(mesh, &d(mesh, &random1).unwrap()).unwrap();
        assert!(dd1.values.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn discrete_stokes_on_closed_mesh() {
        // the oriented sum of (d c) over all tets telescopes away
        let (hier, metric) = setup(2);
        let mesh = hier.finest();
        let mut rng = Rng::new(11);
        let c = Cochain {
            degree: 2,
            values: (0..mesh.faces.len()).map(|_| rng.normal()).collect(),
        };
        let dc = d(mesh, &c).unwrap();
        let total = oriented_integral_3(&metric, &dc).unwrap();
        assert!(total.abs() < 1e-10, "telescoping failed: {total}");
    }

    #[test]
    fn inner_product_positive_and_adjointness() {
        let (hier, metric) = setup(2);
        let mesh = hier.finest();
        let mut rng = Rng::new(13);
        let a = Cochain {
            degree: 1,
            values: (0..mesh.edges.len()).map(|_| rng.normal()).collect(),
        };
        let b = Cochain {
            degree: 2,
            values: (0..mesh.faces.len()).map(|_| rng.normal()).collect(),
        };
        assert!(hodge_inner(&metric, &a, &a).unwrap() > 0.0);
        // <d a, b>_2 = <a, delta b>_1
        let lhs = hodge_inner(&metric, &d(mesh, &a).unwrap(), &b).unwrap();
        let rhs = hodge_inner(&metric, &a, &codifferential(mesh, &metric, &b).unwrap()).unwrap();
        assert!(
            (lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()),
            "adjointness: {lhs} vs {rhs}"
        );
        let mism = hodge_inner(&metric, &a, &b);
        assert!(mism.is_err());
    }

    #[test]
    fn delta_squared_vanishes() {
        let (hier, metric) = setup(2);
        let mesh = hier.finest();
        let mut rng = Rng::new(15);
        let c = Cochain {
            degree: 3,
            values: (0..mesh.tets.len()).map(|_| rng.normal()).collect(),
        };
        let d1c = codifferential(mesh, &metric, &c).unwrap();
        let d2c = codifferential(mesh, &metric, &d1c).unwrap();
        let norm2 = hodge_inner(&metric, &d2c, &d2c).unwrap();
        assert!(norm2 < 1e-18 * (1.0 + c.values.len() as f64), "delta^2 = {norm2}");
    }

    #[test]
    fn deck_action_commutes_with_d_and_masses() {
        let imm = HopfLift::standard_quadric();
        let hier = MeshHierarchy::build(cell16(), cell16_antipodal_deck(), 2);
        let mesh = hier.finest();
        let deck = hier.finest_deck();
        let metric = metric_from_immersion(mesh, &imm, 1e-3).unwrap();
        let mut rng = Rng::new(17);
        let x = Cochain {
            degree: 1,
            values: (0..mesh.edges.len()).map(|_| rng.normal()).collect(),
        };
        for perm in &deck.perms {
            // d (g x) = g (d x)
            let lhs = d(mesh, &deck_action(mesh, perm, &x).unwrap()).unwrap();
            let rhs = deck_action(mesh, perm, &d(mesh, &x).unwrap()).unwrap();
            for (a, b) in lhs.values.iter().zip(rhs.values.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
            // M1 (g x) = g-transport of M1 x up to metric deck defect
            let gm = metric.m1.apply(&deck_action(mesh, perm, &x).unwrap().values);
            let mg = deck_action(
                mesh,
                perm,
                &Cochain {
                    degree: 1,
                    values: metric.m1.apply(&x.values),
                },
            )
            .unwrap();
            let scale = gm.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in gm.iter().zip(mg.values.iter()) {
                assert!((a - b).abs() < 1e-10 * (1.0 + scale), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn orbit_reduction_is_orthonormal_projection() {
        let imm = HopfLift::standard_quadric();
        let hier = MeshHierarchy::build(cell16(), cell16_antipodal_deck(), 1);
        let mesh = hier.finest();
        let deck = hier.finest_deck();
        let red = OrbitReduction::build(mesh, deck, 1).unwrap();
        // V^T V = I
        let vtv = red.basis.transpose().matmul(&red.basis);
        for r in 0..vtv.nrows {
            let (cols, vals) = vtv.row(r);
            for (c, v) in cols.iter().zip(vals.iter()) {
                let expect = if *c as usize == r { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-12);
            }
        }
        // V V^T equals the deck average on random cochains
        let mut rng = Rng::new(19);
        let x = Cochain {
            degree: 1,
            values: (0..mesh.edges.len()).map(|_| rng.normal()).collect(),
        };
        let avg = deck_average(mesh, deck, &x).unwrap();
        let vvt = red.lift(&red.reduce_vec(&x.values));
        for (a, b) in avg.values.iter().zip(vvt.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        let _ = imm;
    }
}

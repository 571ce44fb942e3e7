//! The spectral pipeline: from an immersion and a refinement level to the
//! deformation space T_L = K_3.
//!
//! The coclosed curl spectrum is computed from the pencil (S, M1) with
//! S = d^T M2 d: every nonzero eigenvalue a of that pencil is exactly
//! discretely coclosed, with curl eigenvalues +-sqrt(a) split by a
//! Rayleigh-Ritz of the curl pairing on the converged cluster. Large
//! problems add a gradient penalty gamma (M1 G) M0^{-1} (G^T M1) -- inactive
//! exactly on the coclosed sector -- so a multigrid-preconditioned LOBPCG
//! sees the coclosed clusters as the smallest eigenvalues.
//!
//! Quotient examples are solved in the deck-invariant sector through the
//! orbit reduction, which is the spectrum of the quotient manifold.

use nk6_core::immersion::{example_immersion, ExampleId, Immersion};
use nk6_core::so3rep::{build_irreducible_so3, IrrepData};

use crate::dec::{Cochain, OrbitReduction};
use crate::eig::{dense_gevp, edge_prolongation, lobpcg, sym_eig, Block, DiagPrec, MgPrec, Preconditioner};
use crate::mesh::{
    cell16, cell600, right_multiplication_deck, DeckGroup, MeshHierarchy,
    SimplicialComplex3,
};
use crate::metric::{metric_from_immersion, MetricData};
use crate::sparse::{cg, dot, Csr};
use crate::LabError;
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SpectrumConfig {
    pub window_lo: f64,
    pub window_hi: f64,
    /// gradient penalty weight
    pub gamma: f64,
    /// relative gap that splits eigenvalue clusters
    pub cluster_gap: f64,
    pub lobpcg_tol: f64,
    pub max_iter: usize,
    pub dense_threshold: usize,
    pub seed: u64,
    pub min_quality: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            window_lo: 2.5,
            window_hi: 3.5,
            gamma: 10.0,
            cluster_gap: 0.2,
            lobpcg_tol: 1e-8,
            max_iter: 250,
            dense_threshold: 3000,
            seed: 20260809,
            min_quality: 1e-3,
        }
    }
}

/// Eigen-cochains of the discrete curl with eigenvalue in the window,
/// identified as the deformation space T_L.
pub struct SpectralBasis {
    /// all computed curl eigenvalues (ascending), quotient sector when the
    /// example has deck symmetry
    pub curl_eigenvalues: Vec<f64>,
    /// laplacian eigenvalues (a = mu^2) of the computed coclosed pairs
    pub delta_eigenvalues: Vec<f64>,
    pub window: (f64, f64),
    pub dim_t: usize,
    /// in-window curl eigenvalues
    pub t_eigenvalues: Vec<f64>,
    /// in-window eigenvectors, lifted to the cover, M1-orthonormal
    pub t_vectors: Vec<Cochain>,
    /// per in-window vector: relative coclosedness residual |delta beta|/|beta|
    pub coclosed_residuals: Vec<f64>,
    /// per in-window vector: relative |Delta beta - 9 beta| residual measured
    /// against the window center squared
    pub laplace_residuals: Vec<f64>,
    /// per in-window vector: relative |*d beta - mu beta| residual
    pub curl_residuals: Vec<f64>,
    pub mesh_hash: String,
    pub solver_iterations: usize,
}

/// An example wired to its mesh hierarchy and metric.
pub struct ProblemSetup {
    pub imm: Box<dyn Immersion>,
    pub hier: MeshHierarchy,
    pub metric: MetricData,
    pub irrep: Option<IrrepData>,
    pub example: Option<ExampleId>,
}

impl ProblemSetup {
    pub fn mesh(&self) -> &SimplicialComplex3 {
        self.hier.finest()
    }
}

/// Builds the mesh + metric for one of the named examples: the 16-cell seed
/// for the sphere-topology rows (antipodal deck for the Hopf lift), the
/// 600-cell seed for the SO(3) orbits whose deck groups live in the binary
/// icosahedral group.
pub fn setup_example(
    id: ExampleId,
    refine_level: usize,
    min_quality: f64,
) -> Result<ProblemSetup, LabError> {
    let irrep = match id {
        ExampleId::L3 | ExampleId::L4 => Some(build_irreducible_so3()?),
        _ => None,
    };
    let imm = example_immersion(id, irrep.as_ref())?;
    setup_immersion(imm, irrep, Some(id), refine_level, min_quality)
}

pub fn setup_immersion(
    imm: Box<dyn Immersion>,
    irrep: Option<IrrepData>,
    example: Option<ExampleId>,
    refine_level: usize,
    min_quality: f64,
) -> Result<ProblemSetup, LabError> {
    let deck_quats = imm.deck_group();
    let use_600 = deck_quats.iter().any(|q| {
        // outside the 16-cell symmetry group {+-1, +-i, +-j, +-k}
        let m = q
            .0
            .iter()
            .fold(0.0f64, |mx, v| mx.max(v.abs()));
        (m - 1.0).abs() > 1e-9
    });
    let (seed, deck) = if use_600 {
        let seed = cell600();
        let deck = right_multiplication_deck(&seed, &deck_quats)?;
        (seed, deck)
    } else if deck_quats.len() > 1 {
        let seed = cell16();
        let deck = right_multiplication_deck(&seed, &deck_quats)?;
        (seed, deck)
    } else {
        (cell16(), DeckGroup::trivial(8))
    };
    let hier = MeshHierarchy::build(seed, deck, refine_level);
    let metric = metric_from_immersion(hier.finest(), imm.as_ref(), min_quality)?;
    Ok(ProblemSetup {
        imm,
        hier,
        metric,
        irrep,
        example,
    })
}

/// Max metric edge length on the finest mesh (the h of convergence studies).
pub fn max_metric_edge(mesh: &SimplicialComplex3, metric: &MetricData) -> f64 {
    let mut h: f64 = 0.0;
    for (ti, t) in mesh.tets.iter().enumerate() {
        let geo = &metric.tets[ti];
        for &(a, b) in crate::mesh::LOCAL_PAIRS.iter() {
            let d = [
                geo.svert[b][0] - geo.svert[a][0],
                geo.svert[b][1] - geo.svert[a][1],
                geo.svert[b][2] - geo.svert[a][2],
            ];
            let mut l2 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    l2 += d[i] * geo.g[i][j] * d[j];
                }
            }
            h = h.max(l2.sqrt());
        }
        let _ = t;
    }
    h
}

struct ReducedPencil {
    s: Csr,
    m1: Csr,
    /// per-level gradient incidences (reduced when a deck is present)
    grads: Vec<Csr>,
    /// per-level edge prolongations (reduced)
    prols: Vec<Csr>,
    m1g: Csr,
    m0_lumped: Vec<f64>,
    curl: Csr,
    /// edge-space reduction on the finest level (None when the deck is
    /// trivial)
    reduction: Option<OrbitReduction>,
}

fn build_pencil(setup: &ProblemSetup) -> Result<ReducedPencil, LabError> {
    let mesh = setup.mesh();
    let metric = &setup.metric;
    let nlev = setup.hier.levels.len();
    let has_deck = setup.hier.finest_deck().order() > 1;
    let s_full = {
        let d1 = &mesh.d1;
        d1.transpose().matmul(&metric.m2.matmul(d1)).symmetrize()
    };
    let m1g_full = metric.m1.matmul(&mesh.d0);
    if !has_deck {
        let grads: Vec<Csr> = setup.hier.levels.iter().map(|l| l.d0.clone()).collect();
        let mut prols = Vec::new();
        for l in 0..nlev - 1 {
            prols.push(edge_prolongation(
                &setup.hier.levels[l],
                &setup.hier.levels[l + 1],
                &setup.hier.links[l],
            ));
        }
        return Ok(ReducedPencil {
            s: s_full,
            m1: metric.m1.clone(),
            grads,
            prols,
            m1g: m1g_full,
            m0_lumped: metric.m0_lumped.clone(),
            curl: metric.curl.clone(),
            reduction: None,
        });
    }
    // reduce every level to the deck-invariant sector
    let mut red1: Vec<OrbitReduction> = Vec::with_capacity(nlev);
    let mut red0: Vec<OrbitReduction> = Vec::with_capacity(nlev);
    for l in 0..nlev {
        red1.push(OrbitReduction::build(
            &setup.hier.levels[l],
            &setup.hier.decks[l],
            1,
        )?);
        red0.push(OrbitReduction::build(
            &setup.hier.levels[l],
            &setup.hier.decks[l],
            0,
        )?);
    }
    let fine1 = &red1[nlev - 1];
    let fine0 = &red0[nlev - 1];
    let s = fine1.reduce_matrix(&s_full).symmetrize();
    let m1 = fine1.reduce_matrix(&metric.m1).symmetrize();
    let curl = fine1.reduce_matrix(&metric.curl).symmetrize();
    let m1g = fine1.basis.transpose().matmul(&m1g_full.matmul(&fine0.basis));
    let mut grads = Vec::with_capacity(nlev);
    for l in 0..nlev {
        grads.push(
            red1[l]
                .basis
                .transpose()
                .matmul(&setup.hier.levels[l].d0.matmul(&red0[l].basis)),
        );
    }
    let mut prols = Vec::with_capacity(nlev - 1);
    for l in 0..nlev - 1 {
        let p = edge_prolongation(
            &setup.hier.levels[l],
            &setup.hier.levels[l + 1],
            &setup.hier.links[l],
        );
        prols.push(red1[l + 1].basis.transpose().matmul(&p.matmul(&red1[l].basis)));
    }
    // reduced lumped vertex mass: orbit averages
    let m0_lumped = {
        let v0 = &fine0.basis;
        let mut out = vec![0.0; v0.ncols];
        let vt = v0.transpose();
        for r in 0..vt.nrows {
            let (cols, vals) = vt.row(r);
            for (c, v) in cols.iter().zip(vals.iter()) {
                out[r] += v * v * metric.m0_lumped[*c as usize];
            }
        }
        out
    };
    Ok(ReducedPencil {
        s,
        m1,
        grads,
        prols,
        m1g,
        m0_lumped,
        curl,
        reduction: Some(red1.pop().unwrap()),
    })
}

fn assemble_penalty(p: &ReducedPencil, gamma: f64) -> Csr {
    // B = S + gamma (M1 G) diag^{-1} (M1 G)^T
    let mut scaled = p.m1g.clone();
    // scale columns by 1/sqrt(m0_lumped), then form X X^T
    for r in 0..scaled.nrows {
        let (s, e) = (scaled.indptr[r], scaled.indptr[r + 1]);
        for k in s..e {
            let c = scaled.indices[k] as usize;
            scaled.data[k] /= p.m0_lumped[c].sqrt();
        }
    }
    let pen = scaled.matmul(&scaled.transpose());
    p.s.add_scaled(&pen, gamma).symmetrize()
}

/// The deformation space: solve the coclosed pencil, split curls by
/// Rayleigh-Ritz, count the window cluster.
pub fn deformation_space(setup: &ProblemSetup, cfg: &SpectrumConfig) -> Result<SpectralBasis, LabError> {
    let pencil = build_pencil(setup)?;
    let n = pencil.s.nrows;
    let amax = cfg.window_hi * cfg.window_hi;
    let mut iterations = 0usize;

    // raw coclosed pairs (a, x) with a ascending, covering a <= amax
    let (_avals, xblock): (Vec<f64>, Block) = if n <= cfg.dense_threshold {
        let (vals, vecs) = dense_gevp(&pencil.s, &pencil.m1)?;
        // drop the gradient kernel (a = 0)
        let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 0.5).collect();
        let mut kept_vals = Vec::new();
        let mut cols = Block::zeros(n, keep.len());
        for (jj, &j) in keep.iter().enumerate() {
            kept_vals.push(vals[j]);
            for i in 0..n {
                cols.col_mut(jj)[i] = vecs[(i, j)];
            }
            if vals[j] > amax * 2.0 + 10.0 && jj > 8 {
                break;
            }
        }
        let stop = kept_vals
            .iter()
            .position(|&a| a > amax * 2.0 + 10.0)
            .unwrap_or(kept_vals.len())
            .max(1);
        (
            kept_vals[..stop].to_vec(),
            cols.keep_columns(&(0..stop).collect::<Vec<_>>()),
        )
    } else {
        let b = assemble_penalty(&pencil, cfg.gamma);
        let mg = MgPrec::new(b.clone(), pencil.grads.clone(), pencil.prols.clone())?;
        let mut nev = 30usize;
        loop {
            let res = lobpcg(&b, &pencil.m1, &mg, nev, cfg.lobpcg_tol, cfg.max_iter, cfg.seed)?;
            iterations += res.iterations;
            // keep converged pairs only; unconverged Ritz stragglers would
            // scatter junk values into the cluster gaps
            let keep: Vec<usize> = (0..res.values.len())
                .filter(|&j| res.residuals[j] < cfg.lobpcg_tol * 100.0)
                .collect();
            let converged_max = keep
                .iter()
                .map(|&j| res.values[j])
                .fold(f64::NEG_INFINITY, f64::max);
            let covered = converged_max > amax * 1.15;
            if covered || nev >= 64 {
                if !covered {
                    return Err(LabError::Solver(format!(
                        "eigensolver converged only {} pairs up to {converged_max:.3},                          not covering the window top {amax:.3}",
                        keep.len()
                    )));
                }
                let vals: Vec<f64> = keep.iter().map(|&j| res.values[j]).collect();
                let cols = res.vectors.keep_columns(&keep);
                break (vals, cols);
            }
            nev += 12;
        }
    };

    // Rayleigh-Ritz of the curl pairing on the coclosed subspace
    let mx = xblock.spmm(&pencil.m1);
    let gm = xblock.gram(&mx);
    let (mvals, mvecs) = sym_eig(&((&gm + &gm.transpose()) * 0.5));
    let vmax = mvals.last().copied().unwrap_or(1.0);
    let keep: Vec<usize> = (0..mvals.len()).filter(|&i| mvals[i] > 1e-10 * vmax).collect();
    let mut white = DMatrix::zeros(xblock.k, keep.len());
    for (jj, &j) in keep.iter().enumerate() {
        let s = 1.0 / mvals[j].sqrt();
        for i in 0..xblock.k {
            white[(i, jj)] = mvecs[(i, j)] * s;
        }
    }
    let xw = xblock.dense_mul(&white);
    let cx = xw.spmm(&pencil.curl);
    let cr = xw.gram(&cx);
    let (mu, w) = sym_eig(&((&cr + &cr.transpose()) * 0.5));
    let y = xw.dense_mul(&w);

    // delta eigenvalues carried over for reporting: project a-values
    let delta_eigenvalues = {
        let sx = y.spmm(&pencil.s);
        (0..y.k).map(|j| dot(y.col(j), sx.col(j))).collect::<Vec<f64>>()
    };

    // window + cluster validation
    let in_window: Vec<usize> = (0..mu.len())
        .filter(|&i| mu[i] >= cfg.window_lo && mu[i] <= cfg.window_hi)
        .collect();
    let relgap = |a: f64, b: f64| (b - a) / a.abs().max(b.abs()).max(1.0);
    if in_window.is_empty() {
        return Err(LabError::UnresolvedCluster(format!(
            "no curl eigenvalues inside [{}, {}]",
            cfg.window_lo, cfg.window_hi
        )));
    }
    let lo_in = mu[in_window[0]];
    let hi_in = mu[*in_window.last().unwrap()];
    let below = (0..mu.len())
        .filter(|&i| mu[i] < cfg.window_lo)
        .map(|i| mu[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let above = (0..mu.len())
        .filter(|&i| mu[i] > cfg.window_hi)
        .map(|i| mu[i])
        .fold(f64::INFINITY, f64::min);
    if below.is_finite() && relgap(below, lo_in) < cfg.cluster_gap {
        return Err(LabError::UnresolvedCluster(format!(
            "window low edge cuts a cluster: {below:.4} vs {lo_in:.4}"
        )));
    }
    if above.is_finite() && relgap(hi_in, above) < cfg.cluster_gap {
        return Err(LabError::UnresolvedCluster(format!(
            "window high edge cuts a cluster: {hi_in:.4} vs {above:.4}"
        )));
    }
    if !above.is_finite() {
        return Err(LabError::UnresolvedCluster(
            "computed spectrum does not extend beyond the window".into(),
        ));
    }

    // lift the in-window vectors to the cover
    let mesh = setup.mesh();
    let metric = &setup.metric;
    let mut t_vectors = Vec::with_capacity(in_window.len());
    let mut t_eigenvalues = Vec::with_capacity(in_window.len());
    for &j in &in_window {
        let v = y.col(j).to_vec();
        let full = match &pencil.reduction {
            Some(r) => r.lift(&v),
            None => v,
        };
        t_vectors.push(Cochain {
            degree: 1,
            values: full,
        });
        t_eigenvalues.push(mu[j]);
    }

    // residuals in the cover space
    let s_full = mesh.d1.transpose().matmul(&metric.m2.matmul(&mesh.d1));
    let m1_full = &metric.m1;
    let m1diag = m1_full.diagonal();
    let m0diag = metric.m0.diagonal();
    let mut coclosed_residuals = Vec::new();
    let mut laplace_residuals = Vec::new();
    let mut curl_residuals = Vec::new();
    for (idx, tv) in t_vectors.iter().enumerate() {
        let x = &tv.values;
        let m1x = m1_full.apply(x);
        let xnorm = dot(x, &m1x).sqrt();
        // delta x = M0^{-1} G^T M1 x
        let gt = mesh.d0.transpose().apply(&m1x);
        let mut dx = vec![0.0; gt.len()];
        cg(
            &|v, o| metric.m0.mul_vec(v, o),
            &gt,
            &mut dx,
            1e-12,
            2000,
            Some(&m0diag),
        );
        let coclosed = dot(&dx, &gt).max(0.0).sqrt() / xnorm;
        coclosed_residuals.push(coclosed);
        // Delta x = delta d x + d delta x, strong form
        let sdx = s_full.apply(x);
        let mut t1 = vec![0.0; x.len()];
        cg(
            &|v, o| m1_full.mul_vec(v, o),
            &sdx,
            &mut t1,
            1e-12,
            4000,
            Some(&m1diag),
        );
        let t2 = mesh.d0.apply(&dx);
        let mu2 = t_eigenvalues[idx] * t_eigenvalues[idx];
        let mut resid = vec![0.0; x.len()];
        for i in 0..x.len() {
            resid[i] = t1[i] + t2[i] - mu2 * x[i];
        }
        let rm = dot(&resid, &m1_full.apply(&resid)).max(0.0).sqrt();
        laplace_residuals.push(rm / (mu2 * xnorm));
        // curl residual: M1^{-1} C x - mu x
        let cxv = metric.curl.apply(x);
        let mut sd = vec![0.0; x.len()];
        cg(
            &|v, o| m1_full.mul_vec(v, o),
            &cxv,
            &mut sd,
            1e-12,
            4000,
            Some(&m1diag),
        );
        let mut rc = vec![0.0; x.len()];
        for i in 0..x.len() {
            rc[i] = sd[i] - t_eigenvalues[idx] * x[i];
        }
        let rcn = dot(&rc, &m1_full.apply(&rc)).max(0.0).sqrt();
        curl_residuals.push(rcn / (t_eigenvalues[idx].abs() * xnorm));
    }

    Ok(SpectralBasis {
        curl_eigenvalues: mu,
        delta_eigenvalues,
        window: (cfg.window_lo, cfg.window_hi),
        dim_t: in_window.len(),
        t_eigenvalues,
        t_vectors,
        coclosed_residuals,
        laplace_residuals,
        curl_residuals,
        mesh_hash: mesh.hash(),
        solver_iterations: iterations,
    })
}

/// Lowest eigenvalues of the function laplacian (pencil (G^T M1 G, M0)),
/// constants included; used for the mesh-convergence oracle against the
/// round S^3 value 3.
pub fn scalar_laplacian_eigenvalues(
    setup: &ProblemSetup,
    nev: usize,
    seed: u64,
) -> Result<Vec<f64>, LabError> {
    let mesh = setup.mesh();
    let metric = &setup.metric;
    let k0 = mesh
        .d0
        .transpose()
        .matmul(&metric.m1.matmul(&mesh.d0))
        .symmetrize();
    let n = k0.nrows;
    if n <= 3000 {
        let (vals, _) = dense_gevp(&k0, &metric.m0)?;
        return Ok(vals[..nev.min(vals.len())].to_vec());
    }
    let shifted = k0.add_scaled(&metric.m0, 1.0);
    let prec = DiagPrec::new(&shifted.diagonal());
    let res = lobpcg(&shifted, &metric.m0, &prec, nev, 1e-9, 600, seed)?;
    Ok(res.values.iter().take(nev).map(|v| v - 1.0).collect())
}

/// Convenience: the full operator assembly checks used by the invariants.
pub fn assemble_s(mesh: &SimplicialComplex3, metric: &MetricData) -> Csr {
    mesh.d1
        .transpose()
        .matmul(&metric.m2.matmul(&mesh.d1))
        .symmetrize()
}

pub use crate::eig::EigResult;
pub type Prec = dyn Preconditioner;

//! Report envelopes and plot-ready emitters. Reports are JSON with the
//! schema tag "nk6-report/1" and embed the config hash, mesh hash and
//! software version; field order is fixed by the struct definitions and no
//! timestamps are included, so identical runs serialize byte-identically.

use std::fmt::Write as _;

use nk6_core::nk6::VerificationReport;

use crate::deform::QuadraticFormResult;
use crate::spectrum::SpectralBasis;

pub const SCHEMA: &str = "nk6-report/1";

pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct VerifyReport {
    pub schema: String,
    pub version: String,
    pub config_hash: String,
    pub convention: String,
    pub report: VerificationReport,
}

#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct SpectrumReport {
    pub schema: String,
    pub version: String,
    pub config_hash: String,
    pub mesh_hash: String,
    pub example: String,
    pub refine: usize,
    pub window: (f64, f64),
    pub dim_t: usize,
    pub t_eigenvalues: Vec<f64>,
    pub curl_eigenvalues: Vec<f64>,
    pub delta_eigenvalues: Vec<f64>,
    pub max_coclosed_residual: f64,
    pub max_laplace_residual: f64,
    pub max_curl_residual: f64,
    pub solver_iterations: usize,
}

impl SpectrumReport {
    pub fn new(cfg_hash: &str, example: &str, refine: usize, basis: &SpectralBasis) -> Self {
        let maxf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(*x));
        SpectrumReport {
            schema: SCHEMA.into(),
            version: version().into(),
            config_hash: cfg_hash.into(),
            mesh_hash: basis.mesh_hash.clone(),
            example: example.into(),
            refine,
            window: basis.window,
            dim_t: basis.dim_t,
            t_eigenvalues: basis.t_eigenvalues.clone(),
            curl_eigenvalues: basis.curl_eigenvalues.clone(),
            delta_eigenvalues: basis.delta_eigenvalues.clone(),
            max_coclosed_residual: maxf(&basis.coclosed_residuals),
            max_laplace_residual: maxf(&basis.laplace_residuals),
            max_curl_residual: maxf(&basis.curl_residuals),
            solver_iterations: basis.solver_iterations,
        }
    }
}

#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct ObstructionReport {
    pub schema: String,
    pub version: String,
    pub config_hash: String,
    pub mesh_hash: String,
    pub example: String,
    pub refine: usize,
    pub dim_t: usize,
    pub directions: usize,
    /// raw pairing vectors, one per sampled direction
    pub raw_pairings: Vec<Vec<f64>>,
    /// scale-free pairings |int K ^ beta| / (|alpha|^2 |beta|)
    pub relative_pairings: Vec<Vec<f64>>,
    pub max_relative_pairing: f64,
    pub kuranishi_symmetry_defect: f64,
    pub tau2: Vec<Vec<f64>>,
}

#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct SecondVarReport {
    pub schema: String,
    pub version: String,
    pub config_hash: String,
    pub mesh_hash: String,
    pub example: String,
    pub refine: usize,
    pub lambda: f64,
    pub results: Vec<QuadraticFormResult>,
    /// |Q| / |beta|^2 per kernel element
    pub normalized_kernel_values: Vec<f64>,
}

#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct MeshReport {
    pub schema: String,
    pub version: String,
    pub config_hash: String,
    pub mesh_hash: String,
    pub example: String,
    pub refine: usize,
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub tets: usize,
    pub euler_characteristic: i64,
    pub total_volume: f64,
    pub max_metric_edge: f64,
    pub roundtrip_identical: bool,
}

/// Spectrum CSV: index, eigenvalue, residual, cluster id (clusters split at
/// the configured relative gap).
pub fn spectrum_csv(basis: &SpectralBasis, cluster_gap: f64) -> String {
    let mut out = String::from("index,eigenvalue,residual,cluster\n");
    let mu = &basis.curl_eigenvalues;
    let mut cluster = 0usize;
    for i in 0..mu.len() {
        if i > 0 {
            let gap = (mu[i] - mu[i - 1]) / mu[i].abs().max(mu[i - 1].abs()).max(1.0);
            if gap > cluster_gap {
                cluster += 1;
            }
        }
        // residuals are tracked for the in-window vectors; others blank
        let res = basis
            .t_eigenvalues
            .iter()
            .position(|v| (v - mu[i]).abs() < 1e-14)
            .map(|j| format!("{}", basis.curl_residuals[j]))
            .unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", i, mu[i], res, cluster);
    }
    out
}

/// Per-sample geometry table for plotting.
pub fn geometry_csv(samples: &[nk6_core::GeometrySample]) -> String {
    let mut out = String::from(
        "q0,q1,q2,q3,omega_residual,mean_curvature_norm,phi_abs,im_phi_oriented,maslov_max\n",
    );
    for s in samples {
        let maslov = s.maslov.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.point[0],
            s.point[1],
            s.point[2],
            s.point[3],
            s.omega_residual,
            s.mean_curvature_norm,
            s.phi_abs,
            s.im_phi_oriented,
            maslov
        );
    }
    out
}

/// A gnuplot-compatible script for the spectrum CSV (data-only plotting).
pub fn spectrum_gnuplot(csv_name: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key off\n\
         set xlabel 'index'\n\
         set ylabel 'curl eigenvalue'\n\
         plot '{csv_name}' every ::1 using 1:2 with points pt 7 ps 0.6\n"
    )
}

pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

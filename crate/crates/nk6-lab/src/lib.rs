//! Numerical laboratory for Lagrangian submanifolds of the nearly Kahler
//! 6-sphere: tetrahedral meshes of the group covers, Whitney-form discrete
//! exterior calculus, curl-operator spectra, the linearized deformation
//! operator and its kernel, second variations, and Kuranishi obstructions.
//!
//! The pointwise geometry (octonions, the S^6 structure, the immersion zoo)
//! lives in `nk6-core`; this crate owns everything that allocates, solves or
//! touches the filesystem.

pub mod config;
pub mod dec;
pub mod deform;
pub mod eig;
pub mod mesh;
pub mod metric;
pub mod report;
pub mod sparse;
pub mod spectrum;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("geometry: {0}")]
    Geometry(nk6_core::GeomError),
    #[error("mesh: {0}")]
    Mesh(String),
    #[error("file format: {0}")]
    Format(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("the eigenvalue window touches an unresolved cluster: {0}")]
    UnresolvedCluster(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<nk6_core::GeomError> for LabError {
    fn from(e: nk6_core::GeomError) -> Self {
        LabError::Geometry(e)
    }
}

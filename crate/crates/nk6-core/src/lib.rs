//! Pointwise geometry of the strict nearly Kahler 6-sphere.
//!
//! This crate carries the algebraic core: octonion arithmetic with a fixed
//! Cayley-Dickson convention, the induced cross product and associative
//! 3-form on the imaginary octonions, the standard nearly Kahler structure
//! on S^6 together with a verifier suite for its structure equations, the
//! irreducible SO(3)-action on harmonic cubics, and the five homogeneous
//! Lagrangian immersions (plus Hopf lifts of plane conics).
//!
//! Everything here is allocation-light, deterministic and `no_std`-compatible
//! (with `alloc`); meshes, discrete exterior calculus and spectral solvers
//! live in the companion crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod fp;
pub mod immersion;
pub mod linalg;
pub mod nk6;
pub mod octonion;
pub mod quat;
pub mod rng;
pub mod so3rep;

pub use immersion::{GeometrySample, Immersion, TopologyTag};
pub use nk6::{ConePoint, NkSphere, SpherePoint, TangentVector, VerificationReport};
pub use octonion::{ImOctonion, Octonion};
pub use quat::Quat;

/// Errors raised by the pointwise geometry layer.
#[derive(Debug, Clone, PartialEq)]
pub enum GeomError {
    /// Two tangent vectors (or a point and a vector) refer to different base points.
    BaseMismatch,
    /// A vector expected to be tangent has a radial component beyond tolerance.
    NotTangent { residual: f64 },
    /// Cone radius must be positive.
    NonPositiveRadius,
    /// A chart jacobian is singular at the requested point.
    DegenerateJacobian { min_singular: f64 },
    /// Conic coefficient matrix is singular (the plane conic is not smooth).
    SingularConic { det_abs: f64 },
    /// The equivariant projection lost rank while building the SO(3) cross product.
    IrrepProjectionRank,
    /// Data for the irreducible SO(3)-action was required but not supplied.
    IrrepDataMissing,
}

impl core::fmt::Display for GeomError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GeomError::BaseMismatch => write!(f, "tangent vectors based at different points"),
            GeomError::NotTangent { residual } => {
                write!(f, "vector is not tangent (radial residual {residual:e})")
            }
            GeomError::NonPositiveRadius => write!(f, "cone radius must be positive"),
            GeomError::DegenerateJacobian { min_singular } => {
                write!(f, "degenerate jacobian (min singular value {min_singular:e})")
            }
            GeomError::SingularConic { det_abs } => {
                write!(f, "singular conic (|det| = {det_abs:e})")
            }
            GeomError::IrrepProjectionRank => {
                write!(f, "spin-3 projection rank failure while building the cross product")
            }
            GeomError::IrrepDataMissing => {
                write!(f, "irreducible SO(3) data must be built before this immersion")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GeomError {}

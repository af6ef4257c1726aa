//! Extended quantum geometric tensor for quasi-Hermitian (PT-symmetric) Hamiltonian families.
//!
//! The crate is organised bottom-up:
//!
//! * [`biortho`]: biorthonormal eigensystems, the metric operator `W`, gauge fixing;
//! * [`geometry`]: the extended QGT and everything derived from it (curvature, metric,
//!   Berry phase, fidelity, variance decomposition, interval classification);
//! * [`dynamics`]: the `W`-unitary Schrödinger-like evolution with gauge field `K(t)`;
//! * [`xy_chain`]: the dimerized XY chain in an alternating complex field, reduced to
//!   4×4 momentum blocks.

pub mod biortho;
pub mod dynamics;
pub mod error;
pub mod family;
pub mod geometry;
pub mod linalg;
pub mod models;
pub mod quadrature;
pub mod xy_chain;

pub use biortho::{
    biortho_eig, build_w, gauge_fix, gauge_transform, BiorthoEigensystem, EigTolerances, MetricOperator,
};
pub use error::{Error, Result};
pub use family::{FnFamily, HamiltonianFamily};
pub use linalg::{CMatrix, CVector};

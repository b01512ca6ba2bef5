//! Divergence-free virtual element solver for the Stokes eigenvalue problem
//! on general polygonal meshes.
//!
//! The crate provides the full pipeline: polygonal mesh generation and
//! refinement ([`mesh`]), lowest-order virtual element operators per cell
//! ([`local`]), global saddle-point assembly and a shift-invert eigensolver
//! ([`system`]), the residual a posteriori error indicator ([`estimator`]),
//! and the adaptive solve-estimate-mark-refine loop with convergence-order
//! fitting ([`adapt`]).

pub mod adapt;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod local;
pub mod mesh;
pub mod system;
#[cfg(test)]
pub(crate) mod test_oracle;

pub use error::{Error, Result};

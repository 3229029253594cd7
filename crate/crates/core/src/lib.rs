//! Discrete shape optimization on the manifold of planar triangular meshes.
//!
//! A mesh is a fixed [`ConnectivityComplex`] together with a
//! [`VertexConfig`]; optimization moves the vertices only. The objective is a
//! P1 finite-element tracking functional, regularized by a mesh-quality
//! penalty, and descent directions come from one of three metrics.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fem;
pub mod geodesic;
pub mod linalg;
pub mod mesh;
pub mod mesh_io;
pub mod metrics;
pub mod optimizer;
pub mod penalty;
pub mod vector;

pub use error::{MeshError, SolveError};
pub use mesh::{ConnectivityComplex, Mesh, SmoothingParam, Triangle, VertexConfig};
pub use vector::{Covector, TangentVector};

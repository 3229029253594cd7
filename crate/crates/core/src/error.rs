use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("complex is not pure: {0}")]
    NotPure(String),
    #[error("triangle adjacency graph is not connected ({components} components)")]
    NotTwoPathConnected { components: usize },
    #[error("edge ({0}, {1}) is induced with the same orientation by two triangles")]
    InconsistentOrientation(usize, usize),
    #[error("edge ({0}, {1}) belongs to more than two triangles")]
    EdgeOveruse(usize, usize),
    #[error("triangle {triangle} references vertex {index} but there are only {num_vertices} vertices")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        num_vertices: usize,
    },
    #[error("triangle {0} repeats a vertex")]
    RepeatedVertex(usize),
    #[error("vertex configuration has {got} vertices, complex expects {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("non-finite coordinate at vertex {0}")]
    NonFinite(usize),
    #[error("edge of zero length between vertices {0} and {1}")]
    DegenerateEdge(usize, usize),
    #[error("triangle {triangle} has non-positive signed area {area:e}")]
    NonpositiveArea { triangle: usize, area: f64 },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("linear system is singular or not positive definite (pivot {pivot:e} at row {row})")]
    SingularSystem { row: usize, pivot: f64 },
    #[error("fixed-point iteration of the implicit half step did not converge after {iterations} iterations (residual {residual:e})")]
    FixedPointDivergence { iterations: usize, residual: f64 },
    #[error("direction is not a descent direction (pairing {0:e})")]
    NonDescentDirection(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

pub type Result<T, E = MeshError> = std::result::Result<T, E>;

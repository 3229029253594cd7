//! P1 finite elements for `-Δy = r` with homogeneous Dirichlet data, the
//! adjoint of the objective `∫ y`, and the shape derivative of the reduced
//! objective with respect to the vertex coordinates.

use std::sync::OnceLock;

use crate::error::{MeshError, SolveError};
use crate::linalg::{CsrMatrix, SkylineCholesky};
use crate::mesh::{area_of, ConnectivityComplex, VertexConfig};
use crate::vector::Covector;

/// Nodal values of a P1 function.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField(pub Vec<f64>);

impl ScalarField {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Right-hand side `r` with its analytic gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhsField {
    /// `2.5 (x1 + 0.4 - x2^2)^2 + x1^2 + x2^2 - 1`
    Model,
    Constant(f64),
}

impl RhsField {
    pub fn value(&self, x: [f64; 2]) -> f64 {
        match *self {
            RhsField::Model => {
                let w = x[0] + 0.4 - x[1] * x[1];
                2.5 * w * w + x[0] * x[0] + x[1] * x[1] - 1.0
            }
            RhsField::Constant(c) => c,
        }
    }

    pub fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        match *self {
            RhsField::Model => {
                let w = x[0] + 0.4 - x[1] * x[1];
                [5.0 * w + 2.0 * x[0], -10.0 * w * x[1] + 2.0 * x[1]]
            }
            RhsField::Constant(_) => [0.0, 0.0],
        }
    }
}

/// Local P1 data of one triangle: area and the gradients of the three
/// barycentric hat functions.
struct Element {
    area: f64,
    grad: [[f64; 2]; 3],
    centroid: [f64; 2],
}

fn element(p: &[[f64; 2]; 3], triangle: usize) -> Result<Element, MeshError> {
    let area = area_of(p);
    if !(area > 0.0) {
        return Err(MeshError::NonpositiveArea { triangle, area });
    }
    let mut grad = [[0.0; 2]; 3];
    for (i, g) in grad.iter_mut().enumerate() {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        *g = [(p[j][1] - p[k][1]) / (2.0 * area), (p[k][0] - p[j][0]) / (2.0 * area)];
    }
    let centroid = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
    Ok(Element { area, grad, centroid })
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Stiffness, mass and load on all vertices, plus the reduction to interior
/// unknowns.
#[derive(Debug)]
pub struct AssembledSystem {
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    pub load: Vec<f64>,
    /// `∫ e_a`, the right-hand side of the adjoint equation up to sign.
    pub hat_integrals: Vec<f64>,
    /// Reduced index of each vertex, `None` on the boundary.
    pub interior_index: Vec<Option<usize>>,
    pub num_interior: usize,
    reduced: OnceLock<Result<SkylineCholesky, (usize, f64)>>,
}

pub fn assemble(q: &VertexConfig, complex: &ConnectivityComplex, rhs: &RhsField) -> Result<AssembledSystem, MeshError> {
    q.check_size(complex)?;
    let n = complex.num_vertices();
    let mut k = Vec::with_capacity(9 * complex.num_triangles());
    let mut m = Vec::with_capacity(9 * complex.num_triangles());
    let mut load = vec![0.0; n];
    let mut hat_integrals = vec![0.0; n];
    for (t, tri) in complex.triangles().iter().enumerate() {
        let el = element(&q.corners(tri), t)?;
        let rc = rhs.value(el.centroid);
        for i in 0..3 {
            for j in 0..3 {
                k.push((tri[i], tri[j], el.area * dot2(el.grad[i], el.grad[j])));
                let mij = if i == j { el.area / 6.0 } else { el.area / 12.0 };
                m.push((tri[i], tri[j], mij));
            }
            load[tri[i]] += el.area / 3.0 * rc;
            hat_integrals[tri[i]] += el.area / 3.0;
        }
    }
    let mut interior_index = vec![None; n];
    let mut num_interior = 0;
    for (v, slot) in interior_index.iter_mut().enumerate() {
        if !complex.is_boundary_vertex(v) {
            *slot = Some(num_interior);
            num_interior += 1;
        }
    }
    Ok(AssembledSystem {
        stiffness: CsrMatrix::from_triplets(n, k),
        mass: CsrMatrix::from_triplets(n, m),
        load,
        hat_integrals,
        interior_index,
        num_interior,
        reduced: OnceLock::new(),
    })
}

impl AssembledSystem {
    pub fn reduced_stiffness(&self) -> CsrMatrix {
        self.stiffness
            .principal_submatrix(&self.interior_index, self.num_interior)
    }

    fn factor(&self) -> Result<&SkylineCholesky, SolveError> {
        self.reduced
            .get_or_init(|| {
                SkylineCholesky::factor(&self.reduced_stiffness()).map_err(|e| match e {
                    SolveError::SingularSystem { row, pivot } => (row, pivot),
                    _ => unreachable!("factorization only reports singular pivots"),
                })
            })
            .as_ref()
            .map_err(|&(row, pivot)| SolveError::SingularSystem { row, pivot })
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_interior];
        for (v, idx) in self.interior_index.iter().enumerate() {
            if let Some(r) = idx {
                out[*r] = full[v];
            }
        }
        out
    }

    pub fn prolong(&self, reduced: &[f64]) -> ScalarField {
        ScalarField(
            self.interior_index
                .iter()
                .map(|idx| idx.map_or(0.0, |r| reduced[r]))
                .collect(),
        )
    }

    /// Solves the reduced system with right-hand side `full` (restricted to
    /// interior vertices) and extends by zero.
    pub fn solve_reduced(&self, full: &[f64]) -> Result<ScalarField, SolveError> {
        if self.num_interior == 0 {
            return Ok(ScalarField::zeros(self.interior_index.len()));
        }
        let x = self.factor()?.solve(&self.restrict(full));
        Ok(self.prolong(&x))
    }
}

pub fn solve_state(system: &AssembledSystem) -> Result<ScalarField, SolveError> {
    system.solve_reduced(&system.load)
}

pub fn solve_adjoint(system: &AssembledSystem) -> Result<ScalarField, SolveError> {
    let neg: Vec<f64> = system.hat_integrals.iter().map(|v| -v).collect();
    system.solve_reduced(&neg)
}

/// `∫ y` for a P1 field, exact.
pub fn objective(q: &VertexConfig, complex: &ConnectivityComplex, y: &ScalarField) -> f64 {
    complex
        .triangles()
        .iter()
        .map(|tri| area_of(&q.corners(tri)) * (y.0[tri[0]] + y.0[tri[1]] + y.0[tri[2]]) / 3.0)
        .sum()
}

/// Derivative of the reduced objective `Q ↦ ∫ y(Q)` in every coordinate
/// direction, computed from the state and adjoint.
pub fn shape_derivative(
    q: &VertexConfig,
    complex: &ConnectivityComplex,
    y: &ScalarField,
    p: &ScalarField,
    rhs: &RhsField,
) -> Result<Covector, MeshError> {
    q.check_size(complex)?;
    let mut out = vec![0.0; 2 * complex.num_vertices()];
    for (t, tri) in complex.triangles().iter().enumerate() {
        let el = element(&q.corners(tri), t)?;
        let yv = [y.0[tri[0]], y.0[tri[1]], y.0[tri[2]]];
        let pv = [p.0[tri[0]], p.0[tri[1]], p.0[tri[2]]];
        let mut gy = [0.0; 2];
        let mut gp = [0.0; 2];
        for l in 0..3 {
            for d in 0..2 {
                gy[d] += yv[l] * el.grad[l][d];
                gp[d] += pv[l] * el.grad[l][d];
            }
        }
        let ybar = (yv[0] + yv[1] + yv[2]) / 3.0;
        let pbar = (pv[0] + pv[1] + pv[2]) / 3.0;
        let rc = rhs.value(el.centroid);
        let grc = rhs.gradient(el.centroid);
        let gygp = dot2(gy, gp);
        for (l, &a) in tri.iter().enumerate() {
            let g = el.grad[l];
            let g_gp = dot2(g, gp);
            let g_gy = dot2(g, gy);
            for d in 0..2 {
                // V = e_a u with u the d-th unit vector: div V = g_d, DV = u g^T.
                let div = g[d];
                let state = div * ybar;
                let flux = div * gygp - gy[d] * g_gp - g_gy * gp[d];
                let source = (rc * div + grc[d] / 3.0) * pbar;
                out[2 * a + d] += el.area * (state + flux - source);
            }
        }
    }
    Ok(Covector(out))
}

/// State, adjoint and objective value at one configuration.
#[derive(Debug)]
pub struct FemSolution {
    pub system: AssembledSystem,
    pub state: ScalarField,
    pub adjoint: ScalarField,
    pub objective: f64,
}

pub fn solve(q: &VertexConfig, complex: &ConnectivityComplex, rhs: &RhsField) -> Result<FemSolution, SolveError> {
    let system = assemble(q, complex, rhs)?;
    let state = solve_state(&system)?;
    let adjoint = solve_adjoint(&system)?;
    let objective = objective(q, complex, &state);
    Ok(FemSolution {
        system,
        state,
        adjoint,
        objective,
    })
}

/// Reduced objective only (no adjoint solve).
pub fn reduced_objective(q: &VertexConfig, complex: &ConnectivityComplex, rhs: &RhsField) -> Result<f64, SolveError> {
    let system = assemble(q, complex, rhs)?;
    let y = solve_state(&system)?;
    Ok(objective(q, complex, &y))
}

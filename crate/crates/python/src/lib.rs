//! Python module `meshshape`: meshes, the penalty, the FEM objective and the
//! steepest-descent driver.

use core_lib::fem::{self, RhsField};
use core_lib::mesh::{is_admissible, make_disc_mesh, make_square5_mesh, min_signed_area, signed_area, uniform_refine};
use core_lib::mesh_io::{format_mesh, format_svg, read_mesh, write_mesh};
use core_lib::optimizer::{steepest_descent_from, OptimizerConfig, RunResult, Variant};
use core_lib::penalty::{self, PenaltyParams};
use core_lib::{ConnectivityComplex, MeshError, SmoothingParam, SolveError, VertexConfig};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn mesh_err(e: MeshError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn solve_err(e: SolveError) -> PyErr {
    match e {
        SolveError::Mesh(m) => mesh_err(m),
        SolveError::InvalidParameter(m) => PyValueError::new_err(m),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// A connectivity complex with one vertex configuration.
#[pyclass(name = "Mesh", module = "meshshape", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyMesh {
    inner: core_lib::Mesh,
}

impl PyMesh {
    fn with_coords(&self, coords: VertexConfig) -> Self {
        Self {
            inner: core_lib::Mesh {
                complex: self.inner.complex.clone(),
                coords,
            },
        }
    }

    fn complex(&self) -> &ConnectivityComplex {
        &self.inner.complex
    }

    fn q(&self) -> &VertexConfig {
        &self.inner.coords
    }
}

#[pymethods]
impl PyMesh {
    #[new]
    fn new(vertices: Vec<(f64, f64)>, triangles: Vec<[usize; 3]>) -> PyResult<Self> {
        let n = vertices.len();
        let coords = VertexConfig::new(vertices.into_iter().map(|(x, y)| [x, y]).collect()).map_err(mesh_err)?;
        let complex = ConnectivityComplex::new(triangles, n).map_err(mesh_err)?;
        let inner = core_lib::Mesh::new(complex, coords).map_err(mesh_err)?;
        Ok(Self { inner })
    }

    /// Unit disc triangulated by `rings` concentric rings.
    #[staticmethod]
    fn disc(rings: usize) -> PyResult<Self> {
        if rings == 0 {
            return Err(PyValueError::new_err("rings must be at least 1"));
        }
        Ok(Self {
            inner: make_disc_mesh(rings),
        })
    }

    /// The square [-1, 1]^2 split into four triangles around the origin.
    #[staticmethod]
    fn square5() -> Self {
        Self {
            inner: make_square5_mesh(),
        }
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: read_mesh(path).map_err(mesh_err)?,
        })
    }

    fn write(&self, path: &str) -> PyResult<()> {
        write_mesh(path, self.complex(), self.q()).map_err(mesh_err)
    }

    fn to_text(&self) -> String {
        format_mesh(self.complex(), self.q())
    }

    fn to_svg(&self) -> String {
        format_svg(self.complex(), self.q())
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.complex().num_vertices()
    }

    #[getter]
    fn num_triangles(&self) -> usize {
        self.complex().num_triangles()
    }

    fn vertices(&self) -> Vec<(f64, f64)> {
        self.q().coords().iter().map(|p| (p[0], p[1])).collect()
    }

    fn triangles(&self) -> Vec<[usize; 3]> {
        self.complex().triangles().to_vec()
    }

    fn boundary_edges(&self) -> Vec<[usize; 2]> {
        self.complex().boundary_edges().to_vec()
    }

    fn boundary_vertices(&self) -> Vec<usize> {
        self.complex().boundary_vertices().to_vec()
    }

    /// Same complex, new coordinates.
    fn with_vertices(&self, vertices: Vec<(f64, f64)>) -> PyResult<Self> {
        if vertices.len() != self.num_vertices() {
            return Err(PyValueError::new_err(format!(
                "expected {} vertices, got {}",
                self.num_vertices(),
                vertices.len()
            )));
        }
        let q = VertexConfig::new(vertices.into_iter().map(|(x, y)| [x, y]).collect()).map_err(mesh_err)?;
        Ok(self.with_coords(q))
    }

    fn signed_areas(&self) -> Vec<f64> {
        self.complex()
            .triangles()
            .iter()
            .map(|t| signed_area(self.q(), t))
            .collect()
    }

    fn min_signed_area(&self) -> f64 {
        min_signed_area(self.q(), self.complex())
    }

    /// Mean quality reciprocal over all triangles (1 for equilateral meshes).
    fn theta(&self) -> PyResult<f64> {
        penalty::theta(self.q(), self.complex()).map_err(mesh_err)
    }

    #[pyo3(signature = (check_intersections = true))]
    fn is_admissible(&self, check_intersections: bool) -> bool {
        is_admissible(self.complex(), self.q(), check_intersections)
    }

    /// Splits every triangle into four similar children.
    fn refine(&self) -> PyResult<Self> {
        Ok(Self {
            inner: uniform_refine(self.complex(), self.q()).map_err(mesh_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(num_vertices={}, num_triangles={})",
            self.num_vertices(),
            self.num_triangles()
        )
    }
}

/// Penalty coefficients `a1..a4` with smoothing `mu` and optional cut-off.
#[pyclass(name = "Penalty", module = "meshshape", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyPenalty {
    inner: PenaltyParams,
}

#[pymethods]
impl PyPenalty {
    #[new]
    #[pyo3(signature = (a1 = 0.0, a2 = 0.0, a3 = 0.0, a4 = 0.0, mu = 0.1, cutoff = None))]
    fn new(a1: f64, a2: f64, a3: f64, a4: f64, mu: f64, cutoff: Option<f64>) -> PyResult<Self> {
        let alpha = [a1, a2, a3, a4];
        if !alpha.iter().all(|a| a.is_finite() && *a >= 0.0) {
            return Err(PyValueError::new_err("coefficients must be finite and non-negative"));
        }
        let mut inner = PenaltyParams::new(alpha);
        inner.mu = SmoothingParam::new(mu).ok_or_else(|| PyValueError::new_err("mu must be positive"))?;
        if let Some(c) = cutoff {
            if !c.is_finite() || c <= 0.0 {
                return Err(PyValueError::new_err("cutoff must be positive and finite"));
            }
            inner = inner.with_cutoff(c);
        }
        Ok(Self { inner })
    }

    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        let inner = match name {
            "set1" => PenaltyParams::set1(),
            "set2" => PenaltyParams::set2(),
            "set3" => PenaltyParams::set3(),
            "metric" => PenaltyParams::metric_preset(),
            "none" => PenaltyParams::zero(),
            _ => return Err(PyValueError::new_err(format!("unknown preset {name:?}"))),
        };
        Ok(Self { inner })
    }

    #[getter]
    fn alpha(&self) -> [f64; 4] {
        self.inner.alpha
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu.value()
    }

    fn __repr__(&self) -> String {
        let [a1, a2, a3, a4] = self.inner.alpha;
        format!("Penalty(a1={a1}, a2={a2}, a3={a3}, a4={a4}, mu={})", self.mu())
    }
}

/// `"model"` or a constant.
#[derive(FromPyObject)]
enum RhsArg {
    Constant(f64),
    Name(String),
}

impl RhsArg {
    fn field(self) -> PyResult<RhsField> {
        match self {
            RhsArg::Constant(c) if c.is_finite() => Ok(RhsField::Constant(c)),
            RhsArg::Constant(_) => Err(PyValueError::new_err("constant right-hand side must be finite")),
            RhsArg::Name(n) if n == "model" => Ok(RhsField::Model),
            RhsArg::Name(n) => Err(PyValueError::new_err(format!("unknown right-hand side {n:?}"))),
        }
    }
}

fn reference<'a>(mesh: &'a PyMesh, reference: Option<&'a PyMesh>) -> PyResult<&'a VertexConfig> {
    match reference {
        None => Ok(mesh.q()),
        Some(r) if r.num_vertices() == mesh.num_vertices() => Ok(r.q()),
        Some(_) => Err(PyValueError::new_err("reference mesh has a different vertex count")),
    }
}

/// Penalty value; the Frobenius term measures distance to `reference`
/// (default: the mesh itself).
#[pyfunction]
#[pyo3(signature = (mesh, penalty, reference = None))]
fn phi(mesh: &PyMesh, penalty: &PyPenalty, reference: Option<&PyMesh>) -> PyResult<f64> {
    let qref = self::reference(mesh, reference)?;
    penalty::phi(mesh.q(), qref, mesh.complex(), &penalty.inner).map_err(mesh_err)
}

/// Gradient of `phi`, flattened as `[x0, y0, x1, y1, ...]`.
#[pyfunction]
#[pyo3(signature = (mesh, penalty, reference = None))]
fn grad_phi(mesh: &PyMesh, penalty: &PyPenalty, reference: Option<&PyMesh>) -> PyResult<Vec<f64>> {
    let qref = self::reference(mesh, reference)?;
    Ok(penalty::grad_phi(mesh.q(), qref, mesh.complex(), &penalty.inner)
        .map_err(mesh_err)?
        .into_inner())
}

/// Integral of the discrete state solving `-Δy = r` with `y = 0` on the
/// boundary.
#[pyfunction]
#[pyo3(signature = (mesh, rhs = RhsArg::Name("model".into())))]
fn objective(mesh: &PyMesh, rhs: RhsArg) -> PyResult<f64> {
    fem::reduced_objective(mesh.q(), mesh.complex(), &rhs.field()?).map_err(solve_err)
}

/// Nodal values of the discrete state.
#[pyfunction]
#[pyo3(signature = (mesh, rhs = RhsArg::Name("model".into())))]
fn state(mesh: &PyMesh, rhs: RhsArg) -> PyResult<Vec<f64>> {
    let sys = fem::assemble(mesh.q(), mesh.complex(), &rhs.field()?).map_err(mesh_err)?;
    Ok(fem::solve_state(&sys).map_err(solve_err)?.0)
}

/// Derivative of the objective with respect to every vertex coordinate,
/// flattened as `[x0, y0, x1, y1, ...]`.
#[pyfunction]
#[pyo3(signature = (mesh, rhs = RhsArg::Name("model".into())))]
fn shape_derivative(mesh: &PyMesh, rhs: RhsArg) -> PyResult<Vec<f64>> {
    let rhs = rhs.field()?;
    let sol = fem::solve(mesh.q(), mesh.complex(), &rhs).map_err(solve_err)?;
    Ok(
        fem::shape_derivative(mesh.q(), mesh.complex(), &sol.state, &sol.adjoint, &rhs)
            .map_err(mesh_err)?
            .into_inner(),
    )
}

/// Outcome of one optimization run.
#[pyclass(name = "RunResult", module = "meshshape", frozen, skip_from_py_object)]
pub struct PyRunResult {
    mesh: PyMesh,
    run: RunResult,
}

#[pymethods]
impl PyRunResult {
    /// `Converged`, `MaxIter`, `StepFloorFailure` or `Breakdown`.
    #[getter]
    fn status(&self) -> &'static str {
        self.run.status.name()
    }

    #[getter]
    fn message(&self) -> String {
        self.run.status.to_string()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.run.iterations()
    }

    #[getter]
    fn final_mesh(&self) -> PyMesh {
        self.mesh.clone()
    }

    /// One dict per row with the history CSV columns.
    fn history<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.run
            .history
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("iter", r.iter)?;
                d.set_item("Obj", r.objective)?;
                d.set_item("Penalty", r.penalty)?;
                d.set_item("Total", r.total)?;
                d.set_item("mshQua", r.theta)?;
                d.set_item("step", r.step)?;
                d.set_item("backtracks", r.backtracks)?;
                Ok(d)
            })
            .collect()
    }

    /// Seconds spent per phase.
    fn timings<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (name, t) in self.run.timings.rows() {
            d.set_item(name, t.as_secs_f64())?;
        }
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "RunResult(status={:?}, iterations={})",
            self.status(),
            self.iterations()
        )
    }
}

/// Riemannian steepest descent from `mesh` (also the reference mesh unless
/// `reference` is given).
#[pyfunction]
#[pyo3(signature = (
    mesh,
    variant = "EucEuc",
    penalty = None,
    rhs = RhsArg::Name("model".into()),
    max_iter = 1000,
    tol = None,
    fix_boundary = false,
    reference = None,
    metric_penalty = None,
    geodesic_steps = 1024,
))]
#[allow(clippy::too_many_arguments)]
fn optimize(
    py: Python<'_>,
    mesh: &PyMesh,
    variant: &str,
    penalty: Option<&PyPenalty>,
    rhs: RhsArg,
    max_iter: usize,
    tol: Option<f64>,
    fix_boundary: bool,
    reference: Option<&PyMesh>,
    metric_penalty: Option<&PyPenalty>,
    geodesic_steps: usize,
) -> PyResult<PyRunResult> {
    let variant: Variant = variant.parse().map_err(PyValueError::new_err)?;
    let qref = self::reference(mesh, reference)?.clone();
    let penalty = penalty.map_or(PenaltyParams::zero(), |p| p.inner);
    let defaults = OptimizerConfig::default();
    let mut geodesic = defaults.geodesic;
    geodesic.num_steps = geodesic_steps;
    let config = OptimizerConfig {
        variant,
        max_iter,
        // Unpenalized problems run a fixed budget unless asked otherwise.
        stop_tol: tol.unwrap_or(if penalty.is_zero() { 0.0 } else { defaults.stop_tol }),
        penalty_params: penalty,
        metric_params: metric_penalty.map_or(defaults.metric_params, |p| p.inner),
        geodesic,
        fixed_vertex_mask: fix_boundary.then(|| {
            (0..mesh.num_vertices())
                .map(|v| mesh.complex().is_boundary_vertex(v))
                .collect()
        }),
        ..defaults
    };
    config.validate().map_err(solve_err)?;
    let rhs = rhs.field()?;
    let complex = mesh.complex().clone();
    let q0 = mesh.q().clone();
    let run = py.detach(|| steepest_descent_from(&complex, &qref, q0, &rhs, &config));
    Ok(PyRunResult {
        mesh: mesh.with_coords(run.final_q.clone()),
        run,
    })
}

#[pymodule]
fn meshshape(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyPenalty>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(grad_phi, m)?)?;
    m.add_function(wrap_pyfunction!(objective, m)?)?;
    m.add_function(wrap_pyfunction!(state, m)?)?;
    m.add_function(wrap_pyfunction!(shape_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add("VARIANTS", Variant::ALL.map(Variant::name).to_vec())?;
    Ok(())
}

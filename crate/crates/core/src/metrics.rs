//! Riemannian metrics on the space of vertex configurations and the
//! conversion of derivatives into gradients.

use crate::error::{MeshError, SolveError};
use crate::linalg::{self, CsrMatrix, SkylineCholesky};
use crate::mesh::{area_of, ConnectivityComplex, VertexConfig};
use crate::penalty::{self, PenaltyParams};
use crate::vector::{Covector, TangentVector};

/// Young's modulus, Poisson ratio and the mass damping of the elasticity
/// metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticityParams {
    pub young: f64,
    pub poisson: f64,
    pub damping: f64,
}

impl ElasticityParams {
    /// Damping defaults to `0.2 E`.
    pub fn new(young: f64, poisson: f64) -> Result<Self, SolveError> {
        Self::with_damping(young, poisson, 0.2 * young)
    }

    pub fn with_damping(young: f64, poisson: f64, damping: f64) -> Result<Self, SolveError> {
        if !(young > 0.0 && young.is_finite()) {
            return Err(SolveError::InvalidParameter(format!(
                "Young's modulus must be positive, got {young}"
            )));
        }
        // The decoupled case nu = 0 is allowed; nu = 0.5 makes lambda infinite.
        if !(0.0..0.5).contains(&poisson) {
            return Err(SolveError::InvalidParameter(format!(
                "Poisson ratio must lie in [0, 0.5), got {poisson}"
            )));
        }
        if !(damping > 0.0 && damping.is_finite()) {
            return Err(SolveError::InvalidParameter(format!(
                "damping must be positive, got {damping}"
            )));
        }
        Ok(Self {
            young,
            poisson,
            damping,
        })
    }

    /// `(mu, lambda, delta)`.
    pub fn lame(&self) -> (f64, f64, f64) {
        let (e, nu) = (self.young, self.poisson);
        (
            e / (2.0 * (1.0 + nu)),
            e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)),
            self.damping,
        )
    }
}

impl Default for ElasticityParams {
    fn default() -> Self {
        Self::new(1.0, 0.4).unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricSpec {
    Euclidean,
    Elasticity(ElasticityParams),
    /// `I + ∇φ ∇φ^T` with `φ` built from `params` relative to `qref`.
    Complete {
        params: PenaltyParams,
        qref: VertexConfig,
    },
}

impl MetricSpec {
    pub fn complete(params: PenaltyParams, qref: VertexConfig) -> Result<Self, SolveError> {
        if params.is_zero() {
            return Err(SolveError::InvalidParameter(
                "complete metric needs at least one positive penalty coefficient".into(),
            ));
        }
        Ok(MetricSpec::Complete { params, qref })
    }

    /// Evaluates the metric at `q`. For elasticity this assembles and
    /// factors the matrix, for the complete metric it evaluates `∇φ`.
    pub fn at(&self, q: &VertexConfig, complex: &ConnectivityComplex) -> Result<LocalMetric, SolveError> {
        match self {
            MetricSpec::Euclidean => Ok(LocalMetric::Euclidean),
            MetricSpec::Elasticity(p) => {
                let matrix = elasticity_matrix(q, complex, p)?;
                let factor = SkylineCholesky::factor(&matrix)?;
                Ok(LocalMetric::Elasticity { matrix, factor })
            }
            MetricSpec::Complete { params, qref } => Ok(LocalMetric::Complete {
                g: penalty::grad_phi(q, qref, complex, params)?,
            }),
        }
    }
}

pub fn lame_from_spec(p: &ElasticityParams) -> (f64, f64, f64) {
    p.lame()
}

/// P1 vector elasticity stiffness plus `delta` times the vector mass matrix,
/// on all `2 N_V` coordinates.
pub fn elasticity_matrix(
    q: &VertexConfig,
    complex: &ConnectivityComplex,
    params: &ElasticityParams,
) -> Result<CsrMatrix, MeshError> {
    let (mu, lambda, delta) = params.lame();
    let d = [
        [lambda + 2.0 * mu, lambda, 0.0],
        [lambda, lambda + 2.0 * mu, 0.0],
        [0.0, 0.0, mu],
    ];
    let mut trip = Vec::with_capacity(36 * complex.num_triangles());
    for (t, tri) in complex.triangles().iter().enumerate() {
        let p = q.corners(tri);
        let area = area_of(&p);
        if !(area > 0.0) {
            return Err(MeshError::NonpositiveArea { triangle: t, area });
        }
        // Strain (e_xx, e_yy, 2 e_xy) = B u, local dofs [x0, y0, x1, y1, x2, y2].
        let mut b = [[0.0; 6]; 3];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let gx = (p[j][1] - p[k][1]) / (2.0 * area);
            let gy = (p[k][0] - p[j][0]) / (2.0 * area);
            b[0][2 * i] = gx;
            b[1][2 * i + 1] = gy;
            b[2][2 * i] = gy;
            b[2][2 * i + 1] = gx;
        }
        let mut db = [[0.0; 6]; 3];
        for r in 0..3 {
            for c in 0..6 {
                db[r][c] = (0..3).map(|s| d[r][s] * b[s][c]).sum();
            }
        }
        for r in 0..6 {
            for c in 0..6 {
                let mut v = area * (0..3).map(|s| b[s][r] * db[s][c]).sum::<f64>();
                if r % 2 == c % 2 {
                    v += delta * if r == c { area / 6.0 } else { area / 12.0 };
                }
                trip.push((2 * tri[r / 2] + r % 2, 2 * tri[c / 2] + c % 2, v));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(2 * complex.num_vertices(), trip))
}

/// A metric evaluated at one configuration.
#[derive(Debug)]
pub enum LocalMetric {
    Euclidean,
    Elasticity { matrix: CsrMatrix, factor: SkylineCholesky },
    Complete { g: Covector },
}

impl LocalMetric {
    /// Lowers an index: `V ↦ g(V, ·)`.
    pub fn apply(&self, v: &TangentVector) -> Covector {
        match self {
            LocalMetric::Euclidean => Covector(v.0.clone()),
            LocalMetric::Elasticity { matrix, .. } => Covector(matrix.mul_vec(v)),
            LocalMetric::Complete { g } => {
                let c = linalg::dot(g, v);
                Covector(v.iter().zip(g.iter()).map(|(vi, gi)| vi + c * gi).collect())
            }
        }
    }

    /// Raises an index: solves `apply(x) = d`.
    pub fn to_gradient(&self, d: &Covector) -> TangentVector {
        match self {
            LocalMetric::Euclidean => TangentVector(d.0.clone()),
            LocalMetric::Elasticity { factor, .. } => TangentVector(factor.solve(d)),
            LocalMetric::Complete { g } => TangentVector(conjugate_gradient(
                |x| {
                    let c = linalg::dot(g, x);
                    x.iter().zip(g.iter()).map(|(xi, gi)| xi + c * gi).collect()
                },
                d,
                2,
            )),
        }
    }

    /// `g(V, V)`.
    pub fn norm_sq(&self, v: &TangentVector) -> f64 {
        self.apply(v).apply(v)
    }
}

pub fn metric_apply(
    spec: &MetricSpec,
    q: &VertexConfig,
    complex: &ConnectivityComplex,
    v: &TangentVector,
) -> Result<Covector, SolveError> {
    Ok(spec.at(q, complex)?.apply(v))
}

pub fn to_gradient(
    spec: &MetricSpec,
    q: &VertexConfig,
    complex: &ConnectivityComplex,
    d: &Covector,
) -> Result<TangentVector, SolveError> {
    Ok(spec.at(q, complex)?.to_gradient(d))
}

/// Plain CG from a zero initial guess for a fixed number of iterations
/// (stops early on an exactly zero residual).
pub fn conjugate_gradient(apply: impl Fn(&[f64]) -> Vec<f64>, b: &[f64], iterations: usize) -> Vec<f64> {
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = linalg::dot(&r, &r);
    for _ in 0..iterations {
        if rr == 0.0 {
            break;
        }
        let ap = apply(&p);
        let alpha = rr / linalg::dot(&p, &ap);
        linalg::axpy(alpha, &p, &mut x);
        linalg::axpy(-alpha, &ap, &mut r);
        let rr_new = linalg::dot(&r, &r);
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
    }
    x
}

/// Closed-form inverse of `I + g g^T` applied to `d`.
pub fn sherman_morrison(g: &[f64], d: &[f64]) -> Vec<f64> {
    let c = linalg::dot(g, d) / (1.0 + linalg::dot(g, g));
    d.iter().zip(g).map(|(di, gi)| di - c * gi).collect()
}

/// `Q + s V`.
pub fn retract_euclidean(q: &VertexConfig, v: &TangentVector, s: f64) -> Result<VertexConfig, MeshError> {
    let mut out = q.to_vec();
    linalg::axpy(s, v, &mut out);
    VertexConfig::from_vec(&out)
}

//! Mesh-quality penalty, the quality monitor and the legacy augmentation
//! function, with analytic first derivatives.

use crate::error::{MeshError, Result};
use crate::mesh::{
    area_grad_of, area_of, check_positive_areas, edge_length, len2, regularized_distance_with_grad, signed_area, sub,
    ConnectivityComplex, SmoothingParam, Triangle, VertexConfig,
};
use crate::vector::Covector;

const FOUR_SQRT3: f64 = 6.928_203_230_275_509;

/// Coefficients of the penalty: `alpha[0]` mean quality reciprocal,
/// `alpha[1]` reciprocal total area, `alpha[2]` boundary proximity,
/// `alpha[3]` squared distance to the reference configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    pub alpha: [f64; 4],
    pub mu: SmoothingParam,
    /// Enables the C^3 cut-off of the boundary-proximity term below this
    /// reciprocal distance.
    pub cutoff_threshold: Option<f64>,
}

impl PenaltyParams {
    pub fn new(alpha: [f64; 4]) -> Self {
        assert!(
            alpha.iter().all(|a| *a >= 0.0 && a.is_finite()),
            "penalty coefficients must be finite and non-negative"
        );
        Self {
            alpha,
            mu: SmoothingParam::DEFAULT,
            cutoff_threshold: None,
        }
    }

    pub fn zero() -> Self {
        Self::new([0.0; 4])
    }

    pub fn set1() -> Self {
        Self::new([1.0, 0.5, 0.0, 0.1])
    }

    pub fn set2() -> Self {
        Self::new([0.1, 0.01, 0.0, 0.001])
    }

    pub fn set3() -> Self {
        Self::new([0.015, 0.005, 0.0, 0.0005])
    }

    /// Coefficients used for the complete metric in all experiments.
    pub fn metric_preset() -> Self {
        Self::new([10.0, 1.0, 0.0, 0.01])
    }

    pub fn with_cutoff(mut self, threshold: f64) -> Self {
        assert!(threshold > 0.0, "cut-off threshold must be positive");
        self.cutoff_threshold = Some(threshold);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.alpha.iter().all(|a| *a == 0.0)
    }

    pub fn all_positive(&self) -> bool {
        self.alpha.iter().all(|a| *a > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegacyAugmentationParams {
    pub beta: [f64; 3],
    pub mu: SmoothingParam,
}

impl LegacyAugmentationParams {
    pub fn new(beta: [f64; 3]) -> Self {
        assert!(
            beta.iter().all(|b| *b >= 0.0),
            "augmentation coefficients must be non-negative"
        );
        Self {
            beta,
            mu: SmoothingParam::DEFAULT,
        }
    }
}

fn nonpositive(triangle: usize, area: f64) -> MeshError {
    MeshError::NonpositiveArea { triangle, area }
}

/// `(E0^2 + E1^2 + E2^2) / (4 sqrt(3) A)`; at least 1, with equality exactly
/// for equilateral triangles.
pub fn quality_reciprocal(q: &VertexConfig, tri: &Triangle) -> Result<f64> {
    let area = signed_area(q, tri);
    if !(area > 0.0) {
        return Err(nonpositive(usize::MAX, area));
    }
    let s: f64 = (0..3).map(|l| edge_length(q, tri, l).powi(2)).sum();
    Ok(s / (FOUR_SQRT3 * area))
}

fn quality_reciprocal_with_grad(p: &[[f64; 2]; 3]) -> (f64, [[f64; 2]; 3]) {
    let area = area_of(p);
    let da = area_grad_of(p);
    let s: f64 = (0..3).map(|i| len2(sub(p[(i + 1) % 3], p[(i + 2) % 3]))).sum();
    let value = s / (FOUR_SQRT3 * area);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        for d in 0..2 {
            let ds = 2.0 * (2.0 * p[i][d] - p[j][d] - p[k][d]);
            g[i][d] = ds / (FOUR_SQRT3 * area) - value * da[i][d] / area;
        }
    }
    (value, g)
}

/// Mean quality reciprocal over all triangles.
pub fn theta(q: &VertexConfig, complex: &ConnectivityComplex) -> Result<f64> {
    check_positive_areas(q, complex)?;
    let sum: f64 = complex
        .triangles()
        .iter()
        .map(|t| quality_reciprocal_with_grad(&q.corners(t)).0)
        .sum();
    Ok(sum / complex.num_triangles() as f64)
}

/// C^3 cut-off: 0 on `[0, s_lo]`, identity on `[2 s_lo, inf)`, a degree-7
/// blend in between. Returns value and derivative.
pub fn cutoff(s: f64, s_lo: f64) -> (f64, f64) {
    if s <= s_lo {
        return (0.0, 0.0);
    }
    if s >= 2.0 * s_lo {
        return (s, 1.0);
    }
    let u = (s - s_lo) / s_lo;
    let u3 = u * u * u;
    let value = s_lo * u3 * u * (55.0 + u * (-129.0 + u * (106.0 - 30.0 * u)));
    let deriv = u3 * (220.0 + u * (-645.0 + u * (636.0 - 210.0 * u)));
    (value, deriv)
}

/// The four summands of the penalty, already weighted by their coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PenaltyTerms {
    pub quality: f64,
    pub area: f64,
    pub boundary: f64,
    pub frobenius: f64,
}

impl PenaltyTerms {
    pub fn total(&self) -> f64 {
        self.quality + self.area + self.boundary + self.frobenius
    }
}

/// Evaluates the penalty and optionally its gradient. With `check` unset,
/// negative areas are tolerated (used by the geodesic integrator, which must
/// keep going through reported excursions).
pub(crate) fn penalty_eval(
    q: &VertexConfig,
    qref: &VertexConfig,
    complex: &ConnectivityComplex,
    params: &PenaltyParams,
    check: bool,
    grad: Option<&mut [f64]>,
) -> Result<PenaltyTerms> {
    q.check_size(complex)?;
    qref.check_size(complex)?;
    if check {
        check_positive_areas(q, complex)?;
    }
    let [a1, a2, a3, a4] = params.alpha;
    let mut terms = PenaltyTerms::default();
    let mut grad = grad;
    if let Some(g) = grad.as_deref_mut() {
        assert_eq!(g.len(), 2 * q.num_vertices());
        g.fill(0.0);
    }

    if a1 != 0.0 {
        let w = a1 / complex.num_triangles() as f64;
        let mut sum = 0.0;
        for tri in complex.triangles() {
            let (v, dv) = quality_reciprocal_with_grad(&q.corners(tri));
            sum += v;
            if let Some(g) = grad.as_deref_mut() {
                for (l, &i) in tri.iter().enumerate() {
                    g[2 * i] += w * dv[l][0];
                    g[2 * i + 1] += w * dv[l][1];
                }
            }
        }
        terms.quality = w * sum;
    }

    if a2 != 0.0 {
        let total: f64 = complex.triangles().iter().map(|t| signed_area(q, t)).sum();
        terms.area = a2 / total;
        if let Some(g) = grad.as_deref_mut() {
            let w = -a2 / (total * total);
            for tri in complex.triangles() {
                let da = area_grad_of(&q.corners(tri));
                for (l, &i) in tri.iter().enumerate() {
                    g[2 * i] += w * da[l][0];
                    g[2 * i + 1] += w * da[l][1];
                }
            }
        }
    }

    if a3 != 0.0 {
        let w = a3 / (complex.boundary_edges().len() * complex.boundary_vertices().len()) as f64;
        let mu = params.mu.value();
        let mut sum = 0.0;
        for (v, e) in complex.boundary_pairs() {
            let (d, dd) = regularized_distance_with_grad(q.point(v), q.point(e[0]), q.point(e[1]), mu)
                .ok_or(MeshError::DegenerateEdge(e[0], e[1]))?;
            let s = 1.0 / d;
            let (chi, dchi) = match params.cutoff_threshold {
                Some(s_lo) => cutoff(s, s_lo),
                None => (s, 1.0),
            };
            sum += chi;
            if let Some(g) = grad.as_deref_mut() {
                let c = -w * dchi / (d * d);
                for (k, &idx) in [v, e[0], e[1]].iter().enumerate() {
                    g[2 * idx] += c * dd[k][0];
                    g[2 * idx + 1] += c * dd[k][1];
                }
            }
        }
        terms.boundary = w * sum;
    }

    if a4 != 0.0 {
        terms.frobenius = 0.5 * a4 * q.frobenius_dist_sq(qref);
        if let Some(g) = grad {
            for (i, (p, r)) in q.coords().iter().zip(qref.coords()).enumerate() {
                g[2 * i] += a4 * (p[0] - r[0]);
                g[2 * i + 1] += a4 * (p[1] - r[1]);
            }
        }
    }
    Ok(terms)
}

pub fn phi_terms(
    q: &VertexConfig,
    qref: &VertexConfig,
    complex: &ConnectivityComplex,
    params: &PenaltyParams,
) -> Result<PenaltyTerms> {
    penalty_eval(q, qref, complex, params, true, None)
}

/// The penalty value at `q` relative to the reference configuration `qref`.
pub fn phi(
    q: &VertexConfig,
    qref: &VertexConfig,
    complex: &ConnectivityComplex,
    params: &PenaltyParams,
) -> Result<f64> {
    phi_terms(q, qref, complex, params).map(|t| t.total())
}

pub fn grad_phi(
    q: &VertexConfig,
    qref: &VertexConfig,
    complex: &ConnectivityComplex,
    params: &PenaltyParams,
) -> Result<Covector> {
    let mut g = vec![0.0; 2 * q.num_vertices()];
    penalty_eval(q, qref, complex, params, true, Some(&mut g))?;
    Ok(Covector(g))
}

/// Sum of reciprocal heights, reciprocal boundary distances and the squared
/// distance to the reference, weighted by `beta`.
pub fn legacy_augmentation(
    q: &VertexConfig,
    qref: &VertexConfig,
    complex: &ConnectivityComplex,
    params: &LegacyAugmentationParams,
) -> Result<f64> {
    legacy_eval(q, qref, complex, params, None)
}

pub fn grad_legacy_augmentation(
    q: &VertexConfig,
    qref: &VertexConfig,
    complex: &ConnectivityComplex,
    params: &LegacyAugmentationParams,
) -> Result<Covector> {
    let mut g = vec![0.0; 2 * q.num_vertices()];
    legacy_eval(q, qref, complex, params, Some(&mut g))?;
    Ok(Covector(g))
}

fn legacy_eval(
    q: &VertexConfig,
    qref: &VertexConfig,
    complex: &ConnectivityComplex,
    params: &LegacyAugmentationParams,
    mut grad: Option<&mut [f64]>,
) -> Result<f64> {
    check_positive_areas(q, complex)?;
    qref.check_size(complex)?;
    let [b1, b2, b3] = params.beta;
    if let Some(g) = grad.as_deref_mut() {
        g.fill(0.0);
    }
    let mut value = 0.0;

    if b1 != 0.0 {
        for tri in complex.triangles() {
            let p = q.corners(tri);
            let area = area_of(&p);
            let da = area_grad_of(&p);
            for l in 0..3 {
                // 1/h = E / (2A)
                let (j, k) = ((l + 1) % 3, (l + 2) % 3);
                let e = sub(p[j], p[k]);
                let len = len2(e).sqrt();
                let inv_h = len / (2.0 * area);
                value += b1 * inv_h;
                if let Some(g) = grad.as_deref_mut() {
                    for (m, &idx) in tri.iter().enumerate() {
                        for d in 0..2 {
                            let mut dlen = 0.0;
                            if m == j {
                                dlen = e[d] / len;
                            } else if m == k {
                                dlen = -e[d] / len;
                            }
                            g[2 * idx + d] += b1 * (dlen / (2.0 * area) - inv_h * da[m][d] / area);
                        }
                    }
                }
            }
        }
    }

    if b2 != 0.0 {
        let mu = params.mu.value();
        for (v, e) in complex.boundary_pairs() {
            let (d, dd) = regularized_distance_with_grad(q.point(v), q.point(e[0]), q.point(e[1]), mu)
                .ok_or(MeshError::DegenerateEdge(e[0], e[1]))?;
            value += b2 / d;
            if let Some(g) = grad.as_deref_mut() {
                let c = -b2 / (d * d);
                for (k, &idx) in [v, e[0], e[1]].iter().enumerate() {
                    g[2 * idx] += c * dd[k][0];
                    g[2 * idx + 1] += c * dd[k][1];
                }
            }
        }
    }

    if b3 != 0.0 {
        value += 0.5 * b3 * q.frobenius_dist_sq(qref);
        if let Some(g) = grad {
            for (i, (p, r)) in q.coords().iter().zip(qref.coords()).enumerate() {
                g[2 * i] += b3 * (p[0] - r[0]);
                g[2 * i + 1] += b3 * (p[1] - r[1]);
            }
        }
    }
    Ok(value)
}

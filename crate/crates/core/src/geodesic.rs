//! Geodesics of the complete metric `g = I + ∇φ ∇φ^T`, integrated in
//! Hamiltonian form with a symplectic Störmer–Verlet scheme.
//!
//! With `G = ∇φ(q)`, `c = G·p` and `s = 1 + |G|^2` the Hamiltonian is
//! `H = (|p|^2 - c^2/s) / 2`, so `∂H/∂p = p - (c/s) G` and
//! `∂H/∂q = Hφ w` with `w = -(c/s) p + (c/s)^2 G`. The Hessian-vector product
//! is a central difference of `∇φ`.

use crate::error::{MeshError, SolveError};
use crate::linalg;
use crate::mesh::{min_signed_area, ConnectivityComplex, VertexConfig};
use crate::penalty::{penalty_eval, PenaltyParams};
use crate::vector::TangentVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicConfig {
    pub num_steps: usize,
    pub fixed_point_tol: f64,
    pub fixed_point_max_iter: usize,
    pub hessian_fd_step: f64,
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        Self {
            num_steps: 1024,
            fixed_point_tol: 1e-12,
            fixed_point_max_iter: 50,
            hessian_fd_step: 1e-6,
        }
    }
}

/// Endpoint and dyadic snapshots of one integrated geodesic.
#[derive(Debug, Clone)]
pub struct GeodesicPath {
    /// `(t, q(t))` for `t = 1, 1/2, 1/4, ..., 1/num_steps`, in that order.
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub hamiltonian_start: f64,
    pub hamiltonian_end: f64,
    /// Largest `|H(t) - H(0)| / |H(0)|` over all steps.
    pub max_relative_drift: f64,
    /// Number of steps that ended on a configuration with a non-positive
    /// triangle area.
    pub nonpositive_area_steps: usize,
    pub max_fixed_point_iterations: usize,
}

impl GeodesicPath {
    pub fn endpoint(&self) -> &[f64] {
        &self.snapshots[0].1
    }

    /// Snapshot at `t = 2^-k`, if stored.
    pub fn at_dyadic(&self, k: usize) -> Option<&[f64]> {
        self.snapshots.get(k).map(|(_, q)| q.as_slice())
    }
}

struct Field<'a> {
    complex: &'a ConnectivityComplex,
    qref: &'a VertexConfig,
    params: &'a PenaltyParams,
    fd_step: f64,
}

impl Field<'_> {
    fn grad(&self, q: &[f64]) -> Result<Vec<f64>, MeshError> {
        let cfg = config_of(q)?;
        let mut g = vec![0.0; q.len()];
        penalty_eval(&cfg, self.qref, self.complex, self.params, false, Some(&mut g))?;
        Ok(g)
    }

    /// `H_p = g^{-1} p` given `G = ∇φ(q)`.
    fn velocity(g: &[f64], p: &[f64]) -> Vec<f64> {
        let s = 1.0 + linalg::dot(g, g);
        let c = linalg::dot(g, p) / s;
        p.iter().zip(g).map(|(pi, gi)| pi - c * gi).collect()
    }

    fn hamiltonian(g: &[f64], p: &[f64]) -> f64 {
        let s = 1.0 + linalg::dot(g, g);
        let c = linalg::dot(g, p);
        0.5 * (linalg::dot(p, p) - c * c / s)
    }

    /// `H_q(q, p)` given `G = ∇φ(q)`.
    fn force(&self, q: &[f64], g: &[f64], p: &[f64]) -> Result<Vec<f64>, MeshError> {
        let s = 1.0 + linalg::dot(g, g);
        let c = linalg::dot(g, p) / s;
        let w: Vec<f64> = p.iter().zip(g).map(|(pi, gi)| -c * pi + c * c * gi).collect();
        let wn = linalg::norm(&w);
        if wn == 0.0 {
            return Ok(vec![0.0; q.len()]);
        }
        let eps = self.fd_step * (1.0 + linalg::norm(q));
        let shifted = |sign: f64| -> Vec<f64> { q.iter().zip(&w).map(|(qi, wi)| qi + sign * eps * wi / wn).collect() };
        let gp = self.grad(&shifted(1.0))?;
        let gm = self.grad(&shifted(-1.0))?;
        Ok(gp.iter().zip(&gm).map(|(a, b)| (a - b) * wn / (2.0 * eps)).collect())
    }
}

fn config_of(q: &[f64]) -> Result<VertexConfig, MeshError> {
    VertexConfig::from_vec(q)
}

fn increment_small(new: &[f64], old: &[f64], tol: f64) -> (bool, f64) {
    let diff = new.iter().zip(old).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let scale = new.iter().fold(1.0f64, |m, a| m.max(a.abs()));
    (diff <= tol * scale, diff)
}

/// Integrates `t ↦ γ(Q, V)(t)` on `[0, 1]` for the complete metric built
/// from `params` and `qref`. Non-positive areas along the way are counted,
/// not fatal.
pub fn retract_geodesic(
    complex: &ConnectivityComplex,
    q0: &VertexConfig,
    v: &TangentVector,
    params: &PenaltyParams,
    qref: &VertexConfig,
    cfg: &GeodesicConfig,
) -> Result<GeodesicPath, SolveError> {
    let n = cfg.num_steps;
    if n == 0 || !n.is_power_of_two() {
        return Err(SolveError::InvalidParameter(format!(
            "number of geodesic steps must be a power of two, got {n}"
        )));
    }
    let field = Field {
        complex,
        qref,
        params,
        fd_step: cfg.hessian_fd_step,
    };
    let h = 1.0 / n as f64;
    let mut q = q0.to_vec();
    let mut g = field.grad(&q)?;
    // p = g(q) V
    let gv = linalg::dot(&g, v);
    let mut p: Vec<f64> = v.iter().zip(&g).map(|(vi, gi)| vi + gv * gi).collect();
    let h0 = Field::hamiltonian(&g, &p);

    let levels = n.trailing_zeros() as usize;
    let mut snapshots: Vec<(f64, Vec<f64>)> = vec![(0.0, Vec::new()); levels + 1];
    let mut max_drift = 0.0f64;
    let mut bad_steps = 0;
    let mut max_iter = 0;
    let mut h_end = h0;

    for step in 1..=n {
        // q_half = q + h/2 H_p(q_half, p)
        let mut q_half = q.clone();
        let mut g_half = g.clone();
        let mut converged = false;
        let mut residual = f64::INFINITY;
        for it in 1..=cfg.fixed_point_max_iter {
            let vel = Field::velocity(&g_half, &p);
            let next: Vec<f64> = q.iter().zip(&vel).map(|(qi, vi)| qi + 0.5 * h * vi).collect();
            let (ok, diff) = increment_small(&next, &q_half, cfg.fixed_point_tol);
            q_half = next;
            g_half = field.grad(&q_half)?;
            residual = diff;
            max_iter = max_iter.max(it);
            if ok {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(SolveError::FixedPointDivergence {
                iterations: cfg.fixed_point_max_iter,
                residual,
            });
        }

        // p_new = p - h/2 (H_q(q_half, p) + H_q(q_half, p_new))
        let f_old = field.force(&q_half, &g_half, &p)?;
        let mut p_new = p.clone();
        converged = false;
        for it in 1..=cfg.fixed_point_max_iter {
            let f_new = field.force(&q_half, &g_half, &p_new)?;
            let next: Vec<f64> = p
                .iter()
                .zip(f_old.iter().zip(&f_new))
                .map(|(pi, (a, b))| pi - 0.5 * h * (a + b))
                .collect();
            let (ok, diff) = increment_small(&next, &p_new, cfg.fixed_point_tol);
            p_new = next;
            residual = diff;
            max_iter = max_iter.max(it);
            if ok {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(SolveError::FixedPointDivergence {
                iterations: cfg.fixed_point_max_iter,
                residual,
            });
        }

        let vel = Field::velocity(&g_half, &p_new);
        q = q_half.iter().zip(&vel).map(|(qi, vi)| qi + 0.5 * h * vi).collect();
        p = p_new;
        g = field.grad(&q)?;

        let ham = Field::hamiltonian(&g, &p);
        if h0 != 0.0 {
            max_drift = max_drift.max((ham - h0).abs() / h0.abs());
        }
        h_end = ham;
        if min_signed_area(&config_of(&q)?, complex) <= 0.0 {
            bad_steps += 1;
        }
        // step = n / 2^k  <=>  t = 2^-k
        if (n / step).is_power_of_two() && n.is_multiple_of(step) {
            let k = (n / step).trailing_zeros() as usize;
            snapshots[k] = (step as f64 * h, q.clone());
        }
    }

    Ok(GeodesicPath {
        snapshots,
        hamiltonian_start: h0,
        hamiltonian_end: h_end,
        max_relative_drift: max_drift,
        nonpositive_area_steps: bad_steps,
        max_fixed_point_iterations: max_iter,
    })
}

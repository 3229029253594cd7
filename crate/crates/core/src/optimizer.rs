//! Riemannian steepest descent with Armijo backtracking.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::SolveError;
use crate::fem::{self, AssembledSystem, RhsField, ScalarField};
use crate::geodesic::{retract_geodesic, GeodesicConfig, GeodesicPath};
use crate::linalg;
use crate::mesh::{area_of, edge_length, min_signed_area, ConnectivityComplex, VertexConfig};
use crate::metrics::{retract_euclidean, ElasticityParams, MetricSpec};
use crate::penalty::{self, PenaltyParams};
use crate::vector::{Covector, TangentVector};

/// Metric and retraction pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    EucEuc,
    ElasEuc,
    CompEuc,
    CompComp,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::EucEuc, Variant::ElasEuc, Variant::CompEuc, Variant::CompComp];

    pub fn name(self) -> &'static str {
        match self {
            Variant::EucEuc => "EucEuc",
            Variant::ElasEuc => "ElasEuc",
            Variant::CompEuc => "CompEuc",
            Variant::CompComp => "CompComp",
        }
    }

    pub fn geodesic_retraction(self) -> bool {
        self == Variant::CompComp
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown variant {s:?} (expected EucEuc, ElasEuc, CompEuc or CompComp)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub variant: Variant,
    pub sigma: f64,
    pub tau: f64,
    pub max_iter: usize,
    pub stop_tol: f64,
    pub step_floor: f64,
    pub window: usize,
    /// Penalty added to the objective.
    pub penalty_params: PenaltyParams,
    /// Penalty defining the complete metric.
    pub metric_params: PenaltyParams,
    pub elasticity: ElasticityParams,
    pub geodesic: GeodesicConfig,
    /// Vertices whose derivative entries are zeroed.
    pub fixed_vertex_mask: Option<Vec<bool>>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            variant: Variant::EucEuc,
            sigma: 1e-4,
            tau: 0.5,
            max_iter: 1000,
            stop_tol: 1e-6,
            step_floor: 1e-6,
            window: 5,
            penalty_params: PenaltyParams::zero(),
            metric_params: PenaltyParams::metric_preset(),
            elasticity: ElasticityParams::default(),
            geodesic: GeodesicConfig::default(),
            fixed_vertex_mask: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: String| Err(SolveError::InvalidParameter(m));
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return bad(format!("sigma must lie in (0, 1), got {}", self.sigma));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad(format!("tau must lie in (0, 1), got {}", self.tau));
        }
        if !(self.step_floor > 0.0) {
            return bad(format!("step floor must be positive, got {}", self.step_floor));
        }
        if self.window == 0 {
            return bad("stopping window must be at least 1".into());
        }
        if self.variant.geodesic_retraction() && self.tau != 0.5 {
            return bad("geodesic backtracking reuses dyadic snapshots and needs tau = 0.5".into());
        }
        Ok(())
    }

    pub fn metric(&self, qref: &VertexConfig) -> Result<MetricSpec, SolveError> {
        match self.variant {
            Variant::EucEuc => Ok(MetricSpec::Euclidean),
            Variant::ElasEuc => Ok(MetricSpec::Elasticity(self.elasticity)),
            Variant::CompEuc | Variant::CompComp => MetricSpec::complete(self.metric_params, qref.clone()),
        }
    }
}

/// One row of the iteration history: values at `Q^n` plus the step taken
/// from it (zero on the final row).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    pub penalty: f64,
    pub total: f64,
    pub theta: f64,
    pub step: f64,
    pub backtracks: usize,
    pub grad_deriv_pairing: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Converged,
    MaxIter,
    StepFloorFailure,
    /// A solver error ended the run (singular system, diverging geodesic
    /// sub-step, non-descent direction).
    Breakdown(String),
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Converged => "Converged",
            Status::MaxIter => "MaxIter",
            Status::StepFloorFailure => "StepFloorFailure",
            Status::Breakdown(_) => "Breakdown",
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, Status::StepFloorFailure | Status::Breakdown(_))
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Breakdown(msg) => write!(f, "Breakdown ({msg})"),
            s => f.write_str(s.name()),
        }
    }
}

/// Wall-clock time per phase of the run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseTimings {
    pub state: Duration,
    pub d_objective: Duration,
    pub backtracking: Duration,
    pub gradient: Duration,
    pub retraction: Duration,
    pub assembly_g: Duration,
}

impl PhaseTimings {
    pub fn rows(&self) -> [(&'static str, Duration); 6] {
        [
            ("state", self.state),
            ("dObjective", self.d_objective),
            ("backtracking", self.backtracking),
            ("gradient", self.gradient),
            ("retraction", self.retraction),
            ("assemblyG", self.assembly_g),
        ]
    }

    pub fn total(&self) -> Duration {
        self.rows().iter().map(|(_, d)| *d).sum()
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_q: VertexConfig,
    pub status: Status,
    pub history: Vec<IterationRecord>,
    pub timings: PhaseTimings,
}

impl RunResult {
    /// Number of accepted steps.
    pub fn iterations(&self) -> usize {
        self.history.iter().filter(|r| r.step > 0.0).count()
    }

    pub fn last(&self) -> &IterationRecord {
        self.history.last().expect("history is never empty")
    }
}

/// Initial trial step: the ratio rule `s_{n-1} p_{n-1} / p_n`, reset to
/// `1/|d|` on the first iteration or when the ratio step is tiny.
pub fn initial_step(
    n: usize,
    prev_step: f64,
    prev_pairing: f64,
    cur_pairing: f64,
    grad_norm_metric: f64,
) -> Result<f64, SolveError> {
    if !(cur_pairing < 0.0) {
        return Err(SolveError::NonDescentDirection(cur_pairing));
    }
    let reset = 1.0 / grad_norm_metric;
    if n == 0 {
        return Ok(reset);
    }
    let candidate = prev_step * prev_pairing / cur_pairing;
    if !candidate.is_finite() || candidate * grad_norm_metric < 1e-4 {
        Ok(reset)
    } else {
        Ok(candidate)
    }
}

/// True if some vertex would move by at least half of one of its opposite
/// heights, which could invert the triangle.
pub fn euclidean_safeguard(q: &VertexConfig, complex: &ConnectivityComplex, d: &TangentVector, s: f64) -> bool {
    complex.triangles().iter().any(|tri| {
        let area = area_of(&q.corners(tri));
        (0..3).any(|l| {
            let v = tri[l];
            let step = s * d[2 * v].hypot(d[2 * v + 1]);
            step > 0.0 && step >= 0.5 * (2.0 * area / edge_length(q, tri, l))
        })
    })
}

/// `max_{m=1..window} (f_{n-m} - f_n) < tol` on the last entries of `totals`.
pub fn stopping_check(totals: &[f64], window: usize, tol: f64) -> bool {
    let n = totals.len();
    if n <= window {
        return false;
    }
    let last = totals[n - 1];
    let spread = totals[n - 1 - window..n - 1]
        .iter()
        .map(|f| f - last)
        .fold(f64::NEG_INFINITY, f64::max);
    spread < tol
}

#[derive(Debug, Clone, PartialEq)]
pub enum LineSearch<T> {
    Accepted {
        step: f64,
        backtracks: usize,
        value: f64,
        point: T,
    },
    /// The last trial step fell below the floor.
    Failed { last_step: f64, backtracks: usize },
}

/// Armijo backtracking over `s_init τ^m`. `trial(s, m)` returns the trial
/// point and its value, or `None` if it is inadmissible; non-finite values
/// count as failures.
pub fn armijo_search<T>(
    f0: f64,
    pairing: f64,
    s_init: f64,
    sigma: f64,
    tau: f64,
    step_floor: f64,
    mut trial: impl FnMut(f64, usize) -> Option<(T, f64)>,
) -> LineSearch<T> {
    let mut s = s_init;
    let mut m = 0;
    while s >= step_floor {
        if let Some((point, value)) = trial(s, m) {
            if value.is_finite() && value <= f0 + sigma * s * pairing {
                return LineSearch::Accepted {
                    step: s,
                    backtracks: m,
                    value,
                    point,
                };
            }
        }
        s *= tau;
        m += 1;
    }
    LineSearch::Failed {
        last_step: s,
        backtracks: m,
    }
}

/// Everything known at one iterate.
struct Evaluated {
    q: VertexConfig,
    system: AssembledSystem,
    state: ScalarField,
    objective: f64,
    penalty: f64,
    theta: f64,
}

impl Evaluated {
    fn total(&self) -> f64 {
        self.objective + self.penalty
    }
}

struct Problem<'a> {
    complex: &'a ConnectivityComplex,
    qref: &'a VertexConfig,
    rhs: &'a RhsField,
    config: &'a OptimizerConfig,
}

impl Problem<'_> {
    /// Objective, penalty and quality at an admissible configuration.
    fn evaluate(&self, q: VertexConfig) -> Result<Evaluated, SolveError> {
        let system = fem::assemble(&q, self.complex, self.rhs)?;
        let state = fem::solve_state(&system)?;
        let objective = fem::objective(&q, self.complex, &state);
        let penalty = penalty::phi(&q, self.qref, self.complex, &self.config.penalty_params)?;
        let theta = penalty::theta(&q, self.complex)?;
        Ok(Evaluated {
            q,
            system,
            state,
            objective,
            penalty,
            theta,
        })
    }

    /// Trial evaluation behind the admissibility gate.
    fn try_evaluate(&self, q: VertexConfig) -> Option<(Evaluated, f64)> {
        if !(min_signed_area(&q, self.complex) > 0.0) {
            return None;
        }
        let e = self.evaluate(q).ok()?;
        let total = e.total();
        Some((e, total))
    }

    fn derivative(&self, at: &Evaluated) -> Result<Covector, SolveError> {
        let adjoint = fem::solve_adjoint(&at.system)?;
        let mut d = fem::shape_derivative(&at.q, self.complex, &at.state, &adjoint, self.rhs)?;
        if !self.config.penalty_params.is_zero() {
            let g = penalty::grad_phi(&at.q, self.qref, self.complex, &self.config.penalty_params)?;
            linalg::axpy(1.0, &g, &mut d);
        }
        if let Some(mask) = &self.config.fixed_vertex_mask {
            for (v, fixed) in mask.iter().enumerate() {
                if *fixed {
                    d[2 * v] = 0.0;
                    d[2 * v + 1] = 0.0;
                }
            }
        }
        Ok(d)
    }
}

fn record(n: usize, at: &Evaluated, step: f64, backtracks: usize, pairing: f64) -> IterationRecord {
    IterationRecord {
        iter: n,
        objective: at.objective,
        penalty: at.penalty,
        total: at.total(),
        theta: at.theta,
        step,
        backtracks,
        grad_deriv_pairing: pairing,
    }
}

pub fn steepest_descent(
    complex: &ConnectivityComplex,
    qref: &VertexConfig,
    rhs: &RhsField,
    config: &OptimizerConfig,
) -> RunResult {
    steepest_descent_with_sink(complex, qref, rhs, config, |_, _| {})
}

/// Runs the descent from `Q^0 = qref`, passing every history row and the
/// configuration it describes to `sink` as soon as it is known.
pub fn steepest_descent_with_sink(
    complex: &ConnectivityComplex,
    qref: &VertexConfig,
    rhs: &RhsField,
    config: &OptimizerConfig,
    sink: impl FnMut(&IterationRecord, &VertexConfig),
) -> RunResult {
    steepest_descent_from_with_sink(complex, qref, qref.clone(), rhs, config, sink)
}

/// Same as [`steepest_descent`] but starting from `q0` instead of the
/// reference configuration (the penalty still measures distance to `qref`).
pub fn steepest_descent_from(
    complex: &ConnectivityComplex,
    qref: &VertexConfig,
    q0: VertexConfig,
    rhs: &RhsField,
    config: &OptimizerConfig,
) -> RunResult {
    steepest_descent_from_with_sink(complex, qref, q0, rhs, config, |_, _| {})
}

pub fn steepest_descent_from_with_sink(
    complex: &ConnectivityComplex,
    qref: &VertexConfig,
    q0: VertexConfig,
    rhs: &RhsField,
    config: &OptimizerConfig,
    mut sink: impl FnMut(&IterationRecord, &VertexConfig),
) -> RunResult {
    let mut timings = PhaseTimings::default();
    let mut history = Vec::new();
    let breakdown = |e: SolveError| Status::Breakdown(e.to_string());
    let finish = |q: VertexConfig, status, history, timings| RunResult {
        final_q: q,
        status,
        history,
        timings,
    };

    if let Err(e) = config.validate() {
        return finish(q0, breakdown(e), history, timings);
    }
    if let Some(mask) = &config.fixed_vertex_mask {
        if mask.len() != complex.num_vertices() {
            let e = SolveError::InvalidParameter(format!(
                "fixed-vertex mask has {} entries, mesh has {} vertices",
                mask.len(),
                complex.num_vertices()
            ));
            return finish(q0, breakdown(e), history, timings);
        }
    }
    let metric = match config.metric(qref) {
        Ok(m) => m,
        Err(e) => return finish(q0, breakdown(e), history, timings),
    };
    let problem = Problem {
        complex,
        qref,
        rhs,
        config,
    };

    let t = Instant::now();
    let mut current = match problem.evaluate(q0.clone()) {
        Ok(e) => e,
        Err(e) => return finish(q0, breakdown(e), history, timings),
    };
    timings.state += t.elapsed();

    let mut totals = Vec::new();
    let mut prev_step = 0.0;
    let mut prev_pairing = 0.0;
    let mut n = 0;
    let status = loop {
        totals.push(current.total());

        let t = Instant::now();
        let derivative = problem.derivative(&current);
        timings.d_objective += t.elapsed();
        let derivative = match derivative {
            Ok(d) => d,
            Err(e) => break breakdown(e),
        };

        let stop_row = |current: &Evaluated| record(n, current, 0.0, 0, 0.0);
        if stopping_check(&totals, config.window, config.stop_tol) {
            let r = stop_row(&current);
            sink(&r, &current.q);
            history.push(r);
            break Status::Converged;
        }
        if derivative.iter().all(|v| *v == 0.0) {
            let r = stop_row(&current);
            sink(&r, &current.q);
            history.push(r);
            break Status::Converged;
        }
        if n >= config.max_iter {
            let r = stop_row(&current);
            sink(&r, &current.q);
            history.push(r);
            break Status::MaxIter;
        }

        let t = Instant::now();
        let local = metric.at(&current.q, complex);
        timings.assembly_g += t.elapsed();
        let local = match local {
            Ok(l) => l,
            Err(e) => break breakdown(e),
        };
        let t = Instant::now();
        let mut direction = local.to_gradient(&derivative);
        for v in direction.iter_mut() {
            *v = -*v;
        }
        timings.gradient += t.elapsed();
        let pairing = derivative.apply(&direction);
        let s_init = match initial_step(n, prev_step, prev_pairing, pairing, (-pairing).sqrt()) {
            Ok(s) => s,
            Err(e) => break breakdown(e),
        };

        let f0 = current.total();
        let outcome = if config.variant.geodesic_retraction() {
            geodesic_line_search(&problem, &current.q, &direction, s_init, f0, pairing, &mut timings)
        } else {
            armijo_search(
                f0,
                pairing,
                s_init,
                config.sigma,
                config.tau,
                config.step_floor,
                |s, _| {
                    let t = Instant::now();
                    let trial = if euclidean_safeguard(&current.q, complex, &direction, s) {
                        None
                    } else {
                        retract_euclidean(&current.q, &direction, s).ok()
                    };
                    timings.retraction += t.elapsed();
                    let t = Instant::now();
                    let out = trial.and_then(|q| problem.try_evaluate(q));
                    timings.backtracking += t.elapsed();
                    out
                },
            )
        };

        match outcome {
            LineSearch::Accepted {
                step,
                backtracks,
                point,
                ..
            } => {
                let r = record(n, &current, step, backtracks, pairing);
                sink(&r, &current.q);
                history.push(r);
                debug_assert!(min_signed_area(&point.q, complex) > 0.0);
                current = point;
                prev_step = step;
                prev_pairing = pairing;
                n += 1;
            }
            LineSearch::Failed { last_step, backtracks } => {
                let r = record(n, &current, last_step, backtracks, pairing);
                sink(&r, &current.q);
                history.push(r);
                break Status::StepFloorFailure;
            }
        }
    };
    finish(current.q, status, history, timings)
}

/// Backtracking along one geodesic: trial `m` is the snapshot at
/// `t = 2^-m` of `γ(Q, s_init d)`. When the stored ladder is exhausted the
/// geodesic is integrated afresh from the smallest scale reached.
fn geodesic_line_search(
    problem: &Problem<'_>,
    q: &VertexConfig,
    direction: &TangentVector,
    s_init: f64,
    f0: f64,
    pairing: f64,
    timings: &mut PhaseTimings,
) -> LineSearch<Evaluated> {
    let cfg = problem.config;
    let mut base_scale = s_init;
    let mut base_m = 0;
    let mut path: Option<GeodesicPath> = None;
    let integrate = |scale: f64, timings: &mut PhaseTimings| -> Option<GeodesicPath> {
        let v = TangentVector(direction.iter().map(|x| scale * x).collect());
        let t = Instant::now();
        let out = retract_geodesic(problem.complex, q, &v, &cfg.metric_params, problem.qref, &cfg.geodesic).ok();
        timings.retraction += t.elapsed();
        out
    };
    armijo_search(f0, pairing, s_init, cfg.sigma, cfg.tau, cfg.step_floor, |s, m| {
        let levels = cfg.geodesic.num_steps.trailing_zeros() as usize;
        if path.is_none() || m - base_m > levels {
            base_scale = s;
            base_m = m;
            path = integrate(s, timings);
        }
        // A failed integration at this scale is a failed trial; the next
        // (halved) trial integrates again.
        let Some(p) = path.as_ref() else {
            path = None;
            return None;
        };
        debug_assert!((base_scale * 0.5f64.powi((m - base_m) as i32) - s).abs() <= 1e-12 * s);
        let snapshot = p.at_dyadic(m - base_m)?.to_vec();
        let t = Instant::now();
        let out = VertexConfig::from_vec(&snapshot)
            .ok()
            .and_then(|qt| problem.try_evaluate(qt));
        timings.backtracking += t.elapsed();
        out
    })
}

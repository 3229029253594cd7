use std::path::PathBuf;

use clap::{Args, ValueEnum};
use meshshape::fem::{self, RhsField};
use meshshape::mesh::{is_admissible, min_signed_area};
use meshshape::mesh_io::write_svg;
use meshshape::metrics::ElasticityParams;
use meshshape::optimizer::{steepest_descent_with_sink, OptimizerConfig, Status, Variant};
use meshshape::penalty::{grad_phi, phi, theta, PenaltyParams};
use meshshape::{Mesh, VertexConfig};

use crate::error::CliError;
use crate::output::{ensure_dir, write_final, write_timing, HistoryWriter};
use crate::spec::{output_dir, parse_penalty, parse_rhs, ConfigFile, MeshSource};

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn require_admissible(mesh: &Mesh) -> Result<(), CliError> {
    if is_admissible(&mesh.complex, &mesh.coords, true) {
        Ok(())
    } else {
        Err(CliError::Inadmissible(format!(
            "mesh is not admissible (min signed area {:e}, or the boundary self-intersects)",
            min_signed_area(&mesh.coords, &mesh.complex)
        )))
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Mesh file, `disc:<rings>` or `square5`.
    #[arg(long)]
    pub mesh: MeshSource,
}

pub fn check(args: &CheckArgs) -> Result<(), CliError> {
    let mesh = args.mesh.load()?;
    let (c, q) = (&mesh.complex, &mesh.coords);
    let admissible = is_admissible(c, q, true);
    println!("vertices           {}", c.num_vertices());
    println!("triangles          {}", c.num_triangles());
    println!("boundary edges     {}", c.boundary_edges().len());
    println!("boundary vertices  {}", c.boundary_vertices().len());
    println!("min signed area    {:e}", min_signed_area(q, c));
    match theta(q, c) {
        Ok(t) => println!("theta              {t:.6}"),
        Err(_) => println!("theta              undefined"),
    }
    println!("admissible         {}", if admissible { "yes" } else { "no" });
    require_admissible(&mesh)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    Phi,
    Theta,
    Objective,
    Gradcheck,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub mesh: MeshSource,
    #[arg(long, value_enum)]
    pub which: Quantity,
    /// Penalty coefficients for `phi` and `gradcheck`.
    #[arg(long, default_value = "set1", value_parser = parse_penalty)]
    pub penalty: PenaltyParams,
    #[arg(long, default_value = "model", value_parser = parse_rhs)]
    pub rhs: RhsField,
}

/// `max |g - FD| / max |g|` with central differences; absolute when `g = 0`.
pub fn fd_relative_error(
    grad: &[f64],
    base: &[f64],
    h: f64,
    f: impl Fn(&[f64]) -> Result<f64, CliError>,
) -> Result<f64, CliError> {
    let mut err = 0.0f64;
    for k in 0..base.len() {
        let mut plus = base.to_vec();
        let mut minus = base.to_vec();
        plus[k] += h;
        minus[k] -= h;
        err = err.max((grad[k] - (f(&plus)? - f(&minus)?) / (2.0 * h)).abs());
    }
    let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    Ok(if scale > 0.0 { err / scale } else { err })
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let mesh = args.mesh.load()?;
    require_admissible(&mesh)?;
    let (c, q) = (&mesh.complex, &mesh.coords);
    match args.which {
        Quantity::Phi => println!("{}", phi(q, q, c, &args.penalty)?),
        Quantity::Theta => println!("{}", theta(q, c)?),
        Quantity::Objective => println!("{}", fem::reduced_objective(q, c, &args.rhs)?),
        Quantity::Gradcheck => {
            const TOL: f64 = 1e-5;
            let base = q.to_vec();
            let config = |x: &[f64]| VertexConfig::from_vec(x).map_err(CliError::from);
            let g = grad_phi(q, q, c, &args.penalty)?;
            let e_phi = fd_relative_error(&g, &base, 1e-6, |x| Ok(phi(&config(x)?, q, c, &args.penalty)?))?;
            let sol = fem::solve(q, c, &args.rhs)?;
            let d = fem::shape_derivative(q, c, &sol.state, &sol.adjoint, &args.rhs)?;
            let e_obj = fd_relative_error(&d, &base, 1e-6, |x| {
                Ok(fem::reduced_objective(&config(x)?, c, &args.rhs)?)
            })?;
            println!("grad_phi          max relative FD error {e_phi:.3e}");
            println!("shape_derivative  max relative FD error {e_obj:.3e}");
            if !(e_phi < TOL && e_obj < TOL) {
                return Err(CliError::Failed(format!("gradient check above {TOL:e}")));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Mesh file, `disc:<rings>` or `square5`.
    #[arg(long)]
    pub mesh: Option<MeshSource>,
    /// `key = value` file with defaults for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub variant: Option<Variant>,
    /// Objective penalty: set1|set2|set3|none or `a1=..,a2=..,a3=..,a4=..`.
    #[arg(long)]
    pub penalty: Option<String>,
    /// Coefficients of the complete metric (default 10/1/0/0.01).
    #[arg(long)]
    pub metric_penalty: Option<String>,
    /// `model` or `const:<c>`.
    #[arg(long)]
    pub rhs: Option<String>,
    #[arg(long)]
    pub young: Option<f64>,
    #[arg(long)]
    pub poisson: Option<f64>,
    /// Zero-order term of the elasticity metric (default 0.2 * young).
    #[arg(long)]
    pub damping: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Stopping tolerance on the windowed decrease of the total (default
    /// 1e-6, or 0 = fixed budget when the penalty is zero).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub step_floor: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub window: Option<usize>,
    /// Steps per geodesic integration (power of two).
    #[arg(long)]
    pub geodesic_steps: Option<usize>,
    /// Keep boundary vertices in place.
    #[arg(long)]
    pub fix_boundary: bool,
    /// Write an SVG snapshot every this many iterations (0 = none).
    #[arg(long)]
    pub snapshot_stride: Option<usize>,
    /// Output directory (else $MESHSHAPE_OUT, else `out` from the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

const OPTIMIZE_KEYS: [&str; 19] = [
    "mesh",
    "variant",
    "penalty",
    "metric-penalty",
    "rhs",
    "young",
    "poisson",
    "damping",
    "max-iter",
    "tol",
    "step-floor",
    "sigma",
    "tau",
    "window",
    "geodesic-steps",
    "fix-boundary",
    "snapshot-stride",
    "out",
    "config",
];

/// Everything an optimization run needs, after merging flags, config file
/// and presets.
#[derive(Debug)]
pub struct RunSpec {
    pub source: MeshSource,
    pub mesh: Mesh,
    pub rhs: RhsField,
    pub optimizer: OptimizerConfig,
    pub out_dir: PathBuf,
    pub snapshot_stride: usize,
}

impl OptimizeArgs {
    pub fn resolve(self) -> Result<RunSpec, CliError> {
        let cfg = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        if let Some(k) = cfg.keys().find(|k| !OPTIMIZE_KEYS.contains(k)) {
            return Err(usage(format!("unknown config key {k:?}")));
        }
        let source: MeshSource = cfg
            .pick(self.mesh, "mesh")?
            .ok_or_else(|| usage("a mesh source is required (--mesh or `mesh =` in the config)"))?;
        let mesh = source.load()?;

        let defaults = OptimizerConfig::default();
        let penalty = match cfg.pick(self.penalty, "penalty")? {
            Some(s) => parse_penalty(&s).map_err(usage)?,
            None => defaults.penalty_params,
        };
        let metric_params = match cfg.pick(self.metric_penalty, "metric-penalty")? {
            Some(s) => parse_penalty(&s).map_err(usage)?,
            None => defaults.metric_params,
        };
        let rhs = match cfg.pick(self.rhs, "rhs")? {
            Some(s) => parse_rhs(&s).map_err(usage)?,
            None => RhsField::Model,
        };
        let young = cfg.pick(self.young, "young")?.unwrap_or(defaults.elasticity.young);
        let poisson = cfg
            .pick(self.poisson, "poisson")?
            .unwrap_or(defaults.elasticity.poisson);
        let elasticity = match cfg.pick(self.damping, "damping")? {
            Some(d) => ElasticityParams::with_damping(young, poisson, d),
            None => ElasticityParams::new(young, poisson),
        }?;
        let fix_boundary = self.fix_boundary || cfg.pick::<bool>(None, "fix-boundary")?.unwrap_or(false);
        let mut geodesic = defaults.geodesic;
        geodesic.num_steps = cfg
            .pick(self.geodesic_steps, "geodesic-steps")?
            .unwrap_or(geodesic.num_steps);

        let optimizer = OptimizerConfig {
            variant: cfg.pick(self.variant, "variant")?.unwrap_or(defaults.variant),
            sigma: cfg.pick(self.sigma, "sigma")?.unwrap_or(defaults.sigma),
            tau: cfg.pick(self.tau, "tau")?.unwrap_or(defaults.tau),
            max_iter: cfg.pick(self.max_iter, "max-iter")?.unwrap_or(defaults.max_iter),
            // Unpenalized problems may have no minimizer; they run a fixed
            // budget unless a tolerance is given explicitly.
            stop_tol: cfg
                .pick(self.tol, "tol")?
                .unwrap_or(if penalty.is_zero() { 0.0 } else { defaults.stop_tol }),
            step_floor: cfg.pick(self.step_floor, "step-floor")?.unwrap_or(defaults.step_floor),
            window: cfg.pick(self.window, "window")?.unwrap_or(defaults.window),
            penalty_params: penalty,
            metric_params,
            elasticity,
            geodesic,
            fixed_vertex_mask: fix_boundary.then(|| {
                (0..mesh.complex.num_vertices())
                    .map(|v| mesh.complex.is_boundary_vertex(v))
                    .collect()
            }),
        };
        optimizer.validate()?;
        Ok(RunSpec {
            source,
            mesh,
            rhs,
            optimizer,
            out_dir: output_dir(self.out, &cfg)?,
            snapshot_stride: cfg.pick(self.snapshot_stride, "snapshot-stride")?.unwrap_or(0),
        })
    }
}

pub fn optimize(args: OptimizeArgs) -> Result<(), CliError> {
    let spec = args.resolve()?;
    require_admissible(&spec.mesh)?;
    let (c, q) = (&spec.mesh.complex, &spec.mesh.coords);
    let dir = &spec.out_dir;
    ensure_dir(dir)?;
    if spec.snapshot_stride > 0 {
        ensure_dir(&dir.join("snapshots"))?;
    }
    write_svg(dir.join("initial.svg"), c, q)?;

    let mut history = HistoryWriter::create(&dir.join("history.csv"))?;
    let mut sink_error = None;
    let result = steepest_descent_with_sink(c, q, &spec.rhs, &spec.optimizer, |r, qn| {
        if sink_error.is_some() {
            return;
        }
        let mut step = || -> Result<(), CliError> {
            history.push(r)?;
            if spec.snapshot_stride > 0 && r.iter % spec.snapshot_stride == 0 {
                write_svg(dir.join("snapshots").join(format!("iter_{:05}.svg", r.iter)), c, qn)?;
            }
            Ok(())
        };
        sink_error = step().err();
    });
    if let Some(e) = sink_error {
        return Err(e);
    }
    write_timing(&dir.join("timing.csv"), &result.timings)?;
    write_final(dir, c, &result.final_q)?;

    let last = result.last();
    println!("mesh        {}", spec.source);
    println!("variant     {}", spec.optimizer.variant);
    println!("status      {}", result.status);
    println!("iterations  {}", result.iterations());
    println!("objective   {:.6}", last.objective);
    println!("penalty     {:.6}", last.penalty);
    println!("total       {:.6}", last.total);
    println!("theta       {:.6}", last.theta);
    println!("output      {}", dir.display());
    match result.status {
        Status::Converged | Status::MaxIter => Ok(()),
        s => Err(CliError::Failed(format!("optimization ended with {s}"))),
    }
}

//! Scripted batches mirroring the three numerical experiments.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use meshshape::fem::RhsField;
use meshshape::mesh::make_disc_mesh;
use meshshape::optimizer::{steepest_descent, OptimizerConfig, RunResult, Variant};
use meshshape::penalty::PenaltyParams;

use crate::error::CliError;
use crate::output::{ensure_dir, write_final, write_history, write_timing};
use crate::spec::{output_dir, ConfigFile};

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment number: 1 (unpenalized, all retractions), 2 (penalized
    /// parameter sets), 3 (unpenalized, growing meshes).
    #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
    pub id: u8,
    /// Disc ring counts. Experiment 3 runs each; 1 and 2 use the first.
    #[arg(long, value_delimiter = ',')]
    pub rings: Vec<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Run CompComp on the same mesh as the other variants in experiment 1.
    #[arg(long)]
    pub full_scale: bool,
    /// Rings of the reduced CompComp mesh in experiment 1.
    #[arg(long, default_value_t = 1)]
    pub compcomp_rings: usize,
    /// Iteration cap of the CompComp run in experiment 1 (default: the
    /// common cap).
    #[arg(long)]
    pub compcomp_max_iter: Option<usize>,
    /// Run the independent optimizations of the batch concurrently.
    #[arg(long)]
    pub parallel: bool,
    /// Output directory (else $MESHSHAPE_OUT).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
struct Plan {
    tag: String,
    rings: usize,
    set: &'static str,
    config: OptimizerConfig,
}

struct Finished {
    plan: Plan,
    nv: usize,
    nt: usize,
    result: RunResult,
    seconds: f64,
}

fn plan(variant: Variant, rings: usize, set: &'static str, config: OptimizerConfig) -> Plan {
    let tag = if set == "none" {
        format!("{variant}_disc{rings}")
    } else {
        format!("{variant}_{set}_disc{rings}")
    };
    Plan {
        tag,
        rings,
        set,
        config: OptimizerConfig { variant, ..config },
    }
}

fn plans(args: &ExperimentArgs) -> Result<Vec<Plan>, CliError> {
    if args.rings.contains(&0) || args.compcomp_rings == 0 {
        return Err(CliError::Usage("ring counts must be at least 1".into()));
    }
    let first = |default: usize| args.rings.first().copied().unwrap_or(default);
    let base = OptimizerConfig::default();
    Ok(match args.id {
        1 => {
            let rings = first(5);
            // Unpenalized: fixed budget, stopping rule off.
            let config = OptimizerConfig {
                max_iter: args.max_iter.unwrap_or(1000),
                stop_tol: 0.0,
                ..base
            };
            let comp_rings = if args.full_scale { rings } else { args.compcomp_rings };
            let comp = OptimizerConfig {
                max_iter: args.compcomp_max_iter.unwrap_or(config.max_iter),
                ..config.clone()
            };
            vec![
                plan(Variant::EucEuc, rings, "none", config.clone()),
                plan(Variant::ElasEuc, rings, "none", config),
                plan(Variant::CompComp, comp_rings, "none", comp),
            ]
        }
        2 => {
            let rings = first(7);
            let sets = [
                ("set1", PenaltyParams::set1()),
                ("set2", PenaltyParams::set2()),
                ("set3", PenaltyParams::set3()),
            ];
            let mut out = Vec::new();
            for (name, p) in sets {
                for v in [Variant::EucEuc, Variant::ElasEuc, Variant::CompEuc] {
                    let config = OptimizerConfig {
                        penalty_params: p,
                        max_iter: args.max_iter.unwrap_or(1000),
                        ..base.clone()
                    };
                    out.push(plan(v, rings, name, config));
                }
            }
            out
        }
        _ => {
            let rings = if args.rings.is_empty() {
                vec![5, 8, 12]
            } else {
                args.rings.clone()
            };
            // Unpenalized: fixed budget, stopping rule off.
            let config = OptimizerConfig {
                max_iter: args.max_iter.unwrap_or(500),
                stop_tol: 0.0,
                ..base
            };
            rings
                .into_iter()
                .flat_map(|r| [Variant::ElasEuc, Variant::CompEuc].map(|v| plan(v, r, "none", config.clone())))
                .collect()
        }
    })
}

fn execute(plan: Plan) -> Finished {
    let mesh = make_disc_mesh(plan.rings);
    let start = Instant::now();
    let result = steepest_descent(&mesh.complex, &mesh.coords, &RhsField::Model, &plan.config);
    Finished {
        nv: mesh.complex.num_vertices(),
        nt: mesh.complex.num_triangles(),
        seconds: start.elapsed().as_secs_f64(),
        result,
        plan,
    }
}

fn save(dir: &Path, run: &Finished) -> Result<(), CliError> {
    let d = dir.join(&run.plan.tag);
    ensure_dir(&d)?;
    write_history(&d.join("history.csv"), &run.result.history)?;
    write_timing(&d.join("timing.csv"), &run.result.timings)?;
    let mesh = make_disc_mesh(run.plan.rings);
    write_final(&d, &mesh.complex, &run.result.final_q)
}

const SUMMARY_HEADER: [&str; 13] = [
    "run",
    "mesh",
    "N_V",
    "N_T",
    "variant",
    "set",
    "status",
    "iterations",
    "Obj",
    "Penalty",
    "Total",
    "mshQua",
    "seconds",
];

fn write_tables(dir: &Path, runs: &[Finished]) -> Result<(), CliError> {
    let mut summary = csv::Writer::from_path(dir.join("summary.csv"))?;
    summary.write_record(SUMMARY_HEADER)?;
    let mut timing = csv::Writer::from_path(dir.join("timing.csv"))?;
    let phases = runs[0].result.timings.rows().map(|(name, _)| name);
    timing.write_record(["run"].into_iter().chain(phases).chain(["total"]))?;

    println!(
        "{:<24} {:>5} {:>5} {:<17} {:>6} {:>10} {:>10} {:>10} {:>10}",
        "run", "N_V", "N_T", "status", "iters", "Obj", "Penalty", "Total", "mshQua"
    );
    for run in runs {
        let l = run.result.last();
        let status = run.result.status.name();
        summary.write_record([
            run.plan.tag.clone(),
            format!("disc:{}", run.plan.rings),
            run.nv.to_string(),
            run.nt.to_string(),
            run.plan.config.variant.to_string(),
            run.plan.set.to_string(),
            status.to_string(),
            run.result.iterations().to_string(),
            l.objective.to_string(),
            l.penalty.to_string(),
            l.total.to_string(),
            l.theta.to_string(),
            format!("{:.3}", run.seconds),
        ])?;
        let t = &run.result.timings;
        timing.write_record(
            [run.plan.tag.clone()]
                .into_iter()
                .chain(t.rows().map(|(_, d)| format!("{:.6}", d.as_secs_f64())))
                .chain([format!("{:.6}", t.total().as_secs_f64())]),
        )?;
        println!(
            "{:<24} {:>5} {:>5} {:<17} {:>6} {:>10.5} {:>10.5} {:>10.5} {:>10.4}",
            run.plan.tag,
            run.nv,
            run.nt,
            status,
            run.result.iterations(),
            l.objective,
            l.penalty,
            l.total,
            l.theta
        );
    }
    summary.flush()?;
    timing.flush()?;
    Ok(())
}

pub fn experiment(args: &ExperimentArgs) -> Result<(), CliError> {
    let plans = plans(args)?;
    let dir = output_dir(args.out.clone(), &ConfigFile::default())?.join(format!("experiment{}", args.id));
    ensure_dir(&dir)?;

    let runs: Vec<Finished> = if args.parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = plans.into_iter().map(|p| s.spawn(move || execute(p))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("optimization thread panicked"))
                .collect()
        })
    } else {
        plans.into_iter().map(execute).collect()
    };
    for run in &runs {
        save(&dir, run)?;
    }
    write_tables(&dir, &runs)?;
    println!("output {}", dir.display());
    Ok(())
}

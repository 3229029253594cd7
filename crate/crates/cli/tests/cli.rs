use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn meshshape(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meshshape"))
        .args(args)
        .current_dir(dir)
        .env_remove("MESHSHAPE_OUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn history(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn col(rows: &[Vec<String>], name: &str) -> usize {
    rows[0].iter().position(|h| h == name).unwrap()
}

const SQUARE5: &str = "5 4\n-1 -1\n1 -1\n1 1\n-1 1\n0 0\n0 1 4\n1 2 4\n2 3 4\n3 0 4\n";

#[test]
fn check_square5() {
    let tmp = TempDir::new().unwrap();
    let o = meshshape(&["check", "--mesh", "square5"], tmp.path());
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("theta              1.154701"), "{out}");
    assert!(out.contains("boundary edges     4"));
    assert!(out.contains("vertices           5"));
}

#[test]
fn check_exit_codes_for_files() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("ok.mesh"), SQUARE5).unwrap();
    // Centre pushed outside the square: one triangle is inverted.
    fs::write(
        tmp.path().join("flipped.mesh"),
        SQUARE5.replace("0 0\n0 1 4", "0 -1.5\n0 1 4"),
    )
    .unwrap();
    // One triangle listed clockwise.
    fs::write(tmp.path().join("reversed.mesh"), SQUARE5.replace("1 2 4", "2 1 4")).unwrap();
    fs::write(tmp.path().join("bad.mesh"), "5 4\n-1 -1\n1 oops\n").unwrap();

    assert_eq!(code(&meshshape(&["check", "--mesh", "ok.mesh"], tmp.path())), 0);
    assert_eq!(code(&meshshape(&["check", "--mesh", "flipped.mesh"], tmp.path())), 2);
    assert_eq!(code(&meshshape(&["check", "--mesh", "reversed.mesh"], tmp.path())), 2);
    assert_eq!(code(&meshshape(&["check", "--mesh", "bad.mesh"], tmp.path())), 1);
    assert_eq!(code(&meshshape(&["check", "--mesh", "missing.mesh"], tmp.path())), 1);
}

#[test]
fn usage_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    for args in [
        &["frobnicate"][..],
        &["check"],
        &["optimize", "--mesh", "disc:2", "--variant", "Newton"],
        &["optimize", "--mesh", "disc:2", "--penalty", "a9=1"],
        &["optimize", "--mesh", "disc:2", "--rhs", "sin"],
        &["optimize", "--variant", "CompComp", "--tau", "0.3", "--mesh", "disc:1"],
        &["optimize"],
        &["experiment", "4"],
        &["eval", "--mesh", "disc:2", "--which", "volume"],
    ] {
        assert_eq!(code(&meshshape(args, tmp.path())), 1, "{args:?}");
    }
    assert_eq!(code(&meshshape(&["--help"], tmp.path())), 0);
}

#[test]
fn eval_values() {
    let tmp = TempDir::new().unwrap();
    let o = meshshape(
        &["eval", "--mesh", "square5", "--which", "objective", "--rhs", "const:1"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    let j: f64 = stdout(&o).trim().parse().unwrap();
    assert!((j - 4.0 / 9.0).abs() < 1e-12);

    // The one-ring disc is a regular hexagon of equilateral triangles.
    let o = meshshape(&["eval", "--mesh", "disc:1", "--which", "theta"], tmp.path());
    let t: f64 = stdout(&o).trim().parse().unwrap();
    assert!((t - 1.0).abs() < 1e-12);

    let o = meshshape(
        &["eval", "--mesh", "square5", "--which", "phi", "--penalty", "a1=2"],
        tmp.path(),
    );
    let p: f64 = stdout(&o).trim().parse().unwrap();
    assert!((p - 2.0 * 1.154_700_538_379_251_7).abs() < 1e-12);

    let o = meshshape(&["eval", "--mesh", "disc:3", "--which", "gradcheck"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn eval_rejects_inadmissible_mesh() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("flipped.mesh"),
        SQUARE5.replace("0 0\n0 1 4", "0 -1.5\n0 1 4"),
    )
    .unwrap();
    let o = meshshape(&["eval", "--mesh", "flipped.mesh", "--which", "theta"], tmp.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn optimize_penalized_disc() {
    let tmp = TempDir::new().unwrap();
    let o = meshshape(
        &[
            "optimize",
            "--mesh",
            "disc:5",
            "--variant",
            "CompEuc",
            "--penalty",
            "set1",
            "--tol",
            "1e-6",
            "--out",
            "run",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let dir = tmp.path().join("run");
    let rows = history(&dir.join("history.csv"));
    assert_eq!(rows[0].join(","), "iter,Obj,Penalty,Total,mshQua,step,backtracks");
    let theta: f64 = rows.last().unwrap()[col(&rows, "mshQua")].parse().unwrap();
    assert!((1.0..=1.1).contains(&theta), "{theta}");
    for f in ["timing.csv", "final.mesh", "final.svg", "initial.svg"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let timing = fs::read_to_string(dir.join("timing.csv")).unwrap();
    assert!(timing.starts_with("phase,seconds\n"));
    assert_eq!(timing.lines().count(), 7);
}

#[test]
fn optimize_unpenalized_euclidean_fails_on_step_floor() {
    let tmp = TempDir::new().unwrap();
    let o = meshshape(
        &[
            "optimize",
            "--mesh",
            "disc:3",
            "--variant",
            "EucEuc",
            "--penalty",
            "none",
            "--max-iter",
            "1000",
            "--out",
            "run",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 3, "{}", stdout(&o));
    assert!(stdout(&o).contains("StepFloorFailure"));
    let rows = history(&tmp.path().join("run/history.csv"));
    let theta: f64 = rows.last().unwrap()[col(&rows, "mshQua")].parse().unwrap();
    assert!(theta > 10.0, "{theta}");
}

#[test]
fn optimize_square5_fixed_boundary_keeps_centre() {
    let tmp = TempDir::new().unwrap();
    let o = meshshape(
        &[
            "optimize",
            "--mesh",
            "square5",
            "--fix-boundary",
            "--rhs",
            "const:1",
            "--penalty",
            "a1=0.1,a2=0.01,a3=0,a4=0.01",
            "--out",
            "run",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(tmp.path().join("run/final.mesh")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    let centre: Vec<f64> = rows[5].split_whitespace().map(|t| t.parse().unwrap()).collect();
    assert!(centre[0].abs() < 1e-3 && centre[1].abs() < 1e-3, "{centre:?}");
    assert_eq!(rows[1], "-1 -1");
}

#[test]
fn history_is_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let args = |out: &'static str| {
        [
            "optimize",
            "--mesh",
            "disc:3",
            "--variant",
            "ElasEuc",
            "--penalty",
            "set2",
            "--max-iter",
            "40",
            "--out",
            out,
        ]
    };
    assert_eq!(code(&meshshape(&args("a"), tmp.path())), 0);
    assert_eq!(code(&meshshape(&args("b"), tmp.path())), 0);
    let a = fs::read(tmp.path().join("a/history.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/history.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        fs::read(tmp.path().join("a/final.mesh")).unwrap(),
        fs::read(tmp.path().join("b/final.mesh")).unwrap()
    );
}

#[test]
fn config_file_and_flag_precedence() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("run.conf"),
        "# test run\nmesh = disc:2\npenalty = set1\nmax_iter = 3\ntol = 0\nout = from-config\n",
    )
    .unwrap();
    let o = meshshape(&["optimize", "--config", "run.conf"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(history(&tmp.path().join("from-config/history.csv")).len(), 1 + 4);

    let o = meshshape(
        &[
            "optimize",
            "--config",
            "run.conf",
            "--max-iter",
            "5",
            "--out",
            "from-flag",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    assert_eq!(history(&tmp.path().join("from-flag/history.csv")).len(), 1 + 6);

    fs::write(tmp.path().join("typo.conf"), "mesh = disc:2\nmax_itr = 3\n").unwrap();
    assert_eq!(code(&meshshape(&["optimize", "--config", "typo.conf"], tmp.path())), 1);
}

#[test]
fn output_directory_from_environment() {
    let tmp = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_meshshape"))
        .args(["optimize", "--mesh", "disc:2", "--penalty", "set1", "--max-iter", "2"])
        .current_dir(tmp.path())
        .env("MESHSHAPE_OUT", "env-out")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(tmp.path().join("env-out/history.csv").exists());
}

#[test]
fn snapshots_follow_stride() {
    let tmp = TempDir::new().unwrap();
    let o = meshshape(
        &[
            "optimize",
            "--mesh",
            "disc:2",
            "--penalty",
            "set1",
            "--max-iter",
            "6",
            "--tol",
            "0",
            "--snapshot-stride",
            "3",
            "--out",
            "run",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    let mut names: Vec<String> = fs::read_dir(tmp.path().join("run/snapshots"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["iter_00000.svg", "iter_00003.svg", "iter_00006.svg"]);
}

fn summary(dir: &Path) -> Vec<Vec<String>> {
    history(&dir.join("summary.csv"))
}

#[test]
fn experiment2_variants_agree_on_set1() {
    let tmp = TempDir::new().unwrap();
    let o = meshshape(&["experiment", "2", "--out", "exp"], tmp.path());
    assert_eq!(code(&o), 0);
    let dir = tmp.path().join("exp/experiment2");
    let rows = summary(&dir);
    assert_eq!(rows.len(), 1 + 9);
    let set1: Vec<&Vec<String>> = rows.iter().filter(|r| r[col(&rows, "set")] == "set1").collect();
    assert_eq!(set1.len(), 3);
    for name in ["Obj", "mshQua"] {
        let v: Vec<f64> = set1.iter().map(|r| r[col(&rows, name)].parse().unwrap()).collect();
        let spread = v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread <= 1e-3, "{name}: {v:?}");
    }
    assert!(rows[1..].iter().all(|r| r[col(&rows, "status")] == "Converged"));
    assert!(dir.join("EucEuc_set1_disc7/history.csv").exists());
    let timing = history(&dir.join("timing.csv"));
    assert_eq!(
        timing[0].join(","),
        "run,state,dObjective,backtracking,gradient,retraction,assemblyG,total"
    );
}

#[test]
fn experiment1_compcomp_on_reduced_mesh() {
    let tmp = TempDir::new().unwrap();
    let o = meshshape(&["experiment", "1", "--max-iter", "60", "--out", "exp"], tmp.path());
    assert_eq!(code(&o), 0);
    let dir = tmp.path().join("exp/experiment1");
    let rows = summary(&dir);
    let comp = rows.iter().find(|r| r[col(&rows, "variant")] == "CompComp").unwrap();
    assert_eq!(comp[col(&rows, "N_V")], "7");
    assert!(comp[col(&rows, "iterations")].parse::<usize>().unwrap() >= 5);
    let euc = rows.iter().find(|r| r[col(&rows, "variant")] == "EucEuc").unwrap();
    assert_eq!(euc[col(&rows, "status")], "StepFloorFailure");

    let timing = history(&dir.join("timing.csv"));
    let row = timing.iter().find(|r| r[0].starts_with("CompComp")).unwrap();
    let phases: Vec<f64> = row[1..7].iter().map(|v| v.parse().unwrap()).collect();
    let retraction = phases[col(&timing, "retraction") - 1];
    assert!(phases.iter().all(|p| *p <= retraction), "{row:?}");
}

#[test]
fn experiment3_runs_fixed_budget_sequential_and_parallel() {
    let tmp = TempDir::new().unwrap();
    for (flag, out) in [(None, "seq"), (Some("--parallel"), "par")] {
        let mut args = vec!["experiment", "3", "--rings", "2,3", "--max-iter", "30", "--out", out];
        args.extend(flag);
        assert_eq!(code(&meshshape(&args, tmp.path())), 0);
    }
    let seq = summary(&tmp.path().join("seq/experiment3"));
    let par = summary(&tmp.path().join("par/experiment3"));
    assert_eq!(seq.len(), 1 + 4);
    let drop_time =
        |rows: &[Vec<String>]| -> Vec<Vec<String>> { rows.iter().map(|r| r[..r.len() - 1].to_vec()).collect() };
    assert_eq!(drop_time(&seq), drop_time(&par));
    for r in &seq[1..] {
        assert_eq!(r[col(&seq, "status")], "MaxIter");
        assert_eq!(r[col(&seq, "iterations")], "30");
    }
}

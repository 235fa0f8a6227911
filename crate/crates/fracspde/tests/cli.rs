//! End-to-end checks of the command-line surface: subcommand output
//! formats, config files, seed overrides, persisted run artifacts, and
//! check-dependent exit codes.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracspde"))
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().expect("spawn fracspde");
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf8 stdout")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fracspde-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const FAST_CFG: &str = "\
domain = interval:3.141592653589793
alpha = 2.0
beta = 0.75
lambda = 0.5
sigma = linear:1.0
noise.kind = white
u0 = phi1
T = 4.0
steps = 32
modes = 8
grid = 24
paths = 16
seed = 5
";

#[test]
fn ml_subcommand_emits_value_and_envelope() {
    let out = run_ok(&["ml", "--beta", "0.5", "--x", "1.0", "--bounds"]);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "beta,x,value,lower,upper");
    let fields: Vec<f64> =
        lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(fields.len(), 5);
    assert!((fields[2] - 0.4275835762).abs() < 1e-9);
    assert!(fields[3] <= fields[2] && fields[2] <= fields[4]);

    let out = run_ok(&["ml", "--beta", "0.5", "--x", "1.0"]);
    assert_eq!(out.lines().next().unwrap(), "beta,x,value");
}

#[test]
fn spectra_subcommand_lists_eigenvalues() {
    let out = run_ok(&["spectra", "--domain", "interval:1.0", "--alpha", "1.5", "--modes", "20"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "n,mu_n");
    assert_eq!(lines.len(), 21);
    let mu1: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((mu1 - std::f64::consts::PI.powf(1.5) * 1.0).abs() < 1e-9 * mu1 + 1e-9);
}

#[test]
fn kernel_eval_and_lambda_subcommands() {
    let out = run_ok(&[
        "kernel", "--beta", "1.0", "--t", "1.0", "--x", "1.5707963267948966", "--y",
        "1.5707963267948966", "--modes", "10",
    ]);
    let value: f64 = out.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((value - 0.23425).abs() < 5e-5);

    let out = run_ok(&["kernel", "lambda", "--beta", "1.0", "--mu1", "1.0", "--theta-grid", "1.0"]);
    let value: f64 = out.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((value - 1.0 / 3.0).abs() < 1e-7);
}

#[test]
fn noise_q_prints_symmetric_matrix() {
    let out = run_ok(&[
        "noise", "q", "--kernel", "riesz:0.5", "--modes", "4", "--domain", "interval:1.0",
        "--cells", "128",
    ]);
    let rows: Vec<Vec<f64>> = out
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    for r in 0..4 {
        assert_eq!(rows[r].len(), 4);
        for c in 0..4 {
            assert!((rows[r][c] - rows[c][r]).abs() < 1e-12);
        }
        assert!(rows[r][r] > 0.0);
    }
}

#[test]
fn moments_subcommand_persists_artifacts() {
    let dir = temp_dir("moments");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, FAST_CFG).unwrap();
    let out_dir = dir.join("out");
    let stdout = run_ok(&[
        "moments",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(stdout.lines().next().unwrap(), "t,sup_moment,stderr");
    assert_eq!(stdout.lines().count(), 34); // header + 33 grid times
    for name in ["config.echo", "trajectory.csv", "summary.json", "plot.gp"] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
    let summary = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();
    assert!(summary.contains("\"classification\""));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulate_seed_overrides_and_determinism() {
    let dir = temp_dir("simulate");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, FAST_CFG).unwrap();
    let args = ["simulate", "--config", cfg.to_str().unwrap()];

    let a = run_ok(&args);
    let b = run_ok(&args);
    assert_eq!(a, b, "same config and seed must be byte-identical");

    let flagged = run_ok(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "123"]);
    assert_ne!(a, flagged);

    // FRACSPDE_SEED overrides the file seed and matches the explicit flag.
    let out = bin()
        .args(args)
        .env("FRACSPDE_SEED", "123")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), flagged);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn phase_and_continuity_exit_codes() {
    let dir = temp_dir("phase");
    let cfg_path = dir.join("base.cfg");
    std::fs::write(
        &cfg_path,
        "domain = interval:3.141592653589793\nalpha = 2.0\nbeta = 0.75\nlambda = 1.0\n\
         sigma = linear:20.0\nT = 20.0\nsteps = 128\nmodes = 12\ngrid = 32\npaths = 1\nseed = 1\n",
    )
    .unwrap();
    let out_dir = dir.join("sweep");
    let out = bin()
        .args([
            "phase",
            "--config",
            cfg_path.to_str().unwrap(),
            "--beta",
            "0.75",
            "--lambda",
            "0.05,1",
            "--route",
            "volterra",
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("beta,lambda,classification,rate,r2"));
    assert!(stdout.contains("bounded"));
    assert!(stdout.contains("growth"));
    assert!(stdout.contains("threshold interval"));
    assert!(out_dir.join("diagram.csv").exists());

    // Continuity run on a small budget; exit code reflects the verdict.
    let cont_cfg = dir.join("cont.cfg");
    std::fs::write(
        &cont_cfg,
        "domain = interval:3.141592653589793\nalpha = 2.0\nbeta = 0.75\nlambda = 0.5\n\
         sigma = linear:1.0\nT = 3.0\nsteps = 32\nmodes = 8\ngrid = 24\npaths = 96\nseed = 2\n",
    )
    .unwrap();
    let out = bin()
        .args([
            "continuity",
            "--config",
            cont_cfg.to_str().unwrap(),
            "--beta",
            "0.75",
            "--gamma",
            "0.87,0.81",
            "--p",
            "2",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("gamma,t,metric,stderr"));
    assert!(stdout.contains("monotone along gamma -> beta: yes"));

    // An invalid config exits nonzero with a diagnostic.
    let out = bin()
        .args(["moments", "--config", dir.join("missing.cfg").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    std::fs::remove_dir_all(&dir).ok();
}

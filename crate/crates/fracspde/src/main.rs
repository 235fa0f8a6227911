//! Thin command-line front end; all computation lives in the library.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use fracspde::config::{
    self, config_echo, load_config, parse_cov_kernel, parse_domain, parse_grid, parse_list,
};
use fracspde::kernel::{lambda_theta, HeatKernel};
use fracspde::lab::{
    self, classify_growth, continuity_csv, continuity_experiment, diagram_csv,
    no_exponential_decay_check, phase_sweep, trajectory_csv, Route,
};
use fracspde::mlf::{mittag_leffler_bounds, mittag_leffler_neg, FractionalOrder};
use fracspde::noise::mode_covariance;
use fracspde::solver::{second_moment_volterra, simulate_paths, SimulationConfig};
use fracspde::spectra::SpectralBasis;
use fracspde::Result;

#[derive(Parser)]
#[command(name = "fracspde", version, about = "Space-time fractional stochastic heat equation lab")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate E_beta(-x), optionally with its two-sided envelope.
    Ml {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        x: f64,
        /// Also print the envelope columns.
        #[arg(long)]
        bounds: bool,
    },
    /// Print the first eigenvalues of the spectral fractional Laplacian.
    Spectra {
        /// interval:L or box:L1,L2
        #[arg(long)]
        domain: String,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 20)]
        modes: usize,
    },
    /// Heat kernel tools: pointwise evaluation, or `lambda` for the
    /// resolvent integral.
    Kernel(KernelCmd),
    /// Noise tools: `q` prints the colored mode covariance as CSV.
    Noise(NoiseCmd),
    /// Monte Carlo moment trajectory from a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Persist config echo, trajectory, summary and plot script here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Deterministic Volterra moment trajectory (linear sigma).
    Moments {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classified (beta, lambda) sweep; exits nonzero if any cell fails the
    /// no-exponential-decay check.
    Phase {
        #[arg(long)]
        config: PathBuf,
        /// start:stop:step or comma list.
        #[arg(long)]
        beta: String,
        #[arg(long)]
        lambda: String,
        #[arg(long, default_value = "volterra")]
        route: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coupled continuity in the fractional order; exits nonzero unless the
    /// horizon metric decreases along gamma -> beta.
    Continuity {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        beta: f64,
        /// Comma list of comparison orders.
        #[arg(long)]
        gamma: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
}

#[derive(Args)]
struct KernelCmd {
    #[command(subcommand)]
    sub: Option<KernelSub>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    /// Point coordinates, comma separated for boxes.
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    y: Option<String>,
    #[arg(long, default_value = "interval:3.141592653589793")]
    domain: String,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 32)]
    modes: usize,
}

#[derive(Subcommand)]
enum KernelSub {
    /// Lambda(theta) = int e^(-theta t) E_beta(-mu1 t^beta)^2 dt.
    Lambda {
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        mu1: f64,
        /// Comma list of theta values.
        #[arg(long)]
        theta_grid: String,
    },
}

#[derive(Args)]
struct NoiseCmd {
    #[command(subcommand)]
    sub: NoiseSub,
}

#[derive(Subcommand)]
enum NoiseSub {
    /// Mode covariance matrix of a colored kernel.
    Q {
        /// riesz:G, ornstein_uhlenbeck:D, exponential, poisson, cauchy.
        #[arg(long)]
        kernel: String,
        #[arg(long, default_value_t = 16)]
        modes: usize,
        #[arg(long, default_value = "interval:1.0")]
        domain: String,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 256)]
        cells: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(all_checks_passed) => {
            if all_checks_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn order(beta: f64) -> Result<FractionalOrder> {
    if beta == 1.0 {
        Ok(FractionalOrder::classical())
    } else {
        FractionalOrder::new(beta)
    }
}

fn load_with_overrides(
    path: &PathBuf,
    paths: Option<usize>,
    seed: Option<u64>,
) -> Result<SimulationConfig> {
    let mut cfg = load_config(path)?;
    if let Some(p) = paths {
        cfg.paths = p;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Ml { beta, x, bounds } => {
            let b = order(beta)?;
            let value = mittag_leffler_neg(b, x)?;
            if bounds {
                let env = mittag_leffler_bounds(b, x)?;
                println!("beta,x,value,lower,upper");
                println!("{beta},{x},{value},{},{}", env.lower, env.upper);
            } else {
                println!("beta,x,value");
                println!("{beta},{x},{value}");
            }
            Ok(true)
        }
        Cmd::Spectra { domain, alpha, modes } => {
            let basis = SpectralBasis::build(parse_domain(&domain, alpha)?, modes)?;
            println!("n,mu_n");
            for n in 0..basis.len() {
                println!("{},{}", n + 1, basis.eigenvalue(n));
            }
            Ok(true)
        }
        Cmd::Kernel(kernel_cmd) => run_kernel(kernel_cmd),
        Cmd::Noise(NoiseCmd { sub }) => match sub {
            NoiseSub::Q { kernel, modes, domain, alpha, cells } => {
                let kernel = parse_cov_kernel(&kernel)?;
                let basis = SpectralBasis::build(parse_domain(&domain, alpha)?, modes)?;
                let q = mode_covariance(&kernel, &basis, cells)?;
                for row in 0..modes {
                    let line: Vec<String> =
                        (0..modes).map(|c| q[row * modes + c].to_string()).collect();
                    println!("{}", line.join(","));
                }
                Ok(true)
            }
        },
        Cmd::Simulate { config, paths, seed, out } => {
            let cfg = load_with_overrides(&config, paths, seed)?;
            let traj = simulate_paths(&cfg)?;
            print!("{}", trajectory_csv(&traj));
            if let Some(dir) = out {
                let report = classify_growth(&traj)?;
                lab::persist_run(&dir, &config_echo(&cfg), &traj, &report)?;
            }
            Ok(true)
        }
        Cmd::Moments { config, seed, out } => {
            let cfg = load_with_overrides(&config, None, seed)?;
            let traj = second_moment_volterra(&cfg)?;
            print!("{}", trajectory_csv(&traj));
            if let Some(dir) = out {
                let report = classify_growth(&traj)?;
                lab::persist_run(&dir, &config_echo(&cfg), &traj, &report)?;
            }
            Ok(true)
        }
        Cmd::Phase { config, beta, lambda, route, out } => {
            let cfg = load_config(&config)?;
            let betas = parse_grid(&beta)?;
            let lambdas = parse_grid(&lambda)?;
            let route = match route.as_str() {
                "volterra" => Route::Volterra,
                "monte_carlo" | "monte-carlo" => Route::MonteCarlo,
                other => {
                    return Err(fracspde::Error::InvalidConfig(format!(
                        "unknown route `{other}`"
                    )));
                }
            };
            let diagram = phase_sweep(&cfg, &betas, &lambdas, route)?;
            let csv = diagram_csv(&diagram);
            print!("{csv}");
            for (beta, interval) in &diagram.thresholds {
                match interval {
                    Some((lo, hi)) => println!("# beta {beta}: threshold interval [{lo}, {hi}]"),
                    None => println!("# beta {beta}: no threshold interval resolved"),
                }
            }

            // The requested check: no cell may decay exponentially.
            let mut all_pass = true;
            for &b in &betas {
                let mut base0 = cfg.clone();
                base0.beta = order(b)?;
                base0.lambda = 0.0;
                let baseline = second_moment_volterra(&base0)?;
                for &l in &lambdas {
                    let mut cell_cfg = cfg.clone();
                    cell_cfg.beta = order(b)?;
                    cell_cfg.lambda = l;
                    let traj = match route {
                        Route::Volterra => second_moment_volterra(&cell_cfg)?,
                        Route::MonteCarlo => simulate_paths(&cell_cfg)?,
                    };
                    let verdict = no_exponential_decay_check(&traj, &baseline, cell_cfg.beta)?;
                    if !verdict.pass {
                        println!("# no-decay FAILED at beta {b}, lambda {l}");
                        all_pass = false;
                    }
                }
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("diagram.csv"), &csv)?;
                std::fs::write(dir.join("config.echo"), config_echo(&cfg))?;
            }
            Ok(all_pass)
        }
        Cmd::Continuity { config, beta, gamma, p } => {
            let cfg = load_config(&config)?;
            let beta = FractionalOrder::new(beta)?;
            let gammas = parse_list(&gamma)?;
            let table = continuity_experiment(&cfg, beta, &gammas, p)?;
            print!("{}", continuity_csv(&table));
            println!(
                "# horizon metric monotone along gamma -> beta: {}",
                if table.monotone_at_horizon { "yes" } else { "no" }
            );
            Ok(table.monotone_at_horizon)
        }
    }
}

fn run_kernel(cmd: KernelCmd) -> Result<bool> {
    if let Some(KernelSub::Lambda { beta, mu1, theta_grid }) = cmd.sub {
        let b = order(beta)?;
        println!("theta,lambda_theta");
        for theta in parse_list(&theta_grid)? {
            println!("{theta},{}", lambda_theta(b, mu1, theta)?);
        }
        return Ok(true);
    }
    let (beta, t) = match (cmd.beta, cmd.t) {
        (Some(b), Some(t)) => (b, t),
        _ => {
            return Err(fracspde::Error::InvalidConfig(
                "kernel evaluation needs --beta, --t, --x and --y".into(),
            ));
        }
    };
    let x = config::parse_list(
        &cmd.x.ok_or_else(|| fracspde::Error::InvalidConfig("missing --x".into()))?,
    )?;
    let y = config::parse_list(
        &cmd.y.ok_or_else(|| fracspde::Error::InvalidConfig("missing --y".into()))?,
    )?;
    let basis = Arc::new(SpectralBasis::build(parse_domain(&cmd.domain, cmd.alpha)?, cmd.modes)?);
    let kernel = HeatKernel::new(basis, order(beta)?);
    println!("beta,t,value");
    println!("{beta},{t},{}", kernel.eval(t, &x, &y)?);
    Ok(true)
}

//! The growth/decay dichotomy in (beta, lambda): for beta <= 1/2 the second
//! moment grows at every noise level, while for beta > 1/2 small lambda
//! stays bounded and large lambda grows. Persists one cell's trajectory.
use fracspde::config::config_echo;
use fracspde::lab::{classify_growth, diagram_csv, persist_run, phase_sweep, Route};
use fracspde::mlf::FractionalOrder;
use fracspde::solver::{
    second_moment_volterra, InitialProfile, NoiseSpec, SigmaSpec, SimulationConfig,
};
use fracspde::spectra::DomainSpec;

fn main() {
    let base = SimulationConfig {
        domain: DomainSpec::interval(std::f64::consts::PI, 2.0).unwrap(),
        beta: FractionalOrder::new(0.5).unwrap(),
        lambda: 1.0,
        sigma: SigmaSpec::linear(20.0),
        noise: NoiseSpec::White,
        u0: InitialProfile::FirstEigenfunction,
        horizon: 20.0,
        steps: 256,
        modes: 24,
        grid_points: 64,
        paths: 1,
        seed: 3,
    };
    let betas = [0.3, 0.45, 0.6, 0.75, 0.9];
    let lambdas = [0.05, 0.5, 1.0, 2.0, 5.0];
    let diagram = phase_sweep(&base, &betas, &lambdas, Route::Volterra).unwrap();
    print!("{}", diagram_csv(&diagram));
    for (beta, interval) in &diagram.thresholds {
        match interval {
            Some((lo, hi)) => println!("# beta {beta}: threshold interval [{lo}, {hi}]"),
            None => println!("# beta {beta}: no threshold interval resolved"),
        }
    }

    // Persist the bounded showcase cell.
    let mut cell = base.clone();
    cell.beta = FractionalOrder::new(0.75).unwrap();
    cell.lambda = 0.05;
    let traj = second_moment_volterra(&cell).unwrap();
    let report = classify_growth(&traj).unwrap();
    let dir = std::env::temp_dir().join("fracspde-phase-cell");
    persist_run(&dir, &config_echo(&cell), &traj, &report).unwrap();
    println!("# bounded cell persisted to {}", dir.display());
}

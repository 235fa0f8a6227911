//! Monte Carlo sampling of the mild solution against the closed Volterra
//! second-moment equation (linear sigma): the two routes must agree within
//! Monte Carlo error.
use fracspde::mlf::FractionalOrder;
use fracspde::solver::{
    second_moment_volterra, simulate_paths, InitialProfile, NoiseSpec, SigmaSpec, SimulationConfig,
};
use fracspde::spectra::DomainSpec;

fn main() {
    let cfg = SimulationConfig {
        domain: DomainSpec::interval(std::f64::consts::PI, 2.0).unwrap(),
        beta: FractionalOrder::new(0.75).unwrap(),
        lambda: 0.5,
        sigma: SigmaSpec::linear(1.0),
        noise: NoiseSpec::White,
        u0: InitialProfile::FirstEigenfunction,
        horizon: 10.0,
        steps: 128,
        modes: 16,
        grid_points: 48,
        paths: 2000,
        seed: 2024,
    };
    let volterra = second_moment_volterra(&cfg).unwrap();
    let mc = simulate_paths(&cfg).unwrap();
    let se = mc.stderr.as_ref().unwrap();

    println!("t,volterra,monte_carlo,stderr,deviation_in_se");
    let mut within = 0;
    for j in 0..mc.len() {
        let dev = if se[j] > 0.0 {
            (mc.sup_moment[j] - volterra.sup_moment[j]).abs() / se[j]
        } else {
            0.0
        };
        if dev <= 3.0 {
            within += 1;
        }
        if j % 8 == 0 {
            println!(
                "{},{:.6e},{:.6e},{:.2e},{dev:.2}",
                mc.times[j], volterra.sup_moment[j], mc.sup_moment[j], se[j]
            );
        }
    }
    println!("# {within}/{} grid times within 3 standard errors", mc.len());
}

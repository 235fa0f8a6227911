//! The fractional heat kernel: pointwise decay in time, deterministic
//! evolution of an initial bump, and continuity of the kernel in the order.
use std::sync::Arc;

use fracspde::kernel::{kernel_beta_continuity, HeatKernel, InitialCondition};
use fracspde::mlf::FractionalOrder;
use fracspde::spectra::{trapezoid_grid, DomainSpec, SpectralBasis};

fn main() {
    let domain = DomainSpec::interval(std::f64::consts::PI, 2.0).unwrap();
    let basis = Arc::new(SpectralBasis::build(domain, 32).unwrap());
    let beta = FractionalOrder::new(0.7).unwrap();
    let kernel = HeatKernel::new(basis.clone(), beta);

    let mid = [std::f64::consts::FRAC_PI_2];
    println!("t,G(t, pi/2, pi/2)");
    for &t in &[0.05, 0.1, 0.5, 1.0, 5.0, 20.0] {
        println!("{t},{}", kernel.eval(t, &mid, &mid).unwrap());
    }

    let grid = trapezoid_grid(basis.domain(), 128);
    let u0 = InitialCondition::bump(&basis, grid.clone()).unwrap();
    println!("t,mass,sup");
    for &t in &[0.0, 0.1, 1.0, 5.0, 20.0] {
        let v = kernel.evolve(&u0, t).unwrap();
        let mass: f64 = grid.weights.iter().zip(&v).map(|(w, x)| w * x).sum();
        let sup = v.iter().copied().fold(f64::MIN, f64::max);
        println!("{t},{mass:.8},{sup:.8}");
    }

    println!("gamma,sup_xy |G_gamma - G_beta| at t=1");
    let coarse = trapezoid_grid(basis.domain(), 48);
    for dg in [0.1, 0.05, 0.025] {
        let other = HeatKernel::new(basis.clone(), FractionalOrder::new(0.7 + dg).unwrap());
        let sup = kernel_beta_continuity(&kernel, &other, 1.0, &coarse).unwrap();
        println!("{},{sup:.8}", 0.7 + dg);
    }
}

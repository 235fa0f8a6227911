//! Lambda(theta) growth as theta -> 0 across the fractional order.
use fracspde::kernel::lambda_theta;
use fracspde::mlf::FractionalOrder;

fn main() {
    println!("beta,lambda_1e-6,lambda_1e-2,ratio");
    for b in [0.3, 0.4, 0.5, 0.6, 0.75, 0.9] {
        let beta = FractionalOrder::new(b).unwrap();
        let lo = lambda_theta(beta, 1.0, 1e-6).unwrap();
        let hi = lambda_theta(beta, 1.0, 1e-2).unwrap();
        println!("{b},{lo:.6},{hi:.6},{:.4}", lo / hi);
    }
}

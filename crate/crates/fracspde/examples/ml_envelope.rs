//! Mittag-Leffler values on the negative axis with their certified
//! two-sided envelope 1/(1 + Gamma(1-b)x) <= E_b(-x) <= 1/(1 + x/Gamma(1+b)).
use fracspde::mlf::{mittag_leffler_bounds, mittag_leffler_neg, FractionalOrder};

fn main() {
    println!("beta,x,value,lower,upper");
    for b in [0.25, 0.5, 0.75] {
        let beta = FractionalOrder::new(b).unwrap();
        for exp in -3..=3 {
            let x = 10f64.powi(exp);
            let v = mittag_leffler_neg(beta, x).unwrap();
            let env = mittag_leffler_bounds(beta, x).unwrap();
            assert!(env.lower <= v && v <= env.upper);
            println!("{b},{x},{v},{},{}", env.lower, env.upper);
        }
    }
    // Classical limit is the plain exponential.
    let e = mittag_leffler_neg(FractionalOrder::classical(), 1.0).unwrap();
    println!("# E_1(-1) = {e} (exp(-1) = {})", (-1f64).exp());
}

//! The beta = 1/2 inverse-subordinator density in closed form: it must be a
//! probability density whose Laplace transform is E_(1/2)(-lambda sqrt(t)).
use fracspde::mlf::{
    inverse_subordinator_density_half, inverse_subordinator_laplace_half,
    inverse_subordinator_mass_half, mittag_leffler_neg, FractionalOrder,
};

fn main() {
    let half = FractionalOrder::new(0.5).unwrap();
    println!("t,mass");
    for &t in &[0.5, 1.0, 2.0] {
        println!("{t},{:.10}", inverse_subordinator_mass_half(t).unwrap());
    }
    println!("t,lambda,laplace_quadrature,mittag_leffler");
    for &t in &[0.5, 1.0, 2.0] {
        for &lam in &[0.5, 1.0, 2.0] {
            let lhs = inverse_subordinator_laplace_half(t, lam).unwrap();
            let rhs = mittag_leffler_neg(half, lam * t.sqrt()).unwrap();
            println!("{t},{lam},{lhs:.10},{rhs:.10}");
        }
    }
    println!("# density sample f_1(0.5) = {:.10}", inverse_subordinator_density_half(1.0, 0.5).unwrap());
}

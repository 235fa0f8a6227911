//! Dirichlet eigenpairs under the spectral fractional power: eigenvalue
//! growth against the Weyl exponent alpha/d and the quadrature Gram matrix.
use fracspde::spectra::{check_weyl, DomainSpec, SpectralBasis};

fn main() {
    for (label, domain) in [
        ("interval [0,1], alpha=2", DomainSpec::interval(1.0, 2.0).unwrap()),
        ("interval [0,1], alpha=1.5", DomainSpec::interval(1.0, 1.5).unwrap()),
        ("box [0,1]^2, alpha=2", DomainSpec::rect_box(&[1.0, 1.0], 2.0).unwrap()),
    ] {
        let n = if domain.dim() == 1 { 50 } else { 100 };
        let basis = SpectralBasis::build(domain, n).unwrap();
        let weyl = check_weyl(&basis).unwrap();
        let defect = basis.orthonormality_defect(if basis.domain().dim() == 1 { 512 } else { 96 });
        println!(
            "{label}: mu_1 = {:.6}, exponent {:.4} (expected {:.4}), \
             max ratio dev {:.3}, orthonormality defect {:.2e}, sup|phi| = {:.6}",
            basis.eigenvalue(0),
            weyl.exponent,
            weyl.expected,
            weyl.max_ratio_dev,
            defect,
            basis.uniform_bound(),
        );
    }
}

//! The fractional heat kernel on a bounded Dirichlet domain,
//!
//! ```text
//! G(t, x, y) = sum_n E_beta(-mu_n t^beta) phi_n(x) phi_n(y),
//! ```
//!
//! truncated to the basis modes, together with the deterministic evolution
//! it generates, the resolvent-type integral Lambda(theta), and numeric
//! checks of the kernel-in-time integral bounds that drive the moment
//! analysis.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mlf::{self, FractionalOrder};
use crate::quad;
use crate::spectra::{SpatialGrid, SpectralBasis};

/// Truncated fractional heat kernel.
#[derive(Debug, Clone)]
pub struct HeatKernel {
    basis: Arc<SpectralBasis>,
    beta: FractionalOrder,
}

impl HeatKernel {
    pub fn new(basis: Arc<SpectralBasis>, beta: FractionalOrder) -> Self {
        Self { basis, beta }
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        &self.basis
    }

    pub fn beta(&self) -> FractionalOrder {
        self.beta
    }

    /// E_beta(-mu_n t^beta) for every mode; `t` may be zero (all ones).
    pub fn mode_decay(&self, t: f64) -> Result<Vec<f64>> {
        if !(t >= 0.0) {
            return Err(Error::Negative { what: "time", value: t });
        }
        let tb = t.powf(self.beta.value());
        (0..self.basis.len())
            .map(|n| mlf::mittag_leffler_neg(self.beta, self.basis.eigenvalue(n) * tb))
            .collect()
    }

    /// Pointwise kernel value; the expansion does not converge at t = 0, so
    /// strictly positive times are required.
    pub fn eval(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::NonPositive { what: "time", value: t });
        }
        let decay = self.mode_decay(t)?;
        let mut sum = 0.0;
        for (n, e) in decay.iter().enumerate() {
            // phi(x) phi(y) grouped first so swapping x and y is bit-exact.
            sum += e * (self.basis.eval(n, x) * self.basis.eval(n, y));
        }
        Ok(sum)
    }

    /// Deterministic evolution v_t(x) = sum_n E_beta(-mu_n t^beta)
    /// <u0, phi_n> phi_n(x) on the grid of the initial condition. At t = 0
    /// this reproduces the N-mode projection of u0.
    pub fn evolve(&self, u0: &InitialCondition, t: f64) -> Result<Vec<f64>> {
        let decay = self.mode_decay(t)?;
        let p = u0.grid.points.len();
        let n_modes = self.basis.len();
        let mut out = vec![0.0; p];
        for n in 0..n_modes {
            let c = decay[n] * u0.coeffs[n];
            let row = &u0.phi[n * p..(n + 1) * p];
            for (o, phi) in out.iter_mut().zip(row) {
                *o += c * phi;
            }
        }
        Ok(out)
    }
}

/// Non-random initial datum realized on a quadrature grid: bounded,
/// nonnegative, with support of positive measure.
#[derive(Debug, Clone)]
pub struct InitialCondition {
    grid: SpatialGrid,
    values: Vec<f64>,
    coeffs: Vec<f64>,
    phi: Vec<f64>,
}

impl InitialCondition {
    pub fn from_values(basis: &SpectralBasis, grid: SpatialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.points.len() {
            return Err(Error::Mismatch(format!(
                "{} grid points vs {} initial values",
                grid.points.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig(
                "initial condition must be finite and nonnegative".into(),
            ));
        }
        let mass: f64 = grid.weights.iter().zip(&values).map(|(w, v)| w * v).sum();
        if mass <= 0.0 {
            return Err(Error::InvalidConfig(
                "initial condition must have support of positive measure".into(),
            ));
        }
        let phi = basis.table(&grid);
        let p = grid.points.len();
        let coeffs = (0..basis.len())
            .map(|n| {
                grid.weights
                    .iter()
                    .zip(&values)
                    .zip(&phi[n * p..(n + 1) * p])
                    .map(|((w, v), f)| w * v * f)
                    .sum()
            })
            .collect();
        Ok(Self { grid, values, coeffs, phi })
    }

    /// u0 = phi_1, the ground-state eigenfunction (nonnegative on these
    /// domains).
    pub fn first_eigenfunction(basis: &SpectralBasis, grid: SpatialGrid) -> Result<Self> {
        let values = grid.points.iter().map(|p| basis.eval(0, p).max(0.0)).collect();
        Self::from_values(basis, grid, values)
    }

    /// u0 = c on the whole domain.
    pub fn constant(basis: &SpectralBasis, grid: SpatialGrid, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::NonPositive { what: "initial level", value: c });
        }
        let values = vec![c; grid.points.len()];
        Self::from_values(basis, grid, values)
    }

    /// Separable bump prod_i 4 x (L - x) / L^2, peaking at 1.
    pub fn bump(basis: &SpectralBasis, grid: SpatialGrid) -> Result<Self> {
        let lengths = basis.domain().lengths().to_vec();
        let values = grid
            .points
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&lengths)
                    .map(|(&x, &l)| 4.0 * x * (l - x) / (l * l))
                    .product::<f64>()
                    .max(0.0)
            })
            .collect();
        Self::from_values(basis, grid, values)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// <u0, phi_n> under the grid quadrature.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// Lambda(theta) = int_0^inf e^(-theta t) E_beta(-mu1 t^beta)^2 dt by
/// adaptive quadrature: [0, 1] directly, then dyadic panels until the
/// envelope upper bound certifies the remaining tail is negligible.
pub fn lambda_theta(beta: FractionalOrder, mu1: f64, theta: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::NonPositive { what: "theta", value: theta });
    }
    if !(mu1 > 0.0) {
        return Err(Error::NonPositive { what: "mu1", value: mu1 });
    }
    let b = beta.value();
    let f = |t: f64| {
        if t <= 0.0 {
            return 1.0;
        }
        let e = mlf::mittag_leffler_neg(beta, mu1 * t.powf(b)).expect("argument nonnegative");
        (-theta * t).exp() * e * e
    };

    let mut total = quad::adaptive(&f, 0.0, 1.0, 1e-9, 1e-14);
    // Tail bound via E_beta(-x) <= 1/(1 + x / Gamma(1+beta)) <= Gamma(1+beta)/x.
    let g1b = mlf::gamma_pos(1.0 + b);
    let mut lo = 1.0f64;
    loop {
        let hi = 2.0 * lo;
        total += quad::adaptive(&f, lo, hi, 1e-9, 1e-16);
        let tail_bound = (g1b / (mu1 * hi.powf(b))).powi(2).min(1.0) * (-theta * hi).exp() / theta;
        if tail_bound < 1e-9 * total.abs().max(1e-30) {
            break;
        }
        lo = hi;
    }
    Ok(total)
}

/// Per-mode report of I_n = int_0^t E_beta(-mu_n (t-s)^beta)^p ds against
/// the saturation scale mu_n^(-1/beta).
#[derive(Debug, Clone)]
pub struct KernelBoundReport {
    /// (mu_n, I_n, I_n * mu_n^(1/beta)) per requested mode.
    pub per_mode: Vec<(f64, f64, f64)>,
    pub max_ratio: f64,
}

/// Computes the kernel-in-time integrals by quadrature. Requires
/// beta > 1/p, the regime in which the integrals stay bounded uniformly in
/// t; the report's `max_ratio` should stabilize across t.
pub fn check_kernel_time_bound(
    beta: FractionalOrder,
    p: f64,
    mus: &[f64],
    t: f64,
) -> Result<KernelBoundReport> {
    if p < 2.0 {
        return Err(Error::InvalidConfig(format!("exponent p = {p} must be at least 2")));
    }
    if beta.value() <= 1.0 / p {
        return Err(Error::InvalidConfig(format!(
            "beta = {} must exceed 1/p = {}",
            beta.value(),
            1.0 / p
        )));
    }
    if !(t > 0.0) {
        return Err(Error::NonPositive { what: "time", value: t });
    }
    let b = beta.value();
    let mut per_mode = Vec::with_capacity(mus.len());
    let mut max_ratio: f64 = 0.0;
    for &mu in mus {
        if !(mu > 0.0) {
            return Err(Error::NonPositive { what: "eigenvalue", value: mu });
        }
        // After u = t - s the integrand is E_beta(-mu u^beta)^p on [0, t];
        // it transitions from 1 to the power tail at u ~ mu^(-1/beta), so
        // integrate on dyadic panels anchored there.
        let f = |u: f64| {
            let e = mlf::mittag_leffler_neg(beta, mu * u.max(0.0).powf(b)).expect("nonnegative");
            e.powf(p)
        };
        let scale = mu.powf(-1.0 / b);
        let mut breaks = vec![0.0, (1e-3 * scale).min(t)];
        let mut s = 1e-3 * scale;
        while s < t {
            s *= 2.0;
            breaks.push(s.min(t));
        }
        breaks.dedup();
        let integral = quad::adaptive_segments(&f, &breaks, 1e-10, 1e-16);
        let ratio = integral * mu.powf(1.0 / b);
        max_ratio = max_ratio.max(ratio);
        per_mode.push((mu, integral, ratio));
    }
    Ok(KernelBoundReport { per_mode, max_ratio })
}

/// Sup over grid pairs of |G_gamma - G_beta|(t, x, y); both kernels must be
/// built on the same basis.
pub fn kernel_beta_continuity(
    a: &HeatKernel,
    b: &HeatKernel,
    t: f64,
    grid: &SpatialGrid,
) -> Result<f64> {
    if !a.basis.same_basis(&b.basis) {
        return Err(Error::Mismatch("kernels built on different bases".into()));
    }
    if !(t > 0.0) {
        return Err(Error::NonPositive { what: "time", value: t });
    }
    let da = a.mode_decay(t)?;
    let db = b.mode_decay(t)?;
    let diff: Vec<f64> = da.iter().zip(&db).map(|(x, y)| x - y).collect();

    let p = grid.points.len();
    let phi = a.basis.table(grid);
    let mut sup: f64 = 0.0;
    for i in 0..p {
        for j in i..p {
            let mut s = 0.0;
            for (n, d) in diff.iter().enumerate() {
                s += d * phi[n * p + i] * phi[n * p + j];
            }
            sup = sup.max(s.abs());
        }
    }
    Ok(sup)
}

/// The envelope 2 C(B)^2 max(1, 1/t) sum_n n^(-alpha/d) truncated to the
/// basis modes; dominates any cross-order kernel difference at time t.
pub fn beta_continuity_envelope(basis: &SpectralBasis, t: f64) -> f64 {
    let exponent = basis.domain().alpha() / basis.domain().dim() as f64;
    let series: f64 = (1..=basis.len()).map(|n| (n as f64).powf(-exponent)).sum();
    2.0 * basis.uniform_bound().powi(2) * 1.0f64.max(1.0 / t) * series
}

//! Spatial noise structure: space-time white noise, whose mode covariance is
//! the identity by orthonormality, and spatially colored noise
//! Cov(F(t,x), F(s,y)) = delta(t-s) f(x,y) with covariance kernel f drawn
//! from the shipped family (Riesz, exponential-type, Ornstein-Uhlenbeck,
//! Poisson, Cauchy). Colored noise is reduced to mode coordinates
//!
//! ```text
//! Q[n,k] = int int phi_n(y) f(y,z) phi_k(z) dy dz
//! ```
//!
//! and factored once; increments are then `factor * iid_gaussians * sqrt(dt)`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::spectra::{midpoint_grid, DomainSpec, SpectralBasis};

/// Spatial covariance kernels, all strictly positive on bounded domains.
#[derive(Debug, Clone, PartialEq)]
pub enum CovKernel {
    /// f(x,y) = |x-y|^(-gamma); singular on the diagonal.
    Riesz { gamma: f64 },
    /// f(x,y) = exp(-(x . y)); positive but not translation invariant.
    ExponentialType,
    /// f(x,y) = exp(-|x-y|^delta), delta in (0, 2].
    OrnsteinUhlenbeck { delta: f64 },
    /// f(x,y) = (1 / (|x-y|^2 + 1))^((d+1)/2).
    Poisson,
    /// f(x,y) = sum_j 1 / (1 + (x_j - y_j)^2).
    Cauchy,
}

impl CovKernel {
    pub fn riesz(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::NonPositive { what: "riesz exponent", value: gamma });
        }
        Ok(Self::Riesz { gamma })
    }

    pub fn ornstein_uhlenbeck(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 2.0) {
            return Err(Error::InvalidConfig(format!(
                "ornstein-uhlenbeck exponent {delta} outside (0, 2]"
            )));
        }
        Ok(Self::OrnsteinUhlenbeck { delta })
    }

    /// Domain-dependent admissibility: the Riesz exponent must satisfy
    /// gamma < min(d, alpha).
    pub fn validate_for(&self, domain: &DomainSpec) -> Result<()> {
        if let Self::Riesz { gamma } = self {
            let cap = (domain.dim() as f64).min(domain.alpha());
            if *gamma >= cap {
                return Err(Error::InvalidConfig(format!(
                    "riesz exponent {gamma} must be below min(d, alpha) = {cap}"
                )));
            }
        }
        Ok(())
    }

    /// Pointwise kernel value. Riesz is rejected at coincident points; the
    /// quadrature routines never place evaluations there.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        debug_assert_eq!(x.len(), y.len());
        let dist2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        match self {
            Self::Riesz { gamma } => {
                if dist2 == 0.0 {
                    return Err(Error::SingularCovariance);
                }
                Ok(dist2.sqrt().powf(-gamma))
            }
            Self::ExponentialType => {
                let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                Ok((-dot).exp())
            }
            Self::OrnsteinUhlenbeck { delta } => Ok((-dist2.sqrt().powf(*delta)).exp()),
            Self::Poisson => {
                let d = x.len() as f64;
                Ok((1.0 / (dist2 + 1.0)).powf(0.5 * (d + 1.0)))
            }
            Self::Cauchy => {
                Ok(x.iter().zip(y).map(|(a, b)| 1.0 / (1.0 + (a - b) * (a - b))).sum())
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Riesz { gamma } => format!("riesz:{gamma}"),
            Self::ExponentialType => "exponential".into(),
            Self::OrnsteinUhlenbeck { delta } => format!("ornstein_uhlenbeck:{delta}"),
            Self::Poisson => "poisson".into(),
            Self::Cauchy => "cauchy".into(),
        }
    }
}

/// Covariance values on a midpoint grid, as a p x p matrix aligned with the
/// grid's flattened points. Smooth kernels use midpoint values. The
/// diagonally singular Riesz kernel in d = 1 instead uses exact cell-pair
/// averages, the second difference of the antiderivative
/// Phi(r) = r^(2-gamma) / ((1-gamma)(2-gamma)) with Phi'' = r^(-gamma),
/// so the kernel is never sampled on the diagonal and cell sums telescope to
/// the exact mass. In d >= 2 the Riesz diagonal cells are dropped; their
/// relative weight vanishes under refinement.
pub(crate) fn cov_grid_matrix(
    kernel: &CovKernel,
    domain: &DomainSpec,
    cells_per_axis: usize,
) -> Result<(crate::spectra::SpatialGrid, Vec<f64>)> {
    let grid = midpoint_grid(domain, cells_per_axis);
    let p = grid.points.len();
    let mut f = vec![0.0; p * p];

    if let CovKernel::Riesz { gamma } = kernel {
        if domain.dim() == 1 {
            let h = domain.lengths()[0] / cells_per_axis as f64;
            let phi = |r: f64| r.powf(2.0 - gamma) / ((1.0 - gamma) * (2.0 - gamma));
            for i in 0..p {
                for j in i..p {
                    let k = (j - i) as f64;
                    let avg = (phi((k + 1.0) * h) - 2.0 * phi(k * h) + phi((k - 1.0).abs() * h))
                        / (h * h);
                    f[i * p + j] = avg;
                    f[j * p + i] = avg;
                }
            }
            return Ok((grid, f));
        }
    }

    for i in 0..p {
        for j in (i + 1)..p {
            let v = kernel.eval(&grid.points[i], &grid.points[j])?;
            f[i * p + j] = v;
            f[j * p + i] = v;
        }
    }
    for i in 0..p {
        f[i * p + i] = match kernel {
            CovKernel::Riesz { .. } => 0.0,
            other => other.eval(&grid.points[i], &grid.points[i])?,
        };
    }
    Ok((grid, f))
}

/// Mode covariance Q[n,k] of the colored noise under the basis, by midpoint
/// product quadrature (row-major N x N, exactly symmetric).
pub fn mode_covariance(
    kernel: &CovKernel,
    basis: &SpectralBasis,
    cells_per_axis: usize,
) -> Result<Vec<f64>> {
    kernel.validate_for(basis.domain())?;
    let (grid, f) = cov_grid_matrix(kernel, basis.domain(), cells_per_axis)?;
    let p = grid.points.len();
    let n = basis.len();
    let phi = basis.table(&grid);

    // weighted_phi[n][j] = w_j phi_n(x_j)
    let mut wphi = vec![0.0; n * p];
    for k in 0..n {
        for j in 0..p {
            wphi[k * p + j] = grid.weights[j] * phi[k * p + j];
        }
    }
    // t[k][i] = sum_j f[i,j] wphi[k][j]
    let mut t = vec![0.0; n * p];
    for k in 0..n {
        for i in 0..p {
            let mut s = 0.0;
            for j in 0..p {
                s += f[i * p + j] * wphi[k * p + j];
            }
            t[k * p + i] = s;
        }
    }
    // Both triangles are accumulated independently; with symmetric f the
    // result is symmetric to rounding, which the tests assert rather than
    // enforce.
    let mut q = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            let mut s = 0.0;
            for i in 0..p {
                s += wphi[a * p + i] * t[b * p + i];
            }
            q[a * n + b] = s;
        }
    }
    Ok(q)
}

/// Total mass int int f(y, z) dy dz over the domain square.
pub fn covariance_mass(kernel: &CovKernel, domain: &DomainSpec, cells_per_axis: usize) -> Result<f64> {
    let (grid, f) = cov_grid_matrix(kernel, domain, cells_per_axis)?;
    let p = grid.points.len();
    let mut total = 0.0;
    for i in 0..p {
        for j in 0..p {
            total += grid.weights[i] * grid.weights[j] * f[i * p + j];
        }
    }
    Ok(total)
}

/// Infimum of f over sampled (distinct) grid pairs; Assumption-style
/// nondegeneracy requires this to stay positive.
pub fn covariance_infimum(kernel: &CovKernel, domain: &DomainSpec, cells_per_axis: usize) -> Result<f64> {
    let grid = midpoint_grid(domain, cells_per_axis);
    let p = grid.points.len();
    let mut inf = f64::INFINITY;
    for i in 0..p {
        for j in 0..p {
            if i == j {
                continue;
            }
            inf = inf.min(kernel.eval(&grid.points[i], &grid.points[j])?);
        }
    }
    Ok(inf)
}

#[derive(Debug, Clone)]
enum NoiseKind {
    White,
    Colored { kernel: CovKernel, q: Vec<f64>, factor: Vec<f64>, k_f: f64, jitter: f64 },
}

/// Spatial noise reduced to mode coordinates: identity covariance for white
/// noise, a fixed Cholesky-type factor for colored noise.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    kind: NoiseKind,
    n_modes: usize,
}

impl NoiseModel {
    pub fn white(n_modes: usize) -> Self {
        Self { kind: NoiseKind::White, n_modes }
    }

    /// Builds the mode covariance on a midpoint grid with `cells_per_axis`
    /// cells, factorizes it (escalating diagonal jitter from 1e-12 tr/N to
    /// 1e-8 tr/N when quadrature noise leaves tiny negative eigenvalues),
    /// and records the sampled infimum K_f.
    pub fn colored(kernel: CovKernel, basis: &SpectralBasis, cells_per_axis: usize) -> Result<Self> {
        let q = mode_covariance(&kernel, basis, cells_per_axis)?;
        let n = basis.len();
        let k_f = covariance_infimum(&kernel, basis.domain(), cells_per_axis)?;
        let (factor, jitter) = factorize_with_jitter(&q, n)?;
        Ok(Self { kind: NoiseKind::Colored { kernel, q, factor, k_f, jitter }, n_modes: n })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn is_white(&self) -> bool {
        matches!(self.kind, NoiseKind::White)
    }

    pub fn kernel(&self) -> Option<&CovKernel> {
        match &self.kind {
            NoiseKind::White => None,
            NoiseKind::Colored { kernel, .. } => Some(kernel),
        }
    }

    /// Mode covariance (colored only).
    pub fn q(&self) -> Option<&[f64]> {
        match &self.kind {
            NoiseKind::White => None,
            NoiseKind::Colored { q, .. } => Some(q),
        }
    }

    /// Lower-triangular factor with factor * factor^T = Q + jitter I.
    pub fn factor(&self) -> Option<&[f64]> {
        match &self.kind {
            NoiseKind::White => None,
            NoiseKind::Colored { factor, .. } => Some(factor),
        }
    }

    pub fn jitter(&self) -> f64 {
        match &self.kind {
            NoiseKind::White => 0.0,
            NoiseKind::Colored { jitter, .. } => *jitter,
        }
    }

    /// Sampled infimum of the covariance kernel (colored only).
    pub fn k_f(&self) -> Option<f64> {
        match &self.kind {
            NoiseKind::White => None,
            NoiseKind::Colored { k_f, .. } => Some(*k_f),
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            NoiseKind::White => "white".into(),
            NoiseKind::Colored { kernel, .. } => kernel.label(),
        }
    }

    /// Draws one vector of mode increments over a step of width `dt` into
    /// `out`; `scratch` must match `out` in length. White: N independent
    /// N(0, dt). Colored: factor * z * sqrt(dt), covariance Q dt.
    pub fn sample_increments<R: Rng + ?Sized>(
        &self,
        dt: f64,
        rng: &mut R,
        out: &mut [f64],
        scratch: &mut [f64],
    ) {
        debug_assert!(dt > 0.0);
        debug_assert_eq!(out.len(), self.n_modes);
        let sqrt_dt = dt.sqrt();
        match &self.kind {
            NoiseKind::White => {
                for o in out.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *o = z * sqrt_dt;
                }
            }
            NoiseKind::Colored { factor, .. } => {
                debug_assert_eq!(scratch.len(), self.n_modes);
                for s in scratch.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *s = z;
                }
                let n = self.n_modes;
                for i in 0..n {
                    let mut acc = 0.0;
                    for j in 0..=i {
                        acc += factor[i * n + j] * scratch[j];
                    }
                    out[i] = acc * sqrt_dt;
                }
            }
        }
    }
}

impl NoiseModel {
    /// Test-only constructor from an explicit mode covariance.
    #[cfg(test)]
    fn from_q(q: Vec<f64>, n: usize) -> Result<Self> {
        let (factor, jitter) = factorize_with_jitter(&q, n)?;
        Ok(Self {
            kind: NoiseKind::Colored { kernel: CovKernel::Cauchy, q, factor, k_f: 1.0, jitter },
            n_modes: n,
        })
    }
}

/// Cholesky with escalating diagonal jitter, schedule
/// 1e-12 tr/N * 10^k for k = 0..=4.
fn factorize_with_jitter(q: &[f64], n: usize) -> Result<(Vec<f64>, f64)> {
    let trace: f64 = (0..n).map(|i| q[i * n + i]).sum();
    let base = 1e-12 * trace.max(f64::MIN_POSITIVE) / n as f64;
    let mut jitter = base;
    while jitter <= 1e-8 * trace / n as f64 + f64::MIN_POSITIVE {
        let mut a = q.to_vec();
        for i in 0..n {
            a[i * n + i] += jitter;
        }
        if cholesky_in_place(&mut a, n).is_ok() {
            return Ok((a, jitter));
        }
        jitter *= 10.0;
    }
    Err(Error::FactorizationFailed)
}

/// In-place lower Cholesky of a row-major symmetric matrix; the upper
/// triangle is zeroed on success.
fn cholesky_in_place(a: &mut [f64], n: usize) -> std::result::Result<(), usize> {
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(i);
                }
                a[i * n + i] = s.sqrt();
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
        for j in (i + 1)..n {
            a[i * n + j] = 0.0;
        }
    }
    Ok(())
}

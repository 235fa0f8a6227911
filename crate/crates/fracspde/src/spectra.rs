//! Dirichlet Laplacian eigenpairs on intervals and rectangular boxes, raised
//! to the fractional power alpha/2.
//!
//! On [0, L] the pairs are mu_n = ((n pi / L)^2)^(alpha/2) with
//! phi_n(x) = sqrt(2/L) sin(n pi x / L); boxes tensor these per axis and are
//! enumerated by ascending Laplacian eigenvalue with lexicographic
//! tie-breaking. The fractional Laplacian here is the *spectral* power of
//! the Dirichlet Laplacian, not the killed stable-process generator; the two
//! operators differ for alpha < 2 but share the eigenvalue growth
//! mu_n ~ n^(alpha/d), and only the spectral realization has closed-form
//! eigenpairs on these domains.

use crate::error::{Error, Result};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    Interval,
    Box,
}

/// A rectangular Dirichlet domain together with the fractional power alpha.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    kind: DomainKind,
    lengths: Vec<f64>,
    alpha: f64,
}

impl DomainSpec {
    pub fn interval(length: f64, alpha: f64) -> Result<Self> {
        Self::validated(DomainKind::Interval, vec![length], alpha)
    }

    pub fn rect_box(lengths: &[f64], alpha: f64) -> Result<Self> {
        Self::validated(DomainKind::Box, lengths.to_vec(), alpha)
    }

    fn validated(kind: DomainKind, lengths: Vec<f64>, alpha: f64) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::InvalidDomain("no side lengths given".into()));
        }
        if kind == DomainKind::Interval && lengths.len() != 1 {
            return Err(Error::InvalidDomain("an interval is one-dimensional".into()));
        }
        if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidDomain(format!("side lengths must be positive: {lengths:?}")));
        }
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidDomain(format!("alpha = {alpha} outside (0, 2]")));
        }
        Ok(Self { kind, lengths, alpha })
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    pub fn diameter(&self) -> f64 {
        self.lengths.iter().map(|l| l * l).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone)]
struct Mode {
    index: Vec<u32>,
    /// Dirichlet Laplacian eigenvalue sum_i (n_i pi / L_i)^2.
    laplace: f64,
    /// The fractional power laplace^(alpha/2).
    eigenvalue: f64,
}

/// Truncated eigenbasis of the spectral fractional Dirichlet Laplacian.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    domain: DomainSpec,
    modes: Vec<Mode>,
    /// prod_i sqrt(2 / L_i), the common amplitude of every eigenfunction.
    amplitude: f64,
    uniform_bound: f64,
}

impl SpectralBasis {
    /// Builds the first `n` eigenpairs sorted by eigenvalue (ties broken
    /// lexicographically on the multi-index).
    pub fn build(domain: DomainSpec, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("basis truncation must be at least 1".into()));
        }
        let d = domain.dim();
        let amplitude = domain.lengths.iter().map(|l| (2.0 / l).sqrt()).product();

        let modes = match domain.kind {
            DomainKind::Interval => {
                let l = domain.lengths[0];
                (1..=n as u32)
                    .map(|k| {
                        let laplace = (k as f64 * std::f64::consts::PI / l).powi(2);
                        Mode { index: vec![k], laplace, eigenvalue: laplace.powf(domain.alpha / 2.0) }
                    })
                    .collect()
            }
            DomainKind::Box => {
                // Start from the per-axis cap ceil(N^(1/d)) + 5 and expand
                // until the n-th smallest collected eigenvalue provably
                // precedes every excluded multi-index; anisotropic boxes
                // need the expansion.
                let mut cap = vec![(n as f64).powf(1.0 / d as f64).ceil() as u32 + 5; d];
                loop {
                    let mut modes = Vec::new();
                    enumerate(&domain, &cap, &mut vec![0; d], 0, &mut modes);
                    modes.sort_by(|a, b| {
                        a.laplace
                            .partial_cmp(&b.laplace)
                            .unwrap()
                            .then_with(|| a.index.cmp(&b.index))
                    });
                    let boundary = (0..d)
                        .map(|axis| {
                            let mut idx = vec![1u32; d];
                            idx[axis] = cap[axis] + 1;
                            laplace_eigenvalue(&domain, &idx)
                        })
                        .fold(f64::INFINITY, f64::min);
                    if modes.len() >= n && modes[n - 1].laplace <= boundary {
                        modes.truncate(n);
                        break modes;
                    }
                    for c in &mut cap {
                        *c *= 2;
                    }
                }
            }
        };

        Ok(Self { domain, modes, amplitude, uniform_bound: amplitude })
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// mu_n, zero-indexed.
    pub fn eigenvalue(&self, n: usize) -> f64 {
        self.modes[n].eigenvalue
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.eigenvalue).collect()
    }

    pub fn multi_index(&self, n: usize) -> &[u32] {
        &self.modes[n].index
    }

    /// phi_n(x), zero-indexed. Eigenfunctions are positive near the origin
    /// corner, which fixes the sign convention.
    pub fn eval(&self, n: usize, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.domain.dim());
        let mode = &self.modes[n];
        let mut v = self.amplitude;
        for (axis, (&k, &xi)) in mode.index.iter().zip(x).enumerate() {
            v *= (k as f64 * std::f64::consts::PI * xi / self.domain.lengths[axis]).sin();
        }
        v
    }

    /// Analytic sup of |phi_n| over the domain, uniform in n.
    pub fn uniform_bound(&self) -> f64 {
        self.uniform_bound
    }

    /// Two bases are interchangeable when they share domain and truncation.
    pub fn same_basis(&self, other: &Self) -> bool {
        self.domain == other.domain && self.len() == other.len()
    }

    /// Row-major table phi[n * points + m] of every eigenfunction on a grid.
    pub fn table(&self, grid: &SpatialGrid) -> Vec<f64> {
        let p = grid.points.len();
        let mut out = vec![0.0; self.len() * p];
        for n in 0..self.len() {
            for (m, pt) in grid.points.iter().enumerate() {
                out[n * p + m] = self.eval(n, pt);
            }
        }
        out
    }

    /// Max deviation of the quadrature Gram matrix from the identity under a
    /// composite trapezoid rule with `per_axis` cells per axis.
    pub fn orthonormality_defect(&self, per_axis: usize) -> f64 {
        let grid = trapezoid_grid(&self.domain, per_axis);
        let n = self.len();
        let phi: Vec<Vec<f64>> = (0..n)
            .map(|k| grid.points.iter().map(|p| self.eval(k, p)).collect())
            .collect();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in a..n {
                let mut dot = 0.0;
                for (m, w) in grid.weights.iter().enumerate() {
                    dot += w * phi[a][m] * phi[b][m];
                }
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

fn laplace_eigenvalue(domain: &DomainSpec, index: &[u32]) -> f64 {
    index
        .iter()
        .zip(&domain.lengths)
        .map(|(&k, &l)| (k as f64 * std::f64::consts::PI / l).powi(2))
        .sum()
}

fn enumerate(domain: &DomainSpec, cap: &[u32], idx: &mut Vec<u32>, axis: usize, out: &mut Vec<Mode>) {
    if axis == cap.len() {
        let laplace = laplace_eigenvalue(domain, idx);
        out.push(Mode {
            index: idx.clone(),
            laplace,
            eigenvalue: laplace.powf(domain.alpha / 2.0),
        });
        return;
    }
    for k in 1..=cap[axis] {
        idx[axis] = k;
        enumerate(domain, cap, idx, axis + 1, out);
    }
}

/// Flattened spatial grid with quadrature weights; tensorized for boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub per_axis: usize,
}

/// Uniform grid including endpoints with composite-trapezoid weights.
pub fn trapezoid_grid(domain: &DomainSpec, per_axis: usize) -> SpatialGrid {
    assert!(per_axis >= 2);
    let axes: Vec<(Vec<f64>, Vec<f64>)> = domain
        .lengths()
        .iter()
        .map(|&l| {
            let h = l / per_axis as f64;
            let pts: Vec<f64> = (0..=per_axis).map(|i| i as f64 * h).collect();
            (pts, quad::trapezoid_weights(per_axis + 1, h))
        })
        .collect();
    tensorize(&axes, per_axis + 1)
}

/// Cell-centered (midpoint) grid; never touches the boundary.
pub fn midpoint_grid(domain: &DomainSpec, cells_per_axis: usize) -> SpatialGrid {
    assert!(cells_per_axis >= 1);
    let axes: Vec<(Vec<f64>, Vec<f64>)> = domain
        .lengths()
        .iter()
        .map(|&l| {
            let h = l / cells_per_axis as f64;
            let pts: Vec<f64> = (0..cells_per_axis).map(|i| (i as f64 + 0.5) * h).collect();
            (pts, vec![h; cells_per_axis])
        })
        .collect();
    tensorize(&axes, cells_per_axis)
}

fn tensorize(axes: &[(Vec<f64>, Vec<f64>)], per_axis: usize) -> SpatialGrid {
    let mut points = vec![Vec::new()];
    let mut weights = vec![1.0];
    for (pts, ws) in axes {
        let mut next_p = Vec::with_capacity(points.len() * pts.len());
        let mut next_w = Vec::with_capacity(points.len() * pts.len());
        for (p, w) in points.iter().zip(&weights) {
            for (x, wx) in pts.iter().zip(ws) {
                let mut q = p.clone();
                q.push(*x);
                next_p.push(q);
                next_w.push(w * wx);
            }
        }
        points = next_p;
        weights = next_w;
    }
    SpatialGrid { points, weights, per_axis }
}

/// Least-squares fit of mu_n against c n^(alpha/d) on log scale.
#[derive(Debug, Clone, Copy)]
pub struct WeylReport {
    pub exponent: f64,
    pub expected: f64,
    pub max_ratio_dev: f64,
    pub pass: bool,
}

pub fn check_weyl(basis: &SpectralBasis) -> Result<WeylReport> {
    let n = basis.len();
    if n < 20 {
        return Err(Error::TooFewPoints { needed: 20, got: n });
    }
    let xs: Vec<f64> = (1..=n).map(|k| (k as f64).ln()).collect();
    let ys: Vec<f64> = (0..n).map(|k| basis.eigenvalue(k).ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    let expected = basis.domain().alpha() / basis.domain().dim() as f64;
    let mut max_ratio_dev: f64 = 0.0;
    for k in 0..n {
        let fit = (intercept + slope * xs[k]).exp();
        max_ratio_dev = max_ratio_dev.max((basis.eigenvalue(k) / fit - 1.0).abs());
    }
    let pass = (slope - expected).abs() <= 0.1 * expected;
    Ok(WeylReport { exponent: slope, expected, max_ratio_dev, pass })
}

pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_eigenpairs_match_closed_form() {
        // [0, pi], alpha = 2: mu_1 = 1, phi_1 = sqrt(2/pi) sin x.
        let basis = SpectralBasis::build(
            DomainSpec::interval(std::f64::consts::PI, 2.0).unwrap(),
            10,
        )
        .unwrap();
        assert!((basis.eigenvalue(0) - 1.0).abs() < 1e-14);
        assert!((basis.eigenvalue(3) - 16.0).abs() < 1e-12);
        let x = [1.0];
        let want = (2.0 / std::f64::consts::PI).sqrt() * 1.0_f64.sin();
        assert!((basis.eval(0, &x) - want).abs() < 1e-14);
    }

    #[test]
    fn fractional_power_applied_spectrally() {
        // [0, 1], alpha = 1: mu_1 = ((pi)^2)^(1/2) = pi.
        let basis = SpectralBasis::build(DomainSpec::interval(1.0, 1.0).unwrap(), 3).unwrap();
        assert!((basis.eigenvalue(0) - std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn unit_box_ground_state() {
        // [0,1]^2, alpha = 2: mu_(1,1) = 2 pi^2.
        let basis =
            SpectralBasis::build(DomainSpec::rect_box(&[1.0, 1.0], 2.0).unwrap(), 12).unwrap();
        assert!((basis.eigenvalue(0) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-11);
        assert_eq!(basis.multi_index(0), &[1, 1]);
        // Degenerate pair (1,2)/(2,1) must come out lexicographically.
        assert_eq!(basis.multi_index(1), &[1, 2]);
        assert_eq!(basis.multi_index(2), &[2, 1]);
        // Sorted, first strict.
        let eigs = basis.eigenvalues();
        assert!(eigs[0] < eigs[1]);
        for w in eigs.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn anisotropic_box_catches_low_modes() {
        // [0,10] x [0,1]: the first handful of modes all have n_2 = 1 and
        // large n_1, past the naive per-axis cap.
        let basis =
            SpectralBasis::build(DomainSpec::rect_box(&[10.0, 1.0], 2.0).unwrap(), 20).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        // Brute-force oracle over a generous index range.
        let mut all = Vec::new();
        for m in 1u32..=80 {
            for k in 1u32..=20 {
                all.push(((m as f64 / 10.0).powi(2) * pi2 + (k as f64).powi(2) * pi2, (m, k)));
            }
        }
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        for n in 0..20 {
            assert!(
                (basis.eigenvalue(n) - all[n].0).abs() < 1e-10,
                "mode {n}: {} vs oracle {}",
                basis.eigenvalue(n),
                all[n].0
            );
        }
    }

    #[test]
    fn uniform_bound_matches_closed_form() {
        let basis = SpectralBasis::build(DomainSpec::interval(2.0, 2.0).unwrap(), 8).unwrap();
        assert!((basis.uniform_bound() - 1.0).abs() < 1e-12); // sqrt(2/2)

        let basis =
            SpectralBasis::build(DomainSpec::rect_box(&[2.0, 0.5], 2.0).unwrap(), 8).unwrap();
        assert!((basis.uniform_bound() - 2.0).abs() < 1e-12); // 2/sqrt(2*0.5)

        // Sampled eigenfunctions never exceed the bound.
        let grid = midpoint_grid(basis.domain(), 31);
        for n in 0..basis.len() {
            for p in &grid.points {
                assert!(basis.eval(n, p).abs() <= basis.uniform_bound() + 1e-12);
            }
        }
    }

    #[test]
    fn orthonormal_under_trapezoid_quadrature() {
        let basis = SpectralBasis::build(DomainSpec::interval(1.0, 2.0).unwrap(), 50).unwrap();
        assert!(basis.orthonormality_defect(512) < 1e-8);

        let basis =
            SpectralBasis::build(DomainSpec::rect_box(&[1.0, 1.5], 2.0).unwrap(), 20).unwrap();
        assert!(basis.orthonormality_defect(512) < 1e-8);
    }

    #[test]
    fn weyl_exponent_interval() {
        let basis = SpectralBasis::build(DomainSpec::interval(1.0, 2.0).unwrap(), 50).unwrap();
        let report = check_weyl(&basis).unwrap();
        assert!(report.pass);
        assert!((report.exponent - 2.0).abs() < 1e-9);
        assert!(report.max_ratio_dev < 1e-9);

        let basis = SpectralBasis::build(DomainSpec::interval(1.0, 1.5).unwrap(), 50).unwrap();
        let report = check_weyl(&basis).unwrap();
        assert!(report.pass);
        assert!((report.exponent - 1.5).abs() < 1e-9);
    }

    #[test]
    fn weyl_exponent_box() {
        let basis =
            SpectralBasis::build(DomainSpec::rect_box(&[1.0, 1.0], 2.0).unwrap(), 100).unwrap();
        let report = check_weyl(&basis).unwrap();
        assert!(report.pass, "exponent {} vs 1.0", report.exponent);
        assert!((report.exponent - 1.0).abs() <= 0.1);
    }

    #[test]
    fn weyl_needs_enough_modes() {
        let basis = SpectralBasis::build(DomainSpec::interval(1.0, 2.0).unwrap(), 10).unwrap();
        assert!(check_weyl(&basis).is_err());
    }

    #[test]
    fn domain_validation() {
        assert!(DomainSpec::interval(0.0, 2.0).is_err());
        assert!(DomainSpec::interval(1.0, 0.0).is_err());
        assert!(DomainSpec::interval(1.0, 2.5).is_err());
        assert!(DomainSpec::rect_box(&[], 2.0).is_err());
        assert!(DomainSpec::rect_box(&[1.0, -1.0], 2.0).is_err());
        assert!(DomainSpec::rect_box(&[1.0, 1.0, 1.0], 2.0).is_ok());
    }

    #[test]
    fn grids_are_consistent() {
        let domain = DomainSpec::rect_box(&[1.0, 2.0], 2.0).unwrap();
        let trap = trapezoid_grid(&domain, 8);
        assert_eq!(trap.points.len(), 81);
        let total: f64 = trap.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-12);

        let mid = midpoint_grid(&domain, 8);
        assert_eq!(mid.points.len(), 64);
        let total: f64 = mid.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-12);
    }
}

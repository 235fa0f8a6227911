//! Two routes to second moments of the mild solution
//!
//! ```text
//! u_t(x) = (G u0)_t(x) + lambda int_B int_0^t G(t-s, x, y) sigma(u_s(y)) W(ds, dy)
//! ```
//!
//! * Monte Carlo: spectral collocation with a full-history stochastic
//!   convolution. The Mittag-Leffler kernel has no semigroup property for
//!   beta < 1, so every step sums over all past mode increments; O(J^2 N)
//!   per path is accepted in exchange for fidelity to the mild form.
//!   sigma(u) is evaluated at the left endpoint of each step (Ito
//!   adaptedness) and the kernel factor at the full lag t_(j+1) - t_i.
//!
//! * Volterra: for linear sigma the Walsh isometry closes the second moment,
//!   M(t,x) = v_t(x)^2 + (lambda c)^2 int_0^t int_B G^2(t-s,x,y) M(s,y) dy ds
//!   (white noise; the colored analogue carries the two-point function and
//!   the covariance kernel f). Both are stepped with left-rectangle time
//!   quadrature on the same grid as the Monte Carlo route, so the two
//!   routes approximate the same truncated dynamics.
//!
//! Paths run concurrently in fixed-size chunks that are reduced in path
//! order, so the output is bit-identical regardless of worker count.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::InitialCondition;
use crate::mlf::{self, FractionalOrder};
use crate::noise::{CovKernel, NoiseModel};
use crate::rng::PathRng;
use crate::spectra::{midpoint_grid, trapezoid_grid, DomainSpec, SpatialGrid, SpectralBasis};

/// Values past this magnitude truncate a trajectory and are classified as
/// growth beyond range.
pub const OVERFLOW_LIMIT: f64 = 1e150;

/// Paths per deterministic reduction chunk; fixed so the reduction order
/// never depends on the worker count.
const PATH_CHUNK: usize = 32;

/// Multiplicative nonlinearity with sandwich slopes
/// l_sigma |u| <= |sigma(u)| <= L_sigma |u|.
#[derive(Clone)]
pub struct SigmaSpec {
    kind: SigmaKind,
    lower: f64,
    upper: f64,
}

#[derive(Clone)]
enum SigmaKind {
    Linear(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for SigmaSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            SigmaKind::Linear(c) => write!(f, "SigmaSpec::linear({c})"),
            SigmaKind::Custom(_) => {
                write!(f, "SigmaSpec::custom(l={}, L={})", self.lower, self.upper)
            }
        }
    }
}

impl SigmaSpec {
    /// sigma(u) = c u; both sandwich slopes equal |c|.
    pub fn linear(c: f64) -> Self {
        Self { kind: SigmaKind::Linear(c), lower: c.abs(), upper: c.abs() }
    }

    /// Custom sigma with declared slopes; the sandwich is spot-checked on a
    /// logarithmic argument grid at construction and again along every
    /// simulated path.
    pub fn custom(
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        lower: f64,
        upper: f64,
    ) -> Result<Self> {
        if !(lower > 0.0) || !(upper > 0.0) || lower > upper {
            return Err(Error::InvalidConfig(format!(
                "sigma slopes must satisfy 0 < l <= L, got l={lower}, L={upper}"
            )));
        }
        let spec = Self { kind: SigmaKind::Custom(f), lower, upper };
        for exp in -6..=3 {
            for sign in [-1.0, 1.0] {
                let u = sign * 10f64.powi(exp);
                spec.apply_checked(u)?;
            }
        }
        Ok(spec)
    }

    pub fn lower_slope(&self) -> f64 {
        self.lower
    }

    pub fn upper_slope(&self) -> f64 {
        self.upper
    }

    /// Returns the slope when sigma is linear.
    pub fn as_linear(&self) -> Option<f64> {
        match self.kind {
            SigmaKind::Linear(c) => Some(c),
            SigmaKind::Custom(_) => None,
        }
    }

    pub fn apply(&self, u: f64) -> f64 {
        match &self.kind {
            SigmaKind::Linear(c) => c * u,
            SigmaKind::Custom(f) => f(u),
        }
    }

    fn apply_checked(&self, u: f64) -> Result<f64> {
        let s = self.apply(u);
        let a = u.abs();
        let tol = 1e-12 * (1.0 + self.upper * a);
        if s.abs() + tol < self.lower * a || s.abs() > self.upper * a + tol {
            return Err(Error::InvalidConfig(format!(
                "sigma violates its sandwich at u = {u}: |sigma| = {}, slopes [{}, {}]",
                s.abs(),
                self.lower,
                self.upper
            )));
        }
        Ok(s)
    }
}

/// Initial datum selector, realized on the solver grid at build time.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialProfile {
    /// The ground-state eigenfunction phi_1.
    FirstEigenfunction,
    /// Constant level c > 0.
    Constant(f64),
    /// Separable parabolic bump peaking at 1.
    Bump,
}

/// Spatial noise selector; the mode covariance is built on a dedicated
/// quadrature grid at solver construction.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    White,
    Colored(CovKernel),
}

impl NoiseSpec {
    pub fn label(&self) -> String {
        match self {
            Self::White => "white".into(),
            Self::Colored(k) => k.label(),
        }
    }
}

/// Full description of one simulation.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub domain: DomainSpec,
    pub beta: FractionalOrder,
    /// Level of the noise, lambda >= 0.
    pub lambda: f64,
    pub sigma: SigmaSpec,
    pub noise: NoiseSpec,
    pub u0: InitialProfile,
    /// Time horizon T.
    pub horizon: f64,
    /// Number of time steps J (grid t_j = j T / J).
    pub steps: usize,
    /// Basis truncation N.
    pub modes: usize,
    /// Spatial points per axis.
    pub grid_points: usize,
    pub paths: usize,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Negative { what: "noise level", value: self.lambda });
        }
        if !(self.horizon > 0.0) {
            return Err(Error::NonPositive { what: "horizon", value: self.horizon });
        }
        if self.steps == 0 || self.modes == 0 || self.grid_points < 2 || self.paths == 0 {
            return Err(Error::InvalidConfig(
                "steps, modes and paths must be >= 1; grid needs >= 2 points per axis".into(),
            ));
        }
        let d = self.domain.dim() as f64;
        let alpha = self.domain.alpha();
        match &self.noise {
            NoiseSpec::White => {
                // Well-posedness of the white-noise random field solution.
                let cap = 2.0f64.min(1.0 / self.beta.value()) * alpha;
                if d >= cap {
                    return Err(Error::InvalidConfig(format!(
                        "white noise needs d < (2 min 1/beta) alpha = {cap}, got d = {d}"
                    )));
                }
            }
            NoiseSpec::Colored(kernel) => kernel.validate_for(&self.domain)?,
        }
        Ok(())
    }

    fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentSource {
    MonteCarlo,
    Volterra,
}

/// A trajectory stopped early because a value left the representable range;
/// the classifier treats this as growth evidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverflowEvent {
    /// First offending step (1-based in the time grid).
    pub step: usize,
    pub time: f64,
    /// Path index for the Monte Carlo route.
    pub path: Option<usize>,
}

/// Time grid plus sup_x of the estimated second moment.
#[derive(Debug, Clone)]
pub struct MomentTrajectory {
    pub times: Vec<f64>,
    pub sup_moment: Vec<f64>,
    /// Standard errors at the sup-attaining point (Monte Carlo route only).
    pub stderr: Option<Vec<f64>>,
    pub source: MomentSource,
    pub overflow: Option<OverflowEvent>,
}

impl MomentTrajectory {
    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("nonempty trajectory")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Shared discretization: basis, grid, eigenfunction table, Mittag-Leffler
/// lag table and the deterministic evolution.
struct Context {
    basis: Arc<SpectralBasis>,
    grid: SpatialGrid,
    /// phi[n * p + m]
    phi: Vec<f64>,
    n: usize,
    p: usize,
    dt: f64,
    /// e[k * n + j]: E_beta(-mu_j (k dt)^beta) for lags k = 0..=J.
    e: Vec<f64>,
    /// v[j * p + m]: deterministic evolution at t_j.
    v: Vec<f64>,
    noise: NoiseModel,
}

enum GridKind {
    Trapezoid,
    Midpoint,
}

fn build_context(cfg: &SimulationConfig, kind: GridKind) -> Result<Context> {
    cfg.validate()?;
    let basis = Arc::new(SpectralBasis::build(cfg.domain.clone(), cfg.modes)?);
    let grid = match kind {
        GridKind::Trapezoid => trapezoid_grid(&cfg.domain, cfg.grid_points),
        GridKind::Midpoint => midpoint_grid(&cfg.domain, cfg.grid_points),
    };
    let u0 = match &cfg.u0 {
        InitialProfile::FirstEigenfunction => {
            InitialCondition::first_eigenfunction(&basis, grid.clone())?
        }
        InitialProfile::Constant(c) => InitialCondition::constant(&basis, grid.clone(), *c)?,
        InitialProfile::Bump => InitialCondition::bump(&basis, grid.clone())?,
    };

    let n = basis.len();
    let p = grid.points.len();
    let phi = basis.table(&grid);
    let dt = cfg.dt();
    let steps = cfg.steps;

    let b = cfg.beta.value();
    let mut e = vec![0.0; (steps + 1) * n];
    for k in 0..=steps {
        let tb = (k as f64 * dt).powf(b);
        for j in 0..n {
            e[k * n + j] = mlf::mittag_leffler_neg(cfg.beta, basis.eigenvalue(j) * tb)?;
        }
    }

    let coeffs = u0.coeffs().to_vec();
    let mut v = vec![0.0; (steps + 1) * p];
    for k in 0..=steps {
        for j in 0..n {
            let c = e[k * n + j] * coeffs[j];
            let row = &phi[j * p..(j + 1) * p];
            let out = &mut v[k * p..(k + 1) * p];
            for (o, f) in out.iter_mut().zip(row) {
                *o += c * f;
            }
        }
    }

    let noise = match &cfg.noise {
        NoiseSpec::White => NoiseModel::white(n),
        NoiseSpec::Colored(kernel) => {
            let cells = noise_quadrature_cells(&cfg.domain);
            NoiseModel::colored(kernel.clone(), &basis, cells)?
        }
    };

    Ok(Context { basis, grid, phi, n, p, dt, e, v, noise })
}

fn noise_quadrature_cells(domain: &DomainSpec) -> usize {
    match domain.dim() {
        1 => 512,
        2 => 32,
        _ => 10,
    }
}

struct ChunkStats {
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    overflow: Option<OverflowEvent>,
}

/// Monte Carlo estimate of sup_x E|u_t(x)|^2 along the time grid.
pub fn simulate_paths(cfg: &SimulationConfig) -> Result<MomentTrajectory> {
    let ctx = build_context(cfg, GridKind::Trapezoid)?;
    let steps = cfg.steps;
    let p = ctx.p;

    let chunk_count = cfg.paths.div_ceil(PATH_CHUNK);
    let chunks: Result<Vec<ChunkStats>> = (0..chunk_count)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * PATH_CHUNK;
            let hi = ((chunk + 1) * PATH_CHUNK).min(cfg.paths);
            let mut stats = ChunkStats {
                sum: vec![0.0; (steps + 1) * p],
                sumsq: vec![0.0; (steps + 1) * p],
                overflow: None,
            };
            let mut path_state = PathState::new(&ctx, steps);
            for path in lo..hi {
                path_state.run_single(cfg, &ctx, path, &mut stats)?;
            }
            Ok(stats)
        })
        .collect();
    let chunks = chunks?;

    // Ordered reduction: chunk index order, then within-chunk path order
    // already fixed above.
    let mut sum = vec![0.0; (steps + 1) * p];
    let mut sumsq = vec![0.0; (steps + 1) * p];
    let mut overflow: Option<OverflowEvent> = None;
    for c in &chunks {
        for (a, b) in sum.iter_mut().zip(&c.sum) {
            *a += b;
        }
        for (a, b) in sumsq.iter_mut().zip(&c.sumsq) {
            *a += b;
        }
        overflow = merge_overflow(overflow, c.overflow);
    }

    let last_step = overflow.map_or(steps, |o| o.step - 1);
    let n_paths = cfg.paths as f64;
    let mut times = Vec::with_capacity(last_step + 1);
    let mut sup = Vec::with_capacity(last_step + 1);
    let mut se = Vec::with_capacity(last_step + 1);
    for j in 0..=last_step {
        times.push(j as f64 * ctx.dt);
        if j == 0 {
            // t = 0 is deterministic: the projection of u0, no estimate.
            let m0 = ctx.v[0..p].iter().map(|v| v * v).fold(f64::MIN, f64::max);
            sup.push(m0);
            se.push(0.0);
            continue;
        }
        let mut best = f64::MIN;
        let mut best_se = 0.0;
        for m in 0..p {
            let mean = sum[j * p + m] / n_paths;
            if mean > best {
                best = mean;
                let var = ((sumsq[j * p + m] - sum[j * p + m] * sum[j * p + m] / n_paths)
                    / (n_paths - 1.0).max(1.0))
                .max(0.0);
                best_se = (var / n_paths).sqrt();
            }
        }
        sup.push(best);
        se.push(best_se);
    }

    Ok(MomentTrajectory {
        times,
        sup_moment: sup,
        stderr: Some(se),
        source: MomentSource::MonteCarlo,
        overflow,
    })
}

fn merge_overflow(a: Option<OverflowEvent>, b: Option<OverflowEvent>) -> Option<OverflowEvent> {
    match (a, b) {
        (None, x) => x,
        (x, None) => x,
        (Some(x), Some(y)) => {
            if (y.step, y.path) < (x.step, x.path) {
                Some(y)
            } else {
                Some(x)
            }
        }
    }
}

/// Reusable per-path buffers.
struct PathState {
    u: Vec<f64>,
    u_next: Vec<f64>,
    xi: Vec<f64>,
    accum: Vec<f64>,
    dw: Vec<f64>,
    scratch: Vec<f64>,
    projected: Vec<f64>,
}

impl PathState {
    fn new(ctx: &Context, steps: usize) -> Self {
        Self {
            u: vec![0.0; ctx.p],
            u_next: vec![0.0; ctx.p],
            xi: vec![0.0; steps * ctx.n],
            accum: vec![0.0; ctx.n],
            dw: vec![0.0; ctx.n],
            scratch: vec![0.0; ctx.n],
            projected: vec![0.0; ctx.p],
        }
    }

    fn run_single(
        &mut self,
        cfg: &SimulationConfig,
        ctx: &Context,
        path: usize,
        stats: &mut ChunkStats,
    ) -> Result<()> {
        let steps = cfg.steps;
        let (n, p) = (ctx.n, ctx.p);
        let mut rng = PathRng::new(cfg.seed, path as u64);
        self.u.copy_from_slice(&ctx.v[0..p]);
        record(&mut stats.sum, &mut stats.sumsq, 0, &self.u, p);

        for j in 0..steps {
            if cfg.lambda > 0.0 {
                rng.begin_step(j as u64);
                ctx.noise.sample_increments(ctx.dt, &mut rng, &mut self.dw, &mut self.scratch);

                // Grid projection of the mode increment field.
                self.projected.iter_mut().for_each(|g| *g = 0.0);
                for k in 0..n {
                    let c = self.dw[k];
                    let row = &ctx.phi[k * p..(k + 1) * p];
                    for (g, f) in self.projected.iter_mut().zip(row) {
                        *g += c * f;
                    }
                }
                // xi_n = sum_m w_m phi_n(x_m) sigma(u(x_m)) dW(x_m).
                for m in 0..p {
                    let s = sandwiched_sigma(&cfg.sigma, self.u[m])?;
                    self.projected[m] *= ctx.grid.weights[m] * s;
                }
                let xi_row = &mut self.xi[j * n..(j + 1) * n];
                for k in 0..n {
                    let row = &ctx.phi[k * p..(k + 1) * p];
                    let mut acc = 0.0;
                    for (g, f) in self.projected.iter().zip(row) {
                        acc += g * f;
                    }
                    xi_row[k] = acc;
                }

                // Full-history convolution: A_n = sum_(i<=j) E_beta at lag
                // (j+1-i) times xi_n at step i.
                self.accum.iter_mut().for_each(|a| *a = 0.0);
                for i in 0..=j {
                    let lag = j + 1 - i;
                    let e_row = &ctx.e[lag * n..(lag + 1) * n];
                    let xi_row = &self.xi[i * n..(i + 1) * n];
                    for k in 0..n {
                        self.accum[k] += e_row[k] * xi_row[k];
                    }
                }
                self.u_next.copy_from_slice(&ctx.v[(j + 1) * p..(j + 2) * p]);
                for k in 0..n {
                    let c = cfg.lambda * self.accum[k];
                    let row = &ctx.phi[k * p..(k + 1) * p];
                    for (o, f) in self.u_next.iter_mut().zip(row) {
                        *o += c * f;
                    }
                }
            } else {
                self.u_next.copy_from_slice(&ctx.v[(j + 1) * p..(j + 2) * p]);
            }

            let max_abs = self.u_next.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            if !(max_abs <= OVERFLOW_LIMIT) {
                let event =
                    OverflowEvent { step: j + 1, time: (j + 1) as f64 * ctx.dt, path: Some(path) };
                stats.overflow = merge_overflow(stats.overflow, Some(event));
                return Ok(());
            }
            record(&mut stats.sum, &mut stats.sumsq, j + 1, &self.u_next, p);
            std::mem::swap(&mut self.u, &mut self.u_next);
        }
        Ok(())
    }
}

fn sandwiched_sigma(sigma: &SigmaSpec, u: f64) -> Result<f64> {
    let s = sigma.apply(u);
    let a = u.abs();
    let tol = 1e-12 * (1.0 + sigma.upper_slope() * a);
    if s.abs() + tol < sigma.lower_slope() * a || s.abs() > sigma.upper_slope() * a + tol {
        return Err(Error::InvalidConfig(format!(
            "sigma violated its sandwich along a path at u = {u}"
        )));
    }
    Ok(s)
}

fn record(sum: &mut [f64], sumsq: &mut [f64], j: usize, u: &[f64], p: usize) {
    for (m, &x) in u.iter().enumerate() {
        let sq = x * x;
        sum[j * p + m] += sq;
        sumsq[j * p + m] += sq * sq;
    }
}

/// Deterministic second-moment trajectory for linear sigma by forward
/// stepping the closed Volterra equation; white and colored noise dispatch
/// over the same time discretization as the Monte Carlo route.
pub fn second_moment_volterra(cfg: &SimulationConfig) -> Result<MomentTrajectory> {
    let c = cfg.sigma.as_linear().ok_or_else(|| {
        Error::InvalidConfig("the volterra route requires linear sigma".into())
    })?;
    match &cfg.noise {
        NoiseSpec::White => Ok(volterra_white(cfg, c)?.1),
        NoiseSpec::Colored(kernel) => volterra_colored(cfg, c, kernel.clone()),
    }
}

/// Full moment field M(t_j, x_m) on the solver grid; white noise only.
#[derive(Debug, Clone)]
pub struct MomentField {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    /// Row-major `times.len() x points.len()`.
    pub values: Vec<f64>,
}

/// White-noise Volterra solve exposing the whole field, for inspection and
/// for cross-checks against direct-summation oracles.
pub fn second_moment_volterra_white_field(cfg: &SimulationConfig) -> Result<MomentField> {
    let c = cfg.sigma.as_linear().ok_or_else(|| {
        Error::InvalidConfig("the volterra route requires linear sigma".into())
    })?;
    if !matches!(cfg.noise, NoiseSpec::White) {
        return Err(Error::InvalidConfig("field output is white-noise only".into()));
    }
    Ok(volterra_white(cfg, c)?.0)
}

fn volterra_white(cfg: &SimulationConfig, c: f64) -> Result<(MomentField, MomentTrajectory)> {
    let ctx = build_context(cfg, GridKind::Trapezoid)?;
    let steps = cfg.steps;
    let (n, p) = (ctx.n, ctx.p);
    let gain = (cfg.lambda * c).powi(2) * ctx.dt;

    // m_field[j*p + m] = M(t_j, x_m); r[i] = N x N moment projections
    // R_i[a,b] = int phi_a phi_b M(t_i, y) dy.
    let mut m_field = vec![0.0; (steps + 1) * p];
    for m in 0..p {
        m_field[m] = ctx.v[m] * ctx.v[m];
    }
    let mut r = vec![0.0; (steps + 1) * n * n];
    let mut truncated = None;

    project_moment(&ctx, &m_field[0..p], &mut r[0..n * n]);

    let mut pj = vec![0.0; n * n];
    let mut b = vec![0.0; n * p];
    let mut last = steps;
    for j in 1..=steps {
        // P_j[a,b] = sum_(i<j) e_a(lag) e_b(lag) R_i[a,b].
        pj.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..j {
            let lag = j - i;
            let e_row = &ctx.e[lag * n..(lag + 1) * n];
            let r_i = &r[i * n * n..(i + 1) * n * n];
            for a in 0..n {
                let ea = e_row[a];
                let pa = &mut pj[a * n..(a + 1) * n];
                let ra = &r_i[a * n..(a + 1) * n];
                for bb in 0..n {
                    pa[bb] += ea * e_row[bb] * ra[bb];
                }
            }
        }
        // field(m) = phi(m)^T P_j phi(m) via B = P_j Phi.
        b.iter_mut().for_each(|x| *x = 0.0);
        for a in 0..n {
            for bb in 0..n {
                let coeff = pj[a * n + bb];
                if coeff == 0.0 {
                    continue;
                }
                let row = &ctx.phi[bb * p..(bb + 1) * p];
                let out = &mut b[a * p..(a + 1) * p];
                for (o, f) in out.iter_mut().zip(row) {
                    *o += coeff * f;
                }
            }
        }
        let mut max_val = 0.0f64;
        for m in 0..p {
            let mut q = 0.0;
            for a in 0..n {
                q += ctx.phi[a * p + m] * b[a * p + m];
            }
            let v = ctx.v[j * p + m];
            let val = v * v + gain * q;
            m_field[j * p + m] = val;
            max_val = max_val.max(val.abs());
        }
        if !(max_val <= OVERFLOW_LIMIT) {
            truncated = Some(OverflowEvent { step: j, time: j as f64 * ctx.dt, path: None });
            last = j - 1;
            break;
        }
        project_moment(&ctx, &m_field[j * p..(j + 1) * p], &mut r[j * n * n..(j + 1) * n * n]);
    }

    let mut times = Vec::with_capacity(last + 1);
    let mut sup = Vec::with_capacity(last + 1);
    for j in 0..=last {
        times.push(j as f64 * ctx.dt);
        sup.push(m_field[j * p..(j + 1) * p].iter().copied().fold(f64::MIN, f64::max));
    }
    m_field.truncate((last + 1) * p);
    let field = MomentField {
        times: times.clone(),
        points: ctx.grid.points.clone(),
        values: m_field,
    };
    let traj = MomentTrajectory {
        times,
        sup_moment: sup,
        stderr: None,
        source: MomentSource::Volterra,
        overflow: truncated,
    };
    Ok((field, traj))
}

fn project_moment(ctx: &Context, field: &[f64], out: &mut [f64]) {
    let (n, p) = (ctx.n, ctx.p);
    let weighted: Vec<f64> = ctx.grid.weights.iter().zip(field).map(|(w, m)| w * m).collect();
    for a in 0..n {
        for bb in a..n {
            let mut s = 0.0;
            for m in 0..p {
                s += ctx.phi[a * p + m] * ctx.phi[bb * p + m] * weighted[m];
            }
            out[a * n + bb] = s;
            out[bb * n + a] = s;
        }
    }
}

/// Colored-noise Volterra route: tracks the full two-point function
/// C(t, y, z) = E[u_t(y) u_t(z)] on a coarse midpoint grid and reports the
/// diagonal. Memory scales with (grid points)^2, so the grid is capped.
const COLORED_VOLTERRA_MAX_POINTS: usize = 64;

fn volterra_colored(cfg: &SimulationConfig, c: f64, kernel: CovKernel) -> Result<MomentTrajectory> {
    let ctx = build_context(cfg, GridKind::Midpoint)?;
    let steps = cfg.steps;
    let (n, p) = (ctx.n, ctx.p);
    if p > COLORED_VOLTERRA_MAX_POINTS {
        return Err(Error::InvalidConfig(format!(
            "colored volterra stores the full two-point function; use at most \
             {COLORED_VOLTERRA_MAX_POINTS} grid points total, got {p}"
        )));
    }
    let (grid, f_mat) = crate::noise::cov_grid_matrix(&kernel, &ctx.basis.domain().clone(), cfg.grid_points)?;
    debug_assert_eq!(grid.points.len(), p);
    let gain = (cfg.lambda * c).powi(2) * ctx.dt;

    // wphi[a*p + m] = w_m phi_a(x_m).
    let mut wphi = vec![0.0; n * p];
    for a in 0..n {
        for m in 0..p {
            wphi[a * p + m] = ctx.grid.weights[m] * ctx.phi[a * p + m];
        }
    }

    // T_i[a,b] = sum_(m,m') wphi_a(m) f(m,m') C_i(m,m') wphi_b(m').
    let mut t_hist = vec![0.0; (steps + 1) * n * n];
    let mut c_cur = vec![0.0; p * p];
    for y in 0..p {
        for z in 0..p {
            c_cur[y * p + z] = ctx.v[y] * ctx.v[z];
        }
    }
    let mut sup = Vec::with_capacity(steps + 1);
    let mut times = Vec::with_capacity(steps + 1);
    times.push(0.0);
    sup.push((0..p).map(|m| c_cur[m * p + m]).fold(f64::MIN, f64::max));
    project_two_point(&wphi, &f_mat, &c_cur, n, p, &mut t_hist[0..n * n]);

    let mut pj = vec![0.0; n * n];
    let mut b = vec![0.0; n * p];
    let mut overflow = None;
    for j in 1..=steps {
        pj.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..j {
            let lag = j - i;
            let e_row = &ctx.e[lag * n..(lag + 1) * n];
            let t_i = &t_hist[i * n * n..(i + 1) * n * n];
            for a in 0..n {
                let ea = e_row[a];
                let pa = &mut pj[a * n..(a + 1) * n];
                let ta = &t_i[a * n..(a + 1) * n];
                for bb in 0..n {
                    pa[bb] += ea * e_row[bb] * ta[bb];
                }
            }
        }
        // C_j = v_j v_j^T + gain * Phi^T P_j Phi.
        b.iter_mut().for_each(|x| *x = 0.0);
        for a in 0..n {
            for bb in 0..n {
                let coeff = pj[a * n + bb];
                if coeff == 0.0 {
                    continue;
                }
                let row = &ctx.phi[bb * p..(bb + 1) * p];
                let out = &mut b[a * p..(a + 1) * p];
                for (o, f) in out.iter_mut().zip(row) {
                    *o += coeff * f;
                }
            }
        }
        let vj = &ctx.v[j * p..(j + 1) * p];
        let mut max_val = 0.0f64;
        for y in 0..p {
            for z in 0..p {
                let mut q = 0.0;
                for a in 0..n {
                    q += ctx.phi[a * p + y] * b[a * p + z];
                }
                let val = vj[y] * vj[z] + gain * q;
                c_cur[y * p + z] = val;
                max_val = max_val.max(val.abs());
            }
        }
        times.push(j as f64 * ctx.dt);
        if !(max_val <= OVERFLOW_LIMIT) {
            overflow = Some(OverflowEvent { step: j, time: j as f64 * ctx.dt, path: None });
            times.pop();
            break;
        }
        sup.push((0..p).map(|m| c_cur[m * p + m]).fold(f64::MIN, f64::max));
        project_two_point(&wphi, &f_mat, &c_cur, n, p, &mut t_hist[j * n * n..(j + 1) * n * n]);
    }

    Ok(MomentTrajectory {
        times,
        sup_moment: sup,
        stderr: None,
        source: MomentSource::Volterra,
        overflow,
    })
}

fn project_two_point(
    wphi: &[f64],
    f_mat: &[f64],
    c_cur: &[f64],
    n: usize,
    p: usize,
    out: &mut [f64],
) {
    // fc = f .* C, then T = (W Phi) fc (W Phi)^T.
    let mut fc = vec![0.0; p * p];
    for i in 0..p * p {
        fc[i] = f_mat[i] * c_cur[i];
    }
    let mut half = vec![0.0; n * p];
    for a in 0..n {
        for m in 0..p {
            let mut s = 0.0;
            for mm in 0..p {
                s += fc[m * p + mm] * wphi[a * p + mm];
            }
            half[a * p + m] = s;
        }
    }
    for a in 0..n {
        for bb in 0..n {
            let mut s = 0.0;
            for m in 0..p {
                s += wphi[a * p + m] * half[bb * p + m];
            }
            out[a * n + bb] = s;
        }
    }
}

/// Relative change of the endpoint moment when the time grid is doubled;
/// large values flag an under-resolved run.
pub fn volterra_endpoint_drift(cfg: &SimulationConfig) -> Result<f64> {
    let coarse = second_moment_volterra(cfg)?;
    let mut fine_cfg = cfg.clone();
    fine_cfg.steps *= 2;
    let fine = second_moment_volterra(&fine_cfg)?;
    let a = *coarse.sup_moment.last().unwrap();
    let b = *fine.sup_moment.last().unwrap();
    Ok((a - b).abs() / b.abs().max(f64::MIN_POSITIVE))
}

/// Coupled two-order Monte Carlo: runs the beta and gamma dynamics on the
/// same noise increments and reports sup_x E|u^(gamma) - u^(beta)|^p along
/// the time grid.
#[derive(Debug, Clone)]
pub struct BetaDifferenceTable {
    pub times: Vec<f64>,
    /// sup_x of the Monte Carlo p-th moment of the coupled difference.
    pub metric: Vec<f64>,
    pub stderr: Vec<f64>,
    pub p: f64,
}

pub fn coupled_beta_difference(
    cfg_a: &SimulationConfig,
    cfg_b: &SimulationConfig,
    p_exp: f64,
) -> Result<BetaDifferenceTable> {
    if p_exp < 2.0 {
        return Err(Error::InvalidConfig(format!("difference moment p = {p_exp} must be >= 2")));
    }
    let mut a_like_b = cfg_a.clone();
    a_like_b.beta = cfg_b.beta;
    if format!("{a_like_b:?}") != format!("{cfg_b:?}") {
        return Err(Error::Mismatch(
            "coupled runs must share every setting except the fractional order".into(),
        ));
    }
    for cfg in [cfg_a, cfg_b] {
        let bv = cfg.beta.value();
        if !(bv > 0.5 && bv < 1.0) {
            return Err(Error::InvalidOrder(bv));
        }
    }
    let d = cfg_a.domain.dim() as f64;
    let bound =
        0.5 * (1.0 / cfg_a.beta.value()).min(1.0 / cfg_b.beta.value()) * cfg_a.domain.alpha();
    if d >= bound {
        return Err(Error::InvalidConfig(format!(
            "continuity comparison needs d < (1/2) min(1/beta, 1/gamma) alpha = {bound}"
        )));
    }

    let ctx_a = build_context(cfg_a, GridKind::Trapezoid)?;
    let ctx_b = build_context(cfg_b, GridKind::Trapezoid)?;
    let steps = cfg_a.steps;
    let p = ctx_a.p;

    let chunk_count = cfg_a.paths.div_ceil(PATH_CHUNK);
    let chunks: Result<Vec<ChunkStats>> = (0..chunk_count)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * PATH_CHUNK;
            let hi = ((chunk + 1) * PATH_CHUNK).min(cfg_a.paths);
            let mut stats = ChunkStats {
                sum: vec![0.0; (steps + 1) * p],
                sumsq: vec![0.0; (steps + 1) * p],
                overflow: None,
            };
            let mut sa = PathState::new(&ctx_a, steps);
            let mut sb = PathState::new(&ctx_b, steps);
            for path in lo..hi {
                run_coupled_path(cfg_a, &ctx_a, &ctx_b, path, p_exp, &mut sa, &mut sb, &mut stats)?;
            }
            Ok(stats)
        })
        .collect();
    let chunks = chunks?;

    let mut sum = vec![0.0; (steps + 1) * p];
    let mut sumsq = vec![0.0; (steps + 1) * p];
    let mut overflow: Option<OverflowEvent> = None;
    for c in &chunks {
        for (x, y) in sum.iter_mut().zip(&c.sum) {
            *x += y;
        }
        for (x, y) in sumsq.iter_mut().zip(&c.sumsq) {
            *x += y;
        }
        overflow = merge_overflow(overflow, c.overflow);
    }
    if let Some(o) = overflow {
        return Err(Error::Overflow { path: o.path.unwrap_or(0), step: o.step, time: o.time });
    }

    let n_paths = cfg_a.paths as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut metric = Vec::with_capacity(steps + 1);
    let mut stderr = Vec::with_capacity(steps + 1);
    for j in 0..=steps {
        times.push(j as f64 * ctx_a.dt);
        let mut best = f64::MIN;
        let mut best_se = 0.0;
        for m in 0..p {
            let mean = sum[j * p + m] / n_paths;
            if mean > best {
                best = mean;
                let var = ((sumsq[j * p + m] - sum[j * p + m] * sum[j * p + m] / n_paths)
                    / (n_paths - 1.0).max(1.0))
                .max(0.0);
                best_se = (var / n_paths).sqrt();
            }
        }
        metric.push(best);
        stderr.push(best_se);
    }
    Ok(BetaDifferenceTable { times, metric, stderr, p: p_exp })
}

#[allow(clippy::too_many_arguments)]
fn run_coupled_path(
    cfg: &SimulationConfig,
    ctx_a: &Context,
    ctx_b: &Context,
    path: usize,
    p_exp: f64,
    sa: &mut PathState,
    sb: &mut PathState,
    stats: &mut ChunkStats,
) -> Result<()> {
    let steps = cfg.steps;
    let (n, p) = (ctx_a.n, ctx_a.p);
    let mut rng = PathRng::new(cfg.seed, path as u64);
    sa.u.copy_from_slice(&ctx_a.v[0..p]);
    sb.u.copy_from_slice(&ctx_b.v[0..p]);
    record_diff(stats, 0, &sa.u, &sb.u, p, p_exp);

    for j in 0..steps {
        rng.begin_step(j as u64);
        ctx_a.noise.sample_increments(ctx_a.dt, &mut rng, &mut sa.dw, &mut sa.scratch);
        sb.dw.copy_from_slice(&sa.dw);

        for (ctx, st) in [(ctx_a, &mut *sa), (ctx_b, &mut *sb)] {
            if cfg.lambda > 0.0 {
                st.projected.iter_mut().for_each(|g| *g = 0.0);
                for k in 0..n {
                    let c = st.dw[k];
                    let row = &ctx.phi[k * p..(k + 1) * p];
                    for (g, f) in st.projected.iter_mut().zip(row) {
                        *g += c * f;
                    }
                }
                for m in 0..p {
                    let s = sandwiched_sigma(&cfg.sigma, st.u[m])?;
                    st.projected[m] *= ctx.grid.weights[m] * s;
                }
                let xi_row = &mut st.xi[j * n..(j + 1) * n];
                for k in 0..n {
                    let row = &ctx.phi[k * p..(k + 1) * p];
                    let mut acc = 0.0;
                    for (g, f) in st.projected.iter().zip(row) {
                        acc += g * f;
                    }
                    xi_row[k] = acc;
                }
                st.accum.iter_mut().for_each(|a| *a = 0.0);
                for i in 0..=j {
                    let lag = j + 1 - i;
                    let e_row = &ctx.e[lag * n..(lag + 1) * n];
                    let xi_row = &st.xi[i * n..(i + 1) * n];
                    for k in 0..n {
                        st.accum[k] += e_row[k] * xi_row[k];
                    }
                }
                st.u_next.copy_from_slice(&ctx.v[(j + 1) * p..(j + 2) * p]);
                for k in 0..n {
                    let c = cfg.lambda * st.accum[k];
                    let row = &ctx.phi[k * p..(k + 1) * p];
                    for (o, f) in st.u_next.iter_mut().zip(row) {
                        *o += c * f;
                    }
                }
            } else {
                st.u_next.copy_from_slice(&ctx.v[(j + 1) * p..(j + 2) * p]);
            }
        }

        let max_abs = sa
            .u_next
            .iter()
            .chain(sb.u_next.iter())
            .fold(0.0f64, |a, &x| a.max(x.abs()));
        if !(max_abs <= OVERFLOW_LIMIT) {
            let event =
                OverflowEvent { step: j + 1, time: (j + 1) as f64 * ctx_a.dt, path: Some(path) };
            stats.overflow = merge_overflow(stats.overflow, Some(event));
            return Ok(());
        }
        record_diff(stats, j + 1, &sa.u_next, &sb.u_next, p, p_exp);
        std::mem::swap(&mut sa.u, &mut sa.u_next);
        std::mem::swap(&mut sb.u, &mut sb.u_next);
    }
    Ok(())
}

fn record_diff(stats: &mut ChunkStats, j: usize, ua: &[f64], ub: &[f64], p: usize, p_exp: f64) {
    for m in 0..p {
        let d = (ua[m] - ub[m]).abs();
        let v = if d == 0.0 { 0.0 } else { d.powf(p_exp) };
        stats.sum[j * p + m] += v;
        stats.sumsq[j * p + m] += v * v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> SimulationConfig {
        SimulationConfig {
            domain: DomainSpec::interval(std::f64::consts::PI, 2.0).unwrap(),
            beta: FractionalOrder::new(0.75).unwrap(),
            lambda: 0.5,
            sigma: SigmaSpec::linear(1.0),
            noise: NoiseSpec::White,
            u0: InitialProfile::FirstEigenfunction,
            horizon: 4.0,
            steps: 64,
            modes: 12,
            grid_points: 32,
            paths: 64,
            seed: 77,
        }
    }

    #[test]
    fn lambda_zero_reduces_to_deterministic_evolution() {
        let mut cfg = base_config();
        cfg.lambda = 0.0;
        cfg.paths = 16;
        let mc = simulate_paths(&cfg).unwrap();
        let volterra = second_moment_volterra(&cfg).unwrap();
        assert_eq!(mc.len(), volterra.len());
        for j in 0..mc.len() {
            let rel = (mc.sup_moment[j] - volterra.sup_moment[j]).abs()
                / volterra.sup_moment[j].max(1e-300);
            assert!(rel < 1e-12, "step {j}: {rel}");
            // Identical paths: only accumulation rounding survives.
            assert!(mc.stderr.as_ref().unwrap()[j] <= 1e-8 * mc.sup_moment[j].max(1e-12));
        }
        // sigma = linear(0) behaves identically to lambda = 0.
        let mut cfg0 = base_config();
        cfg0.sigma = SigmaSpec::linear(0.0);
        cfg0.paths = 16;
        let mc0 = simulate_paths(&cfg0).unwrap();
        for j in 0..mc0.len() {
            let rel =
                (mc0.sup_moment[j] - volterra.sup_moment[j]).abs() / volterra.sup_moment[j];
            assert!(rel < 1e-10, "step {j}: {rel}");
        }
    }

    #[test]
    fn trajectory_starts_at_initial_projection() {
        let cfg = base_config();
        let traj = second_moment_volterra(&cfg).unwrap();
        // sup of phi_1^2 = 2/pi on [0, pi].
        let want = 2.0 / std::f64::consts::PI;
        assert!((traj.sup_moment[0] - want).abs() < 1e-3);
        assert_eq!(traj.times[0], 0.0);
    }

    #[test]
    fn reproducibility_same_seed_same_output() {
        let cfg = base_config();
        let a = simulate_paths(&cfg).unwrap();
        let b = simulate_paths(&cfg).unwrap();
        assert_eq!(a.sup_moment, b.sup_moment);
        assert_eq!(a.stderr.unwrap(), b.stderr.unwrap());

        let mut other = cfg.clone();
        other.seed = 78;
        let c = simulate_paths(&other).unwrap();
        assert_ne!(a.sup_moment, c.sup_moment);
    }

    #[test]
    fn volterra_monotone_in_lambda() {
        let mut cfg = base_config();
        let mut prev = None;
        for lam in [0.0, 0.25, 0.5, 1.0, 2.0] {
            cfg.lambda = lam;
            let traj = second_moment_volterra(&cfg).unwrap();
            let end = *traj.sup_moment.last().unwrap();
            if let Some(p) = prev {
                assert!(end >= p, "lambda {lam}: {end} < {p}");
            }
            prev = Some(end);
        }
    }

    #[test]
    fn colored_volterra_monotone_in_lambda_and_capped() {
        let mut cfg = base_config();
        cfg.domain = DomainSpec::interval(1.0, 2.0).unwrap();
        cfg.noise = NoiseSpec::Colored(CovKernel::riesz(0.5).unwrap());
        cfg.grid_points = 48;
        cfg.steps = 48;
        let mut prev = None;
        for lam in [0.0, 0.5, 1.0] {
            cfg.lambda = lam;
            let traj = second_moment_volterra(&cfg).unwrap();
            let end = *traj.sup_moment.last().unwrap();
            if let Some(p) = prev {
                assert!(end >= p);
            }
            prev = Some(end);
        }
        cfg.grid_points = 128;
        assert!(second_moment_volterra(&cfg).is_err());
    }

    #[test]
    fn monte_carlo_tracks_volterra_oracle() {
        // Moderate noise level; the closed equation is the oracle.
        let mut cfg = base_config();
        cfg.paths = 512;
        cfg.steps = 48;
        cfg.horizon = 3.0;
        let mc = simulate_paths(&cfg).unwrap();
        let volterra = second_moment_volterra(&cfg).unwrap();
        let se = mc.stderr.as_ref().unwrap();
        let mut within = 0;
        let mut total = 0;
        for j in 1..mc.len() {
            total += 1;
            if (mc.sup_moment[j] - volterra.sup_moment[j]).abs() <= 3.0 * se[j] {
                within += 1;
            }
        }
        assert!(
            within as f64 >= 0.9 * total as f64,
            "only {within}/{total} grid times within 3 SE"
        );
    }

    #[test]
    fn dimension_bound_enforced_for_white_noise() {
        let mut cfg = base_config();
        // d = 2, alpha = 2, beta = 0.75 -> bound (2 min 4/3)*2 = 8/3 > 2: fine.
        cfg.domain = DomainSpec::rect_box(&[1.0, 1.0], 2.0).unwrap();
        cfg.modes = 6;
        cfg.grid_points = 8;
        cfg.steps = 8;
        cfg.paths = 4;
        assert!(simulate_paths(&cfg).is_ok());
        // beta = 0.4 -> bound (2 min 2.5)*... = 2*... wait (2 min 1/0.4=2.5)=2, *alpha=2 -> 4 > 2 ok.
        // alpha = 0.9 in d = 2: bound <= 1.8 <= 2 -> rejected.
        cfg.domain = DomainSpec::rect_box(&[1.0, 1.0], 0.9).unwrap();
        assert!(simulate_paths(&cfg).is_err());
    }

    #[test]
    fn sigma_sandwich_violation_detected() {
        let mut cfg = base_config();
        cfg.steps = 8;
        cfg.paths = 4;
        // Declared slopes [1, 1] but actual sigma is 2u: caught at
        // construction already, so build the spec bypassing the samples.
        let bad = SigmaSpec {
            kind: SigmaKind::Custom(Arc::new(|u: f64| 2.0 * u)),
            lower: 1.0,
            upper: 1.0,
        };
        cfg.sigma = bad;
        assert!(simulate_paths(&cfg).is_err());
        assert!(SigmaSpec::custom(Arc::new(|u: f64| 2.0 * u), 1.0, 1.0).is_err());
        assert!(
            SigmaSpec::custom(Arc::new(|u: f64| u * (1.0 + 0.5 * u.cos())), 0.5, 1.5).is_ok()
        );
    }

    #[test]
    fn coupled_difference_vanishes_at_equal_orders() {
        let mut cfg = base_config();
        cfg.paths = 32;
        cfg.steps = 32;
        let table = coupled_beta_difference(&cfg, &cfg, 2.0).unwrap();
        for (j, &m) in table.metric.iter().enumerate() {
            assert_eq!(m, 0.0, "step {j}");
            assert_eq!(table.stderr[j], 0.0);
        }
    }

    #[test]
    fn coupled_difference_shrinks_as_orders_approach() {
        let cfg = base_config();
        let mut near = cfg.clone();
        near.beta = FractionalOrder::new(0.78).unwrap();
        let mut far = cfg.clone();
        far.beta = FractionalOrder::new(0.9).unwrap();
        let d_near = coupled_beta_difference(&cfg, &near, 2.0).unwrap();
        let d_far = coupled_beta_difference(&cfg, &far, 2.0).unwrap();
        let end = d_near.metric.len() - 1;
        assert!(
            d_near.metric[end] < d_far.metric[end],
            "{} vs {}",
            d_near.metric[end],
            d_far.metric[end]
        );
        assert_eq!(d_near.metric[0], 0.0);
    }

    #[test]
    fn coupled_difference_rejects_mismatched_configs() {
        let cfg = base_config();
        let mut other = cfg.clone();
        other.beta = FractionalOrder::new(0.8).unwrap();
        other.steps = 128;
        assert!(coupled_beta_difference(&cfg, &other, 2.0).is_err());

        let mut low = cfg.clone();
        low.beta = FractionalOrder::new(0.4).unwrap();
        assert!(coupled_beta_difference(&cfg, &low, 2.0).is_err());

        assert!(coupled_beta_difference(&cfg, &cfg, 1.0).is_err());
    }

    #[test]
    fn volterra_endpoint_drift_small_on_fine_grids() {
        let mut cfg = base_config();
        cfg.steps = 96;
        let drift = volterra_endpoint_drift(&cfg).unwrap();
        assert!(drift < 0.05, "drift {drift}");
    }
}

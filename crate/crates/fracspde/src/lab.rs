//! Experiment runner: long-time growth/decay classification of moment
//! trajectories, (beta, lambda) phase sweeps, the no-exponential-decay
//! check, coupled continuity studies in the fractional order, and result
//! persistence (config echo, CSV trajectory, JSON summary, gnuplot script).

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mlf::FractionalOrder;
use crate::solver::{
    self, BetaDifferenceTable, MomentTrajectory, SimulationConfig,
};
use crate::spectra::least_squares;

/// Log-slope above which a fitted tail counts as growth.
pub const GROWTH_SLOPE: f64 = 0.05;
/// Log-slope magnitude below which a rising tail still counts as flat.
pub const FLAT_SLOPE: f64 = 0.01;
/// Minimum fit quality for a growth verdict.
pub const R2_MIN: f64 = 0.9;
/// Minimum number of points in the [T/2, T] fit window.
pub const MIN_TAIL_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Growth,
    Bounded,
    Inconclusive,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Growth => "growth",
            Self::Bounded => "bounded",
            Self::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

/// Outcome of fitting log(sup moment) over the tail window.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub classification: Classification,
    /// Fitted exponential rate; present only for growth.
    pub rate: Option<f64>,
    /// Half-width of a 95% confidence interval on the rate.
    pub rate_ci: Option<f64>,
    pub r2: f64,
    /// Fitted tail slope regardless of classification.
    pub tail_slope: f64,
    /// Fit window in time.
    pub window: (f64, f64),
    /// The trajectory left the representable range at this time.
    pub overflow_at: Option<f64>,
}

/// Linear regression of log(sup_moment) on t over [T/2, T]. A slope above
/// [`GROWTH_SLOPE`] with good fit is growth; a tail that is flat (within
/// [`FLAT_SLOPE`]) or decreasing is bounded; trajectories that overflowed
/// are growth with the rate taken from the pre-overflow window. Anything
/// else stays inconclusive, a dead band that keeps near-threshold cells
/// from flapping.
pub fn classify_growth(traj: &MomentTrajectory) -> Result<GrowthReport> {
    let horizon = traj.horizon();
    let t_lo = 0.5 * horizon;
    let idx: Vec<usize> =
        (0..traj.len()).filter(|&j| traj.times[j] >= t_lo).collect();
    let needed = if traj.overflow.is_some() { 4 } else { MIN_TAIL_POINTS };
    if idx.len() < needed {
        return Err(Error::TooFewPoints { needed, got: idx.len() });
    }

    let xs: Vec<f64> = idx.iter().map(|&j| traj.times[j]).collect();
    let ys: Vec<f64> = idx.iter().map(|&j| traj.sup_moment[j].max(1e-300).ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);

    let mean_y = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };

    // 95% half-width on the slope.
    let n = xs.len() as f64;
    let sx = xs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - sx).powi(2)).sum();
    let dof = (n - 2.0).max(1.0);
    let slope_se = (ss_res / dof / sxx.max(f64::MIN_POSITIVE)).sqrt();
    let ci = 1.96 * slope_se;

    let mut tail: Vec<f64> = idx.iter().map(|&j| traj.sup_moment[j]).collect();
    let tail_sup = tail.iter().copied().fold(f64::MIN, f64::max);
    tail.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tail_median = tail[tail.len() / 2];

    let window = (t_lo, horizon);
    let overflow_at = traj.overflow.map(|o| o.time);

    let classification = if traj.overflow.is_some() || (slope > GROWTH_SLOPE && r2 >= R2_MIN) {
        Classification::Growth
    } else if slope <= FLAT_SLOPE && (slope <= 0.0 || tail_sup <= 1.1 * tail_median) {
        // Flat or decaying tails are bounded; only a sustained upward trend
        // is excluded.
        Classification::Bounded
    } else {
        Classification::Inconclusive
    };

    let (rate, rate_ci) = match classification {
        Classification::Growth => (Some(slope), Some(ci)),
        _ => (None, None),
    };
    Ok(GrowthReport { classification, rate, rate_ci, r2, tail_slope: slope, window, overflow_at })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Volterra,
    MonteCarlo,
}

/// Classified (beta, lambda) grid, row-major in beta.
#[derive(Debug, Clone)]
pub struct PhaseDiagram {
    pub betas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub cells: Vec<GrowthReport>,
    pub noise: String,
    /// Per beta column with beta > 1/2: empirical threshold interval
    /// (largest bounded lambda, smallest growth lambda), when both exist.
    pub thresholds: Vec<(f64, Option<(f64, f64)>)>,
}

impl PhaseDiagram {
    pub fn cell(&self, bi: usize, li: usize) -> &GrowthReport {
        &self.cells[bi * self.lambdas.len() + li]
    }
}

/// Runs one classified cell per (beta, lambda) pair. Cells execute on the
/// worker pool and are collected in grid order, so the diagram is
/// deterministic for a fixed seed.
pub fn phase_sweep(
    base: &SimulationConfig,
    betas: &[f64],
    lambdas: &[f64],
    route: Route,
) -> Result<PhaseDiagram> {
    if betas.is_empty() || lambdas.is_empty() {
        return Err(Error::InvalidConfig("empty sweep grid".into()));
    }
    for g in [betas, lambdas] {
        if g.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("sweep axes must be strictly increasing".into()));
        }
    }
    if route == Route::Volterra && base.sigma.as_linear().is_none() {
        return Err(Error::InvalidConfig("the volterra route requires linear sigma".into()));
    }

    let jobs: Vec<(usize, usize)> = (0..betas.len())
        .flat_map(|bi| (0..lambdas.len()).map(move |li| (bi, li)))
        .collect();
    let cells: Result<Vec<GrowthReport>> = jobs
        .par_iter()
        .map(|&(bi, li)| {
            let mut cfg = base.clone();
            cfg.beta = FractionalOrder::new(betas[bi])?;
            cfg.lambda = lambdas[li];
            let traj = match route {
                Route::Volterra => solver::second_moment_volterra(&cfg)?,
                Route::MonteCarlo => solver::simulate_paths(&cfg)?,
            };
            classify_growth(&traj)
        })
        .collect();
    let cells = cells?;

    let mut thresholds = Vec::new();
    for (bi, &beta) in betas.iter().enumerate() {
        if beta <= 0.5 {
            continue;
        }
        let row = &cells[bi * lambdas.len()..(bi + 1) * lambdas.len()];
        let max_bounded = lambdas
            .iter()
            .zip(row)
            .filter(|(_, r)| r.classification == Classification::Bounded)
            .map(|(l, _)| *l)
            .fold(f64::NAN, f64::max);
        let min_growth = lambdas
            .iter()
            .zip(row)
            .filter(|(_, r)| r.classification == Classification::Growth)
            .map(|(l, _)| *l)
            .fold(f64::NAN, f64::min);
        let interval = if max_bounded.is_nan() || min_growth.is_nan() {
            None
        } else {
            Some((max_bounded, min_growth))
        };
        thresholds.push((beta, interval));
    }

    Ok(PhaseDiagram {
        betas: betas.to_vec(),
        lambdas: lambdas.to_vec(),
        cells,
        noise: base.noise.label(),
        thresholds,
    })
}

/// Verdict of the no-exponential-decay comparison against the lambda = 0
/// baseline at the same order.
#[derive(Debug, Clone, Serialize)]
pub struct NoDecayReport {
    pub pass: bool,
    pub tail_slope: f64,
    pub baseline_slope: f64,
    /// sup_moment(T) >= c T^(-2 beta) sup_moment(1) with c fitted from the
    /// baseline run.
    pub floor_ok: bool,
    pub slope_ok: bool,
}

/// Checks that a stochastic trajectory never decays faster than the
/// deterministic Mittag-Leffler tail: the fitted tail slope may not undercut
/// the baseline's by more than 10%, and the endpoint must respect the
/// polynomial floor calibrated on the baseline.
pub fn no_exponential_decay_check(
    traj: &MomentTrajectory,
    baseline_lambda0: &MomentTrajectory,
    beta: FractionalOrder,
) -> Result<NoDecayReport> {
    if traj.overflow.is_some() {
        // Grew beyond range: decay is out of the question.
        return Ok(NoDecayReport {
            pass: true,
            tail_slope: f64::INFINITY,
            baseline_slope: 0.0,
            floor_ok: true,
            slope_ok: true,
        });
    }
    let fit = classify_growth(traj)?;
    let base_fit = classify_growth(baseline_lambda0)?;
    let slope_floor = 1.1 * base_fit.tail_slope.min(0.0);
    let slope_ok = fit.tail_slope >= slope_floor;

    // c from the baseline: c = base(T) T^(2 beta) / base(1).
    let horizon = baseline_lambda0.horizon();
    let at = |tr: &MomentTrajectory, t: f64| -> f64 {
        let j = tr
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - t).abs().partial_cmp(&(b.1 - t).abs()).unwrap()
            })
            .map(|(j, _)| j)
            .unwrap();
        tr.sup_moment[j]
    };
    let tb = horizon.powf(-2.0 * beta.value());
    let c = at(baseline_lambda0, horizon) / (tb * at(baseline_lambda0, 1.0)).max(f64::MIN_POSITIVE);
    let floor_ok =
        at(traj, horizon) >= c * tb * at(traj, 1.0) * (1.0 - 1e-9);

    Ok(NoDecayReport {
        pass: slope_ok && floor_ok,
        tail_slope: fit.tail_slope,
        baseline_slope: base_fit.tail_slope,
        floor_ok,
        slope_ok,
    })
}

/// One gamma row of a continuity experiment.
#[derive(Debug, Clone)]
pub struct ContinuityRow {
    pub gamma: f64,
    pub table: BetaDifferenceTable,
}

#[derive(Debug, Clone)]
pub struct ContinuityTable {
    pub beta: f64,
    pub p: f64,
    pub rows: Vec<ContinuityRow>,
    /// Horizon metric decreases along gamma -> beta, within twice the
    /// combined standard errors.
    pub monotone_at_horizon: bool,
}

/// Coupled continuity study: for each gamma, runs the gamma and beta
/// dynamics on identical noise and tabulates sup_x E|u^(gamma) - u^(beta)|^p
/// over time.
pub fn continuity_experiment(
    base: &SimulationConfig,
    beta: FractionalOrder,
    gammas: &[f64],
    p: f64,
) -> Result<ContinuityTable> {
    if gammas.is_empty() {
        return Err(Error::InvalidConfig("no comparison orders given".into()));
    }
    let mut cfg_beta = base.clone();
    cfg_beta.beta = beta;
    let mut rows = Vec::with_capacity(gammas.len());
    for &g in gammas {
        let mut cfg_gamma = base.clone();
        cfg_gamma.beta = FractionalOrder::new(g)?;
        let table = solver::coupled_beta_difference(&cfg_beta, &cfg_gamma, p)?;
        rows.push(ContinuityRow { gamma: g, table });
    }

    // Sort by distance from beta, farthest first, and require the horizon
    // metric to decrease within noise.
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| {
        let da = (rows[a].gamma - beta.value()).abs();
        let db = (rows[b].gamma - beta.value()).abs();
        db.partial_cmp(&da).unwrap()
    });
    let mut monotone = true;
    for w in order.windows(2) {
        let (a, b) = (&rows[w[0]].table, &rows[w[1]].table);
        let end_a = a.metric.len() - 1;
        let end_b = b.metric.len() - 1;
        let slack = 2.0 * (a.stderr[end_a] + b.stderr[end_b]);
        if b.metric[end_b] > a.metric[end_a] + slack {
            monotone = false;
        }
    }

    Ok(ContinuityTable { beta: beta.value(), p, rows, monotone_at_horizon: monotone })
}

/// CSV rendering: `t,sup_moment,stderr` (stderr empty for deterministic
/// routes). Floats use the shortest round-trip form, so identical runs are
/// byte-identical.
pub fn trajectory_csv(traj: &MomentTrajectory) -> String {
    let mut out = String::from("t,sup_moment,stderr\n");
    for j in 0..traj.len() {
        let se = traj
            .stderr
            .as_ref()
            .map(|s| s[j].to_string())
            .unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", traj.times[j], traj.sup_moment[j], se));
    }
    out
}

/// CSV rendering of a phase diagram: `beta,lambda,classification,rate,r2`.
pub fn diagram_csv(diagram: &PhaseDiagram) -> String {
    let mut out = String::from("beta,lambda,classification,rate,r2\n");
    for (bi, &beta) in diagram.betas.iter().enumerate() {
        for (li, &lambda) in diagram.lambdas.iter().enumerate() {
            let cell = diagram.cell(bi, li);
            let rate = cell.rate.map(|r| r.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{beta},{lambda},{},{rate},{}\n",
                cell.classification, cell.r2
            ));
        }
    }
    out
}

/// CSV rendering of a continuity table: `gamma,t,metric,stderr`.
pub fn continuity_csv(table: &ContinuityTable) -> String {
    let mut out = String::from("gamma,t,metric,stderr\n");
    for row in &table.rows {
        for j in 0..row.table.times.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.gamma, row.table.times[j], row.table.metric[j], row.table.stderr[j]
            ));
        }
    }
    out
}

#[derive(Serialize)]
struct Summary<'a> {
    classification: &'a str,
    rate: Option<f64>,
    ci: Option<f64>,
    r2: f64,
    tail_slope: f64,
    overflow_at: Option<f64>,
}

/// Writes `config.echo`, `trajectory.csv`, `summary.json` and `plot.gp`
/// into `dir` (created if missing).
pub fn persist_run(
    dir: &Path,
    config_echo: &str,
    traj: &MomentTrajectory,
    report: &GrowthReport,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.echo"), config_echo)?;
    std::fs::write(dir.join("trajectory.csv"), trajectory_csv(traj))?;

    let summary = Summary {
        classification: match report.classification {
            Classification::Growth => "growth",
            Classification::Bounded => "bounded",
            Classification::Inconclusive => "inconclusive",
        },
        rate: report.rate,
        ci: report.rate_ci,
        r2: report.r2,
        tail_slope: report.tail_slope,
        overflow_at: report.overflow_at,
    };
    let mut f = std::fs::File::create(dir.join("summary.json"))?;
    writeln!(f, "{}", serde_json::to_string_pretty(&summary).expect("serializable"))?;

    std::fs::write(dir.join("plot.gp"), PLOT_SCRIPT)?;
    Ok(())
}

const PLOT_SCRIPT: &str = "set datafile separator ','\n\
set logscale y\n\
set xlabel 't'\n\
set ylabel 'sup_x E|u_t(x)|^2'\n\
set key left top\n\
plot 'trajectory.csv' using 1:2 skip 1 with lines title 'second moment'\n";

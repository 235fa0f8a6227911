//! Flat `key = value` run configuration.
//!
//! ```text
//! # space-time fractional stochastic heat equation run
//! domain = interval:3.141592653589793
//! alpha  = 2.0
//! beta   = 0.75
//! lambda = 0.5
//! sigma  = linear:1.0
//! noise.kind = white
//! u0     = phi1
//! T      = 20.0
//! steps  = 256
//! modes  = 32
//! grid   = 64
//! paths  = 2000
//! seed   = 42
//! ```
//!
//! `FRACSPDE_SEED` in the environment overrides the file's seed; an explicit
//! `--seed` flag on the command line overrides both.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mlf::FractionalOrder;
use crate::noise::CovKernel;
use crate::solver::{InitialProfile, NoiseSpec, SigmaSpec, SimulationConfig};
use crate::spectra::DomainSpec;

pub const SEED_ENV_VAR: &str = "FRACSPDE_SEED";

/// Parses the flat text format into a simulation config. Unknown keys are
/// rejected so typos cannot silently fall back to defaults.
pub fn parse_config(text: &str) -> Result<SimulationConfig> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::ConfigParse {
                line: lineno + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if map.insert(key.clone(), (lineno + 1, value)).is_some() {
            return Err(Error::ConfigParse { line: lineno + 1, msg: format!("duplicate key `{key}`") });
        }
    }

    let known = [
        "domain", "alpha", "beta", "lambda", "sigma", "noise.kind", "noise.gamma", "noise.delta",
        "u0", "T", "steps", "modes", "grid", "paths", "seed",
    ];
    for (key, (line, _)) in &map {
        if !known.contains(&key.as_str()) {
            return Err(Error::ConfigParse { line: *line, msg: format!("unknown key `{key}`") });
        }
    }

    let get = |key: &str| map.get(key).map(|(_, v)| v.as_str());
    let require = |key: &str| {
        get(key).ok_or_else(|| Error::InvalidConfig(format!("missing required key `{key}`")))
    };

    let alpha: f64 = parse_num(require("alpha")?, "alpha")?;
    let domain = parse_domain(require("domain")?, alpha)?;
    let beta = FractionalOrder::new(parse_num(require("beta")?, "beta")?)?;
    let lambda: f64 = parse_num(require("lambda")?, "lambda")?;

    let sigma = match get("sigma") {
        None => SigmaSpec::linear(1.0),
        Some(s) => parse_sigma(s)?,
    };
    let noise = match get("noise.kind").unwrap_or("white") {
        "white" => NoiseSpec::White,
        "riesz" => {
            let gamma: f64 = parse_num(
                get("noise.gamma")
                    .ok_or_else(|| Error::InvalidConfig("riesz noise needs noise.gamma".into()))?,
                "noise.gamma",
            )?;
            NoiseSpec::Colored(CovKernel::riesz(gamma)?)
        }
        "exponential" => NoiseSpec::Colored(CovKernel::ExponentialType),
        "ornstein_uhlenbeck" => {
            let delta: f64 = parse_num(
                get("noise.delta").ok_or_else(|| {
                    Error::InvalidConfig("ornstein_uhlenbeck noise needs noise.delta".into())
                })?,
                "noise.delta",
            )?;
            NoiseSpec::Colored(CovKernel::ornstein_uhlenbeck(delta)?)
        }
        "poisson" => NoiseSpec::Colored(CovKernel::Poisson),
        "cauchy" => NoiseSpec::Colored(CovKernel::Cauchy),
        other => {
            return Err(Error::InvalidConfig(format!("unknown noise kind `{other}`")));
        }
    };
    let u0 = match get("u0").unwrap_or("phi1") {
        "phi1" => InitialProfile::FirstEigenfunction,
        "bump" => InitialProfile::Bump,
        other => match other.strip_prefix("const:") {
            Some(c) => InitialProfile::Constant(parse_num(c, "u0 level")?),
            None => {
                return Err(Error::InvalidConfig(format!("unknown initial profile `{other}`")));
            }
        },
    };

    let horizon: f64 = match get("T") {
        Some(v) => parse_num(v, "T")?,
        None => 20.0,
    };
    let steps = match get("steps") {
        Some(v) => parse_num::<usize>(v, "steps")?,
        None => 256,
    };
    let modes = match get("modes") {
        Some(v) => parse_num::<usize>(v, "modes")?,
        None => {
            if domain.dim() == 1 {
                32
            } else {
                64
            }
        }
    };
    let grid_points = match get("grid") {
        Some(v) => parse_num::<usize>(v, "grid")?,
        None => {
            if domain.dim() == 1 {
                64
            } else {
                16
            }
        }
    };
    let paths = match get("paths") {
        Some(v) => parse_num::<usize>(v, "paths")?,
        None => 2000,
    };
    let seed = match get("seed") {
        Some(v) => parse_num::<u64>(v, "seed")?,
        None => 1,
    };

    let cfg = SimulationConfig {
        domain,
        beta,
        lambda,
        sigma,
        noise,
        u0,
        horizon,
        steps,
        modes,
        grid_points,
        paths,
        seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Loads a config file and applies the `FRACSPDE_SEED` override.
pub fn load_config(path: &Path) -> Result<SimulationConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = parse_config(&text)?;
    if let Ok(s) = std::env::var(SEED_ENV_VAR) {
        cfg.seed = s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("{SEED_ENV_VAR} must be a u64, got `{s}`")))?;
    }
    Ok(cfg)
}

/// Canonical echo of an effective configuration, suitable for re-parsing.
pub fn config_echo(cfg: &SimulationConfig) -> String {
    let domain = match cfg.domain.dim() {
        1 => format!("interval:{}", cfg.domain.lengths()[0]),
        _ => format!(
            "box:{}",
            cfg.domain
                .lengths()
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ),
    };
    let sigma = match cfg.sigma.as_linear() {
        Some(c) => format!("linear:{c}"),
        None => format!("custom(l={},L={})", cfg.sigma.lower_slope(), cfg.sigma.upper_slope()),
    };
    let u0 = match &cfg.u0 {
        InitialProfile::FirstEigenfunction => "phi1".to_string(),
        InitialProfile::Constant(c) => format!("const:{c}"),
        InitialProfile::Bump => "bump".to_string(),
    };
    let mut out = String::new();
    out.push_str(&format!("domain = {domain}\n"));
    out.push_str(&format!("alpha = {}\n", cfg.domain.alpha()));
    out.push_str(&format!("beta = {}\n", cfg.beta.value()));
    out.push_str(&format!("lambda = {}\n", cfg.lambda));
    out.push_str(&format!("sigma = {sigma}\n"));
    match &cfg.noise {
        NoiseSpec::White => out.push_str("noise.kind = white\n"),
        NoiseSpec::Colored(k) => match k {
            CovKernel::Riesz { gamma } => {
                out.push_str("noise.kind = riesz\n");
                out.push_str(&format!("noise.gamma = {gamma}\n"));
            }
            CovKernel::ExponentialType => out.push_str("noise.kind = exponential\n"),
            CovKernel::OrnsteinUhlenbeck { delta } => {
                out.push_str("noise.kind = ornstein_uhlenbeck\n");
                out.push_str(&format!("noise.delta = {delta}\n"));
            }
            CovKernel::Poisson => out.push_str("noise.kind = poisson\n"),
            CovKernel::Cauchy => out.push_str("noise.kind = cauchy\n"),
        },
    }
    out.push_str(&format!("u0 = {u0}\n"));
    out.push_str(&format!("T = {}\n", cfg.horizon));
    out.push_str(&format!("steps = {}\n", cfg.steps));
    out.push_str(&format!("modes = {}\n", cfg.modes));
    out.push_str(&format!("grid = {}\n", cfg.grid_points));
    out.push_str(&format!("paths = {}\n", cfg.paths));
    out.push_str(&format!("seed = {}\n", cfg.seed));
    out
}

/// `interval:L` or `box:L1,L2[,...]`.
pub fn parse_domain(text: &str, alpha: f64) -> Result<DomainSpec> {
    if let Some(rest) = text.strip_prefix("interval:") {
        return DomainSpec::interval(parse_num(rest, "interval length")?, alpha);
    }
    if let Some(rest) = text.strip_prefix("box:") {
        let lengths: Result<Vec<f64>> =
            rest.split([',', 'x']).map(|s| parse_num(s, "box side")).collect();
        return DomainSpec::rect_box(&lengths?, alpha);
    }
    Err(Error::InvalidConfig(format!(
        "domain must look like interval:LENGTH or box:L1,L2, got `{text}`"
    )))
}

/// `linear:C`.
pub fn parse_sigma(text: &str) -> Result<SigmaSpec> {
    match text.strip_prefix("linear:") {
        Some(c) => Ok(SigmaSpec::linear(parse_num(c, "sigma slope")?)),
        None => Err(Error::InvalidConfig(format!(
            "sigma must look like linear:C in config files, got `{text}`"
        ))),
    }
}

/// `riesz:0.5`, `ornstein_uhlenbeck:1.0`, `exponential`, `poisson`, `cauchy`.
pub fn parse_cov_kernel(text: &str) -> Result<CovKernel> {
    if let Some(g) = text.strip_prefix("riesz:") {
        return CovKernel::riesz(parse_num(g, "riesz exponent")?);
    }
    if let Some(d) = text.strip_prefix("ornstein_uhlenbeck:") {
        return CovKernel::ornstein_uhlenbeck(parse_num(d, "ou exponent")?);
    }
    match text {
        "exponential" => Ok(CovKernel::ExponentialType),
        "poisson" => Ok(CovKernel::Poisson),
        "cauchy" => Ok(CovKernel::Cauchy),
        other => Err(Error::InvalidConfig(format!("unknown covariance kernel `{other}`"))),
    }
}

/// Comma-separated list of floats.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',').map(|s| parse_num(s, "list entry")).collect()
}

/// `start:stop:step` inclusive grid, or a comma list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let start: f64 = parse_num(parts[0], "grid start")?;
        let stop: f64 = parse_num(parts[1], "grid stop")?;
        let step: f64 = parse_num(parts[2], "grid step")?;
        if !(step > 0.0) || stop < start {
            return Err(Error::InvalidConfig(format!("bad grid range `{text}`")));
        }
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let v = start + k as f64 * step;
            if v > stop + 1e-12 * step {
                break;
            }
            out.push(v);
            k += 1;
        }
        return Ok(out);
    }
    parse_list(text)
}

fn parse_num<T: std::str::FromStr>(text: &str, what: &str) -> Result<T> {
    text.trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("cannot parse {what} from `{text}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# growth run
domain = interval:3.141592653589793
alpha = 2.0
beta = 0.4          # fractional order
lambda = 0.5
sigma = linear:20.0
noise.kind = white
u0 = phi1
T = 20.0
steps = 256
modes = 24
grid = 64
paths = 100
seed = 7
";

    #[test]
    fn parses_and_echoes_round_trip() {
        let cfg = parse_config(SAMPLE).unwrap();
        assert_eq!(cfg.steps, 256);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.beta.value(), 0.4);
        assert_eq!(cfg.sigma.as_linear(), Some(20.0));
        let echo = config_echo(&cfg);
        let cfg2 = parse_config(&echo).unwrap();
        assert_eq!(config_echo(&cfg2), echo);
    }

    #[test]
    fn defaults_fill_missing_keys() {
        let cfg = parse_config("domain = interval:1.0\nalpha = 2\nbeta = 0.75\nlambda = 0\n")
            .unwrap();
        assert_eq!(cfg.steps, 256);
        assert_eq!(cfg.modes, 32);
        assert_eq!(cfg.grid_points, 64);
        assert_eq!(cfg.paths, 2000);
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.u0, InitialProfile::FirstEigenfunction);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let bad = "domain = interval:1.0\nalpha = 2\nbeta = 0.5\nlambda = 0\nbogus = 1\n";
        assert!(matches!(parse_config(bad), Err(Error::ConfigParse { line: 5, .. })));
        let dup = "domain = interval:1.0\ndomain = interval:2.0\nalpha = 2\nbeta = 0.5\nlambda = 0\n";
        assert!(matches!(parse_config(dup), Err(Error::ConfigParse { line: 2, .. })));
    }

    #[test]
    fn colored_noise_parsing() {
        let text = "domain = interval:1.0\nalpha = 2\nbeta = 0.75\nlambda = 1\n\
                    noise.kind = riesz\nnoise.gamma = 0.5\n";
        let cfg = parse_config(text).unwrap();
        assert!(matches!(cfg.noise, NoiseSpec::Colored(CovKernel::Riesz { .. })));
        // Riesz admissibility is enforced through validate().
        let bad = "domain = interval:1.0\nalpha = 0.4\nbeta = 0.3\nlambda = 1\n\
                   noise.kind = riesz\nnoise.gamma = 0.5\n";
        assert!(parse_config(bad).is_err());
    }

    #[test]
    fn grid_and_list_parsers() {
        let grid = parse_grid("0.3:0.9:0.15").unwrap();
        let want = [0.3, 0.45, 0.6, 0.75, 0.9];
        assert_eq!(grid.len(), want.len());
        for (g, w) in grid.iter().zip(want) {
            assert!((g - w).abs() < 1e-12);
        }
        assert_eq!(parse_grid("0.05,0.5,1").unwrap(), vec![0.05, 0.5, 1.0]);
        assert!(parse_grid("1:0:0.1").is_err());
        let domain = parse_domain("box:1.0,2.0", 2.0).unwrap();
        assert_eq!(domain.dim(), 2);
        assert!(parse_domain("disc:1.0", 2.0).is_err());
        assert!(parse_cov_kernel("riesz:0.5").is_ok());
        assert!(parse_cov_kernel("weird").is_err());
    }

    #[test]
    fn seed_env_override() {
        let dir = std::env::temp_dir().join(format!("fracspde-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, SAMPLE).unwrap();
        // Serializes access to the process environment within this test.
        unsafe { std::env::set_var(SEED_ENV_VAR, "4242") };
        let cfg = load_config(&path).unwrap();
        unsafe { std::env::remove_var(SEED_ENV_VAR) };
        assert_eq!(cfg.seed, 4242);
        let cfg = load_config(&path).unwrap();
        assert_eq!(cfg.seed, 7);
        std::fs::remove_dir_all(&dir).ok();
    }
}

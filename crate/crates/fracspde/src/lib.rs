//! Numerical laboratory for space-time fractional stochastic heat equations
//!
//! ```text
//! d^beta/dt^beta u = -(-Laplace)^(alpha/2) u + I_t^(1-beta)[lambda sigma(u) noise]
//! ```
//!
//! on bounded Dirichlet domains, discretized by spectral collocation. The
//! crate provides the Mittag-Leffler machinery, Dirichlet eigenbases on
//! intervals and boxes, the fractional heat kernel, white/colored spatial
//! noise models, two routes to second moments (Monte Carlo sampling of the
//! mild solution and a deterministic Volterra solver), and an experiment
//! runner that classifies long-time growth versus boundedness as the noise
//! level and the time order vary.

pub mod config;
pub mod error;
pub mod kernel;
pub mod lab;
pub mod mlf;
pub mod noise;
pub mod quad;
pub mod rng;
pub mod solver;
pub mod spectra;

pub use error::{Error, Result};

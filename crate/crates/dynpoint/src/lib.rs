//! Simulation and numerical verification of local additive functionals of a
//! birth-death-Brownian point process on the flat torus.
//!
//! Points arrive as a Poisson stream on `T^d = [-1/2, 1/2)^d`, live
//! exponential lifetimes, and diffuse as Brownian motions while alive. The
//! observable is the sum of a local interaction functional (e.g. a subgraph
//! count of the geometric graph) over all k-subsets of the alive
//! configuration. The crate provides:
//!
//! - exact torus geometry ([`torus`]),
//! - two distributionally equivalent simulators, marked and event-driven
//!   ([`process`]),
//! - interaction functionals with cell-list evaluation ([`functional`]),
//! - Monte-Carlo moment machinery for the exact finite-intensity mean,
//!   variance and lag correlations ([`moments`]),
//! - the three-regime limiting covariance structures and regime
//!   classification ([`limits`]),
//! - empirical covariance, integrated-process and Gaussianity estimators plus
//!   a generalized Mecke-identity checker ([`estimator`], [`mecke`]),
//! - reproducible experiment orchestration behind the `dynpoint` binary
//!   ([`cli`], [`config`]).
//!
//! See the `examples/` directory for one runnable example per capability.

pub mod cli;
pub mod config;
pub mod error;
pub mod estimator;
pub mod functional;
pub mod limits;
pub mod mecke;
pub mod moments;
pub mod output;
pub mod process;
pub mod rng;
pub mod torus;

pub use error::{Error, Result};

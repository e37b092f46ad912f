//! Shortest probability intervals from Monte Carlo draws.
//!
//! The empirical shortest interval of a simulation sample is a consistent but
//! noisy estimate of the highest-density interval. This crate replaces each of
//! its endpoints with an optimally weighted average of nearby order statistics:
//! the weights minimise an asymptotic mean-squared-error expansion under a
//! triangle-kernel constraint set (a small quadratic program), and are then
//! averaged over bootstrap resamples before being applied to the original draws.
//!
//! Module map:
//!
//! - [`samples`]: sorted draws, interval results, weight kernels.
//! - [`empirical`]: empirical shortest, empirical central and Gaussian-fit intervals.
//! - [`moments`]: Gaussian KDE and order-statistic moment approximations.
//! - [`qp`]: construction of the weighting problem and a dense active-set solver.
//! - [`spin`]: the bootstrap-smoothed estimator and its central-interval variant.
//! - [`distributions`]: analytic test distributions with exact HPD oracles.
//! - [`bench`]: replication harness producing RMSE / coverage / efficiency reports.
//! - [`rng`]: seedable, portable random streams with deterministic substreams.

pub mod bench;
pub mod distributions;
pub mod empirical;
mod error;
pub mod linalg;
pub mod moments;
pub mod qp;
pub mod rng;
pub mod samples;
pub mod spin;

pub use error::{Result, SpinError};
pub use samples::{IntervalEstimate, Method, SortedSample, WeightKernel};
pub use spin::{SpinConfig, SpinResult};

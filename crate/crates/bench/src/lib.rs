//! Fixtures shared by the criterion benchmarks.

use spin_core::distributions::{sample_iid, TestDistribution};
use spin_core::empirical::empirical_shortest;
use spin_core::moments::{order_stat_moments, CurvatureRule};
use spin_core::qp::{build_problem, default_bandwidth, kernel_window, BiasTerm, QpProblem};
use spin_core::rng::RngStream;
use spin_core::SortedSample;

pub const FIXTURE_SEED: u64 = 7;

pub fn normal_sample(n: usize) -> SortedSample {
    sample_iid(&TestDistribution::STANDARD_NORMAL, n, &mut RngStream::new(FIXTURE_SEED)).expect("n > 0")
}

pub fn gamma_sample(n: usize) -> SortedSample {
    sample_iid(&TestDistribution::GAMMA3, n, &mut RngStream::new(FIXTURE_SEED)).expect("n > 0")
}

/// Weighting problem for the lower endpoint of the 95% empirical shortest
/// interval of `sample`, centred on its anchor value.
pub fn lower_endpoint_problem(sample: &SortedSample) -> QpProblem {
    let n = sample.n();
    let (_, w) = empirical_shortest(sample, 0.05).expect("valid alpha");
    let b = default_bandwidth(n);
    let center = w.lower_index;
    let moments = order_stat_moments(sample, kernel_window(n, center, b), CurvatureRule::DensitySlope)
        .expect("window inside sample");
    let origin = sample.order_stat(center);
    build_problem(&moments.shifted(-origin), center, b, 0.0, sample, BiasTerm::Included).expect("valid window")
}

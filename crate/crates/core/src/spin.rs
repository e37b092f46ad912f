//! The bootstrap-smoothed shortest probability interval.
//!
//! For each of `B` bootstrap resamples of the draws, the empirical shortest
//! interval locates the endpoint order statistics; a triangle-kernel QP per
//! endpoint yields weights over order-statistic positions `1..=n`. The `B`
//! weight vectors are averaged position by position, renormalised, and applied
//! to the original sorted draws.
//!
//! Known support bounds are handled by inserting pseudo-datapoints at the
//! bounds. They are kept in every resample so the boundary stays reachable.

use serde::{Deserialize, Serialize};

use crate::empirical::{
    empirical_central, empirical_quantile, empirical_shortest, gaussian_fit_interval, quantile_position,
};
use crate::moments::{order_stat_moments_with, CurvatureRule, Kde};
use crate::qp::{build_problem, default_bandwidth, kernel_window, solve, BiasTerm};
use crate::rng::RngStream;
use crate::samples::{check_alpha, weighted_endpoint, IntervalEstimate, Method, SortedSample, WeightKernel};
use crate::{Result, SpinError};

pub const DEFAULT_BOOTSTRAP: usize = 50;
pub const DEFAULT_SEED: u64 = 20_130_129;

/// Solver output is accepted only within these limits.
const MAX_KKT_RESIDUAL: f64 = 1e-7;
const MAX_VIOLATION: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bandwidth {
    /// `√n` rounded to an even number.
    #[default]
    Auto,
    Fixed(usize),
}

impl Bandwidth {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            Bandwidth::Auto => default_bandwidth(n),
            Bandwidth::Fixed(b) => b,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Resampling {
    #[default]
    Bootstrap,
    /// Every replicate reuses the sample itself; with `bootstrap = 1` this is
    /// the plain single-sample QP estimate.
    Identity,
}

/// Alternative objective ingredients for comparison runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompatFlags {
    /// Drop the curvature correction from the objective (`D`, `d` built from `Q_i` alone).
    pub omit_curvature_bias: bool,
    /// Estimate `Q''` as `Q / f²` instead of `-f' / f³`.
    pub quantile_over_density_curvature: bool,
}

impl CompatFlags {
    fn bias_term(self) -> BiasTerm {
        if self.omit_curvature_bias {
            BiasTerm::Omitted
        } else {
            BiasTerm::Included
        }
    }

    fn curvature_rule(self) -> CurvatureRule {
        if self.quantile_over_density_curvature {
            CurvatureRule::QuantileOverDensitySquared
        } else {
            CurvatureRule::DensitySlope
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinConfig {
    pub alpha: f64,
    /// Number of bootstrap replicates `B`.
    pub bootstrap: usize,
    pub resampling: Resampling,
    pub bandwidth: Bandwidth,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub seed: u64,
    pub compat: CompatFlags,
}

impl Default for SpinConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            bootstrap: DEFAULT_BOOTSTRAP,
            resampling: Resampling::Bootstrap,
            bandwidth: Bandwidth::Auto,
            lower_bound: None,
            upper_bound: None,
            seed: DEFAULT_SEED,
            compat: CompatFlags::default(),
        }
    }
}

impl SpinConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.bootstrap == 0 {
            return Err(SpinError::InvalidConfig("bootstrap count must be at least 1".into()));
        }
        if let Bandwidth::Fixed(b) = self.bandwidth {
            if b < 2 {
                return Err(SpinError::InvalidConfig(format!("bandwidth must be at least 2, got {b}")));
            }
        }
        for bound in [self.lower_bound, self.upper_bound].into_iter().flatten() {
            if !bound.is_finite() {
                return Err(SpinError::InvalidConfig(format!("bound {bound} is not finite")));
            }
        }
        if let (Some(lo), Some(hi)) = (self.lower_bound, self.upper_bound) {
            if lo >= hi {
                return Err(SpinError::InvalidConfig(format!("lower bound {lo} is not below upper bound {hi}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSummary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpinDiagnostics {
    pub n: usize,
    pub bandwidth: usize,
    /// Density evaluations that hit the floor, over all replicates.
    pub clamped_density_count: usize,
    /// Replicates whose lower / upper window was cut at the sample edge.
    pub lower_window_clipped: usize,
    pub upper_window_clipped: usize,
    pub dropped_replicates: usize,
    pub objective: ObjectiveSummary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinResult {
    pub interval: IntervalEstimate,
    /// Averaged weights over positions `1..=n` of the (augmented) sample.
    pub lower_kernel: Vec<f64>,
    pub upper_kernel: Vec<f64>,
    pub diagnostics: SpinDiagnostics,
}

/// Inserts pseudo-datapoints at known support bounds.
///
/// A lower bound must not exceed the smallest draw and an upper bound must not
/// be below the largest.
pub fn augment_bounds(sample: &SortedSample, lower: Option<f64>, upper: Option<f64>) -> Result<SortedSample> {
    if sample.is_augmented() && (lower.is_some() || upper.is_some()) {
        return Err(SpinError::InvalidConfig("sample already carries pseudo-datapoints".into()));
    }
    let (min, max) = (sample.min(), sample.max());
    for bound in [lower, upper].into_iter().flatten() {
        if !bound.is_finite() {
            return Err(SpinError::InvalidConfig(format!("bound {bound} is not finite")));
        }
    }
    if let Some(lo) = lower.filter(|&lo| lo > min) {
        return Err(SpinError::BoundInsideData { bound: lo, min, max });
    }
    if let Some(hi) = upper.filter(|&hi| hi < max) {
        return Err(SpinError::BoundInsideData { bound: hi, min, max });
    }
    if lower.is_none() && upper.is_none() {
        return Ok(sample.clone());
    }
    let mut values = Vec::with_capacity(sample.n() + 2);
    values.extend(lower);
    values.extend_from_slice(sample.values());
    values.extend(upper);
    Ok(SortedSample::with_augmentation(values, lower, upper))
}

/// Shortest probability interval with bootstrap-averaged QP weights.
pub fn spin_interval(sample: &SortedSample, config: &SpinConfig) -> Result<SpinResult> {
    run(sample, config, Anchor::Shortest)
}

/// Same pipeline anchored on the empirical central interval: windows centre on
/// the order statistics nearest the `α/2` and `1 − α/2` quantile positions and
/// the QP targets those quantiles.
pub fn central_qp_interval(sample: &SortedSample, config: &SpinConfig) -> Result<SpinResult> {
    run(sample, config, Anchor::Central)
}

/// Interval by any [`Method`]. Only the QP methods use the bootstrap,
/// bandwidth, bound and compatibility settings of `config`.
pub fn estimate_interval(sample: &SortedSample, method: Method, config: &SpinConfig) -> Result<IntervalEstimate> {
    match method {
        Method::EmpiricalShortest => empirical_shortest(sample, config.alpha).map(|(iv, _)| iv),
        Method::EmpiricalCentral => empirical_central(sample, config.alpha),
        Method::GaussianFit => gaussian_fit_interval(sample, config.alpha).map(|g| g.interval),
        Method::Spin => spin_interval(sample, config).map(|r| r.interval),
        Method::CentralQp => central_qp_interval(sample, config).map(|r| r.interval),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Anchor {
    Shortest,
    Central,
}

struct EndpointWeights {
    start: usize,
    weights: Vec<f64>,
    objective: f64,
    clamped: usize,
    clipped: bool,
}

fn run(sample: &SortedSample, config: &SpinConfig, anchor: Anchor) -> Result<SpinResult> {
    config.validate()?;
    let augmented = augment_bounds(sample, config.lower_bound, config.upper_bound)?;
    augmented.require_interval_size()?;
    let n = augmented.n();
    let bandwidth = config.bandwidth.resolve(n);
    let raw = augmented.raw_values();
    let root = RngStream::new(config.seed);

    let mut lower_acc = vec![0.0; n];
    let mut upper_acc = vec![0.0; n];
    let mut diagnostics = SpinDiagnostics {
        n,
        bandwidth,
        ..SpinDiagnostics::default()
    };
    let mut objectives = Vec::with_capacity(2 * config.bootstrap);
    let mut last_error = None;

    for rep in 0..config.bootstrap {
        let resample = match config.resampling {
            Resampling::Identity => augmented.clone(),
            Resampling::Bootstrap => bootstrap_resample(&augmented, raw, &mut root.substream(rep as u64)),
        };
        match endpoint_weights(&resample, config, anchor, bandwidth) {
            Ok((lower, upper)) => {
                for (acc, ew) in [(&mut lower_acc, &lower), (&mut upper_acc, &upper)] {
                    for (slot, w) in acc[ew.start - 1..].iter_mut().zip(&ew.weights) {
                        *slot += w;
                    }
                    objectives.push(ew.objective);
                    diagnostics.clamped_density_count += ew.clamped;
                }
                diagnostics.lower_window_clipped += usize::from(lower.clipped);
                diagnostics.upper_window_clipped += usize::from(upper.clipped);
            }
            Err(e) => {
                diagnostics.dropped_replicates += 1;
                last_error = Some(e);
            }
        }
    }

    let failed = diagnostics.dropped_replicates;
    if 2 * failed > config.bootstrap || failed == config.bootstrap {
        return Err(SpinError::BootstrapFailed {
            failed,
            total: config.bootstrap,
            last: last_error.map(|e| e.to_string()).unwrap_or_default(),
        });
    }

    diagnostics.objective = summarize(&objectives);
    normalize(&mut lower_acc);
    normalize(&mut upper_acc);
    let lower = weighted_endpoint(&augmented, &WeightKernel::from_positions(&lower_acc, bandwidth)?)?;
    let upper = weighted_endpoint(&augmented, &WeightKernel::from_positions(&upper_acc, bandwidth)?)?;
    let method = match anchor {
        Anchor::Shortest => Method::Spin,
        Anchor::Central => Method::CentralQp,
    };
    Ok(SpinResult {
        interval: IntervalEstimate::new(lower, upper, config.alpha, method)?,
        lower_kernel: lower_acc,
        upper_kernel: upper_acc,
        diagnostics,
    })
}

/// Resamples the raw draws with replacement and re-inserts the pseudo-datapoints.
/// `raw` is sorted, so the resample is assembled in order from multiplicities.
fn bootstrap_resample(augmented: &SortedSample, raw: &[f64], rng: &mut RngStream) -> SortedSample {
    let mut counts = vec![0u32; raw.len()];
    for _ in 0..raw.len() {
        counts[rng.index(raw.len())] += 1;
    }
    let mut values = Vec::with_capacity(augmented.n());
    values.extend(augmented.augmented_lower());
    for (x, &c) in raw.iter().zip(&counts) {
        values.extend(std::iter::repeat_n(*x, c as usize));
    }
    values.extend(augmented.augmented_upper());
    SortedSample::with_augmentation(values, augmented.augmented_lower(), augmented.augmented_upper())
}

fn endpoint_weights(
    resample: &SortedSample,
    config: &SpinConfig,
    anchor: Anchor,
    bandwidth: usize,
) -> Result<(EndpointWeights, EndpointWeights)> {
    let n = resample.n();
    let alpha = config.alpha;
    let (anchors, targets) = match anchor {
        Anchor::Shortest => {
            let (_, w) = empirical_shortest(resample, alpha)?;
            let (lo, hi) = (w.lower_index, w.upper_index);
            ([lo, hi], [resample.order_stat(lo), resample.order_stat(hi)])
        }
        Anchor::Central => {
            let ps = [0.5 * alpha, 1.0 - 0.5 * alpha];
            let idx = ps.map(|p| quantile_position(n, p).round() as usize);
            (idx, ps.map(|p| empirical_quantile(resample, p)))
        }
    };
    let kde = Kde::new(resample)?;
    let solve_one = |center: usize, target: f64| -> Result<EndpointWeights> {
        let window = kernel_window(n, center, bandwidth);
        let moments = order_stat_moments_with(&kde, resample, window, config.compat.curvature_rule())?;
        // Centre on the anchor value; the objective is unchanged on Σw = 1.
        let origin = resample.order_stat(center);
        let problem = build_problem(
            &moments.shifted(-origin),
            center,
            bandwidth,
            target - origin,
            resample,
            config.compat.bias_term(),
        )?;
        let solution = solve(&problem)?;
        let violation = problem.max_violation(&solution.weights);
        if !(solution.kkt_residual < MAX_KKT_RESIDUAL && violation < MAX_VIOLATION) {
            return Err(SpinError::InaccurateSolution {
                kkt: solution.kkt_residual,
                violation,
            });
        }
        let layout = problem.layout.as_ref().expect("kernel problems carry a layout");
        Ok(EndpointWeights {
            start: layout.start,
            weights: solution.weights,
            objective: solution.objective,
            clamped: moments.clamped_count(),
            clipped: layout.clipped,
        })
    };
    Ok((solve_one(anchors[0], targets[0])?, solve_one(anchors[1], targets[1])?))
}

fn normalize(weights: &mut [f64]) {
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        for w in weights.iter_mut() {
            *w /= total;
        }
    }
}

fn summarize(values: &[f64]) -> ObjectiveSummary {
    if values.is_empty() {
        return ObjectiveSummary::default();
    }
    ObjectiveSummary {
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: values.iter().sum::<f64>() / values.len() as f64,
        count: values.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{sample_iid, TestDistribution};

    fn normal(n: usize, seed: u64) -> SortedSample {
        sample_iid(&TestDistribution::STANDARD_NORMAL, n, &mut RngStream::new(seed)).unwrap()
    }

    #[test]
    fn augment_inserts_bounds() {
        let s = SortedSample::new(&[0.5, 1.0, 2.0]).unwrap();
        let a = augment_bounds(&s, Some(0.0), None).unwrap();
        assert_eq!(a.values(), &[0.0, 0.5, 1.0, 2.0]);
        assert_eq!(a.augmented_lower(), Some(0.0));
        assert_eq!(a.raw_values(), s.values());

        let u = SortedSample::new(&[0.2, 0.4, 0.9]).unwrap();
        let both = augment_bounds(&u, Some(0.0), Some(1.0)).unwrap();
        assert_eq!(both.values(), &[0.0, 0.2, 0.4, 0.9, 1.0]);
        assert_eq!(both.n(), 5);

        assert_eq!(augment_bounds(&s, None, None).unwrap(), s);
    }

    #[test]
    fn augment_rejects_bound_inside_data() {
        let s = SortedSample::new(&[0.5, 1.0, 2.0]).unwrap();
        assert!(matches!(
            augment_bounds(&s, Some(0.7), None),
            Err(SpinError::BoundInsideData { .. })
        ));
        assert!(matches!(
            augment_bounds(&s, None, Some(1.5)),
            Err(SpinError::BoundInsideData { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let s = normal(100, 1);
        let bad = [
            SpinConfig { bootstrap: 0, ..SpinConfig::default() },
            SpinConfig { alpha: 1.0, ..SpinConfig::default() },
            SpinConfig { bandwidth: Bandwidth::Fixed(1), ..SpinConfig::default() },
            SpinConfig { lower_bound: Some(1.0), upper_bound: Some(0.0), ..SpinConfig::default() },
        ];
        for cfg in bad {
            assert!(spin_interval(&s, &cfg).is_err(), "{cfg:?}");
        }
        let tiny = SortedSample::new(&[1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            spin_interval(&tiny, &SpinConfig::default()),
            Err(SpinError::TooFewDraws { .. })
        ));
    }

    #[test]
    fn kernels_sum_to_one_and_interval_is_ordered() {
        let s = normal(300, 2);
        let r = spin_interval(&s, &SpinConfig::default()).unwrap();
        for k in [&r.lower_kernel, &r.upper_kernel] {
            assert_eq!(k.len(), 300);
            assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-8);
            assert!(k.iter().all(|w| *w >= -1e-10));
        }
        assert!(r.interval.lower < r.interval.upper);
        assert!(r.interval.lower >= s.min() && r.interval.upper <= s.max());
        assert_eq!(r.diagnostics.dropped_replicates, 0);
        assert_eq!(r.diagnostics.bandwidth, 18);
        assert_eq!(r.diagnostics.objective.count, 100);
    }

    #[test]
    fn single_identity_replicate_is_plain_qp_estimate() {
        let s = normal(200, 3);
        let cfg = SpinConfig {
            bootstrap: 1,
            resampling: Resampling::Identity,
            ..SpinConfig::default()
        };
        let r = spin_interval(&s, &cfg).unwrap();

        let (_, w) = empirical_shortest(&s, 0.05).unwrap();
        let kde = Kde::new(&s).unwrap();
        let b = default_bandwidth(200);
        let mut direct = [0.0; 2];
        for (slot, center) in direct.iter_mut().zip([w.lower_index, w.upper_index]) {
            let m = order_stat_moments_with(&kde, &s, kernel_window(200, center, b), CurvatureRule::DensitySlope).unwrap();
            let origin = s.order_stat(center);
            let p = build_problem(&m.shifted(-origin), center, b, 0.0, &s, BiasTerm::Included).unwrap();
            let sol = solve(&p).unwrap();
            *slot = weighted_endpoint(&s, &sol.kernel(&p).unwrap()).unwrap();
        }
        assert!((r.interval.lower - direct[0]).abs() < 1e-12);
        assert!((r.interval.upper - direct[1]).abs() < 1e-12);
    }

    #[test]
    fn deterministic_under_seed() {
        let s = normal(250, 4);
        let cfg = SpinConfig { bootstrap: 20, ..SpinConfig::default() };
        let a = spin_interval(&s, &cfg).unwrap();
        let b = spin_interval(&s, &cfg).unwrap();
        assert_eq!(a.interval.lower.to_bits(), b.interval.lower.to_bits());
        assert_eq!(a.interval.upper.to_bits(), b.interval.upper.to_bits());
        assert_eq!(a.lower_kernel, b.lower_kernel);
        let c = spin_interval(&s, &SpinConfig { seed: 99, ..cfg }).unwrap();
        assert_ne!(a.lower_kernel, c.lower_kernel);
    }

    #[test]
    fn scale_equivariance_of_endpoints() {
        let s = normal(200, 5);
        let cfg = SpinConfig { bootstrap: 10, ..SpinConfig::default() };
        let a = spin_interval(&s, &cfg).unwrap();
        for scale in [0.01, 3.0, 250.0] {
            let b = spin_interval(&s.affine(scale, 0.0), &cfg).unwrap();
            assert!((b.interval.lower - scale * a.interval.lower).abs() < 1e-9 * scale);
            assert!((b.interval.upper - scale * a.interval.upper).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn translation_equivariance_of_endpoints() {
        let s = normal(200, 6);
        let cfg = SpinConfig { bootstrap: 10, ..SpinConfig::default() };
        let a = spin_interval(&s, &cfg).unwrap();
        let b = spin_interval(&s.affine(1.0, 1000.0), &cfg).unwrap();
        assert!((b.interval.lower - a.interval.lower - 1000.0).abs() < 1e-6);
        assert!((b.interval.upper - a.interval.upper - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn lower_bound_pulls_interval_to_boundary() {
        let s = sample_iid(&TestDistribution::EXP1, 500, &mut RngStream::new(7)).unwrap();
        let cfg = SpinConfig {
            lower_bound: Some(0.0),
            ..SpinConfig::default()
        };
        let r = spin_interval(&s, &cfg).unwrap();
        assert!(r.interval.lower >= 0.0 && r.interval.lower < 0.05, "{:?}", r.interval);
        assert_eq!(r.lower_kernel.len(), 501);
        assert!(r.diagnostics.lower_window_clipped > 0);
    }

    #[test]
    fn central_qp_runs_and_tracks_central_interval() {
        let s = normal(500, 8);
        let r = central_qp_interval(&s, &SpinConfig::default()).unwrap();
        assert_eq!(r.interval.method, Method::CentralQp);
        let c = crate::empirical::empirical_central(&s, 0.05).unwrap();
        assert!((r.interval.lower - c.lower).abs() < 0.3);
        assert!((r.interval.upper - c.upper).abs() < 0.3);
    }

    #[test]
    fn compat_flags_change_the_estimate_but_stay_valid() {
        let s = normal(300, 9);
        let base = SpinConfig { bootstrap: 5, ..SpinConfig::default() };
        let a = spin_interval(&s, &base).unwrap();
        for compat in [
            CompatFlags { omit_curvature_bias: true, quantile_over_density_curvature: false },
            CompatFlags { omit_curvature_bias: false, quantile_over_density_curvature: true },
        ] {
            let b = spin_interval(&s, &SpinConfig { compat, ..base.clone() }).unwrap();
            assert!(b.interval.lower < b.interval.upper);
            assert!((b.interval.lower - a.interval.lower).abs() < 0.5);
        }
    }
}

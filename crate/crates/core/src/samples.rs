//! Sorted draws, interval results and order-statistic weight kernels.
//!
//! Order statistics are indexed from 1, so `X_(1)` is the minimum and `X_(n)`
//! the maximum of a sample of size `n`.

use std::fmt;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::{Result, SpinError};

/// Smallest sample any bandwidth-based estimator accepts.
pub const MIN_INTERVAL_DRAWS: usize = 10;

/// Ascending, finite simulation draws.
///
/// `augmented_lower` / `augmented_upper` record pseudo-datapoints that were
/// inserted at known support boundaries (see [`crate::spin::augment_bounds`]).
#[derive(Clone, Debug, PartialEq)]
pub struct SortedSample {
    values: Vec<f64>,
    augmented_lower: Option<f64>,
    augmented_upper: Option<f64>,
}

impl SortedSample {
    /// Sorts a copy of `raw`. Rejects empty input and non-finite values.
    pub fn new(raw: &[f64]) -> Result<Self> {
        Self::from_vec(raw.to_vec())
    }

    pub fn from_vec(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(SpinError::EmptySample);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(SpinError::NonFinite { index, value });
        }
        values.sort_unstable_by(f64::total_cmp);
        Ok(Self {
            values,
            augmented_lower: None,
            augmented_upper: None,
        })
    }

    pub(crate) fn with_augmentation(
        values: Vec<f64>,
        augmented_lower: Option<f64>,
        augmented_upper: Option<f64>,
    ) -> Self {
        debug_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        Self {
            values,
            augmented_lower,
            augmented_upper,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// `X_(i)` for 1-based `i`.
    pub fn order_stat(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn range(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn augmented_lower(&self) -> Option<f64> {
        self.augmented_lower
    }

    pub fn augmented_upper(&self) -> Option<f64> {
        self.augmented_upper
    }

    pub fn is_augmented(&self) -> bool {
        self.augmented_lower.is_some() || self.augmented_upper.is_some()
    }

    /// Draws without the pseudo-datapoints, still sorted.
    pub fn raw_values(&self) -> &[f64] {
        let start = usize::from(self.augmented_lower.is_some());
        let end = self.values.len() - usize::from(self.augmented_upper.is_some());
        &self.values[start..end]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n() as f64
    }

    /// Sample standard deviation with the `n - 1` denominator.
    pub fn sd(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean();
        let ss: f64 = self.values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    }

    /// Maps every draw through `x -> scale * x + shift` (`scale > 0`).
    pub fn affine(&self, scale: f64, shift: f64) -> Self {
        assert!(scale > 0.0, "affine maps must preserve order");
        let map = |v: f64| scale * v + shift;
        Self {
            values: self.values.iter().map(|&v| map(v)).collect(),
            augmented_lower: self.augmented_lower.map(map),
            augmented_upper: self.augmented_upper.map(map),
        }
    }

    pub(crate) fn require_interval_size(&self) -> Result<()> {
        if self.n() < MIN_INTERVAL_DRAWS {
            return Err(SpinError::TooFewDraws {
                n: self.n(),
                min: MIN_INTERVAL_DRAWS,
            });
        }
        Ok(())
    }
}

/// Sorts raw draws into a [`SortedSample`].
pub fn sort_sample(raw: &[f64]) -> Result<SortedSample> {
    SortedSample::new(raw)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    EmpiricalShortest,
    EmpiricalCentral,
    Spin,
    CentralQp,
    GaussianFit,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::EmpiricalShortest,
        Method::EmpiricalCentral,
        Method::Spin,
        Method::CentralQp,
        Method::GaussianFit,
    ];

    /// Short name used on the command line and in CSV output.
    pub fn label(self) -> &'static str {
        match self {
            Method::EmpiricalShortest => "shortest",
            Method::EmpiricalCentral => "central",
            Method::Spin => "spin",
            Method::CentralQp => "central-qp",
            Method::GaussianFit => "gaussian",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.label() == label)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    pub method: Method,
}

impl IntervalEstimate {
    pub fn new(lower: f64, upper: f64, alpha: f64, method: Method) -> Result<Self> {
        check_alpha(alpha)?;
        if lower > upper {
            return Err(SpinError::ReversedInterval { lower, upper });
        }
        Ok(Self {
            lower,
            upper,
            alpha,
            method,
        })
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    /// Nominal probability content `1 - alpha`.
    pub fn coverage(&self) -> f64 {
        1.0 - self.alpha
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(SpinError::InvalidAlpha(alpha))
    }
}

/// Weights over a contiguous block of order statistics.
///
/// Weights sum to one and are non-negative up to solver tolerance. Kernels
/// produced by a single quadratic program are also unimodal with their peak at
/// `center_index` ([`WeightKernel::is_unimodal`]); bootstrap-averaged kernels
/// in general are not.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightKernel {
    center_index: usize,
    start: usize,
    weights: Vec<f64>,
    bandwidth: usize,
}

const KERNEL_SUM_TOL: f64 = 1e-10;
const KERNEL_NEG_TOL: f64 = -1e-10;

impl WeightKernel {
    /// `start` and `center_index` are 1-based order-statistic indices.
    pub fn new(center_index: usize, start: usize, weights: Vec<f64>, bandwidth: usize) -> Result<Self> {
        if start == 0 {
            return Err(SpinError::InvalidKernel("order statistics are 1-based".into()));
        }
        if weights.is_empty() {
            return Err(SpinError::InvalidKernel("no weights".into()));
        }
        if center_index < start || center_index >= start + weights.len() {
            return Err(SpinError::InvalidKernel(format!(
                "center {center_index} outside window starting at {start} of length {}",
                weights.len()
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > KERNEL_SUM_TOL {
            return Err(SpinError::InvalidKernel(format!("weights sum to {sum}")));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= KERNEL_NEG_TOL)) {
            return Err(SpinError::InvalidKernel(format!("negative weight {w}")));
        }
        Ok(Self {
            center_index,
            start,
            weights,
            bandwidth,
        })
    }

    pub fn point_mass(index: usize) -> Self {
        Self {
            center_index: index,
            start: index,
            weights: vec![1.0],
            bandwidth: 0,
        }
    }

    /// Equal weights on all `n` order statistics.
    pub fn uniform(n: usize) -> Self {
        Self {
            center_index: n.div_ceil(2),
            start: 1,
            weights: vec![1.0 / n as f64; n],
            bandwidth: n,
        }
    }

    /// Kernel over positions `1..=weights.len()`, trimmed to its support.
    /// The center is the position of the largest weight.
    pub fn from_positions(weights: &[f64], bandwidth: usize) -> Result<Self> {
        let first = weights.iter().position(|&w| w != 0.0);
        let last = weights.iter().rposition(|&w| w != 0.0);
        let (Some(first), Some(last)) = (first, last) else {
            return Err(SpinError::InvalidKernel("all weights are zero".into()));
        };
        let trimmed = weights[first..=last].to_vec();
        let peak = trimmed
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        Self::new(first + 1 + peak, first + 1, trimmed, bandwidth)
    }

    pub fn center_index(&self) -> usize {
        self.center_index
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.start + self.weights.len() - 1
    }

    pub fn window(&self) -> RangeInclusive<usize> {
        self.start..=self.end()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Non-decreasing up to the center and non-increasing after it,
    /// allowing `tol` of numerical slack between neighbours.
    pub fn is_unimodal(&self, tol: f64) -> bool {
        let c = self.center_index - self.start;
        let w = &self.weights;
        w[..=c].windows(2).all(|p| p[1] >= p[0] - tol) && w[c..].windows(2).all(|p| p[1] <= p[0] + tol)
    }

    /// Expands to a dense vector over positions `1..=n`.
    pub fn to_positions(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        out[self.start - 1..self.end()].copy_from_slice(&self.weights);
        out
    }
}

/// `sum_i w_i X_(i)` over the kernel window.
pub fn weighted_endpoint(sample: &SortedSample, kernel: &WeightKernel) -> Result<f64> {
    if kernel.end() > sample.n() {
        return Err(SpinError::WindowOutOfBounds {
            start: kernel.start(),
            end: kernel.end(),
            n: sample.n(),
        });
    }
    let xs = &sample.values()[kernel.start() - 1..kernel.end()];
    Ok(xs.iter().zip(kernel.weights()).map(|(x, w)| x * w).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sorts_copy() {
        let s = sort_sample(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.n(), 3);
    }

    #[test]
    fn constant_sample_accepted() {
        let s = sort_sample(&[5.0; 10]).unwrap();
        assert!(s.values().iter().all(|&v| v == 5.0));
        assert_eq!(s.range(), 0.0);
    }

    #[test]
    fn extremes_are_first_and_last_order_statistics() {
        let mut rng = crate::rng::RngStream::new(1);
        let raw: Vec<f64> = (0..500).map(|_| rng.standard_normal()).collect();
        let s = sort_sample(&raw).unwrap();
        let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(s.order_stat(1), min);
        assert_eq!(s.order_stat(500), max);
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(matches!(sort_sample(&[]), Err(SpinError::EmptySample)));
        assert!(matches!(
            sort_sample(&[1.0, f64::NAN]),
            Err(SpinError::NonFinite { index: 1, .. })
        ));
        assert!(matches!(
            sort_sample(&[f64::INFINITY]),
            Err(SpinError::NonFinite { index: 0, .. })
        ));
    }

    #[test]
    fn point_mass_picks_order_statistic() {
        let s = sort_sample(&[4.0, 1.0, 9.0, 2.0]).unwrap();
        assert_eq!(weighted_endpoint(&s, &WeightKernel::point_mass(3)).unwrap(), 4.0);
    }

    #[test]
    fn uniform_kernel_is_mean() {
        let s = sort_sample(&[4.0, 1.0, 9.0, 2.0]).unwrap();
        assert_eq!(weighted_endpoint(&s, &WeightKernel::uniform(4)).unwrap(), 4.0);
    }

    #[test]
    fn three_point_kernel_arithmetic() {
        let s = sort_sample(&[1.0, 2.0, 5.0]).unwrap();
        let k = WeightKernel::new(2, 1, vec![0.25, 0.5, 0.25], 2).unwrap();
        assert!((weighted_endpoint(&s, &k).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn out_of_bounds_window_rejected() {
        let s = sort_sample(&[1.0, 2.0, 5.0]).unwrap();
        let k = WeightKernel::new(3, 2, vec![0.25, 0.5, 0.25], 2).unwrap();
        assert!(matches!(
            weighted_endpoint(&s, &k),
            Err(SpinError::WindowOutOfBounds { start: 2, end: 4, n: 3 })
        ));
    }

    #[test]
    fn kernel_validation() {
        assert!(WeightKernel::new(1, 1, vec![0.5, 0.4], 2).is_err());
        assert!(WeightKernel::new(1, 1, vec![1.5, -0.5], 2).is_err());
        assert!(WeightKernel::new(5, 1, vec![0.5, 0.5], 2).is_err());
        assert!(WeightKernel::new(1, 0, vec![1.0], 2).is_err());
        let k = WeightKernel::from_positions(&[0.0, 0.2, 0.5, 0.3, 0.0], 2).unwrap();
        assert_eq!((k.start(), k.end(), k.center_index()), (2, 4, 3));
        assert!(k.is_unimodal(0.0));
        assert_eq!(k.to_positions(5), vec![0.0, 0.2, 0.5, 0.3, 0.0]);
    }

    #[test]
    fn interval_invariants() {
        assert!(IntervalEstimate::new(1.0, 0.0, 0.05, Method::Spin).is_err());
        assert!(IntervalEstimate::new(0.0, 1.0, 1.0, Method::Spin).is_err());
        assert!(IntervalEstimate::new(0.0, 1.0, 0.0, Method::Spin).is_err());
        let iv = IntervalEstimate::new(-1.0, 1.0, 0.05, Method::Spin).unwrap();
        assert_eq!(iv.length(), 2.0);
    }

    #[test]
    fn method_labels_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::from_label(m.label()), Some(m));
        }
    }

    fn kernel_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, len).prop_filter_map("non-zero", |raw| {
            let total: f64 = raw.iter().sum();
            (total > 1e-6).then(|| raw.iter().map(|w| w / total).collect())
        })
    }

    proptest! {
        #[test]
        fn endpoint_is_monotone_in_values(
            base in prop::collection::vec(-100.0f64..100.0, 12),
            bumps in prop::collection::vec(0.0f64..10.0, 12),
            weights in kernel_strategy(5),
            start in 1usize..=8,
        ) {
            let a = sort_sample(&base).unwrap();
            // Adding non-negative increments to an already sorted vector and
            // re-sorting keeps every order statistic at least as large.
            let lifted: Vec<f64> = a.values().iter().zip(&bumps).map(|(v, b)| v + b).collect();
            let b = sort_sample(&lifted).unwrap();
            let k = WeightKernel::new(start, start, weights, 4).unwrap();
            prop_assume!(k.end() <= 12);
            prop_assert!(weighted_endpoint(&b, &k).unwrap() >= weighted_endpoint(&a, &k).unwrap() - 1e-9);
        }

        #[test]
        fn endpoint_within_window_range(
            raw in prop::collection::vec(-1e3f64..1e3, 20),
            weights in kernel_strategy(6),
            start in 1usize..=15,
        ) {
            let s = sort_sample(&raw).unwrap();
            let k = WeightKernel::new(start, start, weights, 5).unwrap();
            let e = weighted_endpoint(&s, &k).unwrap();
            let lo = s.order_stat(k.start());
            let hi = s.order_stat(k.end());
            let slack = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
            prop_assert!(e >= lo - slack && e <= hi + slack);
        }
    }
}

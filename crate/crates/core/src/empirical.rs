//! Baseline interval estimators computed directly from the sorted draws.

use serde::{Deserialize, Serialize};

use crate::distributions::standard_normal_quantile;
use crate::samples::{check_alpha, IntervalEstimate, Method, SortedSample};
use crate::{Result, SpinError};

/// Position of the empirical shortest interval among the order statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortestWindow {
    /// 1-based index of the lower endpoint.
    pub lower_index: usize,
    /// 1-based index of the upper endpoint.
    pub upper_index: usize,
    pub window_count: usize,
}

/// Number of draws an interval with content `1 - alpha` must cover:
/// `ceil((1 - alpha) n)`, computed so that products that are integers up to
/// rounding (e.g. `0.95 * 500`) are not bumped to the next integer.
pub fn window_count(n: usize, alpha: f64) -> usize {
    let raw = (1.0 - alpha) * n as f64;
    let count = (raw - raw * 1e-12).ceil() as usize;
    count.min(n)
}

/// Shortest contiguous block of `ceil((1 - alpha) n)` order statistics.
/// Ties in length go to the smallest lower index.
pub fn empirical_shortest(sample: &SortedSample, alpha: f64) -> Result<(IntervalEstimate, ShortestWindow)> {
    check_alpha(alpha)?;
    let n = sample.n();
    let k = window_count(n, alpha);
    if k < 2 {
        return Err(SpinError::WindowCountTooSmall { n, alpha });
    }
    let x = sample.values();
    let mut best = 0usize;
    let mut best_len = f64::INFINITY;
    for j in 0..=n - k {
        let len = x[j + k - 1] - x[j];
        if len < best_len {
            best_len = len;
            best = j;
        }
    }
    let window = ShortestWindow {
        lower_index: best + 1,
        upper_index: best + k,
        window_count: k,
    };
    let interval = IntervalEstimate::new(x[best], x[best + k - 1], alpha, Method::EmpiricalShortest)?;
    Ok((interval, window))
}

/// Fractional order-statistic position `p (n + 1)` clamped to `[1, n]`.
pub fn quantile_position(n: usize, p: f64) -> f64 {
    (p * (n as f64 + 1.0)).clamp(1.0, n as f64)
}

/// Empirical quantile by linear interpolation between order statistics at
/// position `p (n + 1)`, clamped to the sample range.
pub fn empirical_quantile(sample: &SortedSample, p: f64) -> f64 {
    let x = sample.values();
    let pos = quantile_position(x.len(), p);
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo >= x.len() || frac == 0.0 {
        return x[lo - 1];
    }
    x[lo - 1] + frac * (x[lo] - x[lo - 1])
}

/// `(Q(α/2), Q(1 - α/2))` with [`empirical_quantile`].
pub fn empirical_central(sample: &SortedSample, alpha: f64) -> Result<IntervalEstimate> {
    check_alpha(alpha)?;
    IntervalEstimate::new(
        empirical_quantile(sample, 0.5 * alpha),
        empirical_quantile(sample, 1.0 - 0.5 * alpha),
        alpha,
        Method::EmpiricalCentral,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub interval: IntervalEstimate,
    pub mean: f64,
    pub sd: f64,
    /// Set when the sample has zero variance and the interval collapsed to the mean.
    pub degenerate: bool,
}

/// `mean ± z_{1-α/2} sd` using the `n - 1` standard deviation.
pub fn gaussian_fit_interval(sample: &SortedSample, alpha: f64) -> Result<GaussianFit> {
    check_alpha(alpha)?;
    if sample.n() < 2 {
        return Err(SpinError::TooFewDraws { n: sample.n(), min: 2 });
    }
    let mean = sample.mean();
    let sd = sample.sd();
    let degenerate = !(sd > 0.0);
    let half = if degenerate {
        0.0
    } else {
        standard_normal_quantile(1.0 - 0.5 * alpha) * sd
    };
    Ok(GaussianFit {
        interval: IntervalEstimate::new(mean - half, mean + half, alpha, Method::GaussianFit)?,
        mean,
        sd,
        degenerate,
    })
}

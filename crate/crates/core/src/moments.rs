//! Gaussian kernel density estimation and large-sample moments of order
//! statistics.
//!
//! With `p_i = i / (n + 1)`, `q_i = 1 - p_i` and `Q` the quantile function,
//!
//! ```text
//! E X_(i)             ≈ Q_i + p_i q_i / (2 (n + 2)) · Q''_i
//! Var X_(i)           ≈ p_i q_i / (n + 2) · Q'_i²
//! cov(X_(i), X_(j))   ≈ p_i q_j / (n + 2) · Q'_i Q'_j        (i < j)
//! ```
//!
//! where `Q' = 1 / f(Q)` and `Q'' = -f'(Q) / f(Q)³`. Sample estimates plug in
//! `Q_i = X_(i)` and a Gaussian KDE for `f` and `f'`.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use crate::empirical::empirical_quantile;
use crate::linalg::Matrix;
use crate::samples::SortedSample;
use crate::{Result, SpinError};

/// Kernel evaluations beyond this many bandwidths are dropped (`exp(-24.5)`).
const KERNEL_CUTOFF: f64 = 7.0;

/// Gaussian KDE over a sorted sample with Silverman's bandwidth.
#[derive(Clone, Debug)]
pub struct Kde<'a> {
    values: &'a [f64],
    bandwidth: f64,
}

/// `0.9 · min(sd, IQR / 1.34) · n^(-1/5)`. Falls back to the sd alone when the
/// IQR is zero (heavily tied data).
pub fn silverman_bandwidth(sample: &SortedSample) -> Result<f64> {
    let sd = sample.sd();
    if !(sd > 0.0) {
        return Err(SpinError::ZeroVariance);
    }
    let iqr = empirical_quantile(sample, 0.75) - empirical_quantile(sample, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Ok(0.9 * spread * (sample.n() as f64).powf(-0.2))
}

impl<'a> Kde<'a> {
    pub fn new(sample: &'a SortedSample) -> Result<Self> {
        Ok(Self {
            values: sample.values(),
            bandwidth: silverman_bandwidth(sample)?,
        })
    }

    pub fn with_bandwidth(sample: &'a SortedSample, bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(SpinError::InvalidConfig(format!("bandwidth {bandwidth} must be positive")));
        }
        Ok(Self {
            values: sample.values(),
            bandwidth,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    fn neighbours(&self, x: f64) -> &'a [f64] {
        let reach = KERNEL_CUTOFF * self.bandwidth;
        let lo = self.values.partition_point(|&v| v < x - reach);
        let hi = self.values.partition_point(|&v| v <= x + reach);
        &self.values[lo..hi]
    }

    pub fn density(&self, x: f64) -> f64 {
        self.density_and_slope(x).0
    }

    /// `(f̂(x), f̂'(x))`.
    pub fn density_and_slope(&self, x: f64) -> (f64, f64) {
        let h = self.bandwidth;
        let mut f = 0.0;
        let mut df = 0.0;
        // Resamples repeat values; reuse the kernel across runs of equal values.
        let (mut prev, mut u, mut k) = (f64::NAN, 0.0, 0.0);
        for &v in self.neighbours(x) {
            if v != prev {
                u = (x - v) / h;
                k = (-0.5 * u * u).exp();
                prev = v;
            }
            f += k;
            df -= u * k;
        }
        let norm = 1.0 / (self.values.len() as f64 * h * (2.0 * PI).sqrt());
        (f * norm, df * norm / h)
    }
}

/// Gaussian KDE value of `sample` at `x`.
pub fn kde_density_at(sample: &SortedSample, x: f64) -> Result<f64> {
    Ok(Kde::new(sample)?.density(x))
}

/// How `Q''` is estimated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CurvatureRule {
    /// `Q'' = -f'(Q) / f(Q)³` from the KDE and its derivative.
    #[default]
    DensitySlope,
    /// `Q'' = Q / f(Q)²`, the alternative closed form kept for comparison runs.
    QuantileOverDensitySquared,
}

/// Per-index ingredients of the order-statistic moment approximations over
/// a window of 1-based indices.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentEstimates {
    start: usize,
    n: usize,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// `Q_i`.
    pub quantile: Vec<f64>,
    /// `Q'_i = 1 / f(Q_i)`.
    pub quantile_slope: Vec<f64>,
    /// `Q''_i`.
    pub quantile_curvature: Vec<f64>,
    /// Indices whose density estimate hit the floor.
    pub clamped: Vec<bool>,
}

impl MomentEstimates {
    /// Builds estimates from known quantile-function derivatives, bypassing
    /// density estimation.
    pub fn from_quantile_function(
        n: usize,
        window: RangeInclusive<usize>,
        quantile: impl Fn(f64) -> f64,
        slope: impl Fn(f64) -> f64,
        curvature: impl Fn(f64) -> f64,
    ) -> Self {
        let start = *window.start();
        let p: Vec<f64> = window.map(|i| i as f64 / (n as f64 + 1.0)).collect();
        Self {
            start,
            n,
            q: p.iter().map(|p| 1.0 - p).collect(),
            quantile: p.iter().map(|&p| quantile(p)).collect(),
            quantile_slope: p.iter().map(|&p| slope(p)).collect(),
            quantile_curvature: p.iter().map(|&p| curvature(p)).collect(),
            clamped: vec![false; p.len()],
            p,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.start + self.p.len() - 1
    }

    pub fn indices(&self) -> RangeInclusive<usize> {
        self.start..=self.end()
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn clamped_count(&self) -> usize {
        self.clamped.iter().filter(|c| **c).count()
    }

    fn local(&self, i: usize) -> usize {
        assert!(self.indices().contains(&i), "index {i} outside {:?}", self.indices());
        i - self.start
    }

    /// `n + 2`, the denominator of every moment term.
    fn denom(&self) -> f64 {
        self.n as f64 + 2.0
    }

    /// Approximate `E X_(i)` including the curvature correction.
    pub fn expected(&self, i: usize) -> f64 {
        let t = self.local(i);
        self.quantile[t] + self.curvature_shift(t)
    }

    /// `p_i q_i / (2 (n + 2)) · Q''_i` for local index `t`.
    pub fn curvature_shift(&self, t: usize) -> f64 {
        self.p[t] * self.q[t] / (2.0 * self.denom()) * self.quantile_curvature[t]
    }

    pub fn variance(&self, i: usize) -> f64 {
        let t = self.local(i);
        self.p[t] * self.q[t] / self.denom() * self.quantile_slope[t].powi(2)
    }

    /// Symmetric in its arguments.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.local(i.min(j)), self.local(i.max(j)));
        self.p[a] * self.q[b] / self.denom() * self.quantile_slope[a] * self.quantile_slope[b]
    }

    /// Covariance matrix over the window, local indices.
    pub fn covariance_matrix(&self) -> Matrix {
        let m = self.len();
        let mut c = Matrix::zeros(m, m);
        for a in 0..m {
            for b in a..m {
                let v = self.p[a] * self.q[b] / self.denom() * self.quantile_slope[a] * self.quantile_slope[b];
                c[(a, b)] = v;
                c[(b, a)] = v;
            }
        }
        c
    }

    /// Same estimates with every `Q_i` moved by `offset`.
    pub fn shifted(&self, offset: f64) -> Self {
        let mut out = self.clone();
        for q in &mut out.quantile {
            *q += offset;
        }
        out
    }
}

/// Density floor `1e-4 / range`, applied before inverting `f̂`.
pub fn density_floor(sample: &SortedSample) -> f64 {
    1e-4 / sample.range()
}

/// Moment ingredients over `window` from the sample's own KDE.
pub fn order_stat_moments(
    sample: &SortedSample,
    window: RangeInclusive<usize>,
    rule: CurvatureRule,
) -> Result<MomentEstimates> {
    let kde = Kde::new(sample)?;
    order_stat_moments_with(&kde, sample, window, rule)
}

/// As [`order_stat_moments`] with a prebuilt KDE of the same sample.
///
/// Where `f̂` falls below [`density_floor`] it is clamped to the floor, the
/// index is flagged, and its curvature term is set to zero.
pub fn order_stat_moments_with(
    kde: &Kde<'_>,
    sample: &SortedSample,
    window: RangeInclusive<usize>,
    rule: CurvatureRule,
) -> Result<MomentEstimates> {
    let n = sample.n();
    let (start, end) = (*window.start(), *window.end());
    if start == 0 || end > n || start > end {
        return Err(SpinError::WindowOutOfBounds { start, end, n });
    }
    let floor = density_floor(sample);
    let mut est = MomentEstimates::from_quantile_function(n, window.clone(), |_| 0.0, |_| 0.0, |_| 0.0);
    for (t, i) in window.enumerate() {
        let x = sample.order_stat(i);
        let (mut f, slope) = kde.density_and_slope(x);
        let clamped = f < floor;
        if clamped {
            f = floor;
        }
        est.quantile[t] = x;
        est.quantile_slope[t] = 1.0 / f;
        est.quantile_curvature[t] = match (clamped, rule) {
            (true, _) => 0.0,
            (false, CurvatureRule::DensitySlope) => -slope / (f * f * f),
            (false, CurvatureRule::QuantileOverDensitySquared) => x / (f * f),
        };
        est.clamped[t] = clamped;
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{sample_iid, TestDistribution};
    use crate::rng::RngStream;

    fn normal_sample(n: usize, seed: u64) -> SortedSample {
        sample_iid(&TestDistribution::STANDARD_NORMAL, n, &mut RngStream::new(seed)).unwrap()
    }

    #[test]
    fn kde_recovers_normal_peak() {
        // phi(0) = 0.398942; the Silverman-bandwidth bias at n = 5e4 is ~ -0.003.
        let s = normal_sample(50_000, 1);
        let f0 = kde_density_at(&s, 0.0).unwrap();
        assert!((f0 - 0.398_942_3).abs() < 0.02, "{f0}");
    }

    #[test]
    fn kde_tail_decays() {
        let s = normal_sample(2_000, 2);
        let far = s.max() + 10.0 * s.sd();
        assert!(kde_density_at(&s, far).unwrap() < 1e-6);
    }

    #[test]
    fn kde_integrates_to_one() {
        let s = normal_sample(3_000, 3);
        let kde = Kde::new(&s).unwrap();
        let lo = s.min() - 10.0 * kde.bandwidth();
        let hi = s.max() + 10.0 * kde.bandwidth();
        let steps = 20_000;
        let h = (hi - lo) / steps as f64;
        let mut total = 0.5 * (kde.density(lo) + kde.density(hi));
        for i in 1..steps {
            total += kde.density(lo + i as f64 * h);
        }
        total *= h;
        assert!((0.99..=1.01).contains(&total), "{total}");
    }

    #[test]
    fn kde_slope_matches_finite_difference() {
        let s = normal_sample(500, 4);
        let kde = Kde::new(&s).unwrap();
        for x in [-1.5, -0.2, 0.7, 2.1] {
            let h = 1e-5;
            let fd = (kde.density(x + h) - kde.density(x - h)) / (2.0 * h);
            let (_, slope) = kde.density_and_slope(x);
            assert!((fd - slope).abs() < 1e-6 * (1.0 + slope.abs()), "{x}: {fd} vs {slope}");
        }
    }

    #[test]
    fn silverman_uses_smaller_spread() {
        let s = normal_sample(1_000, 5);
        let iqr = empirical_quantile(&s, 0.75) - empirical_quantile(&s, 0.25);
        let expected = 0.9 * s.sd().min(iqr / 1.34) * 1000f64.powf(-0.2);
        assert!((silverman_bandwidth(&s).unwrap() - expected).abs() < 1e-15);
        let flat = SortedSample::new(&[2.0; 20]).unwrap();
        assert!(matches!(Kde::new(&flat), Err(SpinError::ZeroVariance)));
    }

    fn uniform_moments(n: usize, window: RangeInclusive<usize>) -> MomentEstimates {
        MomentEstimates::from_quantile_function(n, window, |p| p, |_| 1.0, |_| 0.0)
    }

    #[test]
    fn uniform_variance_is_exact() {
        let m = uniform_moments(99, 40..=60);
        assert!((m.variance(50) - 0.25 / 101.0).abs() < 1e-15);
        assert!((m.variance(50) - 0.002_475_247_5).abs() < 1e-10);
    }

    #[test]
    fn uniform_mean_is_exact() {
        let m = uniform_moments(9, 1..=9);
        assert!((m.expected(5) - 0.5).abs() < 1e-15);
        for i in 1..=9 {
            assert!((m.expected(i) - i as f64 / 10.0).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_covariance_closed_form() {
        let m = uniform_moments(99, 25..=75);
        assert!((m.covariance(25, 75) - 0.0625 / 101.0).abs() < 1e-15);
        assert_eq!(m.covariance(25, 75), m.covariance(75, 25));
    }

    #[test]
    fn estimated_covariance_is_psd_and_nonnegative() {
        let s = normal_sample(400, 6);
        let m = order_stat_moments(&s, 5..=30, CurvatureRule::DensitySlope).unwrap();
        let c = m.covariance_matrix();
        assert!(c.is_symmetric(0.0));
        let dense = nalgebra::DMatrix::from_fn(c.rows(), c.cols(), |i, j| c[(i, j)]);
        let eig = dense.symmetric_eigenvalues();
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-8 * c.trace(), "{min}");
        assert!((0..c.rows()).all(|i| (0..c.cols()).all(|j| c[(i, j)] >= 0.0)));
    }

    #[test]
    fn plug_in_uses_order_statistics() {
        let s = normal_sample(300, 7);
        let m = order_stat_moments(&s, 10..=20, CurvatureRule::DensitySlope).unwrap();
        let kde = Kde::new(&s).unwrap();
        for i in 10..=20 {
            let t = i - 10;
            let x = s.order_stat(i);
            let (f, df) = kde.density_and_slope(x);
            assert_eq!(m.quantile[t], x);
            assert!((m.quantile_slope[t] - 1.0 / f).abs() < 1e-12 / f);
            assert!((m.quantile_curvature[t] + df / f.powi(3)).abs() < 1e-9 * (1.0 + m.quantile_curvature[t].abs()));
            assert!((m.p[t] - i as f64 / 301.0).abs() < 1e-15);
        }
        let alt = order_stat_moments(&s, 10..=20, CurvatureRule::QuantileOverDensitySquared).unwrap();
        for t in 0..11 {
            let f = 1.0 / alt.quantile_slope[t];
            assert!((alt.quantile_curvature[t] - alt.quantile[t] / (f * f)).abs() < 1e-9);
        }
    }

    #[test]
    fn density_floor_clamps_and_flags() {
        let s = normal_sample(200, 3);
        // Silverman bandwidth never drops a data point below the floor.
        assert_eq!(order_stat_moments(&s, 1..=200, CurvatureRule::DensitySlope).unwrap().clamped_count(), 0);
        let wide = Kde::with_bandwidth(&s, 1e8).unwrap();
        let m = order_stat_moments_with(&wide, &s, 195..=200, CurvatureRule::DensitySlope).unwrap();
        assert_eq!(m.clamped_count(), 6);
        assert_eq!(m.quantile_slope[5], 1.0 / density_floor(&s));
        assert_eq!(m.quantile_curvature[5], 0.0);
        assert!(Kde::with_bandwidth(&s, 0.0).is_err());
    }

    #[test]
    fn window_out_of_range_rejected() {
        let s = normal_sample(50, 8);
        assert!(order_stat_moments(&s, 45..=51, CurvatureRule::DensitySlope).is_err());
        assert!(order_stat_moments(&s, 0..=3, CurvatureRule::DensitySlope).is_err());
    }
}

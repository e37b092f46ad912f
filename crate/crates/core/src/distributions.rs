//! Analytic test distributions, their samplers and exact HPD oracles.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::rng::RngStream;
use crate::samples::{check_alpha, SortedSample};
use crate::{Result, SpinError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TestDistribution {
    Normal { mean: f64, sd: f64 },
    StudentT { dof: f64 },
    Gamma { shape: f64, scale: f64 },
    Exponential { scale: f64 },
    Uniform,
}

impl TestDistribution {
    pub const STANDARD_NORMAL: Self = Self::Normal { mean: 0.0, sd: 1.0 };
    pub const T5: Self = Self::StudentT { dof: 5.0 };
    pub const GAMMA3: Self = Self::Gamma { shape: 3.0, scale: 1.0 };
    pub const EXP1: Self = Self::Exponential { scale: 1.0 };

    /// Short identifier used in reports.
    pub fn label(&self) -> String {
        match *self {
            Self::Normal { mean, sd } if mean == 0.0 && sd == 1.0 => "normal".into(),
            Self::Normal { mean, sd } => format!("normal({mean},{sd})"),
            Self::StudentT { dof } => format!("t{dof}"),
            Self::Gamma { shape, scale } if scale == 1.0 => format!("gamma{shape}"),
            Self::Gamma { shape, scale } => format!("gamma({shape},{scale})"),
            Self::Exponential { scale } if scale == 1.0 => "exponential".into(),
            Self::Exponential { scale } => format!("exponential({scale})"),
            Self::Uniform => "uniform".into(),
        }
    }

    /// Density symmetric about its centre, which pins `Δ* = α/2`.
    pub fn is_symmetric(&self) -> bool {
        matches!(self, Self::Normal { .. } | Self::StudentT { .. } | Self::Uniform)
    }

    /// `(inf, sup)` of the support.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Normal { .. } | Self::StudentT { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::Gamma { .. } | Self::Exponential { .. } => (0.0, f64::INFINITY),
            Self::Uniform => (0.0, 1.0),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Normal { mean, .. } => mean,
            Self::StudentT { .. } => 0.0,
            Self::Gamma { shape, scale } => shape * scale,
            Self::Exponential { scale } => scale,
            Self::Uniform => 0.5,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x.is_infinite() {
            return 0.0;
        }
        match *self {
            Self::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
            }
            Self::StudentT { dof } => {
                let log_norm = ln_gamma(0.5 * (dof + 1.0)) - ln_gamma(0.5 * dof) - 0.5 * (dof * PI).ln();
                (log_norm - 0.5 * (dof + 1.0) * (x * x / dof).ln_1p()).exp()
            }
            Self::Gamma { shape, scale } => {
                if x < 0.0 {
                    0.0
                } else if x == 0.0 {
                    match shape.partial_cmp(&1.0) {
                        Some(std::cmp::Ordering::Less) => f64::INFINITY,
                        Some(std::cmp::Ordering::Equal) => 1.0 / scale,
                        _ => 0.0,
                    }
                } else {
                    let y = x / scale;
                    ((shape - 1.0) * y.ln() - y - ln_gamma(shape)).exp() / scale
                }
            }
            Self::Exponential { scale } => {
                if x < 0.0 {
                    0.0
                } else {
                    (-x / scale).exp() / scale
                }
            }
            Self::Uniform => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Normal { mean, sd } => 0.5 * erfc(-(x - mean) / (sd * SQRT_2)),
            Self::StudentT { dof } => {
                if x.is_infinite() {
                    return if x > 0.0 { 1.0 } else { 0.0 };
                }
                let tail = 0.5 * beta_reg(0.5 * dof, 0.5, dof / (dof + x * x));
                if x <= 0.0 {
                    tail
                } else {
                    1.0 - tail
                }
            }
            Self::Gamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else if x.is_infinite() {
                    1.0
                } else {
                    gamma_lr(shape, x / scale)
                }
            }
            Self::Exponential { scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x / scale).exp_m1()
                }
            }
            Self::Uniform => x.clamp(0.0, 1.0),
        }
    }

    /// Survival function `1 - F(x)`, accurate in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        match *self {
            Self::Normal { mean, sd } => 0.5 * erfc((x - mean) / (sd * SQRT_2)),
            Self::StudentT { .. } => {
                if x.is_infinite() {
                    return if x > 0.0 { 0.0 } else { 1.0 };
                }
                self.cdf(-x)
            }
            Self::Gamma { shape, scale } => {
                if x <= 0.0 {
                    1.0
                } else if x.is_infinite() {
                    0.0
                } else {
                    gamma_ur(shape, x / scale)
                }
            }
            Self::Exponential { scale } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x / scale).exp()
                }
            }
            Self::Uniform => 1.0 - x.clamp(0.0, 1.0),
        }
    }

    /// Inverse CDF. `quantile(0)` and `quantile(1)` are the support bounds.
    pub fn quantile(&self, p: f64) -> f64 {
        assert!((0.0..=1.0).contains(&p), "probability {p} outside [0, 1]");
        let (lo, hi) = self.support();
        if p == 0.0 {
            return lo;
        }
        if p == 1.0 {
            return hi;
        }
        match *self {
            Self::Normal { mean, sd } => mean + sd * standard_normal_quantile(p),
            Self::Exponential { scale } => -scale * (-p).ln_1p(),
            Self::Uniform => p,
            Self::StudentT { dof } => {
                // Start from the normal quantile and widen for heavy tails.
                let z = standard_normal_quantile(p);
                self.invert(p, z * (1.0 + (z * z + 1.0) / (4.0 * dof)))
            }
            Self::Gamma { shape, scale } => {
                // Wilson–Hilferty starting point.
                let z = standard_normal_quantile(p);
                let c = 1.0 / (9.0 * shape);
                let start = shape * scale * (1.0 - c + z * c.sqrt()).powi(3).max(1e-3);
                self.invert(p, start)
            }
        }
    }

    /// Safeguarded Newton iteration on `F(x) = p`, switching to the survival
    /// function above the median so that upper-tail probabilities keep full
    /// relative precision.
    fn invert(&self, p: f64, start: f64) -> f64 {
        let upper = p > 0.5;
        let target = if upper { 1.0 - p } else { p };
        // residual > 0 means x is too far right
        let residual = |x: f64| {
            if upper {
                target - self.sf(x)
            } else {
                self.cdf(x) - target
            }
        };
        let (support_lo, _) = self.support();
        let mut lo = start.min(0.0) - 1.0;
        if support_lo.is_finite() {
            lo = support_lo;
        } else {
            while residual(lo) > 0.0 {
                lo = 2.0 * lo - 1.0;
            }
        }
        let mut hi = start.max(0.0) + 1.0;
        while residual(hi) < 0.0 {
            hi = 2.0 * hi + 1.0;
        }
        let mut x = start.clamp(lo, hi);
        for _ in 0..200 {
            let r = residual(x);
            if r == 0.0 {
                return x;
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let density = self.pdf(x);
            let mut next = if density > 0.0 { x - r / density } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || hi - lo <= 1e-15 * (1.0 + x.abs()) {
                return next;
            }
            x = next;
        }
        x
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match *self {
            Self::Normal { mean, sd } => mean + sd * rng.standard_normal(),
            Self::StudentT { dof } => {
                let z = rng.standard_normal();
                let chi2 = 2.0 * rng.gamma(0.5 * dof, 1.0);
                z / (chi2 / dof).sqrt()
            }
            Self::Gamma { shape, scale } => rng.gamma(shape, scale),
            Self::Exponential { scale } => -scale * rng.uniform_open().ln(),
            Self::Uniform => rng.uniform_open(),
        }
    }
}

impl fmt::Display for TestDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// `Φ⁻¹(p)` refined by one Newton step on `erfc`.
pub fn standard_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// True shortest interval with its lower-tail mass `Δ*`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HpdInterval {
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    pub delta_star: f64,
}

impl HpdInterval {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Highest-density interval of `dist` with probability content `1 - alpha`.
///
/// Symmetric distributions use `Δ* = α/2`; the rest use
/// [`delta_star_bisection`].
pub fn true_hpd(dist: &TestDistribution, alpha: f64) -> Result<HpdInterval> {
    check_alpha(alpha)?;
    let delta = if dist.is_symmetric() {
        0.5 * alpha
    } else {
        delta_star_bisection(dist, alpha)?
    };
    Ok(interval_for_delta(dist, alpha, delta))
}

pub fn interval_for_delta(dist: &TestDistribution, alpha: f64, delta: f64) -> HpdInterval {
    HpdInterval {
        lower: dist.quantile(delta),
        upper: dist.quantile((1.0 - alpha + delta).min(1.0)),
        alpha,
        delta_star: delta,
    }
}

/// Lower-tail mass of the shortest interval, found by bisection on the sign of
/// `f(F⁻¹(Δ)) - f(F⁻¹(1 - α + Δ))`, the derivative of the interval length up to
/// a positive factor. Boundary minima at `Δ = 0` or `Δ = α` are detected first.
pub fn delta_star_bisection(dist: &TestDistribution, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let slope = |delta: f64| dist.pdf(dist.quantile(delta)) - dist.pdf(dist.quantile((1.0 - alpha + delta).min(1.0)));
    if slope(0.0) >= 0.0 {
        return Ok(0.0);
    }
    if slope(alpha) <= 0.0 {
        return Ok(alpha);
    }
    let (mut lo, mut hi) = (0.0, alpha);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `n` i.i.d. draws, sorted.
pub fn sample_iid(dist: &TestDistribution, n: usize, rng: &mut RngStream) -> Result<SortedSample> {
    SortedSample::from_vec(draw_iid(dist, n, rng))
}

pub fn draw_iid(dist: &TestDistribution, n: usize, rng: &mut RngStream) -> Vec<f64> {
    (0..n).map(|_| dist.sample(rng)).collect()
}

/// Full Gibbs sweeps discarded before recording.
pub const GIBBS_BURN_IN: usize = 100;

/// First coordinate of a Gibbs chain targeting the standard bivariate normal
/// with correlation `rho`, recorded every `thin` sweeps after burn-in, in
/// chain order.
pub fn gibbs_chain(n_keep: usize, thin: usize, rho: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    if !(rho.abs() < 1.0) {
        return Err(SpinError::InvalidConfig(format!("correlation must satisfy |rho| < 1, got {rho}")));
    }
    if thin == 0 {
        return Err(SpinError::InvalidConfig("thinning interval must be at least 1".into()));
    }
    let cond_sd = (1.0 - rho * rho).sqrt();
    let (mut x, mut y) = (0.0f64, 0.0f64);
    let mut sweep = |x: &mut f64, y: &mut f64| {
        *x = rho * *y + cond_sd * rng.standard_normal();
        *y = rho * *x + cond_sd * rng.standard_normal();
    };
    for _ in 0..GIBBS_BURN_IN {
        sweep(&mut x, &mut y);
    }
    let mut kept = Vec::with_capacity(n_keep);
    while kept.len() < n_keep {
        for _ in 0..thin {
            sweep(&mut x, &mut y);
        }
        kept.push(x);
    }
    Ok(kept)
}

pub fn gibbs_bivariate_normal(n_keep: usize, thin: usize, rho: f64, rng: &mut RngStream) -> Result<SortedSample> {
    SortedSample::from_vec(gibbs_chain(n_keep, thin, rho, rng)?)
}

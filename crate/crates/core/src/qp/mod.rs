//! The endpoint weighting problem.
//!
//! For an endpoint estimate `Σ w_i X_(i)` over a window of order statistics
//! around `i*`, the large-sample MSE against a target `T` is
//!
//! ```text
//! MSE(w) ≈ wᵀ C w + (wᵀ μ − T)²,   μ_i = Q_i + p_i q_i / (2 (n + 2)) · Q''_i
//! ```
//!
//! with `C` the order-statistic covariance. In the form `½ wᵀ D w − dᵀ w` this
//! gives `D = 2 (C + μ μᵀ)` and `d = 2 T μ`. [`BiasTerm::Omitted`] drops the
//! curvature correction from `μ`, reproducing the entries
//! `d_ii = 2 (Q_i² + p_i q_i Q'_i² / (n + 2))`,
//! `d_ij = 2 (Q'_i Q'_j p_i q_j / (n + 2) + Q_i Q_j)` and `d = 2 T Q` exactly.
//!
//! The weights are constrained to a triangle kernel in `X`: they sum to one,
//! are linear in `X_(i)` on each side of `i*`, have equal and opposite slopes
//! at the peak, are non-negative at both window edges, and do not increase
//! from `i*` to `i* + 1`.

mod dump;
mod reduce;
mod solver;

use std::ops::RangeInclusive;

pub use dump::dump;
pub use reduce::{reduce_feasible_set, FeasibleSet};
pub use solver::{solve, QpSolution};

use crate::linalg::Matrix;
use crate::moments::MomentEstimates;
use crate::samples::SortedSample;
use crate::{Result, SpinError};

/// Relative ridge `λ` added as `λ · trace(D) / m · I` before solving.
pub const RIDGE: f64 = 1e-10;

/// Whether the curvature correction of `E X_(i)` enters the objective.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BiasTerm {
    #[default]
    Included,
    Omitted,
}

/// Where a triangle-kernel problem sits among the order statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelLayout {
    pub start: usize,
    pub center: usize,
    pub end: usize,
    pub bandwidth: usize,
    /// Whether the nominal window `center ± bandwidth / 2` was cut at 1 or n.
    pub clipped: bool,
    pub target: f64,
    /// Window values `X_(start..=end)`.
    pub knots: Vec<f64>,
}

impl KernelLayout {
    pub fn window(&self) -> RangeInclusive<usize> {
        self.start..=self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position of the peak inside the window.
    pub fn center_offset(&self) -> usize {
        self.center - self.start
    }
}

/// Minimise `½ wᵀ (D + ridge·I) w − dᵀ w` subject to `A_eq w = b_eq` and
/// `A_ineq w ≥ b_ineq`.
#[derive(Clone, Debug)]
pub struct QpProblem {
    pub hessian: Matrix,
    pub linear: Vec<f64>,
    pub eq: Matrix,
    pub eq_rhs: Vec<f64>,
    pub ineq: Matrix,
    pub ineq_rhs: Vec<f64>,
    pub ridge: f64,
    pub layout: Option<KernelLayout>,
}

impl QpProblem {
    /// Generic problem without kernel metadata. Empty constraint blocks are
    /// given as `Matrix::zeros(0, m)`.
    pub fn new(
        hessian: Matrix,
        linear: Vec<f64>,
        eq: Matrix,
        eq_rhs: Vec<f64>,
        ineq: Matrix,
        ineq_rhs: Vec<f64>,
    ) -> Result<Self> {
        let m = linear.len();
        let shapes_ok = hessian.rows() == m
            && hessian.cols() == m
            && eq.cols() == m
            && ineq.cols() == m
            && eq.rows() == eq_rhs.len()
            && ineq.rows() == ineq_rhs.len();
        if !shapes_ok {
            return Err(SpinError::InvalidConfig("inconsistent quadratic program dimensions".into()));
        }
        if !hessian.is_symmetric(1e-12 * hessian.max_abs().max(1.0)) {
            return Err(SpinError::InvalidConfig("quadratic term is not symmetric".into()));
        }
        Ok(Self {
            hessian,
            linear,
            eq,
            eq_rhs,
            ineq,
            ineq_rhs,
            ridge: 0.0,
            layout: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    /// `½ wᵀ D w − dᵀ w` without the ridge.
    pub fn objective(&self, w: &[f64]) -> f64 {
        self.hessian.half_quadratic_form(w) - crate::linalg::dot(&self.linear, w)
    }

    /// Largest violation over all equality and inequality rows.
    pub fn max_violation(&self, w: &[f64]) -> f64 {
        let eq = self
            .eq
            .mul_vec(w)
            .iter()
            .zip(&self.eq_rhs)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let ineq = self
            .ineq
            .mul_vec(w)
            .iter()
            .zip(&self.ineq_rhs)
            .fold(0.0f64, |m, (a, b)| m.max(b - a));
        eq.max(ineq)
    }
}

/// Nominal window `center ± bandwidth / 2`, cut to `1..=n`.
pub fn kernel_window(n: usize, center: usize, bandwidth: usize) -> RangeInclusive<usize> {
    let half = bandwidth / 2;
    center.saturating_sub(half).max(1)..=(center + half).min(n)
}

/// Default bandwidth: `√n` rounded to the nearest even integer, at least 2.
pub fn default_bandwidth(n: usize) -> usize {
    (2.0 * ((n as f64).sqrt() / 2.0).round()).max(2.0) as usize
}

/// Groups of tied positions within the window, as `(first, last)` offsets.
fn tie_groups(knots: &[f64]) -> Vec<(usize, usize)> {
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for (t, x) in knots.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if knots[g.1] == *x => g.1 = t,
            _ => groups.push((t, t)),
        }
    }
    groups
}

/// Row enforcing `w_b` to be the linear interpolation of `w_a` and `w_c` at
/// `x_b`, i.e. equal slopes on `[x_a, x_b]` and `[x_b, x_c]`. Scaled so the
/// middle coefficient is −1.
fn collinear_row(m: usize, (a, b, c): (usize, usize, usize), knots: &[f64]) -> Vec<f64> {
    let left = knots[b] - knots[a];
    let right = knots[c] - knots[b];
    let mut row = vec![0.0; m];
    row[a] = right / (left + right);
    row[b] = -1.0;
    row[c] = left / (left + right);
    row
}

/// Row equating the slope rising into the peak `c` from `a` with the slope
/// falling out of it towards `b`, scaled by `Δ_left Δ_right / (Δ_left + Δ_right)`.
fn peak_symmetry_row(m: usize, (a, c, b): (usize, usize, usize), knots: &[f64]) -> Vec<f64> {
    let left = knots[c] - knots[a];
    let right = knots[b] - knots[c];
    let total = left + right;
    let mut row = vec![0.0; m];
    row[a] = -right / total;
    row[c] = (right - left) / total;
    row[b] = left / total;
    row
}

fn unit_row(m: usize, entries: &[(usize, f64)]) -> Vec<f64> {
    let mut row = vec![0.0; m];
    for &(i, v) in entries {
        row[i] = v;
    }
    row
}

/// Builds the triangle-kernel weighting problem for the order statistic
/// `center` (1-based) with target value `target`.
///
/// `moments` must cover the window. The objective is invariant to adding the
/// same constant to every `Q_i` and to `target`; callers may centre both to
/// keep `D` well scaled.
pub fn build_problem(
    moments: &MomentEstimates,
    center: usize,
    bandwidth: usize,
    target: f64,
    sample: &SortedSample,
    bias: BiasTerm,
) -> Result<QpProblem> {
    let n = sample.n();
    if center == 0 || center > n {
        return Err(SpinError::WindowOutOfBounds {
            start: center,
            end: center,
            n,
        });
    }
    let window = kernel_window(n, center, bandwidth);
    let (start, end) = (*window.start(), *window.end());
    let m = end - start + 1;
    if m < 3 {
        return Err(SpinError::WindowTooSmall { center, len: m });
    }
    if moments.start() > start || moments.end() < end || moments.n() != n {
        return Err(SpinError::InvalidConfig(format!(
            "moment estimates cover {:?} of n = {}, window {start}..={end} of n = {n} required",
            moments.indices(),
            moments.n()
        )));
    }
    let clipped = end - start != 2 * (bandwidth / 2);
    let knots: Vec<f64> = window.clone().map(|i| sample.order_stat(i)).collect();
    let c = center - start;

    // Objective.
    let off = start - moments.start();
    let denom = n as f64 + 2.0;
    let mean: Vec<f64> = (0..m)
        .map(|t| {
            let k = off + t;
            match bias {
                BiasTerm::Included => moments.quantile[k] + moments.curvature_shift(k),
                BiasTerm::Omitted => moments.quantile[k],
            }
        })
        .collect();
    let mut hessian = Matrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let (ka, kb) = (off + a, off + b);
            let cov = moments.quantile_slope[ka] * moments.quantile_slope[kb] * moments.p[ka] * moments.q[kb] / denom;
            let v = 2.0 * (cov + mean[a] * mean[b]);
            hessian[(a, b)] = v;
            hessian[(b, a)] = v;
        }
    }
    let linear: Vec<f64> = mean.iter().map(|mu| 2.0 * target * mu).collect();

    // Equalities: sum to one, equal weights on tied values, collinearity on
    // each side of the peak, symmetric slopes at the peak.
    let groups = tie_groups(&knots);
    let rep: Vec<usize> = groups.iter().map(|g| g.0).collect();
    let pg = groups.iter().position(|g| g.0 <= c && c <= g.1).expect("peak lies in the window");
    let mut eq_rows = vec![vec![1.0; m]];
    for &(first, last) in &groups {
        for t in first + 1..=last {
            eq_rows.push(unit_row(m, &[(t - 1, 1.0), (t, -1.0)]));
        }
    }
    for g in (1..pg).chain(pg + 1..rep.len().saturating_sub(1)) {
        eq_rows.push(collinear_row(m, (rep[g - 1], rep[g], rep[g + 1]), &knots));
    }
    if pg >= 1 && pg + 1 < rep.len() {
        eq_rows.push(peak_symmetry_row(m, (rep[pg - 1], rep[pg], rep[pg + 1]), &knots));
    }
    let mut eq_rhs = vec![0.0; eq_rows.len()];
    eq_rhs[0] = 1.0;

    // Inequalities: both edges non-negative, peak dominates its neighbour.
    let mut ineq_rows = vec![unit_row(m, &[(0, 1.0)]), unit_row(m, &[(m - 1, 1.0)])];
    if pg + 1 < rep.len() {
        ineq_rows.push(unit_row(m, &[(rep[pg], 1.0), (rep[pg + 1], -1.0)]));
    } else if pg >= 1 {
        // Peak on the last value: mirror the dominance row.
        ineq_rows.push(unit_row(m, &[(rep[pg], 1.0), (rep[pg - 1], -1.0)]));
    }
    let ineq_rhs = vec![0.0; ineq_rows.len()];

    let ridge = RIDGE * hessian.trace() / m as f64;
    Ok(QpProblem {
        hessian,
        linear,
        eq: Matrix::from_rows(&eq_rows),
        eq_rhs,
        ineq: Matrix::from_rows(&ineq_rows),
        ineq_rhs,
        ridge,
        layout: Some(KernelLayout {
            start,
            center,
            end,
            bandwidth,
            clipped,
            target,
            knots,
        }),
    })
}

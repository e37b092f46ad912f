//! Replication harness: draws repeated samples from a known distribution,
//! runs each interval method on every sample and aggregates endpoint errors
//! against the true shortest interval.
//!
//! Replicates run in parallel on per-replicate random substreams and are
//! reduced in replicate order, so reports do not depend on the worker count.

pub mod plots;
pub mod table;

use std::fmt;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{gibbs_bivariate_normal, sample_iid, true_hpd, HpdInterval, TestDistribution};
use crate::rng::RngStream;
use crate::samples::{check_alpha, Method, SortedSample, MIN_INTERVAL_DRAWS};
use crate::spin::{estimate_interval, SpinConfig, DEFAULT_SEED};
use crate::{Result, SpinError};

pub use plots::emit_plots;
pub use table::{emit_csv, emit_raw, read_csv, write_csv, write_raw, CsvRow};

/// Largest tolerated share of failed replicates per method.
pub const MAX_FAILURE_RATE: f64 = 0.01;

/// Where the draws of one replicate come from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DistSpec {
    Iid(TestDistribution),
    /// First coordinate of a thinned Gibbs chain on the standard bivariate
    /// normal with correlation `rho`. The marginal is `N(0, 1)`.
    Gibbs { rho: f64, thin: usize },
}

impl DistSpec {
    pub fn label(&self) -> String {
        match self {
            DistSpec::Iid(d) => d.label(),
            DistSpec::Gibbs { .. } => "gibbs".into(),
        }
    }

    /// Distribution of a single draw.
    pub fn marginal(&self) -> TestDistribution {
        match self {
            DistSpec::Iid(d) => *d,
            DistSpec::Gibbs { .. } => TestDistribution::STANDARD_NORMAL,
        }
    }

    pub fn draw(&self, n: usize, rng: &mut RngStream) -> Result<SortedSample> {
        match *self {
            DistSpec::Iid(d) => sample_iid(&d, n, rng),
            DistSpec::Gibbs { rho, thin } => gibbs_bivariate_normal(n, thin, rho, rng),
        }
    }
}

impl fmt::Display for DistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCell {
    pub dist: DistSpec,
    pub n: usize,
    pub alpha: f64,
    pub replications: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    /// Settings for the QP methods; `alpha` and `seed` are set per replicate.
    pub spin: SpinConfig,
}

impl ExperimentCell {
    pub fn new(dist: DistSpec, n: usize, alpha: f64, replications: usize, methods: &[Method]) -> Self {
        Self {
            dist,
            n,
            alpha,
            replications,
            methods: methods.to_vec(),
            seed: DEFAULT_SEED,
            spin: SpinConfig::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// e.g. `normal-n500-a0.05`.
    pub fn id(&self) -> String {
        let mut id = format!("{}-n{}-a{}", self.dist.label(), self.n, self.alpha);
        if self.spin.lower_bound.is_some() || self.spin.upper_bound.is_some() {
            id.push_str("-bounded");
        }
        id
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.replications == 0 {
            return Err(SpinError::InvalidConfig("replications must be at least 1".into()));
        }
        if self.n < MIN_INTERVAL_DRAWS {
            return Err(SpinError::TooFewDraws {
                n: self.n,
                min: MIN_INTERVAL_DRAWS,
            });
        }
        if self.methods.is_empty() {
            return Err(SpinError::InvalidConfig("no methods requested".into()));
        }
        for (k, m) in self.methods.iter().enumerate() {
            if self.methods[..k].contains(m) {
                return Err(SpinError::InvalidConfig(format!("method {m} listed twice")));
            }
        }
        if let DistSpec::Gibbs { rho, thin } = self.dist {
            if !(rho.abs() < 1.0) || thin == 0 {
                return Err(SpinError::InvalidConfig(format!("invalid Gibbs settings rho = {rho}, thin = {thin}")));
            }
        }
        SpinConfig {
            alpha: self.alpha,
            ..self.spin.clone()
        }
        .validate()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Keep one [`RawRecord`] per (replicate, method, endpoint).
    pub keep_raw: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Endpoint {
    Lower,
    Upper,
    /// Both endpoints, squared errors summed.
    Both,
}

impl Endpoint {
    pub fn label(self) -> &'static str {
        match self {
            Endpoint::Lower => "lower",
            Endpoint::Upper => "upper",
            Endpoint::Both => "both",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        [Endpoint::Lower, Endpoint::Upper, Endpoint::Both]
            .into_iter()
            .find(|e| e.label() == label)
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Error statistics of one endpoint (or the pair) of one method.
///
/// `mse = bias² + variance`; for [`Endpoint::Both`] `mse` and `variance` are
/// sums over the two endpoints and `bias` is `NaN`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointStats {
    pub mse: f64,
    pub rmse: f64,
    pub bias: f64,
    pub variance: f64,
    pub mc_stderr_rmse: f64,
    pub mc_stderr_bias: f64,
    /// `MSE(empirical shortest) / MSE(method)`; `NaN` without the reference.
    pub efficiency: f64,
    pub mc_stderr_efficiency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub lower: EndpointStats,
    pub upper: EndpointStats,
    pub both: EndpointStats,
    pub coverage_mean: f64,
    pub mc_stderr_coverage: f64,
    /// True coverage `F(u) - F(l)` per used replicate.
    pub coverages: Vec<f64>,
    pub failures: usize,
}

impl MethodReport {
    pub fn endpoint(&self, e: Endpoint) -> &EndpointStats {
        match e {
            Endpoint::Lower => &self.lower,
            Endpoint::Upper => &self.upper,
            Endpoint::Both => &self.both,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub cell_id: String,
    pub dist: String,
    pub n: usize,
    pub alpha: f64,
    pub replications: usize,
    /// Replicates on which every method succeeded; all statistics use these.
    pub used: usize,
    pub truth: HpdInterval,
    pub methods: Vec<MethodReport>,
}

impl ReplicationReport {
    pub fn method(&self, method: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// One endpoint estimate of one method on one replicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub cell_id: String,
    pub replicate: usize,
    pub method: String,
    pub endpoint: String,
    pub estimate: f64,
    pub truth: f64,
    pub error: f64,
    pub coverage: f64,
    pub failed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellOutcome {
    pub report: ReplicationReport,
    pub raw: Vec<RawRecord>,
}

type ReplicateResult = Vec<Option<(f64, f64)>>;

/// Runs one cell on the global thread pool without a raw dump.
pub fn run_cell(cell: &ExperimentCell) -> Result<ReplicationReport> {
    run_cell_with(cell, &RunOptions::default()).map(|o| o.report)
}

pub fn run_cell_with(cell: &ExperimentCell, options: &RunOptions) -> Result<CellOutcome> {
    cell.validate()?;
    let truth = true_hpd(&cell.dist.marginal(), cell.alpha)?;
    let work = || -> Vec<ReplicateResult> {
        (0..cell.replications)
            .into_par_iter()
            .map(|r| replicate(cell, r))
            .collect()
    };
    let results = match options.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| SpinError::InvalidConfig(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    aggregate(cell, &truth, &results, options.keep_raw)
}

/// Runs every cell in order.
pub fn run_grid(cells: &[ExperimentCell], options: &RunOptions) -> Result<Vec<CellOutcome>> {
    cells.iter().map(|c| run_cell_with(c, options)).collect()
}

fn replicate(cell: &ExperimentCell, r: usize) -> ReplicateResult {
    let stream = RngStream::new(cell.seed).substream(r as u64);
    let Ok(sample) = cell.dist.draw(cell.n, &mut stream.substream(0)) else {
        return vec![None; cell.methods.len()];
    };
    let config = SpinConfig {
        alpha: cell.alpha,
        seed: stream.substream(1).next_u64(),
        ..cell.spin.clone()
    };
    cell.methods
        .iter()
        .map(|&m| estimate_interval(&sample, m, &config).ok().map(|iv| (iv.lower, iv.upper)))
        .collect()
}

fn aggregate(cell: &ExperimentCell, truth: &HpdInterval, results: &[ReplicateResult], keep_raw: bool) -> Result<CellOutcome> {
    let total = results.len();
    for (k, _) in cell.methods.iter().enumerate() {
        let failed = results.iter().filter(|r| r[k].is_none()).count();
        if failed as f64 > MAX_FAILURE_RATE * total as f64 {
            return Err(SpinError::TooManyFailures { failed, total });
        }
    }
    let used: Vec<&ReplicateResult> = results.iter().filter(|r| r.iter().all(Option::is_some)).collect();
    if used.is_empty() {
        return Err(SpinError::TooManyFailures { failed: total, total });
    }
    let marginal = cell.dist.marginal();
    let coverage = |(l, u): (f64, f64)| marginal.cdf(u) - marginal.cdf(l);

    // Squared errors per method and endpoint over the used replicates.
    let errors: Vec<[Vec<f64>; 2]> = (0..cell.methods.len())
        .map(|k| {
            let pairs = used.iter().map(|r| r[k].expect("used replicates succeeded"));
            let (lo, hi): (Vec<f64>, Vec<f64>) = pairs.map(|(l, u)| (l - truth.lower, u - truth.upper)).unzip();
            [lo, hi]
        })
        .collect();
    let reference = cell.methods.iter().position(|&m| m == Method::EmpiricalShortest);

    let methods = cell
        .methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let [lo, hi] = &errors[k];
            let both_sq: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| a * a + b * b).collect();
            let (mut lower, mut upper) = (endpoint_stats(lo), endpoint_stats(hi));
            let mut both = pair_stats(&both_sq, &lower, &upper);
            if let Some(rk) = reference {
                let [rlo, rhi] = &errors[rk];
                let rboth: Vec<f64> = rlo.iter().zip(rhi).map(|(a, b)| a * a + b * b).collect();
                (lower.efficiency, lower.mc_stderr_efficiency) = ratio_of_means(&squares(rlo), &squares(lo));
                (upper.efficiency, upper.mc_stderr_efficiency) = ratio_of_means(&squares(rhi), &squares(hi));
                (both.efficiency, both.mc_stderr_efficiency) = ratio_of_means(&rboth, &both_sq);
            }
            let coverages: Vec<f64> = used.iter().map(|r| coverage(r[k].expect("used"))).collect();
            MethodReport {
                method,
                lower,
                upper,
                both,
                coverage_mean: mean(&coverages),
                mc_stderr_coverage: stderr(&coverages),
                coverages,
                failures: results.iter().filter(|r| r[k].is_none()).count(),
            }
        })
        .collect();

    let cell_id = cell.id();
    let mut raw = Vec::new();
    if keep_raw {
        for (rep, result) in results.iter().enumerate() {
            for (k, &method) in cell.methods.iter().enumerate() {
                let cov = result[k].map(coverage).unwrap_or(f64::NAN);
                for (endpoint, t) in [(Endpoint::Lower, truth.lower), (Endpoint::Upper, truth.upper)] {
                    let estimate = result[k].map_or(f64::NAN, |(l, u)| if endpoint == Endpoint::Lower { l } else { u });
                    raw.push(RawRecord {
                        cell_id: cell_id.clone(),
                        replicate: rep,
                        method: method.label().into(),
                        endpoint: endpoint.label().into(),
                        estimate,
                        truth: t,
                        error: estimate - t,
                        coverage: cov,
                        failed: result[k].is_none(),
                    });
                }
            }
        }
    }

    Ok(CellOutcome {
        report: ReplicationReport {
            cell_id,
            dist: cell.dist.label(),
            n: cell.n,
            alpha: cell.alpha,
            replications: total,
            used: used.len(),
            truth: *truth,
            methods,
        },
        raw,
    })
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn mean(x: &[f64]) -> f64 {
    compensated_sum(x.iter().copied()) / x.len() as f64
}

/// Standard error of the mean; `NaN` below two values.
fn stderr(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(x);
    let ss = compensated_sum(x.iter().map(|v| (v - m) * (v - m)));
    (ss / (n - 1) as f64 / n as f64).sqrt()
}

fn squares(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v * v).collect()
}

fn endpoint_stats(errors: &[f64]) -> EndpointStats {
    let sq = squares(errors);
    let mse = mean(&sq);
    let bias = mean(errors);
    let variance = mean(&errors.iter().map(|e| (e - bias) * (e - bias)).collect::<Vec<_>>());
    let rmse = mse.sqrt();
    EndpointStats {
        mse,
        rmse,
        bias,
        variance,
        mc_stderr_rmse: rmse_stderr(&sq, rmse),
        mc_stderr_bias: stderr(errors),
        efficiency: f64::NAN,
        mc_stderr_efficiency: f64::NAN,
    }
}

fn pair_stats(both_sq: &[f64], lower: &EndpointStats, upper: &EndpointStats) -> EndpointStats {
    let mse = mean(both_sq);
    let rmse = mse.sqrt();
    EndpointStats {
        mse,
        rmse,
        bias: f64::NAN,
        variance: lower.variance + upper.variance,
        mc_stderr_rmse: rmse_stderr(both_sq, rmse),
        mc_stderr_bias: f64::NAN,
        efficiency: f64::NAN,
        mc_stderr_efficiency: f64::NAN,
    }
}

/// Delta method: `se(√m) = se(m) / (2√m)`.
fn rmse_stderr(sq: &[f64], rmse: f64) -> f64 {
    if rmse > 0.0 {
        stderr(sq) / (2.0 * rmse)
    } else {
        0.0
    }
}

/// `mean(a) / mean(b)` for paired samples, with its delta-method standard error.
fn ratio_of_means(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len();
    let (ma, mb) = (mean(a), mean(b));
    let ratio = ma / mb;
    if n < 2 {
        return (ratio, f64::NAN);
    }
    let nm1 = (n - 1) as f64;
    let va = compensated_sum(a.iter().map(|x| (x - ma) * (x - ma))) / nm1;
    let vb = compensated_sum(b.iter().map(|x| (x - mb) * (x - mb))) / nm1;
    let cab = compensated_sum(a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb))) / nm1;
    let var = (va / (mb * mb) + ma * ma * vb / mb.powi(4) - 2.0 * ma * cab / mb.powi(3)) / n as f64;
    (ratio, var.max(0.0).sqrt())
}

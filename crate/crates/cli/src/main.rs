//! `spin`: shortest probability intervals from simulation draws.
//!
//! ```text
//! spin interval --input draws.txt --method spin --method shortest --json
//! spin bench --dist normal,t5 --n 300,500 --reps 200 --methods shortest,spin --out results
//! ```

mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use spin_core::bench::{emit_csv, emit_plots, emit_raw, run_grid, DistSpec, ExperimentCell, RunOptions};
use spin_core::distributions::TestDistribution;
use spin_core::empirical::{empirical_central, empirical_shortest, gaussian_fit_interval, ShortestWindow};
use spin_core::spin::{
    central_qp_interval, spin_interval, Bandwidth, CompatFlags, SpinDiagnostics, DEFAULT_BOOTSTRAP, DEFAULT_SEED,
};
use spin_core::{Method, SortedSample, SpinConfig};

const JSON_SCHEMA: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "spin", version, about = "Shortest probability intervals from Monte Carlo draws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute intervals from a file of draws.
    Interval(IntervalArgs),
    /// Run a replication grid and write CSV / SVG reports.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
struct QpArgs {
    /// Bootstrap replicates for the QP methods.
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP as u64, value_parser = clap::value_parser!(u64).range(1..))]
    bootstrap: u64,
    /// Kernel bandwidth in order statistics, or `auto` for √n rounded to even.
    #[arg(long, default_value = "auto", value_parser = parse_bandwidth)]
    bandwidth: Bandwidth,
    /// Comma-separated: paper-matrix (no curvature correction in D, d),
    /// paper-qpp (Q'' = Q / f²).
    #[arg(long, value_delimiter = ',', value_parser = ["paper-matrix", "paper-qpp"])]
    compat: Vec<String>,
    /// Known lower bound of the support.
    #[arg(long, allow_hyphen_values = true)]
    lower_bound: Option<f64>,
    /// Known upper bound of the support.
    #[arg(long, allow_hyphen_values = true)]
    upper_bound: Option<f64>,
}

#[derive(Args, Debug)]
struct IntervalArgs {
    /// One draw per line, or a single-column CSV with optional header.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// spin | shortest | central | central-qp | gaussian; repeatable.
    #[arg(long = "method", value_parser = parse_method)]
    methods: Vec<Method>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Emit JSON instead of a text table.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    qp: QpArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// normal | t5 | gamma3 | exponential | gibbs; comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "normal")]
    dist: Vec<String>,
    /// Sample sizes, comma-separated.
    #[arg(long = "n", value_delimiter = ',', default_value = "500", value_parser = clap::value_parser!(u64).range(10..))]
    sizes: Vec<u64>,
    #[arg(long = "alpha", value_delimiter = ',', default_value = "0.05")]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    #[arg(long, value_delimiter = ',', default_value = "shortest,spin", value_parser = parse_method)]
    methods: Vec<Method>,
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Also write raw.csv with one row per (replicate, method, endpoint).
    #[arg(long)]
    dump_raw: bool,
    /// Skip SVG charts.
    #[arg(long)]
    no_plots: bool,
    /// Worker threads (default: all cores).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    /// Correlation of the Gibbs target.
    #[arg(long, default_value_t = 0.9, allow_hyphen_values = true)]
    rho: f64,
    /// Gibbs sweeps between kept draws.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    thin: u64,
    #[command(flatten)]
    qp: QpArgs,
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::from_label(s).ok_or_else(|| {
        let labels: Vec<&str> = Method::ALL.iter().map(|m| m.label()).collect();
        format!("unknown method {s:?}; expected one of {}", labels.join(", "))
    })
}

fn parse_bandwidth(s: &str) -> Result<Bandwidth, String> {
    if s == "auto" {
        return Ok(Bandwidth::Auto);
    }
    match s.parse::<usize>() {
        Ok(b) if b >= 2 => Ok(Bandwidth::Fixed(b)),
        _ => Err(format!("bandwidth must be `auto` or an integer ≥ 2, got {s:?}")),
    }
}

fn parse_dist(label: &str, rho: f64, thin: usize) -> Result<DistSpec, String> {
    Ok(match label {
        "normal" => DistSpec::Iid(TestDistribution::STANDARD_NORMAL),
        "t5" => DistSpec::Iid(TestDistribution::T5),
        "gamma3" => DistSpec::Iid(TestDistribution::GAMMA3),
        "exponential" => DistSpec::Iid(TestDistribution::EXP1),
        "gibbs" => DistSpec::Gibbs { rho, thin },
        other => return Err(format!("unknown distribution {other:?}")),
    })
}

impl QpArgs {
    fn config(&self, alpha: f64, seed: u64) -> SpinConfig {
        SpinConfig {
            alpha,
            bootstrap: self.bootstrap as usize,
            bandwidth: self.bandwidth,
            lower_bound: self.lower_bound,
            upper_bound: self.upper_bound,
            seed,
            compat: CompatFlags {
                omit_curvature_bias: self.compat.iter().any(|c| c == "paper-matrix"),
                quantile_over_density_curvature: self.compat.iter().any(|c| c == "paper-qpp"),
            },
            ..SpinConfig::default()
        }
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum Diagnostics {
    Qp(SpinDiagnostics),
    Shortest(ShortestWindow),
    Gaussian { mean: f64, sd: f64, degenerate: bool },
    None {},
}

#[derive(Serialize)]
struct IntervalOutput {
    method: &'static str,
    lower: f64,
    upper: f64,
    alpha: f64,
    n: usize,
    diagnostics: Diagnostics,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    schema: u32,
    input: String,
    results: &'a [IntervalOutput],
}

fn compute(sample: &SortedSample, method: Method, config: &SpinConfig) -> spin_core::Result<IntervalOutput> {
    let alpha = config.alpha;
    let (interval, diagnostics) = match method {
        Method::EmpiricalShortest => {
            let (iv, w) = empirical_shortest(sample, alpha)?;
            (iv, Diagnostics::Shortest(w))
        }
        Method::EmpiricalCentral => (empirical_central(sample, alpha)?, Diagnostics::None {}),
        Method::GaussianFit => {
            let g = gaussian_fit_interval(sample, alpha)?;
            let d = Diagnostics::Gaussian {
                mean: g.mean,
                sd: g.sd,
                degenerate: g.degenerate,
            };
            (g.interval, d)
        }
        Method::Spin => {
            let r = spin_interval(sample, config)?;
            (r.interval, Diagnostics::Qp(r.diagnostics))
        }
        Method::CentralQp => {
            let r = central_qp_interval(sample, config)?;
            (r.interval, Diagnostics::Qp(r.diagnostics))
        }
    };
    Ok(IntervalOutput {
        method: method.label(),
        lower: interval.lower,
        upper: interval.upper,
        alpha,
        n: sample.n(),
        diagnostics,
    })
}

fn cmd_interval(args: IntervalArgs) -> Result<(), String> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(format!("--alpha must lie in (0, 1), got {}", args.alpha));
    }
    let draws = input::read_draws(&args.input).map_err(|e| e.to_string())?;
    let sample = SortedSample::from_vec(draws).map_err(|e| e.to_string())?;
    let config = args.qp.config(args.alpha, args.seed);
    let methods = if args.methods.is_empty() {
        vec![Method::Spin]
    } else {
        args.methods
    };
    let mut results = Vec::with_capacity(methods.len());
    for m in methods {
        results.push(compute(&sample, m, &config).map_err(|e| format!("{}: {e}", m.label()))?);
    }
    if args.json {
        let report = JsonReport {
            schema: JSON_SCHEMA,
            input: args.input.display().to_string(),
            results: &results,
        };
        let text = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
        println!("{text}");
    } else {
        println!("{:<12} {:>22} {:>22}", "method", "lower", "upper");
        for r in &results {
            println!("{:<12} {:>22} {:>22}", r.method, r.lower, r.upper);
        }
        println!("alpha = {}, n = {}", config.alpha, sample.n());
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), String> {
    let thin = args.thin as usize;
    let dists = args
        .dist
        .iter()
        .map(|d| parse_dist(d, args.rho, thin))
        .collect::<Result<Vec<_>, _>>()?;
    let mut cells = Vec::new();
    for dist in &dists {
        for &n in &args.sizes {
            for &alpha in &args.alphas {
                let mut cell = ExperimentCell::new(*dist, n as usize, alpha, args.reps as usize, &args.methods).with_seed(args.seed);
                cell.spin = args.qp.config(alpha, args.seed);
                cell.validate().map_err(|e| format!("cell {}: {e}", cell.id()))?;
                cells.push(cell);
            }
        }
    }
    let options = RunOptions {
        threads: args.threads.map(|t| t as usize),
        keep_raw: args.dump_raw,
    };
    std::fs::create_dir_all(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;
    let mut reports = Vec::with_capacity(cells.len());
    let mut raw = Vec::new();
    for cell in &cells {
        eprintln!("running {} ({} replications)", cell.id(), cell.replications);
        let mut outcome = run_grid(std::slice::from_ref(cell), &options).map_err(|e| format!("cell {}: {e}", cell.id()))?;
        let outcome = outcome.remove(0);
        for m in &outcome.report.methods {
            eprintln!(
                "  {:<12} rmse(l,u) = ({:.5}, {:.5})  coverage = {:.4}  efficiency = {:.4}  failures = {}",
                m.method.label(),
                m.lower.rmse,
                m.upper.rmse,
                m.coverage_mean,
                m.both.efficiency,
                m.failures
            );
        }
        raw.extend(outcome.raw);
        reports.push(outcome.report);
    }
    let csv_path = args.out.join("report.csv");
    emit_csv(&reports, &csv_path).map_err(|e| e.to_string())?;
    eprintln!("wrote {}", csv_path.display());
    if args.dump_raw {
        let raw_path = args.out.join("raw.csv");
        emit_raw(&raw, &raw_path).map_err(|e| e.to_string())?;
        eprintln!("wrote {}", raw_path.display());
    }
    if !args.no_plots {
        for path in emit_plots(&reports, &args.out).map_err(|e| e.to_string())? {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Interval(args) => cmd_interval(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

//! `stepgp`: designs, single-model fits and benchmark sweeps.
//!
//! Exit codes: 0 success, 1 runtime or IO failure, 2 usage or config error.

mod config;
mod data;
mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::mpsc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use stepgp::benchmark::{self, fit_method, Method};
use stepgp::design::{maximin_lhs, write_points_csv, DesignSpec};
use stepgp::gp::FittedConfig;
use stepgp::hyperopt::{maximize_likelihood, MLProblem, MLResult};
use stepgp::{Domain, GpError, Kernel, TrainingSet};

use config::{FunctionConfig, RunConfig, MAX_DIM};
use output::{config_hash, csv_line, metadata, write_atomic, OrderedRows};

const OUT_DIR_ENV: &str = "STEPGP_OUT_DIR";

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input data (exit 2).
    Usage(String),
    /// Failure while running (exit 1).
    Runtime(String),
}

impl CliError {
    pub fn usage(e: impl fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    fn io(what: &str, path: &Path, e: std::io::Error) -> Self {
        CliError::Runtime(format!("{what} {}: {e}", path.display()))
    }
}

impl From<GpError> for CliError {
    fn from(e: GpError) -> Self {
        match e {
            GpError::Optimization { message, diagnostics } => {
                CliError::Runtime(format!("{message}\n  {}", diagnostics.join("\n  ")))
            }
            e => CliError::Runtime(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "stepgp", version, about = "Gaussian-process emulation of step-discontinuous functions")]
struct Cli {
    /// More log output (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a maximin Latin-hypercube design.
    Design(DesignArgs),
    /// Fit a kernel by maximum likelihood and predict at test points.
    Fit(FitArgs),
    /// Run the replicated RMSE comparison.
    Benchmark(BenchArgs),
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    /// `lo,hi` for every axis, or `lo1,hi1,lo2,hi2,…`.
    #[arg(long, allow_hyphen_values = true, default_value = "0,1")]
    domain: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Annealing temperature steps.
    #[arg(long, default_value_t = stepgp::design::DEFAULT_OPTIMIZE_ITERS)]
    iters: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("model").required(true).args(["kernel", "method"]))]
struct FitArgs {
    /// Training CSV: input columns then `y`.
    #[arg(long)]
    train: PathBuf,
    /// Test CSV: input columns (a trailing `y` column is used for RMSE).
    #[arg(long)]
    test: PathBuf,
    /// Kernel description (TOML).
    #[arg(long)]
    kernel: Option<PathBuf>,
    /// Named method, e.g. `NeurNet` or `Gibbs-Arctan`.
    #[arg(long)]
    method: Option<String>,
    /// Input domain; defaults to the bounding box of the training inputs.
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = stepgp::hyperopt::DEFAULT_RESTARTS)]
    restarts: usize,
    /// Predictions CSV (`mean,variance`).
    #[arg(long)]
    out: PathBuf,
    /// Fitted model (TOML); defaults to the predictions path with a `.toml` extension.
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Test function, `step:<dim>` or `nonstat`; repeatable. Replaces the config's list.
    #[arg(long = "function")]
    functions: Vec<String>,
    /// Comma-separated method labels.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Worker threads (default: all cores). Does not change results.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; `STEPGP_OUT_DIR` overrides the config value.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Record wall_ms as 0 so reruns produce identical rows.
    #[arg(long)]
    no_timing: bool,
}

fn parse_domain(spec: &str, d: usize) -> Result<Domain, CliError> {
    let vals = spec
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|_| CliError::Usage(format!("cannot parse domain '{spec}'")))?;
    let (lower, upper): (Vec<f64>, Vec<f64>) = match vals.len() {
        2 => (vec![vals[0]; d], vec![vals[1]; d]),
        n if n == 2 * d => (vals.iter().step_by(2).copied().collect(), vals.iter().skip(1).step_by(2).copied().collect()),
        _ => return Err(CliError::Usage(format!("domain needs 2 or {} numbers", 2 * d))),
    };
    Domain::new(lower, upper).map_err(CliError::usage)
}

fn check_dim(d: usize) -> Result<(), CliError> {
    if (1..=MAX_DIM).contains(&d) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("dimension must be in 1..={MAX_DIM}, got {d}")))
    }
}

fn cmd_design(a: DesignArgs) -> Result<(), CliError> {
    check_dim(a.d)?;
    let domain = parse_domain(&a.domain, a.d)?;
    let spec = DesignSpec::new(a.n, domain, a.seed).map_err(CliError::usage)?.with_iters(a.iters);
    let design = maximin_lhs(&spec);
    let hash = config_hash(&format!("design n={} d={} domain={} iters={} seed={}", a.n, a.d, a.domain, a.iters, a.seed));
    let mut buf = metadata(a.seed, &hash, &[format!("min_dist: {}", design.min_dist)]).into_bytes();
    write_points_csv(&design.points, a.d, &mut buf)?;
    write_atomic(&a.out, &buf).map_err(|e| CliError::io("cannot write", &a.out, e))?;
    println!("min_dist {}", design.min_dist);
    Ok(())
}

#[derive(Serialize)]
struct ModelFile<'a> {
    model: FittedConfig,
    optimization: &'a MLResult,
}

fn cmd_fit(a: FitArgs) -> Result<(), CliError> {
    // validate every input before producing any output
    let (x, y) = data::read_training(&a.train)?;
    let (test, test_y) = data::read_inputs(&a.test)?;
    let d = x[0].len();
    if test[0].len() != d {
        return Err(CliError::Usage(format!("test data has {} inputs, training data {d}", test[0].len())));
    }
    let domain = match &a.domain {
        Some(s) => parse_domain(s, d)?,
        None => Domain::bounding(&x).map_err(CliError::usage)?,
    };
    let ts = TrainingSet::new(x, y, domain).map_err(CliError::usage)?;
    let mut described = format!("fit seed={} restarts={}\n", a.seed, a.restarts);
    let kernel = match (&a.kernel, &a.method) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io("cannot read", path, e))?;
            let k: Kernel = toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            k.validate().map_err(CliError::usage)?;
            if k.dim() != d {
                return Err(CliError::Usage(format!("kernel is {}-dimensional, data {d}-dimensional", k.dim())));
            }
            described.push_str(&text);
            Some(k)
        }
        (None, Some(m)) => {
            described.push_str(m);
            None
        }
        (None, None) => unreachable!("clap requires one of --kernel/--method"),
    };
    let method = match &a.method {
        Some(m) if kernel.is_none() => Some(m.parse::<Method>().map_err(CliError::usage)?),
        _ => None,
    };
    if a.restarts == 0 {
        return Err(CliError::Usage("--restarts must be at least 1".into()));
    }
    for p in [&a.train, &a.test] {
        described.push_str(&std::fs::read_to_string(p).map_err(|e| CliError::io("cannot read", p, e))?);
    }

    let (gp, ml) = match (kernel, method) {
        (Some(k), _) => {
            let ml = maximize_likelihood(&MLProblem::new(k, ts.clone(), a.seed).with_restarts(a.restarts))?;
            (stepgp::fit(&ml.kernel, &ts)?, ml)
        }
        (None, Some(m)) => fit_method(m, &ts, a.seed, a.restarts)?,
        (None, None) => unreachable!(),
    };
    let preds = gp.predict_batch(&test)?;

    let hash = config_hash(&described);
    let mut buf = metadata(a.seed, &hash, &[format!("log_likelihood: {}", ml.best_loglik)]).into_bytes();
    buf.extend(csv_line(["mean", "variance"]));
    for p in &preds {
        buf.extend(csv_line([p.mean.to_string(), p.variance.to_string()]));
    }
    let model_path = a.model_out.clone().unwrap_or_else(|| a.out.with_extension("toml"));
    let model = toml::to_string(&ModelFile {
        model: gp.to_config(),
        optimization: &ml,
    })
    .map_err(|e| CliError::Runtime(format!("cannot serialize the fitted model: {e}")))?;
    write_atomic(&model_path, model.as_bytes()).map_err(|e| CliError::io("cannot write", &model_path, e))?;
    write_atomic(&a.out, &buf).map_err(|e| CliError::io("cannot write", &a.out, e))?;

    println!("log_likelihood {}", ml.best_loglik);
    println!("mu_hat {}", gp.mu_hat());
    for (name, v) in ml.param_names.iter().zip(&ml.best_params) {
        println!("{name} {v}");
    }
    if let Some(truth) = test_y {
        let mean: Vec<f64> = preds.iter().map(|p| p.mean).collect();
        println!("rmse {}", benchmark::rmse(&truth, &mean)?);
    }
    for f in &ml.at_bounds {
        eprintln!(
            "warning: {} = {} is at its {} bound",
            f.name,
            f.value,
            if f.upper { "upper" } else { "lower" }
        );
    }
    Ok(())
}

fn parse_function(s: &str) -> Result<FunctionConfig, CliError> {
    match s.split_once(':') {
        None if s == "nonstat" => Ok(FunctionConfig::Nonstat),
        Some(("step", dim)) => Ok(FunctionConfig::Step {
            dim: dim.parse().map_err(|_| CliError::Usage(format!("bad dimension in '{s}'")))?,
            jump: 0.0,
            lower: None,
            upper: None,
        }),
        _ => Err(CliError::Usage(format!("unknown function '{s}' (use step:<dim> or nonstat)"))),
    }
}

fn load_run_config(a: &BenchArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io("cannot read", path, e))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::parse("functions = []")?,
    };
    if !a.functions.is_empty() {
        cfg.functions = a.functions.iter().map(|s| parse_function(s)).collect::<Result<_, _>>()?;
    }
    if let Some(m) = &a.methods {
        cfg.methods = m.split(',').map(|s| s.trim().to_string()).collect();
    }
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.replicates = a.replicates.unwrap_or(cfg.replicates);
    cfg.n_train = a.n_train.or(cfg.n_train);
    cfg.n_test = a.n_test.unwrap_or(cfg.n_test);
    cfg.restarts = a.restarts.unwrap_or(cfg.restarts);
    cfg.threads = a.threads.unwrap_or(cfg.threads);
    if a.no_timing {
        cfg.timing = false;
    }
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
        cfg.out_dir = dir.into();
    }
    if let Some(dir) = &a.out_dir {
        cfg.out_dir = dir.clone();
    }
    if cfg.functions.is_empty() {
        return Err(CliError::Usage("no test functions (give --config or --function)".into()));
    }
    Ok(cfg)
}

fn cmd_benchmark(a: BenchArgs) -> Result<(), CliError> {
    let run = load_run_config(&a)?;
    let exp = run.to_experiment()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run.threads)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    std::fs::create_dir_all(&run.out_dir).map_err(|e| CliError::io("cannot create", &run.out_dir, e))?;
    let results_path = run.out_dir.join("results.csv");
    let summary_path = run.out_dir.join("summary.csv");
    let hash = config_hash(&run.canonical());
    let notes = [
        "seeds: cell = seed + 1000000*function + 1000*replicate + method; design = seed + 1000000*function + 1000*replicate + 999; test set = seed + 1000000*function + 999999".to_string(),
        "quantiles: linear interpolation between order statistics, h = (n-1)p".to_string(),
        "test sets: i.i.d. uniform over the function domain".to_string(),
    ];
    let meta = metadata(run.seed, &hash, &notes);
    let mut preamble = meta.clone().into_bytes();
    preamble.extend(csv_line(benchmark::RESULTS_HEADER));
    let mut writer = OrderedRows::create(&results_path, &preamble).map_err(|e| CliError::io("cannot write", &results_path, e))?;

    let data = pool.install(|| benchmark::prepare(&exp))?;
    let cells = exp.cells();
    let (tx, rx) = mpsc::channel();
    let mut rows = vec![None; cells.len()];
    std::thread::scope(|s| -> Result<(), CliError> {
        s.spawn(|| {
            pool.install(|| {
                cells.par_iter().enumerate().for_each_with(tx, |tx, (i, &cell)| {
                    let _ = tx.send((i, benchmark::run_cell(&exp, &data, cell)));
                });
            })
        });
        for (i, row) in rx {
            writer
                .push(i, csv_line(benchmark::result_record(&row)))
                .map_err(|e| CliError::io("cannot write", &results_path, e))?;
            rows[i] = Some(row);
        }
        Ok(())
    })?;
    writer.finish().map_err(|e| CliError::io("cannot write", &results_path, e))?;

    let rows: Vec<_> = rows.into_iter().map(|r| r.expect("every cell reports")).collect();
    let summary = benchmark::summarize(&rows);
    let mut buf = meta.into_bytes();
    benchmark::write_summary_csv(&summary, &mut buf)?;
    write_atomic(&summary_path, &buf).map_err(|e| CliError::io("cannot write", &summary_path, e))?;

    println!("{:<16} {:>12} {:>9}", "method", "median_rmse", "failures");
    for s in &summary {
        println!("{:<16} {:>12.6} {:>9}", s.method, s.median, s.failures);
    }
    println!("results: {}", results_path.display());
    println!("summary: {}", summary_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Design(a) => cmd_design(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Benchmark(a) => cmd_benchmark(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

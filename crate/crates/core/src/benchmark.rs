//! Test functions and the replicated fit/predict/RMSE experiment.
//!
//! # Seeding
//!
//! Every random stream is derived from the master seed `m` by a fixed
//! counter scheme, so results do not depend on execution order:
//!
//! * cell (function `t`, replicate `r`, method `k`): `m + 1_000_000·t + 1000·r + k`
//! * design for (`t`, `r`), shared by all methods: `m + 1_000_000·t + 1000·r + 999`
//! * test set for function `t`, shared by all replicates: `m + 1_000_000·t + 999_999`
//!
//! Method indices must stay below 999. Arithmetic wraps on overflow.
//!
//! # Quantiles
//!
//! Summaries use linear interpolation between order statistics: for sorted
//! values `v[0..n]` the `p`-quantile is `v[⌊h⌋] + (h − ⌊h⌋)(v[⌊h⌋+1] − v[⌊h⌋])`
//! with `h = (n − 1)p`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::design::{maximin_lhs, uniform_test_set, DesignSpec};
use crate::domain::Domain;
use crate::error::{GpError, Result};
use crate::gp::{fit, FittedGP, TrainingSet};
use crate::hyperopt::{maximize_likelihood, MLProblem, MLResult, DEFAULT_RESTARTS};
use crate::kernels::{Kernel, LengthScaleFn, Sigmoid, WarpMap};

pub const DESIGN_SEED_OFFSET: u64 = 999;
pub const TEST_SEED_OFFSET: u64 = 999_999;

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum TestFnKind {
    /// `−1` for `x₁ ≤ jump`, `+1` otherwise.
    Step { jump: f64 },
    /// `sin(30(x − 0.9)⁴) cos(2(x − 0.9)) + (x − 0.9)/2` on `[0, 1]`.
    Nonstat,
    UserDefined { name: String, f: Arc<ScalarFn> },
}

impl fmt::Debug for TestFnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFnKind::Step { jump } => f.debug_struct("Step").field("jump", jump).finish(),
            TestFnKind::Nonstat => f.write_str("Nonstat"),
            TestFnKind::UserDefined { name, .. } => f.debug_struct("UserDefined").field("name", name).finish(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TestFunction {
    pub kind: TestFnKind,
    pub domain: Domain,
}

impl TestFunction {
    /// Step on `[-2, 2]^d` with the jump at `x₁ = 0`.
    pub fn step(d: usize) -> Result<Self> {
        Self::step_at(Domain::cube(-2.0, 2.0, d)?, 0.0)
    }

    pub fn step_at(domain: Domain, jump: f64) -> Result<Self> {
        if !jump.is_finite() {
            return Err(GpError::input("step location must be finite"));
        }
        Ok(TestFunction {
            kind: TestFnKind::Step { jump },
            domain,
        })
    }

    pub fn nonstat() -> Self {
        TestFunction {
            kind: TestFnKind::Nonstat,
            domain: Domain::unit(1),
        }
    }

    pub fn user(name: impl Into<String>, domain: Domain, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        TestFunction {
            kind: TestFnKind::UserDefined {
                name: name.into(),
                f: Arc::new(f),
            },
            domain,
        }
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn name(&self) -> String {
        match &self.kind {
            TestFnKind::Step { .. } => "step".into(),
            TestFnKind::Nonstat => "nonstat".into(),
            TestFnKind::UserDefined { name, .. } => name.clone(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(GpError::input(format!("expected {} coordinates, got {}", self.dim(), x.len())));
        }
        if !self.domain.contains(x) {
            return Err(GpError::input(format!("{x:?} is outside the function domain")));
        }
        Ok(match &self.kind {
            TestFnKind::Step { jump } => {
                if x[0] <= *jump {
                    -1.0
                } else {
                    1.0
                }
            }
            TestFnKind::Nonstat => {
                let t = x[0] - 0.9;
                (30.0 * t.powi(4)).sin() * (2.0 * t).cos() + t / 2.0
            }
            TestFnKind::UserDefined { f, .. } => f(x),
        })
    }
}

/// Root mean square error.
pub fn rmse(truth: &[f64], pred: &[f64]) -> Result<f64> {
    if truth.len() != pred.len() {
        return Err(GpError::input(format!("{} truths but {} predictions", truth.len(), pred.len())));
    }
    if truth.is_empty() {
        return Err(GpError::input("rmse of an empty set"));
    }
    let ss: f64 = truth.iter().zip(pred).map(|(t, p)| (t - p) * (t - p)).sum();
    Ok((ss / truth.len() as f64).sqrt())
}

/// Kernel families compared by the experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    SquarExp,
    Mat32,
    NeurNet,
    /// Arcsine kernel with a fitted input shift.
    NeurNetShift,
    /// Gibbs kernel with `l(x) = c1 x² + c2`.
    GibbsQuad,
    Gibbs(Sigmoid),
    /// Sigmoid input warp in front of a squared-exponential kernel.
    Warp(Sigmoid),
}

impl Method {
    /// The eleven methods of the step-function comparison.
    pub fn standard_set() -> Vec<Method> {
        let mut v = vec![Method::SquarExp, Method::Mat32, Method::NeurNet];
        v.extend(Sigmoid::ALL.iter().map(|&s| Method::Gibbs(s)));
        v.extend(Sigmoid::ALL.iter().map(|&s| Method::Warp(s)));
        v
    }

    pub fn label(&self) -> String {
        match self {
            Method::SquarExp => "SquarExp".into(),
            Method::Mat32 => "Mat32".into(),
            Method::NeurNet => "NeurNet".into(),
            Method::NeurNetShift => "NeurNetShift".into(),
            Method::GibbsQuad => "Gibbs-Quad".into(),
            Method::Gibbs(s) => format!("Gibbs-{}", s.label()),
            Method::Warp(s) => format!("Warp-{}", s.label()),
        }
    }

    /// Kernels to fit in dimension `d`. Methods with a distinguished axis
    /// yield one candidate per axis; the best likelihood wins.
    pub fn candidates(&self, domain: &Domain) -> Vec<Kernel> {
        let d = domain.dim();
        let ones = vec![1.0; d];
        let axes = 0..d;
        match *self {
            Method::SquarExp => vec![Kernel::squared_exp(1.0, &ones)],
            Method::Mat32 => vec![Kernel::matern32(1.0, &ones)],
            Method::NeurNet => vec![Kernel::neural_net(1.0, &vec![1.0; d + 1])],
            Method::NeurNetShift => {
                let center: Vec<f64> = (0..d).map(|j| domain.center(j)).collect();
                vec![Kernel::neural_net_shifted(1.0, &vec![1.0; d + 1], &center)]
            }
            Method::GibbsQuad => axes
                .map(|a| Kernel::gibbs(1.0, d, LengthScaleFn::quadratic(1.0, 0.5, a)))
                .collect(),
            Method::Gibbs(s) => axes
                .map(|a| Kernel::gibbs(1.0, d, LengthScaleFn::sigmoid(s, 1.0, s.positivity_floor() + 1.0, a)))
                .collect(),
            Method::Warp(s) => axes
                .map(|a| Kernel::warped(WarpMap::sigmoid(s, 1.0, a), Kernel::squared_exp(1.0, &ones)).expect("valid warp"))
                .collect(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Method {
    type Err = GpError;

    fn from_str(s: &str) -> Result<Self> {
        let all = Method::standard_set()
            .into_iter()
            .chain([Method::NeurNetShift, Method::GibbsQuad]);
        for m in all {
            if m.label().eq_ignore_ascii_case(s) {
                return Ok(m);
            }
        }
        Err(GpError::Config(format!("unknown method '{s}'")))
    }
}

/// Maximum-likelihood fit of `method`, enumerating its candidate axes.
pub fn fit_method(method: Method, ts: &TrainingSet, seed: u64, restarts: usize) -> Result<(FittedGP, MLResult)> {
    let mut best: Option<MLResult> = None;
    let mut errors = Vec::new();
    for (axis, kernel) in method.candidates(&ts.domain).into_iter().enumerate() {
        match maximize_likelihood(&MLProblem::new(kernel, ts.clone(), seed).with_restarts(restarts)) {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.best_loglik > b.best_loglik) {
                    best = Some(r);
                }
            }
            Err(e) => errors.push(format!("candidate {axis}: {e}")),
        }
    }
    let Some(best) = best else {
        return Err(GpError::Optimization {
            message: format!("{} could not be fitted", method.label()),
            diagnostics: errors,
        });
    };
    let gp = fit(&best.kernel, ts)?;
    Ok((gp, best))
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub functions: Vec<TestFunction>,
    pub methods: Vec<Method>,
    pub replicates: usize,
    /// Training-set size; `None` means `10·d`.
    pub n_train: Option<usize>,
    pub n_test: usize,
    pub master_seed: u64,
    pub restarts: usize,
    pub design_iters: usize,
    /// When false, `wall_ms` is recorded as 0 so that reruns are identical.
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn new(functions: Vec<TestFunction>, methods: Vec<Method>, replicates: usize, master_seed: u64) -> Self {
        ExperimentConfig {
            functions,
            methods,
            replicates,
            n_train: None,
            n_test: 1000,
            master_seed,
            restarts: DEFAULT_RESTARTS,
            design_iters: crate::design::DEFAULT_OPTIMIZE_ITERS,
            record_timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.functions.is_empty() || self.methods.is_empty() {
            return Err(GpError::Config("need at least one function and one method".into()));
        }
        if self.replicates == 0 {
            return Err(GpError::Config("replicates must be at least 1".into()));
        }
        if self.methods.len() >= DESIGN_SEED_OFFSET as usize {
            return Err(GpError::Config(format!("at most {} methods", DESIGN_SEED_OFFSET - 1)));
        }
        if self.n_test == 0 || self.restarts == 0 {
            return Err(GpError::Config("n_test and restarts must be positive".into()));
        }
        let mut labels: Vec<String> = self.methods.iter().map(Method::label).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(GpError::Config("method labels must be unique".into()));
        }
        for tf in &self.functions {
            if self.n_train_for(tf) < 2 {
                return Err(GpError::Config("n_train must be at least 2".into()));
            }
        }
        Ok(())
    }

    pub fn n_train_for(&self, tf: &TestFunction) -> usize {
        self.n_train.unwrap_or(10 * tf.dim())
    }

    fn base(&self, function: usize, replicate: usize) -> u64 {
        self.master_seed
            .wrapping_add(1_000_000u64.wrapping_mul(function as u64))
            .wrapping_add(1000u64.wrapping_mul(replicate as u64))
    }

    pub fn cell_seed(&self, function: usize, replicate: usize, method: usize) -> u64 {
        self.base(function, replicate).wrapping_add(method as u64)
    }

    pub fn design_seed(&self, function: usize, replicate: usize) -> u64 {
        self.base(function, replicate).wrapping_add(DESIGN_SEED_OFFSET)
    }

    pub fn test_seed(&self, function: usize) -> u64 {
        self.base(function, 0).wrapping_add(TEST_SEED_OFFSET)
    }

    /// All cells in output order: function, then replicate, then method.
    pub fn cells(&self) -> Vec<Cell> {
        let mut v = Vec::new();
        for function in 0..self.functions.len() {
            for replicate in 0..self.replicates {
                for method in 0..self.methods.len() {
                    v.push(Cell {
                        function,
                        replicate,
                        method,
                    });
                }
            }
        }
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub function: usize,
    pub replicate: usize,
    pub method: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub function: String,
    pub dim: usize,
    pub method: String,
    pub replicate: usize,
    pub seed: u64,
    /// `NaN` for failed cells.
    pub rmse: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub jitter: f64,
    pub wall_ms: u64,
    pub loglik: f64,
    pub params: Vec<(String, f64)>,
    pub at_bounds: Vec<String>,
    /// `None` on success, the diagnostic otherwise.
    pub failure: Option<String>,
}

impl ExperimentResult {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }

    pub fn status(&self) -> String {
        match &self.failure {
            None => "ok".into(),
            Some(msg) => format!("failed: {msg}"),
        }
    }
}

/// Training and test data shared by the cells of one experiment.
pub struct Prepared {
    /// `[function][replicate]`
    pub training: Vec<Vec<Result<TrainingSet>>>,
    /// `[function]`: points and true values
    pub tests: Vec<(Vec<Vec<f64>>, Vec<f64>)>,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let mut tests = Vec::new();
    for (t, tf) in cfg.functions.iter().enumerate() {
        let pts = uniform_test_set(cfg.n_test, &tf.domain, cfg.test_seed(t))?;
        let truth = pts.iter().map(|p| tf.eval(p)).collect::<Result<Vec<_>>>()?;
        tests.push((pts, truth));
    }
    let training = cfg
        .functions
        .iter()
        .enumerate()
        .map(|(t, tf)| {
            (0..cfg.replicates)
                .into_par_iter()
                .map(|r| {
                    let spec = DesignSpec::new(cfg.n_train_for(tf), tf.domain.clone(), cfg.design_seed(t, r))?
                        .with_iters(cfg.design_iters);
                    let x = maximin_lhs(&spec).points;
                    let y = x.iter().map(|p| tf.eval(p)).collect::<Result<Vec<_>>>()?;
                    TrainingSet::new(x, y, tf.domain.clone())
                })
                .collect()
        })
        .collect();
    Ok(Prepared { training, tests })
}

/// Fits and scores one cell. Failures become failed rows.
pub fn run_cell(cfg: &ExperimentConfig, data: &Prepared, cell: Cell) -> ExperimentResult {
    let tf = &cfg.functions[cell.function];
    let method = cfg.methods[cell.method];
    let seed = cfg.cell_seed(cell.function, cell.replicate, cell.method);
    let started = Instant::now();
    let mut row = ExperimentResult {
        function: tf.name(),
        dim: tf.dim(),
        method: method.label(),
        replicate: cell.replicate,
        seed,
        rmse: f64::NAN,
        n_train: cfg.n_train_for(tf),
        n_test: cfg.n_test,
        jitter: f64::NAN,
        wall_ms: 0,
        loglik: f64::NAN,
        params: Vec::new(),
        at_bounds: Vec::new(),
        failure: None,
    };
    let outcome = (|| -> Result<()> {
        let ts = data.training[cell.function][cell.replicate]
            .as_ref()
            .map_err(|e| GpError::input(format!("training data unavailable: {e}")))?;
        let (gp, ml) = fit_method(method, ts, seed, cfg.restarts)?;
        let (pts, truth) = &data.tests[cell.function];
        let pred: Vec<f64> = gp.predict_batch(pts)?.iter().map(|p| p.mean).collect();
        row.rmse = rmse(truth, &pred)?;
        row.jitter = gp.jitter_used();
        row.loglik = ml.best_loglik;
        row.params = ml.param_names.iter().cloned().zip(ml.best_params.iter().copied()).collect();
        row.at_bounds = ml.at_bounds.iter().map(|f| f.name.clone()).collect();
        Ok(())
    })();
    if let Err(e) = outcome {
        log::warn!("{} replicate {} failed: {e}", method.label(), cell.replicate);
        row.failure = Some(match e {
            GpError::Optimization { message, diagnostics } => format!("{message} [{}]", diagnostics.join("; ")),
            e => e.to_string(),
        });
    }
    if cfg.record_timing {
        row.wall_ms = started.elapsed().as_millis() as u64;
    }
    row
}

/// Runs every cell (in parallel) and returns rows in [`ExperimentConfig::cells`] order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentResult>> {
    let data = prepare(cfg)?;
    Ok(cfg.cells().into_par_iter().map(|c| run_cell(cfg, &data, c)).collect())
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodSummary {
    pub method: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub failures: usize,
}

/// Five-number summary plus mean of the RMSE per method, in order of first
/// appearance. Failed rows are counted but excluded from the statistics.
pub fn summarize(results: &[ExperimentResult]) -> Vec<MethodSummary> {
    let mut order: Vec<String> = Vec::new();
    for r in results {
        if !order.contains(&r.method) {
            order.push(r.method.clone());
        }
    }
    order
        .into_iter()
        .map(|method| {
            let rows: Vec<&ExperimentResult> = results.iter().filter(|r| r.method == method).collect();
            let mut v: Vec<f64> = rows.iter().filter(|r| r.ok()).map(|r| r.rmse).collect();
            v.sort_by(f64::total_cmp);
            let mean = if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
            MethodSummary {
                method,
                min: quantile(&v, 0.0),
                q1: quantile(&v, 0.25),
                median: quantile(&v, 0.5),
                q3: quantile(&v, 0.75),
                max: quantile(&v, 1.0),
                mean,
                failures: rows.len() - v.len(),
            }
        })
        .collect()
}

pub const RESULTS_HEADER: [&str; 11] = [
    "function", "dim", "method", "replicate", "seed", "rmse", "n_train", "n_test", "jitter", "wall_ms", "status",
];
pub const SUMMARY_HEADER: [&str; 8] = ["method", "min", "q1", "median", "q3", "max", "mean", "failures"];

pub fn result_record(r: &ExperimentResult) -> Vec<String> {
    vec![
        r.function.clone(),
        r.dim.to_string(),
        r.method.clone(),
        r.replicate.to_string(),
        r.seed.to_string(),
        r.rmse.to_string(),
        r.n_train.to_string(),
        r.n_test.to_string(),
        r.jitter.to_string(),
        r.wall_ms.to_string(),
        r.status(),
    ]
}

pub fn summary_record(s: &MethodSummary) -> Vec<String> {
    let mut v = vec![s.method.clone()];
    v.extend([s.min, s.q1, s.median, s.q3, s.max, s.mean].iter().map(f64::to_string));
    v.push(s.failures.to_string());
    v
}

pub fn write_results_csv<W: Write>(results: &[ExperimentResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in results {
        w.write_record(result_record(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(summary: &[MethodSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for s in summary {
        w.write_record(summary_record(s))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests;

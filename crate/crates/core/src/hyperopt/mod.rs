//! Maximum-likelihood estimation of kernel hyperparameters.
//!
//! The constant mean is profiled out, so the objective is a function of the
//! kernel parameters alone. Each restart runs a box-projected Nelder–Mead
//! search in transformed coordinates (log for positive parameters, linear
//! otherwise). Restart starts come from a randomly shifted Halton sequence
//! over the transformed box, so the first `k` starts are the same for every
//! `n_restarts ≥ k`.

pub mod nelder_mead;
mod starts;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{GpError, Result};
use crate::gp::{profiled_log_likelihood, TrainingSet};
use crate::kernels::{HyperParam, Kernel, Scale, WarpKind};

pub use nelder_mead::NelderMeadOptions;

pub const DEFAULT_RESTARTS: usize = 10;
/// Distance (in search coordinates) under which a parameter counts as sitting
/// on a bound.
pub const BOUND_FLAG_TOLERANCE: f64 = 1e-6;

/// Profiled log-likelihood of `ts` under `kernel`.
pub fn log_likelihood(kernel: &Kernel, ts: &TrainingSet) -> Result<f64> {
    profiled_log_likelihood(kernel, ts)
}

#[derive(Clone, Debug)]
pub struct MLProblem {
    pub kernel: Kernel,
    pub ts: TrainingSet,
    /// `(lower, upper)` per parameter, in [`Kernel::params`] order.
    pub bounds: Vec<(f64, f64)>,
    pub n_restarts: usize,
    pub seed: u64,
    pub options: NelderMeadOptions,
}

impl MLProblem {
    /// Problem with [`default_bounds`] and the default restart count.
    pub fn new(kernel: Kernel, ts: TrainingSet, seed: u64) -> Self {
        let bounds = default_bounds(&kernel, &ts.domain, ts.y_variance());
        MLProblem {
            kernel,
            ts,
            bounds,
            n_restarts: DEFAULT_RESTARTS,
            seed,
            options: NelderMeadOptions::default(),
        }
    }

    pub fn with_restarts(mut self, n: usize) -> Self {
        self.n_restarts = n;
        self
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = bounds;
        self
    }

    /// Kernel carrying the problem bounds, with values clamped into them.
    fn bounded_kernel(&self) -> Result<Kernel> {
        let mut k = self.kernel.clone();
        let mut ps = k.params_mut();
        if ps.len() != self.bounds.len() {
            return Err(GpError::input(format!(
                "kernel has {} parameters but {} bounds were given",
                ps.len(),
                self.bounds.len()
            )));
        }
        for (p, &(lo, hi)) in ps.iter_mut().zip(&self.bounds) {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(GpError::param(format!("{}: invalid bounds [{lo}, {hi}]", p.name)));
            }
            p.lower = lo;
            p.upper = hi;
            p.clamp_value();
            p.check()?;
        }
        drop(ps);
        k.check_structure()?;
        Ok(k)
    }
}

/// A parameter that ended on (or within tolerance of) one of its bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundFlag {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub upper: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MLResult {
    pub param_names: Vec<String>,
    pub best_params: Vec<f64>,
    pub best_loglik: f64,
    pub best_restart: usize,
    /// Final value of every restart; `-inf` for a failed restart.
    pub restart_logliks: Vec<f64>,
    pub converged: Vec<bool>,
    pub evaluations: Vec<usize>,
    /// Empty for restarts that produced a finite likelihood.
    pub diagnostics: Vec<String>,
    pub at_bounds: Vec<BoundFlag>,
    /// The input kernel with `best_params` and the problem bounds.
    pub kernel: Kernel,
}

impl MLResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.param_names.iter().position(|n| n == name).map(|i| self.best_params[i])
    }

    pub fn is_at_bound(&self, name: &str) -> bool {
        self.at_bounds.iter().any(|f| f.name == name)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| GpError::Config(e.to_string()))
    }
}

struct RestartOutcome {
    x: Vec<f64>,
    loglik: f64,
    evals: usize,
    converged: bool,
    diagnostic: String,
}

/// Multi-start maximization of the profiled log-likelihood.
///
/// The best restart is the one with the largest final likelihood among those
/// that met the convergence test; if none converged, among all restarts with
/// a finite likelihood. Ties go to the lowest restart index. Results do not
/// depend on thread scheduling.
pub fn maximize_likelihood(prob: &MLProblem) -> Result<MLResult> {
    if prob.n_restarts == 0 {
        return Err(GpError::input("n_restarts must be at least 1"));
    }
    let template = prob.bounded_kernel()?;
    let params: Vec<HyperParam> = template.params().into_iter().cloned().collect();
    let free: Vec<usize> = (0..params.len()).filter(|&i| params[i].lower < params[i].upper).collect();
    let fixed: Vec<f64> = params.iter().map(|p| p.value).collect();
    let (lower, upper): (Vec<f64>, Vec<f64>) = free.iter().map(|&i| params[i].search_bounds()).unzip();

    let to_values = |t: &[f64]| -> Vec<f64> {
        let mut v = fixed.clone();
        for (k, &i) in free.iter().enumerate() {
            v[i] = params[i].from_search(t[k]).clamp(params[i].lower, params[i].upper);
        }
        v
    };

    let mut rng = ChaCha8Rng::seed_from_u64(prob.seed);
    let shift: Vec<f64> = (0..free.len()).map(|_| rng.random::<f64>()).collect();

    let outcomes: Vec<RestartOutcome> = (0..prob.n_restarts)
        .into_par_iter()
        .map(|r| {
            let u = starts::shifted_halton(r, &shift);
            let x0: Vec<f64> = u
                .iter()
                .zip(lower.iter().zip(&upper))
                .map(|(u, (lo, hi))| lo + u * (hi - lo))
                .collect();
            let mut work = template.clone();
            let mut last_err = String::new();
            let objective = |t: &[f64]| -> f64 {
                work.set_param_values(&to_values(t)).expect("parameter count is fixed");
                match profiled_log_likelihood(&work, &prob.ts) {
                    Ok(v) => -v,
                    Err(e) => {
                        last_err = e.to_string();
                        f64::INFINITY
                    }
                }
            };
            let res = nelder_mead::minimize(objective, &x0, &lower, &upper, &prob.options);
            let loglik = -res.f;
            RestartOutcome {
                x: res.x,
                loglik: if loglik.is_finite() { loglik } else { f64::NEG_INFINITY },
                evals: res.evals,
                converged: res.converged && loglik.is_finite(),
                diagnostic: if loglik.is_finite() { String::new() } else { last_err },
            }
        })
        .collect();

    let pick = |want_converged: bool| {
        let mut best: Option<usize> = None;
        for (i, o) in outcomes.iter().enumerate() {
            if !o.loglik.is_finite() || (want_converged && !o.converged) {
                continue;
            }
            if best.is_none_or(|b| o.loglik > outcomes[b].loglik) {
                best = Some(i);
            }
        }
        best
    };
    let Some(best) = pick(true).or_else(|| pick(false)) else {
        return Err(GpError::Optimization {
            message: format!("all {} restarts failed", prob.n_restarts),
            diagnostics: outcomes
                .iter()
                .enumerate()
                .map(|(i, o)| format!("restart {i}: {}", o.diagnostic))
                .collect(),
        });
    };
    if !outcomes[best].converged {
        log::warn!("no restart met the convergence test; reporting the best unconverged one");
    }

    let best_x = &outcomes[best].x;
    let best_params = to_values(best_x);
    let mut kernel = template.clone();
    kernel.set_param_values(&best_params)?;
    let names = kernel.param_names();

    let mut at_bounds = Vec::new();
    for (k, &i) in free.iter().enumerate() {
        let p = &params[i];
        for (bound_t, bound, upper_side) in [(lower[k], p.lower, false), (upper[k], p.upper, true)] {
            if (best_x[k] - bound_t).abs() <= BOUND_FLAG_TOLERANCE {
                at_bounds.push(BoundFlag {
                    name: names[i].clone(),
                    value: best_params[i],
                    bound,
                    upper: upper_side,
                });
            }
        }
    }
    for f in &at_bounds {
        log::info!(
            "{} = {:e} sits at its {} bound",
            f.name,
            f.value,
            if f.upper { "upper" } else { "lower" }
        );
    }

    Ok(MLResult {
        param_names: names,
        best_params,
        best_loglik: outcomes[best].loglik,
        best_restart: best,
        restart_logliks: outcomes.iter().map(|o| o.loglik).collect(),
        converged: outcomes.iter().map(|o| o.converged).collect(),
        evaluations: outcomes.iter().map(|o| o.evals).collect(),
        diagnostics: outcomes.iter().map(|o| o.diagnostic.clone()).collect(),
        at_bounds,
        kernel,
    })
}

const VARIANCE_FACTORS: (f64, f64) = (1e-6, 1e3);
const LENGTH_FACTORS: (f64, f64) = (1e-2, 10.0);
const NN_SIGMA_BOUNDS: (f64, f64) = (1e-2, 1e3);
const C1_BOUNDS: (f64, f64) = (1e-2, 1e3);
const C2_SPAN: f64 = 100.0;
const SCALE_BOUNDS: (f64, f64) = (1e-3, 1e3);

/// Default search box for every parameter of `kernel`, in
/// [`Kernel::params`] order.
///
/// * variances: `[1e-6, 1e3]·var(y)` (`var(y) = 1` if the data are constant)
/// * length-scales: `[1e-2, 10]·` axis width
/// * arcsine-kernel σⱼ: `[1e-2, 1e3]`; shifts τⱼ: the domain interval
/// * sigmoid and quadratic `c1`: `[1e-2, 1e3]`
/// * length-scale-function `c2`: `[floor + 1e-2·w̄, floor + 100]`, where the
///   floor keeps `l(x) > 0` and `w̄` is the mean axis width
///
/// Children of a warp see the image of the domain under the warp.
pub fn default_bounds(kernel: &Kernel, domain: &Domain, y_var: f64) -> Vec<(f64, f64)> {
    let var = if y_var.is_finite() && y_var > 1e-12 { y_var } else { 1.0 };
    let mut k = kernel.clone();
    rebound(&mut k, domain, var);
    k.params().iter().map(|p| (p.lower, p.upper)).collect()
}

fn set(p: &mut HyperParam, (lo, hi): (f64, f64)) {
    p.lower = lo;
    p.upper = hi;
    if p.scale == Scale::Log && p.lower <= p.offset {
        p.lower = p.offset + f64::EPSILON.max(1e-12 * (hi - p.offset).abs());
    }
    p.clamp_value();
}

fn rebound(k: &mut Kernel, domain: &Domain, var: f64) {
    let vb = (VARIANCE_FACTORS.0 * var, VARIANCE_FACTORS.1 * var);
    let mean_width = (0..domain.dim()).map(|j| domain.width(j)).sum::<f64>() / domain.dim() as f64;
    match k {
        Kernel::Exponential(s) | Kernel::Matern32(s) | Kernel::Matern52(s) | Kernel::SquaredExp(s) => {
            set(&mut s.variance, vb);
            for (j, l) in s.length_scales.iter_mut().enumerate() {
                let w = domain.width(j);
                set(l, (LENGTH_FACTORS.0 * w, LENGTH_FACTORS.1 * w));
            }
        }
        Kernel::NeuralNet(n) | Kernel::NeuralNetShifted(n) => {
            set(&mut n.variance, vb);
            for s in &mut n.sigmas {
                set(s, NN_SIGMA_BOUNDS);
            }
            for (j, t) in n.shift.iter_mut().enumerate() {
                set(t, (domain.lower[j], domain.upper[j]));
            }
        }
        Kernel::Gibbs(g) => {
            set(&mut g.variance, vb);
            if let Some(c1) = &mut g.lsfn.c1 {
                set(c1, C1_BOUNDS);
            }
            let floor = g.lsfn.kind.c2_floor();
            set(&mut g.lsfn.c2, (floor + 1e-2 * mean_width, floor + C2_SPAN));
        }
        Kernel::Warped(w) => {
            if let Some(c1) = &mut w.warp.c1 {
                set(c1, C1_BOUNDS);
            }
            let image = warped_domain(&w.warp.kind, w.warp.axis, domain);
            rebound(&mut w.kernel, &image, var);
        }
        Kernel::Sum(c) | Kernel::Product(c) => {
            for child in &mut c.children {
                rebound(child, domain, var);
            }
        }
        Kernel::Scaled(s) => {
            set(&mut s.c, SCALE_BOUNDS);
            rebound(&mut s.kernel, domain, var);
        }
        Kernel::ShiftedConst(s) => {
            set(&mut s.c, vb);
            rebound(&mut s.kernel, domain, var);
        }
        Kernel::OuterFn(o) => rebound(&mut o.kernel, domain, var),
    }
}

/// Box containing the image of `domain` under the warp.
fn warped_domain(kind: &WarpKind, axis: usize, domain: &Domain) -> Domain {
    let mut lower = domain.lower.clone();
    let mut upper = domain.upper.clone();
    match kind.sigmoid() {
        Some(s) => {
            let (lo, hi) = s.range();
            lower[axis] = lo;
            upper[axis] = hi;
        }
        None => {
            lower.splice(axis..=axis, [-1.0, -1.0]);
            upper.splice(axis..=axis, [1.0, 1.0]);
        }
    }
    Domain::new(lower, upper).expect("warp image is a finite box")
}

#[cfg(test)]
mod tests;

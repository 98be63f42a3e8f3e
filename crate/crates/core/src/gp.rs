//! Constant-mean GP conditioned on noise-free evaluations.
//!
//! The mean is the GLS estimate `μ̂ = 1ᵀK⁻¹y / 1ᵀK⁻¹1` and the posterior
//! variance carries the extra term for estimating μ:
//!
//! ```text
//! m(x)  = μ̂ + k(x)ᵀ K⁻¹ (y − μ̂1)
//! s²(x) = k(x,x) − k(x)ᵀK⁻¹k(x) + (1 − 1ᵀK⁻¹k(x))² / 1ᵀK⁻¹1
//! ```

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{GpError, Result};
use crate::kernels::{check_points, Kernel};

/// First jitter tried, relative to the mean diagonal of `K`.
pub const INITIAL_JITTER: f64 = 1e-10;
pub const JITTER_GROWTH: f64 = 10.0;
pub const MAX_JITTER_ESCALATIONS: u32 = 6;
/// Rows closer than this fraction of the domain diagonal are duplicates.
pub const DUPLICATE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub domain: Domain,
}

impl TrainingSet {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>, domain: Domain) -> Result<Self> {
        if x.len() < 2 {
            return Err(GpError::input(format!("training set needs n >= 2 points, got {}", x.len())));
        }
        if x.len() != y.len() {
            return Err(GpError::input(format!("{} design rows but {} observations", x.len(), y.len())));
        }
        check_points(domain.dim(), &x)?;
        if let Some(p) = x.iter().find(|p| !domain.contains(p)) {
            return Err(GpError::input(format!("design point {p:?} outside the domain")));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(GpError::input("non-finite observation"));
        }
        Ok(TrainingSet { x, y, domain })
    }

    /// Training set whose domain is the bounding box of `x`.
    pub fn from_points(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        let domain = Domain::bounding(&x)?;
        Self::new(x, y, domain)
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Sample variance of `y` (denominator `n`).
    pub fn y_variance(&self) -> f64 {
        let n = self.y.len() as f64;
        let mean = self.y.iter().sum::<f64>() / n;
        self.y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
    }

    /// Indices of the first pair of rows closer than the duplicate threshold.
    pub fn find_duplicate(&self) -> Option<(usize, usize)> {
        let tol = DUPLICATE_TOLERANCE * self.domain.diagonal();
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                let d2: f64 = self.x[i].iter().zip(&self.x[j]).map(|(a, b)| (a - b).powi(2)).sum();
                if d2.sqrt() <= tol {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

/// Cholesky factorization of `K + jitter·I` with jitter escalation.
pub(crate) fn factor_with_jitter(k: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let scale = k.diagonal().mean();
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(GpError::numerical(format!("covariance diagonal has mean {scale}")));
    }
    let mut jitter = INITIAL_JITTER * scale;
    for attempt in 0..=MAX_JITTER_ESCALATIONS {
        if let Some(ch) = factor_at(k, jitter) {
            if attempt > 0 {
                log::debug!("cholesky needed {attempt} jitter escalations (jitter {jitter:e})");
            }
            return Ok((ch, jitter));
        }
        jitter *= JITTER_GROWTH;
    }
    Err(GpError::numerical(format!(
        "covariance matrix not factorizable with jitter up to {:e}",
        jitter / JITTER_GROWTH
    )))
}

fn factor_at(k: &DMatrix<f64>, jitter: f64) -> Option<Cholesky<f64, Dyn>> {
    let mut kj = k.clone();
    for i in 0..kj.nrows() {
        kj[(i, i)] += jitter;
    }
    if kj.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Cholesky::new(kj)
}

/// Frozen posterior state.
#[derive(Clone, Debug)]
pub struct FittedGP {
    kernel: Kernel,
    training: TrainingSet,
    mu_hat: f64,
    chol: Cholesky<f64, Dyn>,
    jitter_used: f64,
    /// `K⁻¹ (y − μ̂1)`
    alpha: DVector<f64>,
    /// `L⁻¹ 1`
    ones_half: DVector<f64>,
    /// `1ᵀ K⁻¹ 1`
    one_kinv_one: f64,
}

impl FittedGP {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn training(&self) -> &TrainingSet {
        &self.training
    }

    pub fn mu_hat(&self) -> f64 {
        self.mu_hat
    }

    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Lower-triangular factor `L` with `L Lᵀ = K + jitter·I`.
    pub fn chol_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn one_kinv_one(&self) -> f64 {
        self.one_kinv_one
    }

    /// `ln |K + jitter·I|` from the Cholesky diagonal.
    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    /// Profiled log-likelihood `−n/2 ln 2π − ½ ln|K| − ½ (y−μ̂1)ᵀK⁻¹(y−μ̂1)`.
    pub fn log_likelihood(&self) -> f64 {
        let n = self.training.n() as f64;
        let r = DVector::from_iterator(self.training.n(), self.training.y.iter().map(|v| v - self.mu_hat));
        -0.5 * n * (2.0 * std::f64::consts::PI).ln() - 0.5 * self.log_det() - 0.5 * r.dot(&self.alpha)
    }

    /// Posterior mean and the variance before clamping at zero.
    pub fn predict_raw(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.training.dim() {
            return Err(GpError::input(format!(
                "expected a {}-dimensional point, got {}",
                self.training.dim(),
                x.len()
            )));
        }
        let kx = DVector::from_vec(self.kernel.cross_unchecked(x, &self.training.x));
        let kxx = self.kernel.value(x, x);
        let mean = self.mu_hat + kx.dot(&self.alpha);
        let mut v = kx;
        self.chol.l_dirty().solve_lower_triangular_mut(&mut v);
        let u = 1.0 - self.ones_half.dot(&v);
        let variance = kxx - v.norm_squared() + u * u / self.one_kinv_one;
        Ok((mean, variance))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let (mean, raw) = self.predict_raw(x)?;
        if raw < -1e-10 * self.kernel.value(x, x).abs() {
            log::warn!("posterior variance {raw:e} clamped to zero at {x:?}");
        }
        Ok(Prediction {
            mean,
            variance: raw.max(0.0),
        })
    }

    /// Element-wise [`FittedGP::predict`], in parallel.
    pub fn predict_batch(&self, points: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        points.par_iter().map(|x| self.predict(x)).collect()
    }

    pub fn to_config(&self) -> FittedConfig {
        FittedConfig {
            mu_hat: self.mu_hat,
            jitter_used: self.jitter_used,
            kernel: self.kernel.clone(),
            training: self.training.clone(),
        }
    }

    /// Rebuilds a fitted model, refactorizing `K` at the stored jitter.
    pub fn from_config(cfg: FittedConfig) -> Result<Self> {
        let k = prepare(&cfg.kernel, &cfg.training)?;
        let chol = factor_at(&k, cfg.jitter_used).ok_or_else(|| {
            GpError::numerical(format!("stored model does not factorize at jitter {:e}", cfg.jitter_used))
        })?;
        let gp = assemble(cfg.kernel, cfg.training, chol, cfg.jitter_used);
        let tol = 1e-8 * (1.0 + cfg.mu_hat.abs());
        if (gp.mu_hat - cfg.mu_hat).abs() > tol {
            return Err(GpError::Config(format!(
                "stored mean {} disagrees with recomputed {}",
                cfg.mu_hat, gp.mu_hat
            )));
        }
        Ok(gp)
    }
}

/// Serializable form of a [`FittedGP`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedConfig {
    pub mu_hat: f64,
    pub jitter_used: f64,
    pub kernel: Kernel,
    pub training: TrainingSet,
}

fn prepare(kernel: &Kernel, ts: &TrainingSet) -> Result<DMatrix<f64>> {
    if kernel.dim() != ts.dim() {
        return Err(GpError::input(format!(
            "kernel dimension {} does not match training dimension {}",
            kernel.dim(),
            ts.dim()
        )));
    }
    if let Some((i, j)) = ts.find_duplicate() {
        return Err(GpError::input(format!("design rows {i} and {j} are duplicates")));
    }
    kernel.gram(&ts.x)
}

fn assemble(kernel: Kernel, training: TrainingSet, chol: Cholesky<f64, Dyn>, jitter_used: f64) -> FittedGP {
    let n = training.n();
    let ones = DVector::from_element(n, 1.0);
    let y = DVector::from_column_slice(&training.y);
    let kinv_one = chol.solve(&ones);
    let one_kinv_one = kinv_one.sum();
    let mu_hat = kinv_one.dot(&y) / one_kinv_one;
    let alpha = chol.solve(&(y - &ones * mu_hat));
    let mut ones_half = ones;
    chol.l_dirty().solve_lower_triangular_mut(&mut ones_half);
    FittedGP {
        kernel,
        training,
        mu_hat,
        chol,
        jitter_used,
        alpha,
        ones_half,
        one_kinv_one,
    }
}

/// Conditions the GP on `ts` with the kernel's current parameters.
pub fn fit(kernel: &Kernel, ts: &TrainingSet) -> Result<FittedGP> {
    let k = prepare(kernel, ts)?;
    let (chol, jitter) = factor_with_jitter(&k)?;
    Ok(assemble(kernel.clone(), ts.clone(), chol, jitter))
}

/// Profiled log-likelihood without building a [`FittedGP`]; agrees with
/// [`FittedGP::log_likelihood`] and avoids cloning the inputs.
pub(crate) fn profiled_log_likelihood(kernel: &Kernel, ts: &TrainingSet) -> Result<f64> {
    let k = prepare(kernel, ts)?;
    let (chol, _) = factor_with_jitter(&k)?;
    let l = chol.l_dirty();
    let n = ts.n();
    let mut w = DVector::from_element(n, 1.0);
    l.solve_lower_triangular_mut(&mut w);
    let mut z = DVector::from_column_slice(&ts.y);
    l.solve_lower_triangular_mut(&mut z);
    let mu = w.dot(&z) / w.norm_squared();
    let quad = (z - w * mu).norm_squared();
    let log_det = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(-0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det - 0.5 * quad)
}

/// GLS estimate of the constant mean.
pub fn estimate_mu(kernel: &Kernel, ts: &TrainingSet) -> Result<f64> {
    fit(kernel, ts).map(|gp| gp.mu_hat)
}

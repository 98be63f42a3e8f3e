//! Covariance kernels.
//!
//! [`Kernel`] is a closed tree of covariance functions: the separable
//! stationary family, the arcsine (neural network) kernel and its shifted
//! variant, the Gibbs kernel with a parametric length-scale, input warping,
//! and the closure operations that keep a function positive semidefinite
//! (sum, product, positive scaling, positive constant shift, and
//! `g(x) k(x, x′) g(x′)`).
//!
//! Every kernel exposes its hyperparameters as a flat, ordered list so that
//! the likelihood optimizer can treat the whole zoo uniformly.

mod gibbs;
mod neural;
mod params;
mod sigmoid;
mod stationary;
mod warp;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GpError, Result};

pub use gibbs::{gibbs_correlation, Gibbs, LengthScaleFn, LengthScaleKind};
pub use neural::NeuralNet;
pub use params::{HyperParam, Scale};
pub use sigmoid::Sigmoid;
pub use stationary::{Stationary, StationaryFamily};
pub use warp::{WarpKind, WarpMap};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Kernel {
    Exponential(Stationary),
    Matern32(Stationary),
    Matern52(Stationary),
    SquaredExp(Stationary),
    NeuralNet(NeuralNet),
    NeuralNetShifted(NeuralNet),
    Gibbs(Gibbs),
    Warped(Warped),
    Sum(Composite),
    Product(Composite),
    Scaled(Scaled),
    ShiftedConst(Scaled),
    OuterFn(OuterFn),
}

/// `k(M(x), M(x′))`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Warped {
    pub warp: WarpMap,
    pub kernel: Box<Kernel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Composite {
    pub children: Vec<Kernel>,
}

/// Scalar `c > 0` applied to a child, as a factor or as an additive constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaled {
    pub c: HyperParam,
    pub kernel: Box<Kernel>,
}

/// `g(x) k(x, x′) g(x′)`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuterFn {
    pub g: Modulator,
    pub kernel: Box<Kernel>,
}

/// The function `g` of an [`OuterFn`] kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Modulator {
    /// `g(x) = Σₖ coeffs[k] · x_axis^k`
    Polynomial { axis: usize, coeffs: Vec<f64> },
    /// Arbitrary deterministic function. Not serializable.
    #[serde(skip)]
    Custom(CustomFn),
}

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct CustomFn {
    pub name: String,
    f: Arc<ScalarFn>,
}

impl CustomFn {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        CustomFn {
            name: name.into(),
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for CustomFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFn").field("name", &self.name).finish()
    }
}

impl PartialEq for CustomFn {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.f, &other.f)
    }
}

impl Modulator {
    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            // Horner
            Modulator::Polynomial { axis, coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x[*axis] + c),
            Modulator::Custom(c) => (c.f)(x),
        }
    }
}

/// Kind tag of a kernel node, used for reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    Exponential,
    Matern32,
    Matern52,
    SquaredExp,
    NeuralNet,
    NeuralNetShifted,
    Gibbs,
    Warped,
    Sum,
    Product,
    Scaled,
    ShiftedConst,
    OuterFn,
}

impl Kernel {
    pub fn exponential(variance: f64, length_scales: &[f64]) -> Self {
        Kernel::Exponential(Stationary::new(variance, length_scales))
    }

    pub fn matern32(variance: f64, length_scales: &[f64]) -> Self {
        Kernel::Matern32(Stationary::new(variance, length_scales))
    }

    pub fn matern52(variance: f64, length_scales: &[f64]) -> Self {
        Kernel::Matern52(Stationary::new(variance, length_scales))
    }

    pub fn squared_exp(variance: f64, length_scales: &[f64]) -> Self {
        Kernel::SquaredExp(Stationary::new(variance, length_scales))
    }

    pub fn stationary(family: StationaryFamily, variance: f64, length_scales: &[f64]) -> Self {
        let s = Stationary::new(variance, length_scales);
        match family {
            StationaryFamily::Exponential => Kernel::Exponential(s),
            StationaryFamily::Matern32 => Kernel::Matern32(s),
            StationaryFamily::Matern52 => Kernel::Matern52(s),
            StationaryFamily::SquaredExp => Kernel::SquaredExp(s),
        }
    }

    /// `sigmas = [σ₀, σ₁, …, σ_d]`.
    pub fn neural_net(variance: f64, sigmas: &[f64]) -> Self {
        Kernel::NeuralNet(NeuralNet::new(variance, sigmas))
    }

    pub fn neural_net_shifted(variance: f64, sigmas: &[f64], shift: &[f64]) -> Self {
        Kernel::NeuralNetShifted(NeuralNet::shifted(variance, sigmas, shift))
    }

    pub fn gibbs(variance: f64, dim: usize, lsfn: LengthScaleFn) -> Self {
        Kernel::Gibbs(Gibbs::new(variance, dim, lsfn))
    }

    pub fn warped(warp: WarpMap, kernel: Kernel) -> Result<Self> {
        let k = Kernel::Warped(Warped {
            warp,
            kernel: Box::new(kernel),
        });
        k.check_structure()?;
        Ok(k)
    }

    pub fn sum(children: Vec<Kernel>) -> Result<Self> {
        let k = Kernel::Sum(Composite { children });
        k.check_structure()?;
        Ok(k)
    }

    pub fn product(children: Vec<Kernel>) -> Result<Self> {
        let k = Kernel::Product(Composite { children });
        k.check_structure()?;
        Ok(k)
    }

    /// `c · k`, `c > 0`.
    pub fn scaled(c: f64, kernel: Kernel) -> Result<Self> {
        let k = Kernel::Scaled(Scaled {
            c: HyperParam::log("c", c, c.min(1e-8).max(f64::MIN_POSITIVE), c.max(1e8)),
            kernel: Box::new(kernel),
        });
        k.check_structure()?;
        Ok(k)
    }

    /// `k + c`, `c > 0`.
    pub fn shifted_const(c: f64, kernel: Kernel) -> Result<Self> {
        let k = Kernel::ShiftedConst(Scaled {
            c: HyperParam::log("c", c, c.min(1e-8).max(f64::MIN_POSITIVE), c.max(1e8)),
            kernel: Box::new(kernel),
        });
        k.check_structure()?;
        Ok(k)
    }

    /// `g(x) k(x, x′) g(x′)`.
    pub fn outer_fn(g: Modulator, kernel: Kernel) -> Result<Self> {
        let k = Kernel::OuterFn(OuterFn {
            g,
            kernel: Box::new(kernel),
        });
        k.check_structure()?;
        Ok(k)
    }

    pub fn kind(&self) -> KernelKind {
        match self {
            Kernel::Exponential(_) => KernelKind::Exponential,
            Kernel::Matern32(_) => KernelKind::Matern32,
            Kernel::Matern52(_) => KernelKind::Matern52,
            Kernel::SquaredExp(_) => KernelKind::SquaredExp,
            Kernel::NeuralNet(_) => KernelKind::NeuralNet,
            Kernel::NeuralNetShifted(_) => KernelKind::NeuralNetShifted,
            Kernel::Gibbs(_) => KernelKind::Gibbs,
            Kernel::Warped(_) => KernelKind::Warped,
            Kernel::Sum(_) => KernelKind::Sum,
            Kernel::Product(_) => KernelKind::Product,
            Kernel::Scaled(_) => KernelKind::Scaled,
            Kernel::ShiftedConst(_) => KernelKind::ShiftedConst,
            Kernel::OuterFn(_) => KernelKind::OuterFn,
        }
    }

    pub fn family(&self) -> Option<(StationaryFamily, &Stationary)> {
        match self {
            Kernel::Exponential(s) => Some((StationaryFamily::Exponential, s)),
            Kernel::Matern32(s) => Some((StationaryFamily::Matern32, s)),
            Kernel::Matern52(s) => Some((StationaryFamily::Matern52, s)),
            Kernel::SquaredExp(s) => Some((StationaryFamily::SquaredExp, s)),
            _ => None,
        }
    }

    /// Input dimension.
    pub fn dim(&self) -> usize {
        match self {
            Kernel::Exponential(s) | Kernel::Matern32(s) | Kernel::Matern52(s) | Kernel::SquaredExp(s) => s.dim(),
            Kernel::NeuralNet(n) | Kernel::NeuralNetShifted(n) => n.dim(),
            Kernel::Gibbs(g) => g.dim,
            Kernel::Warped(w) => w.warp.input_dim(w.kernel.dim()).unwrap_or(0),
            Kernel::Sum(c) | Kernel::Product(c) => c.children.first().map_or(0, Kernel::dim),
            Kernel::Scaled(s) | Kernel::ShiftedConst(s) => s.kernel.dim(),
            Kernel::OuterFn(o) => o.kernel.dim(),
        }
    }

    /// Whether `k(x, x′)` depends on `x − x′` only.
    pub fn is_stationary(&self) -> bool {
        match self {
            Kernel::Exponential(_) | Kernel::Matern32(_) | Kernel::Matern52(_) | Kernel::SquaredExp(_) => true,
            Kernel::NeuralNet(_) | Kernel::NeuralNetShifted(_) | Kernel::OuterFn(_) | Kernel::Warped(_) => false,
            Kernel::Gibbs(g) => g.lsfn.kind == LengthScaleKind::Constant,
            Kernel::Sum(c) | Kernel::Product(c) => c.children.iter().all(Kernel::is_stationary),
            Kernel::Scaled(s) | Kernel::ShiftedConst(s) => s.kernel.is_stationary(),
        }
    }

    /// The process-variance parameter σ² of the outermost base kernel, when
    /// there is a single one.
    pub fn signal_variance(&self) -> Option<f64> {
        match self {
            Kernel::Exponential(s) | Kernel::Matern32(s) | Kernel::Matern52(s) | Kernel::SquaredExp(s) => {
                Some(s.variance.value)
            }
            Kernel::NeuralNet(n) | Kernel::NeuralNetShifted(n) => Some(n.variance.value),
            Kernel::Gibbs(g) => Some(g.variance.value),
            Kernel::Warped(w) => w.kernel.signal_variance(),
            Kernel::Scaled(s) => s.kernel.signal_variance().map(|v| v * s.c.value),
            _ => None,
        }
    }

    pub(crate) fn check_structure(&self) -> Result<()> {
        match self {
            Kernel::Exponential(s) | Kernel::Matern32(s) | Kernel::Matern52(s) | Kernel::SquaredExp(s) => {
                if s.length_scales.is_empty() {
                    return Err(GpError::input("stationary kernel needs at least one length-scale"));
                }
            }
            Kernel::NeuralNet(n) => {
                if n.sigmas.len() < 2 || n.is_shifted() {
                    return Err(GpError::input("NeuralNet needs d+1 sigmas and no shift"));
                }
            }
            Kernel::NeuralNetShifted(n) => {
                if n.sigmas.len() < 2 || n.shift.len() != n.dim() {
                    return Err(GpError::input(format!(
                        "NeuralNetShifted needs d+1 sigmas and d shifts (got {} and {})",
                        n.sigmas.len(),
                        n.shift.len()
                    )));
                }
            }
            Kernel::Gibbs(g) => {
                if g.dim == 0 {
                    return Err(GpError::input("Gibbs kernel dimension must be positive"));
                }
                g.lsfn.check(g.dim)?;
            }
            Kernel::Warped(w) => {
                let child = w.kernel.dim();
                let input = w.warp.input_dim(child).ok_or_else(|| {
                    GpError::input(format!("warp {:?} cannot feed a {child}-dimensional kernel", w.warp.kind))
                })?;
                if w.warp.output_dim(input) != child {
                    return Err(GpError::input("warp output dimension does not match child kernel"));
                }
                w.warp.check(input)?;
                w.kernel.check_structure()?;
            }
            Kernel::Sum(c) | Kernel::Product(c) => {
                let Some(first) = c.children.first() else {
                    return Err(GpError::input("composition needs at least one child"));
                };
                let d = first.dim();
                for child in &c.children {
                    if child.dim() != d {
                        return Err(GpError::input(format!(
                            "composed kernels disagree on dimension ({} vs {d})",
                            child.dim()
                        )));
                    }
                    child.check_structure()?;
                }
            }
            Kernel::Scaled(s) | Kernel::ShiftedConst(s) => {
                if !(s.c.value > 0.0) {
                    return Err(GpError::param(format!("composition constant must be > 0, got {}", s.c.value)));
                }
                s.kernel.check_structure()?;
            }
            Kernel::OuterFn(o) => {
                if let Modulator::Polynomial { axis, .. } = o.g {
                    if axis >= o.kernel.dim() {
                        return Err(GpError::input(format!("modulator axis {axis} out of range")));
                    }
                }
                o.kernel.check_structure()?;
            }
        }
        Ok(())
    }

    /// Structural and parameter-bound checks.
    pub fn validate(&self) -> Result<()> {
        self.check_structure()?;
        for p in self.params() {
            p.check()?;
        }
        Ok(())
    }

    /// Evaluates `k(x, x′)` after validating dimensions and parameters.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let d = self.dim();
        if x.len() != d || y.len() != d {
            return Err(GpError::input(format!(
                "kernel expects {d}-dimensional points, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        self.validate()?;
        self.checked_value(x, y)
    }

    fn checked_value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            Kernel::Gibbs(g) => g.checked_value(x, y),
            Kernel::Warped(w) => w.kernel.checked_value(&w.warp.map(x), &w.warp.map(y)),
            Kernel::Sum(c) => c.children.iter().map(|k| k.checked_value(x, y)).sum(),
            Kernel::Product(c) => c.children.iter().map(|k| k.checked_value(x, y)).product(),
            Kernel::Scaled(s) => Ok(s.c.value * s.kernel.checked_value(x, y)?),
            Kernel::ShiftedConst(s) => Ok(s.kernel.checked_value(x, y)? + s.c.value),
            Kernel::OuterFn(o) => Ok(o.g.value(x) * o.kernel.checked_value(x, y)? * o.g.value(y)),
            _ => Ok(self.value(x, y)),
        }
    }

    /// Evaluates `k(x, x′)` with no checks. Callers must have validated the
    /// kernel and the point dimensions.
    #[inline]
    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Kernel::Exponential(s) => s.value(StationaryFamily::Exponential, x, y),
            Kernel::Matern32(s) => s.value(StationaryFamily::Matern32, x, y),
            Kernel::Matern52(s) => s.value(StationaryFamily::Matern52, x, y),
            Kernel::SquaredExp(s) => s.value(StationaryFamily::SquaredExp, x, y),
            Kernel::NeuralNet(n) | Kernel::NeuralNetShifted(n) => n.value(x, y),
            Kernel::Gibbs(g) => g.value(x, y),
            Kernel::Warped(w) => w.kernel.value(&w.warp.map(x), &w.warp.map(y)),
            Kernel::Sum(c) => c.children.iter().map(|k| k.value(x, y)).sum(),
            Kernel::Product(c) => c.children.iter().map(|k| k.value(x, y)).product(),
            Kernel::Scaled(s) => s.c.value * s.kernel.value(x, y),
            Kernel::ShiftedConst(s) => s.kernel.value(x, y) + s.c.value,
            Kernel::OuterFn(o) => o.g.value(x) * o.kernel.value(x, y) * o.g.value(y),
        }
    }

    /// Hyperparameters in a fixed depth-first order.
    pub fn params(&self) -> Vec<&HyperParam> {
        match self {
            Kernel::Exponential(s) | Kernel::Matern32(s) | Kernel::Matern52(s) | Kernel::SquaredExp(s) => s.params(),
            Kernel::NeuralNet(n) | Kernel::NeuralNetShifted(n) => n.params(),
            Kernel::Gibbs(g) => g.params(),
            Kernel::Warped(w) => {
                let mut v = w.warp.params();
                v.extend(w.kernel.params());
                v
            }
            Kernel::Sum(c) | Kernel::Product(c) => c.children.iter().flat_map(Kernel::params).collect(),
            Kernel::Scaled(s) | Kernel::ShiftedConst(s) => {
                let mut v = vec![&s.c];
                v.extend(s.kernel.params());
                v
            }
            Kernel::OuterFn(o) => o.kernel.params(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut HyperParam> {
        match self {
            Kernel::Exponential(s) | Kernel::Matern32(s) | Kernel::Matern52(s) | Kernel::SquaredExp(s) => {
                s.params_mut()
            }
            Kernel::NeuralNet(n) | Kernel::NeuralNetShifted(n) => n.params_mut(),
            Kernel::Gibbs(g) => g.params_mut(),
            Kernel::Warped(w) => {
                let mut v = w.warp.params_mut();
                v.extend(w.kernel.params_mut());
                v
            }
            Kernel::Sum(c) | Kernel::Product(c) => c.children.iter_mut().flat_map(Kernel::params_mut).collect(),
            Kernel::Scaled(s) | Kernel::ShiftedConst(s) => {
                let mut v = vec![&mut s.c];
                v.extend(s.kernel.params_mut());
                v
            }
            Kernel::OuterFn(o) => o.kernel.params_mut(),
        }
    }

    /// Parameter names qualified by their position in the tree, in the same
    /// order as [`Kernel::params`].
    pub fn param_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_names("", &mut out);
        out
    }

    fn collect_names(&self, prefix: &str, out: &mut Vec<String>) {
        match self {
            Kernel::Warped(w) => {
                out.extend(w.warp.params().iter().map(|p| format!("{prefix}warp.{}", p.name)));
                w.kernel.collect_names(&format!("{prefix}kernel."), out);
            }
            Kernel::Gibbs(g) => {
                out.push(format!("{prefix}{}", g.variance.name));
                out.extend(g.lsfn.params().iter().map(|p| format!("{prefix}lsfn.{}", p.name)));
            }
            Kernel::Sum(c) | Kernel::Product(c) => {
                for (i, child) in c.children.iter().enumerate() {
                    child.collect_names(&format!("{prefix}children[{i}]."), out);
                }
            }
            Kernel::Scaled(s) | Kernel::ShiftedConst(s) => {
                out.push(format!("{prefix}{}", s.c.name));
                s.kernel.collect_names(&format!("{prefix}kernel."), out);
            }
            Kernel::OuterFn(o) => o.kernel.collect_names(&format!("{prefix}kernel."), out),
            _ => out.extend(self.params().iter().map(|p| format!("{prefix}{}", p.name))),
        }
    }

    pub fn param_values(&self) -> Vec<f64> {
        self.params().iter().map(|p| p.value).collect()
    }

    /// Overwrites the parameter values (in [`Kernel::params`] order).
    pub fn set_param_values(&mut self, values: &[f64]) -> Result<()> {
        let mut ps = self.params_mut();
        if ps.len() != values.len() {
            return Err(GpError::input(format!(
                "kernel has {} parameters, got {} values",
                ps.len(),
                values.len()
            )));
        }
        for (p, &v) in ps.iter_mut().zip(values) {
            p.value = v;
        }
        Ok(())
    }

    /// Gram matrix `K_ij = k(xᵢ, xⱼ)`; see [`gram_matrix`].
    pub fn gram(&self, points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        gram_matrix(self, points)
    }

    /// `(k(x, x¹), …, k(x, xⁿ))` without validation.
    pub(crate) fn cross_unchecked(&self, x: &[f64], points: &[Vec<f64>]) -> Vec<f64> {
        match self {
            Kernel::Warped(w) => {
                let mx = w.warp.map(x);
                let mut buf = Vec::with_capacity(mx.len());
                points
                    .iter()
                    .map(|p| {
                        w.warp.map_into(p, &mut buf);
                        w.kernel.value(&mx, &buf)
                    })
                    .collect()
            }
            _ => points.iter().map(|p| self.value(x, p)).collect(),
        }
    }

    fn gram_unchecked(&self, points: &[Vec<f64>]) -> DMatrix<f64> {
        if let Kernel::Warped(w) = self {
            let mapped: Vec<Vec<f64>> = points.iter().map(|p| w.warp.map(p)).collect();
            return w.kernel.gram_unchecked(&mapped);
        }
        let n = points.len();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.value(&points[i], &points[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }
}

/// Gram matrix of `kernel` over `points`. The upper triangle is evaluated and
/// mirrored, so the result is exactly symmetric.
pub fn gram_matrix(kernel: &Kernel, points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    kernel.validate()?;
    check_points(kernel.dim(), points)?;
    if let Kernel::Gibbs(g) = kernel {
        for p in points {
            let l = g.lsfn.value(p);
            if !(l > 0.0) {
                return Err(GpError::param(format!("length-scale {l} is not positive at {p:?}")));
            }
        }
    }
    Ok(kernel.gram_unchecked(points))
}

pub(crate) fn check_points(d: usize, points: &[Vec<f64>]) -> Result<()> {
    if points.is_empty() {
        return Err(GpError::input("need at least one point"));
    }
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(GpError::input(format!("expected {d}-dimensional points, got {}", p.len())));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(GpError::input("non-finite coordinate"));
    }
    Ok(())
}

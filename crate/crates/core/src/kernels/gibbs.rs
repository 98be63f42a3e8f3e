use serde::{Deserialize, Serialize};

use super::params::HyperParam;
use super::sigmoid::Sigmoid;
use super::stationary::VARIANCE_BOUNDS;
use crate::error::{GpError, Result};

/// Margin kept between `c2` and its positivity floor at construction time.
const C2_MARGIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LengthScaleKind {
    /// `l(x) = c2`
    Constant,
    /// `l(x) = c1 x_axis² + c2`
    Quadratic,
    Erf,
    Logistic,
    Tanh,
    Arctan,
}

impl LengthScaleKind {
    pub fn sigmoid(self) -> Option<Sigmoid> {
        match self {
            LengthScaleKind::Erf => Some(Sigmoid::Erf),
            LengthScaleKind::Logistic => Some(Sigmoid::Logistic),
            LengthScaleKind::Tanh => Some(Sigmoid::Tanh),
            LengthScaleKind::Arctan => Some(Sigmoid::Arctan),
            _ => None,
        }
    }

    pub fn from_sigmoid(s: Sigmoid) -> Self {
        match s {
            Sigmoid::Erf => LengthScaleKind::Erf,
            Sigmoid::Logistic => LengthScaleKind::Logistic,
            Sigmoid::Tanh => LengthScaleKind::Tanh,
            Sigmoid::Arctan => LengthScaleKind::Arctan,
        }
    }

    /// Open lower limit on `c2`.
    pub fn c2_floor(self) -> f64 {
        match self.sigmoid() {
            Some(s) => s.positivity_floor(),
            None => 0.0,
        }
    }
}

/// Parametric length-scale function of the input.
///
/// Sigmoid kinds read only coordinate `axis`: `l(x) = s(c1·x_axis) + c2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthScaleFn {
    pub kind: LengthScaleKind,
    pub axis: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<HyperParam>,
    pub c2: HyperParam,
}

impl LengthScaleFn {
    pub fn constant(l: f64) -> Self {
        LengthScaleFn {
            kind: LengthScaleKind::Constant,
            axis: 0,
            c1: None,
            c2: HyperParam::log("c2", l, 1e-8, 1e8),
        }
    }

    pub fn quadratic(c1: f64, c2: f64, axis: usize) -> Self {
        LengthScaleFn {
            kind: LengthScaleKind::Quadratic,
            axis,
            c1: Some(HyperParam::log("c1", c1, 1e-8, 1e8)),
            c2: HyperParam::log("c2", c2, 1e-8, 1e8),
        }
    }

    pub fn sigmoid(shape: Sigmoid, c1: f64, c2: f64, axis: usize) -> Self {
        let floor = shape.positivity_floor();
        LengthScaleFn {
            kind: LengthScaleKind::from_sigmoid(shape),
            axis,
            c1: Some(HyperParam::log("c1", c1, 1e-8, 1e8)),
            c2: HyperParam::log_above("c2", c2, floor, floor + C2_MARGIN, floor + 1e8),
        }
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        let c2 = self.c2.value;
        let c1 = self.c1.as_ref().map_or(0.0, |p| p.value);
        match self.kind {
            LengthScaleKind::Constant => c2,
            LengthScaleKind::Quadratic => c1 * x[self.axis] * x[self.axis] + c2,
            k => k.sigmoid().unwrap().apply(c1 * x[self.axis]) + c2,
        }
    }

    /// Kind-specific constraints that guarantee `l(x) > 0` everywhere.
    pub fn check(&self, dim: usize) -> Result<()> {
        if self.kind != LengthScaleKind::Constant && self.axis >= dim {
            return Err(GpError::input(format!(
                "length-scale axis {} out of range for dimension {dim}",
                self.axis
            )));
        }
        match (&self.c1, self.kind) {
            (None, LengthScaleKind::Constant) => {}
            (Some(_), LengthScaleKind::Constant) => {
                return Err(GpError::param("constant length-scale takes no c1"));
            }
            (None, _) => return Err(GpError::param("length-scale function needs c1")),
            (Some(c1), LengthScaleKind::Quadratic) if c1.value < 0.0 => {
                return Err(GpError::param(format!("quadratic length-scale needs c1 >= 0, got {}", c1.value)));
            }
            _ => {}
        }
        let floor = self.kind.c2_floor();
        if !(self.c2.value > floor) {
            return Err(GpError::param(format!(
                "{:?} length-scale needs c2 > {floor}, got {}",
                self.kind, self.c2.value
            )));
        }
        Ok(())
    }

    pub(crate) fn params(&self) -> Vec<&HyperParam> {
        self.c1.iter().chain(std::iter::once(&self.c2)).collect()
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut HyperParam> {
        self.c1.iter_mut().chain(std::iter::once(&mut self.c2)).collect()
    }
}

/// Gibbs kernel with one shared length-scale function for every axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gibbs {
    pub variance: HyperParam,
    pub dim: usize,
    pub lsfn: LengthScaleFn,
}

impl Gibbs {
    pub fn new(variance: f64, dim: usize, lsfn: LengthScaleFn) -> Self {
        Gibbs {
            variance: HyperParam::log("variance", variance, VARIANCE_BOUNDS.0, VARIANCE_BOUNDS.1),
            dim,
            lsfn,
        }
    }

    #[inline]
    pub(crate) fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let lx = self.lsfn.value(x);
        let ly = self.lsfn.value(y);
        let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        self.variance.value * gibbs_correlation(lx, ly, sq, self.dim)
    }

    pub(crate) fn checked_value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        for p in [x, y] {
            let l = self.lsfn.value(p);
            if !(l > 0.0) {
                return Err(GpError::param(format!("length-scale {l} is not positive at {p:?}")));
            }
        }
        Ok(self.value(x, y))
    }

    pub(crate) fn params(&self) -> Vec<&HyperParam> {
        let mut v = vec![&self.variance];
        v.extend(self.lsfn.params());
        v
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut HyperParam> {
        let mut v = vec![&mut self.variance];
        v.extend(self.lsfn.params_mut());
        v
    }
}

/// Gibbs correlation for length-scales `lx = l(x)`, `ly = l(x′)` and squared
/// Euclidean separation `sq_dist` in `dim` dimensions.
#[inline]
pub fn gibbs_correlation(lx: f64, ly: f64, sq_dist: f64, dim: usize) -> f64 {
    let s = lx * lx + ly * ly;
    let ratio = 2.0 * lx * ly / s;
    let prefactor = if dim == 2 { ratio } else { ratio.powf(dim as f64 / 2.0) };
    prefactor * (-sq_dist / s).exp()
}

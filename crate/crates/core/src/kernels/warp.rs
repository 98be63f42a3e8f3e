use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::params::HyperParam;
use super::sigmoid::Sigmoid;
use crate::error::{GpError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WarpKind {
    Erf,
    Logistic,
    Tanh,
    Arctan,
    /// `x_axis ↦ (cos(2πx/T), sin(2πx/T))`
    PeriodicPair,
}

impl WarpKind {
    pub fn sigmoid(self) -> Option<Sigmoid> {
        match self {
            WarpKind::Erf => Some(Sigmoid::Erf),
            WarpKind::Logistic => Some(Sigmoid::Logistic),
            WarpKind::Tanh => Some(Sigmoid::Tanh),
            WarpKind::Arctan => Some(Sigmoid::Arctan),
            WarpKind::PeriodicPair => None,
        }
    }

    pub fn from_sigmoid(s: Sigmoid) -> Self {
        match s {
            Sigmoid::Erf => WarpKind::Erf,
            Sigmoid::Logistic => WarpKind::Logistic,
            Sigmoid::Tanh => WarpKind::Tanh,
            Sigmoid::Arctan => WarpKind::Arctan,
        }
    }
}

/// Deterministic input transformation. Sigmoid kinds replace coordinate
/// `axis` by `s(c1·x_axis)` and keep the others; `PeriodicPair` replaces it by
/// a point on the circle, adding one output dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarpMap {
    pub kind: WarpKind,
    pub axis: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<HyperParam>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

impl WarpMap {
    pub fn sigmoid(shape: Sigmoid, c1: f64, axis: usize) -> Self {
        WarpMap {
            kind: WarpKind::from_sigmoid(shape),
            axis,
            c1: Some(HyperParam::log("c1", c1, 1e-8, 1e8)),
            period: None,
        }
    }

    pub fn periodic(period: f64, axis: usize) -> Self {
        WarpMap {
            kind: WarpKind::PeriodicPair,
            axis,
            c1: None,
            period: Some(period),
        }
    }

    pub fn output_dim(&self, input_dim: usize) -> usize {
        match self.kind {
            WarpKind::PeriodicPair => input_dim + 1,
            _ => input_dim,
        }
    }

    /// Input dimension that produces `output_dim` features, if any.
    pub fn input_dim(&self, output_dim: usize) -> Option<usize> {
        match self.kind {
            WarpKind::PeriodicPair => output_dim.checked_sub(1).filter(|&d| d >= 1),
            _ => Some(output_dim),
        }
    }

    pub fn check(&self, input_dim: usize) -> Result<()> {
        if self.axis >= input_dim {
            return Err(GpError::input(format!(
                "warp axis {} out of range for dimension {input_dim}",
                self.axis
            )));
        }
        match self.kind {
            WarpKind::PeriodicPair => match self.period {
                Some(t) if t > 0.0 && t.is_finite() => Ok(()),
                _ => Err(GpError::param("periodic warp needs a positive finite period")),
            },
            _ if self.c1.is_none() => Err(GpError::param("sigmoid warp needs c1")),
            _ => Ok(()),
        }
    }

    /// Writes `M(x)` into `out`, replacing its contents.
    #[inline]
    pub fn map_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        match self.kind {
            WarpKind::PeriodicPair => {
                let t = self.period.unwrap_or(1.0);
                for (j, &v) in x.iter().enumerate() {
                    if j == self.axis {
                        let angle = TAU * v / t;
                        out.push(angle.cos());
                        out.push(angle.sin());
                    } else {
                        out.push(v);
                    }
                }
            }
            k => {
                let s = k.sigmoid().unwrap();
                let c1 = self.c1.as_ref().map_or(1.0, |p| p.value);
                out.extend_from_slice(x);
                out[self.axis] = s.apply(c1 * x[self.axis]);
            }
        }
    }

    pub fn map(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len() + 1);
        self.map_into(x, &mut out);
        out
    }

    pub(crate) fn params(&self) -> Vec<&HyperParam> {
        self.c1.iter().collect()
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut HyperParam> {
        self.c1.iter_mut().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_pair_adds_a_dimension() {
        let w = WarpMap::periodic(2.0, 0);
        assert_eq!(w.output_dim(1), 2);
        let m = w.map(&[0.5]);
        assert!((m[0] - 0.0).abs() < 1e-15 && (m[1] - 1.0).abs() < 1e-15);
        assert_eq!(w.input_dim(2), Some(1));
        assert_eq!(w.input_dim(1), None);
    }

    #[test]
    fn sigmoid_warp_touches_only_its_axis() {
        let w = WarpMap::sigmoid(Sigmoid::Tanh, 3.0, 1);
        let m = w.map(&[0.25, 0.5, -1.0]);
        assert_eq!(m[0], 0.25);
        assert_eq!(m[1], (1.5f64).tanh());
        assert_eq!(m[2], -1.0);
    }
}

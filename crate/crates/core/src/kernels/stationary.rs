use serde::{Deserialize, Serialize};

use super::params::HyperParam;

/// Generous construction-time bounds; `hyperopt::default_bounds` narrows them.
pub(crate) const VARIANCE_BOUNDS: (f64, f64) = (1e-10, 1e10);
pub(crate) const LENGTH_BOUNDS: (f64, f64) = (1e-8, 1e8);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StationaryFamily {
    Exponential,
    Matern32,
    Matern52,
    SquaredExp,
}

impl StationaryFamily {
    /// One-dimensional correlation at separation `h` with length-scale `l`.
    #[inline]
    pub fn correlation(self, h: f64, l: f64) -> f64 {
        let r = h.abs() / l;
        match self {
            StationaryFamily::Exponential => (-r).exp(),
            StationaryFamily::Matern32 => {
                let s = 3f64.sqrt() * r;
                (1.0 + s) * (-s).exp()
            }
            StationaryFamily::Matern52 => {
                let s = 5f64.sqrt() * r;
                (1.0 + s + 5.0 * r * r / 3.0) * (-s).exp()
            }
            StationaryFamily::SquaredExp => (-0.5 * r * r).exp(),
        }
    }
}

/// Separable stationary kernel: `σ² ∏ᵢ r(xᵢ − x′ᵢ; lᵢ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stationary {
    pub variance: HyperParam,
    pub length_scales: Vec<HyperParam>,
}

impl Stationary {
    pub fn new(variance: f64, length_scales: &[f64]) -> Self {
        Stationary {
            variance: HyperParam::log("variance", variance, VARIANCE_BOUNDS.0, VARIANCE_BOUNDS.1),
            length_scales: length_scales
                .iter()
                .enumerate()
                .map(|(i, &l)| {
                    HyperParam::log(format!("length_scale[{i}]"), l, LENGTH_BOUNDS.0, LENGTH_BOUNDS.1)
                })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.length_scales.len()
    }

    #[inline]
    pub(crate) fn value(&self, family: StationaryFamily, x: &[f64], y: &[f64]) -> f64 {
        let mut out = self.variance.value;
        match family {
            // the SE product collapses into a single exponential
            StationaryFamily::SquaredExp => {
                let mut s = 0.0;
                for ((a, b), l) in x.iter().zip(y).zip(&self.length_scales) {
                    let r = (a - b) / l.value;
                    s += r * r;
                }
                out *= (-0.5 * s).exp();
            }
            _ => {
                for ((a, b), l) in x.iter().zip(y).zip(&self.length_scales) {
                    out *= family.correlation(a - b, l.value);
                }
            }
        }
        out
    }

    pub(crate) fn params(&self) -> Vec<&HyperParam> {
        std::iter::once(&self.variance).chain(&self.length_scales).collect()
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut HyperParam> {
        std::iter::once(&mut self.variance)
            .chain(self.length_scales.iter_mut())
            .collect()
    }
}

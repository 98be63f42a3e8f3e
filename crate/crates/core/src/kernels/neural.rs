use std::f64::consts::FRAC_2_PI;

use serde::{Deserialize, Serialize};

use super::params::HyperParam;
use super::stationary::VARIANCE_BOUNDS;

/// Largest magnitude passed to `asin`; the exact argument lies strictly inside
/// (−1, 1) but rounding can touch the boundary.
const ASIN_LIMIT: f64 = 1.0 - 1e-15;

/// Arcsine ("neural network") kernel of an infinitely wide erf network.
///
/// `sigmas[0]` is the bias weight standard deviation σ₀, `sigmas[j]` the
/// standard deviation of the weight on input `j`. `Σ = diag(σ₀², …, σ_d²)`.
/// A non-empty `shift` makes this the shifted variant, with augmented input
/// `(1, x − τ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuralNet {
    pub variance: HyperParam,
    pub sigmas: Vec<HyperParam>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shift: Vec<HyperParam>,
}

impl NeuralNet {
    /// `sigmas` has length `d + 1` (bias first).
    pub fn new(variance: f64, sigmas: &[f64]) -> Self {
        assert!(sigmas.len() >= 2, "need a bias sigma and at least one input sigma");
        NeuralNet {
            variance: HyperParam::log("variance", variance, VARIANCE_BOUNDS.0, VARIANCE_BOUNDS.1),
            sigmas: sigmas
                .iter()
                .enumerate()
                .map(|(j, &s)| HyperParam::log(format!("sigma[{j}]"), s, 1e-8, 1e8))
                .collect(),
            shift: Vec::new(),
        }
    }

    /// Shifted variant; `shift.len()` must equal `sigmas.len() - 1`.
    pub fn shifted(variance: f64, sigmas: &[f64], shift: &[f64]) -> Self {
        let mut k = Self::new(variance, sigmas);
        k.shift = shift
            .iter()
            .enumerate()
            .map(|(j, &t)| HyperParam::linear(format!("tau[{j}]"), t, -1e8, 1e8))
            .collect();
        k
    }

    pub fn dim(&self) -> usize {
        self.sigmas.len() - 1
    }

    pub fn is_shifted(&self) -> bool {
        !self.shift.is_empty()
    }

    #[inline]
    fn shifted_coord(&self, x: &[f64], j: usize) -> f64 {
        match self.shift.get(j) {
            Some(t) => x[j] - t.value,
            None => x[j],
        }
    }

    /// `x̃ᵀ Σ x̃′` for augmented inputs.
    #[inline]
    fn quad(&self, x: &[f64], y: &[f64]) -> f64 {
        let s0 = self.sigmas[0].value;
        let mut q = s0 * s0;
        for j in 0..self.dim() {
            let s = self.sigmas[j + 1].value;
            q += s * s * self.shifted_coord(x, j) * self.shifted_coord(y, j);
        }
        q
    }

    /// Argument of the arcsine, clamped.
    pub(crate) fn asin_arg(&self, x: &[f64], y: &[f64]) -> f64 {
        let qxy = self.quad(x, y);
        let qxx = self.quad(x, x);
        let qyy = self.quad(y, y);
        let arg = 2.0 * qxy / ((1.0 + 2.0 * qxx) * (1.0 + 2.0 * qyy)).sqrt();
        arg.clamp(-ASIN_LIMIT, ASIN_LIMIT)
    }

    #[inline]
    pub(crate) fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        FRAC_2_PI * self.variance.value * self.asin_arg(x, y).asin()
    }

    pub(crate) fn params(&self) -> Vec<&HyperParam> {
        std::iter::once(&self.variance)
            .chain(&self.sigmas)
            .chain(&self.shift)
            .collect()
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut HyperParam> {
        std::iter::once(&mut self.variance)
            .chain(self.sigmas.iter_mut())
            .chain(self.shift.iter_mut())
            .collect()
    }
}

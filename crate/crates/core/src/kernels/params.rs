use serde::{Deserialize, Serialize};

use crate::error::{GpError, Result};

/// How a hyperparameter is presented to the optimizer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    /// Searched as `ln(value - offset)`.
    Log,
}

/// A named, bounded kernel hyperparameter.
///
/// Log-scaled parameters may carry an `offset`, the open lower limit of the
/// feasible region (e.g. `c2 > 1` for an erf length-scale). The optimizer
/// works on `ln(value - offset)`, so every proposal it makes maps back into
/// the feasible region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperParam {
    pub name: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub scale: Scale,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub offset: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl HyperParam {
    pub fn linear(name: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        HyperParam {
            name: name.into(),
            value,
            lower,
            upper,
            scale: Scale::Linear,
            offset: 0.0,
        }
    }

    pub fn log(name: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        HyperParam {
            scale: Scale::Log,
            ..Self::linear(name, value, lower, upper)
        }
    }

    /// Log-scaled parameter constrained to `value > offset`.
    pub fn log_above(name: impl Into<String>, value: f64, offset: f64, lower: f64, upper: f64) -> Self {
        HyperParam {
            scale: Scale::Log,
            offset,
            ..Self::linear(name, value, lower, upper)
        }
    }

    pub fn with_bounds(mut self, lower: f64, upper: f64) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_value(mut self, value: f64) -> Self {
        self.value = value;
        self
    }

    /// Checks the bound and scale invariants.
    pub fn check(&self) -> Result<()> {
        if !self.value.is_finite() {
            return Err(GpError::param(format!("{} is not finite ({})", self.name, self.value)));
        }
        if !(self.lower <= self.upper) {
            return Err(GpError::param(format!(
                "{}: empty bounds [{}, {}]",
                self.name, self.lower, self.upper
            )));
        }
        if self.value < self.lower || self.value > self.upper {
            return Err(GpError::param(format!(
                "{} = {} outside bounds [{}, {}]",
                self.name, self.value, self.lower, self.upper
            )));
        }
        if self.scale == Scale::Log && self.lower <= self.offset {
            return Err(GpError::param(format!(
                "{}: log-scaled parameter needs lower bound > {} (got {})",
                self.name, self.offset, self.lower
            )));
        }
        Ok(())
    }

    pub fn to_search(&self, value: f64) -> f64 {
        match self.scale {
            Scale::Linear => value,
            Scale::Log => (value - self.offset).ln(),
        }
    }

    pub fn from_search(&self, t: f64) -> f64 {
        match self.scale {
            Scale::Linear => t,
            Scale::Log => self.offset + t.exp(),
        }
    }

    /// Bounds in search coordinates.
    pub fn search_bounds(&self) -> (f64, f64) {
        (self.to_search(self.lower), self.to_search(self.upper))
    }

    /// Puts `value` back inside the bounds (used after re-bounding).
    pub fn clamp_value(&mut self) {
        self.value = self.value.clamp(self.lower, self.upper);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn search_transform_round_trips() {
        let p = HyperParam::log_above("c2", 1.5, 1.0, 1.0 + 1e-6, 101.0);
        let t = p.to_search(p.value);
        assert!((t - 0.5f64.ln()).abs() < 1e-15);
        assert!((p.from_search(t) - 1.5).abs() < 1e-15);
        // any search coordinate maps into the feasible region
        assert!(p.from_search(-700.0) >= 1.0);
    }

    #[test]
    fn check_rejects_out_of_bounds_and_bad_log() {
        assert!(HyperParam::linear("a", 2.0, 0.0, 1.0).check().is_err());
        assert!(HyperParam::log("a", 0.5, 0.0, 1.0).check().is_err());
        assert!(HyperParam::log("a", 0.5, 0.1, 1.0).check().is_ok());
        assert!(HyperParam::log("a", f64::NAN, 0.1, 1.0).check().is_err());
    }
}

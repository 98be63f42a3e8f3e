use serde::{Deserialize, Serialize};

use crate::error::{GpError, Result};

/// Axis-aligned box `∏ⱼ [lower_j, upper_j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(GpError::input("domain bounds must be non-empty and of equal length"));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(GpError::input(format!("invalid domain interval [{l}, {u}]")));
            }
        }
        Ok(Domain { lower, upper })
    }

    /// `[lo, hi]^d`
    pub fn cube(lo: f64, hi: f64, d: usize) -> Result<Self> {
        Self::new(vec![lo; d], vec![hi; d])
    }

    pub fn unit(d: usize) -> Self {
        Domain {
            lower: vec![0.0; d],
            upper: vec![1.0; d],
        }
    }

    /// Smallest box holding all points; degenerate axes get unit width.
    pub fn bounding(points: &[Vec<f64>]) -> Result<Self> {
        let d = points.first().map_or(0, Vec::len);
        if d == 0 {
            return Err(GpError::input("cannot bound an empty point set"));
        }
        let mut lower = vec![f64::INFINITY; d];
        let mut upper = vec![f64::NEG_INFINITY; d];
        for p in points {
            for j in 0..d {
                lower[j] = lower[j].min(p[j]);
                upper[j] = upper[j].max(p[j]);
            }
        }
        for j in 0..d {
            if upper[j] <= lower[j] {
                lower[j] -= 0.5;
                upper[j] += 0.5;
            }
        }
        Self::new(lower, upper)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    pub fn center(&self, j: usize) -> f64 {
        0.5 * (self.upper[j] + self.lower[j])
    }

    pub fn diagonal(&self) -> f64 {
        (0..self.dim()).map(|j| self.width(j).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(j, &v)| v >= self.lower[j] && v <= self.upper[j])
    }

    /// Maps a point of the unit cube into the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(j, &t)| self.lower[j] + t * self.width(j))
            .collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, &v)| (v - self.lower[j]) / self.width(j))
            .collect()
    }
}

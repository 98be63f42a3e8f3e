use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

/// The four sigmoid shapes used both as Gibbs length-scales and warp maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sigmoid {
    Erf,
    Logistic,
    Tanh,
    Arctan,
}

impl Sigmoid {
    pub const ALL: [Sigmoid; 4] = [Sigmoid::Erf, Sigmoid::Logistic, Sigmoid::Tanh, Sigmoid::Arctan];

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Sigmoid::Erf => libm::erf(z),
            Sigmoid::Logistic => 1.0 / (1.0 + z.exp()),
            Sigmoid::Tanh => z.tanh(),
            Sigmoid::Arctan => z.atan(),
        }
    }

    /// Infimum of the sigmoid's range, negated: the smallest additive
    /// constant that keeps `apply(z) + c` strictly positive for every `z`.
    pub fn positivity_floor(self) -> f64 {
        match self {
            Sigmoid::Erf | Sigmoid::Tanh => 1.0,
            Sigmoid::Logistic => 0.0,
            Sigmoid::Arctan => FRAC_PI_2,
        }
    }

    /// Open interval containing every output.
    pub fn range(self) -> (f64, f64) {
        match self {
            Sigmoid::Erf | Sigmoid::Tanh => (-1.0, 1.0),
            Sigmoid::Logistic => (0.0, 1.0),
            Sigmoid::Arctan => (-FRAC_PI_2, FRAC_PI_2),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sigmoid::Erf => "Erf",
            Sigmoid::Logistic => "Logistic",
            Sigmoid::Tanh => "Tanh",
            Sigmoid::Arctan => "Arctan",
        }
    }
}

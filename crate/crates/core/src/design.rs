//! Space-filling designs: maximin Latin hypercubes and uniform test sets.
//!
//! Latin hypercube points sit at stratum centers. The maximin search is a
//! simulated annealing over within-column swaps (which preserve the Latin
//! property), followed by a greedy pass that stops only when no single swap
//! increases the minimum pairwise distance. Distances are measured in the
//! unit cube so that every axis counts equally.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::Domain;
use crate::error::{GpError, Result};

pub const DEFAULT_OPTIMIZE_ITERS: usize = 100;
/// Initial temperature as a fraction of the starting minimum distance.
pub const INITIAL_TEMPERATURE: f64 = 0.1;
pub const COOLING: f64 = 0.95;
pub const SWAPS_PER_TEMPERATURE: usize = 50;
const MAX_GREEDY_PASSES: usize = 200;

#[derive(Clone, Debug, PartialEq)]
pub struct DesignSpec {
    pub n: usize,
    pub domain: Domain,
    pub seed: u64,
    /// Number of temperature steps.
    pub optimize_iters: usize,
}

impl DesignSpec {
    pub fn new(n: usize, domain: Domain, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(GpError::input(format!("a design needs n >= 2 points, got {n}")));
        }
        Ok(DesignSpec {
            n,
            domain,
            seed,
            optimize_iters: DEFAULT_OPTIMIZE_ITERS,
        })
    }

    pub fn with_iters(mut self, iters: usize) -> Self {
        self.optimize_iters = iters;
        self
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    pub points: Vec<Vec<f64>>,
    /// Minimum pairwise distance in unit-cube coordinates.
    pub min_dist: f64,
    pub initial_min_dist: f64,
    pub seed: u64,
    /// Best minimum distance seen after each temperature step.
    pub trace: Vec<f64>,
}

/// Minimum pairwise Euclidean distance.
pub fn min_distance(points: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d2: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            best = best.min(d2);
        }
    }
    best.sqrt()
}

/// Column-major stratum indices to unit-cube points.
fn to_points(cols: &[Vec<usize>], n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| cols.iter().map(|c| (c[i] as f64 + 0.5) / n as f64).collect())
        .collect()
}

fn min_dist_cols(cols: &[Vec<usize>], n: usize) -> f64 {
    min_distance(&to_points(cols, n))
}

pub fn maximin_lhs(spec: &DesignSpec) -> Design {
    let (n, d) = (spec.n, spec.dim());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut cols: Vec<Vec<usize>> = (0..d)
        .map(|_| {
            let mut c: Vec<usize> = (0..n).collect();
            c.shuffle(&mut rng);
            c
        })
        .collect();

    let initial = min_dist_cols(&cols, n);
    let mut current = initial;
    let mut best_cols = cols.clone();
    let mut best = initial;
    let mut trace = Vec::with_capacity(spec.optimize_iters);
    let mut temperature = INITIAL_TEMPERATURE * initial;

    for _ in 0..spec.optimize_iters {
        for _ in 0..SWAPS_PER_TEMPERATURE {
            let c = rng.random_range(0..d);
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            cols[c].swap(i, j);
            let candidate = min_dist_cols(&cols, n);
            let accept = candidate >= current || rng.random::<f64>() < ((candidate - current) / temperature).exp();
            if accept {
                current = candidate;
                if current > best {
                    best = current;
                    best_cols.clone_from(&cols);
                }
            } else {
                cols[c].swap(i, j);
            }
        }
        trace.push(best);
        temperature *= COOLING;
    }

    // greedy polish: first improving swap, until none is left
    let mut cols = best_cols;
    for _ in 0..MAX_GREEDY_PASSES {
        let mut improved = false;
        'search: for c in 0..d {
            for i in 0..n {
                for j in i + 1..n {
                    cols[c].swap(i, j);
                    let candidate = min_dist_cols(&cols, n);
                    if candidate > best {
                        best = candidate;
                        improved = true;
                        break 'search;
                    }
                    cols[c].swap(i, j);
                }
            }
        }
        if !improved {
            break;
        }
    }

    let points = to_points(&cols, n).iter().map(|u| spec.domain.from_unit(u)).collect();
    Design {
        points,
        min_dist: best,
        initial_min_dist: initial,
        seed: spec.seed,
        trace,
    }
}

/// `n_t` i.i.d. uniform points in `domain`.
pub fn uniform_test_set(n_t: usize, domain: &Domain, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n_t == 0 {
        return Err(GpError::input("test set needs at least one point"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_t)
        .map(|_| {
            let u: Vec<f64> = (0..domain.dim()).map(|_| rng.random::<f64>()).collect();
            domain.from_unit(&u)
        })
        .collect())
}

/// Writes points as CSV with header `x1,…,xd`. Values use the shortest
/// representation that round-trips exactly.
pub fn write_points_csv<W: Write>(points: &[Vec<f64>], d: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((1..=d).map(|j| format!("x{j}")))?;
    for p in points {
        w.write_record(p.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

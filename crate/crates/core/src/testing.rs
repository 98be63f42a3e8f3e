//! Test hooks: random kernel generators and independent reference
//! implementations used by the unit, integration and acceptance suites.
//!
//! Nothing here is used by the library proper. The oracles deliberately take
//! different computational routes from the production code (explicit
//! inverses, LU determinants, Monte-Carlo expectations).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::gp::TrainingSet;
use crate::kernels::{Kernel, LengthScaleFn, Modulator, Sigmoid, WarpMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestKind {
    Exponential,
    Matern32,
    Matern52,
    SquaredExp,
    NeuralNet,
    NeuralNetShifted,
    GibbsConstant,
    GibbsQuadratic,
    Gibbs(Sigmoid),
    Warped(Sigmoid),
    WarpedPeriodic,
    Sum,
    Product,
    Scaled,
    ShiftedConst,
    OuterFn,
}

pub const ALL_KINDS: &[TestKind] = &[
    TestKind::Exponential,
    TestKind::Matern32,
    TestKind::Matern52,
    TestKind::SquaredExp,
    TestKind::NeuralNet,
    TestKind::NeuralNetShifted,
    TestKind::GibbsConstant,
    TestKind::GibbsQuadratic,
    TestKind::Gibbs(Sigmoid::Erf),
    TestKind::Gibbs(Sigmoid::Logistic),
    TestKind::Gibbs(Sigmoid::Tanh),
    TestKind::Gibbs(Sigmoid::Arctan),
    TestKind::Warped(Sigmoid::Erf),
    TestKind::Warped(Sigmoid::Logistic),
    TestKind::Warped(Sigmoid::Tanh),
    TestKind::Warped(Sigmoid::Arctan),
    TestKind::WarpedPeriodic,
    TestKind::Sum,
    TestKind::Product,
    TestKind::Scaled,
    TestKind::ShiftedConst,
    TestKind::OuterFn,
];

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

/// A `d`-dimensional kernel of the requested kind with random in-bounds
/// parameters.
pub fn random_kernel<R: Rng>(kind: TestKind, d: usize, rng: &mut R) -> Kernel {
    let var = log_uniform(rng, 0.1, 10.0);
    let ls: Vec<f64> = (0..d).map(|_| log_uniform(rng, 0.05, 3.0)).collect();
    match kind {
        TestKind::Exponential => Kernel::exponential(var, &ls),
        TestKind::Matern32 => Kernel::matern32(var, &ls),
        TestKind::Matern52 => Kernel::matern52(var, &ls),
        TestKind::SquaredExp => Kernel::squared_exp(var, &ls),
        TestKind::NeuralNet => {
            let s: Vec<f64> = (0..=d).map(|_| log_uniform(rng, 0.05, 50.0)).collect();
            Kernel::neural_net(var, &s)
        }
        TestKind::NeuralNetShifted => {
            let s: Vec<f64> = (0..=d).map(|_| log_uniform(rng, 0.05, 50.0)).collect();
            let t: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            Kernel::neural_net_shifted(var, &s, &t)
        }
        TestKind::GibbsConstant => Kernel::gibbs(var, d, LengthScaleFn::constant(ls[0])),
        TestKind::GibbsQuadratic => {
            let axis = rng.random_range(0..d);
            Kernel::gibbs(
                var,
                d,
                LengthScaleFn::quadratic(log_uniform(rng, 0.1, 20.0), log_uniform(rng, 0.05, 2.0), axis),
            )
        }
        TestKind::Gibbs(s) => {
            let axis = rng.random_range(0..d);
            let c2 = s.positivity_floor() + log_uniform(rng, 0.01, 3.0);
            Kernel::gibbs(var, d, LengthScaleFn::sigmoid(s, log_uniform(rng, 0.1, 20.0), c2, axis))
        }
        TestKind::Warped(s) => {
            let axis = rng.random_range(0..d);
            Kernel::warped(
                WarpMap::sigmoid(s, log_uniform(rng, 0.1, 50.0), axis),
                Kernel::squared_exp(var, &ls),
            )
            .unwrap()
        }
        TestKind::WarpedPeriodic => {
            let mut child_ls = ls.clone();
            child_ls.push(log_uniform(rng, 0.05, 3.0));
            Kernel::warped(
                WarpMap::periodic(log_uniform(rng, 0.2, 3.0), 0),
                Kernel::squared_exp(var, &child_ls),
            )
            .unwrap()
        }
        TestKind::Sum => Kernel::sum(vec![
            random_kernel(TestKind::SquaredExp, d, rng),
            random_kernel(TestKind::NeuralNet, d, rng),
        ])
        .unwrap(),
        TestKind::Product => Kernel::product(vec![
            random_kernel(TestKind::Matern52, d, rng),
            random_kernel(TestKind::Gibbs(Sigmoid::Tanh), d, rng),
        ])
        .unwrap(),
        TestKind::Scaled => {
            Kernel::scaled(log_uniform(rng, 0.1, 10.0), random_kernel(TestKind::SquaredExp, d, rng)).unwrap()
        }
        TestKind::ShiftedConst => {
            Kernel::shifted_const(log_uniform(rng, 0.1, 10.0), random_kernel(TestKind::Matern32, d, rng)).unwrap()
        }
        TestKind::OuterFn => {
            let coeffs = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            Kernel::outer_fn(
                Modulator::Polynomial {
                    axis: rng.random_range(0..d),
                    coeffs,
                },
                random_kernel(TestKind::SquaredExp, d, rng),
            )
            .unwrap()
        }
    }
}

/// `n` i.i.d. uniform points in `[-2, 2]^d`.
pub fn random_points<R: Rng>(n: usize, d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect()
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn eigen_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(m.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Monte-Carlo estimate of `σ² E_u[h(x;u) h(x′;u)]` with
/// `h(x;u) = erf(u₀ + Σⱼ uⱼ xⱼ)` and `uⱼ ~ N(0, σⱼ²)` independent.
/// Returns `(estimate, standard error)`.
pub fn neural_net_monte_carlo<R: Rng>(
    variance: f64,
    sigmas: &[f64],
    x: &[f64],
    y: &[f64],
    draws: usize,
    rng: &mut R,
) -> (f64, f64) {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut u = vec![0.0; sigmas.len()];
    for _ in 0..draws {
        for (uj, s) in u.iter_mut().zip(sigmas) {
            let z: f64 = StandardNormal.sample(rng);
            *uj = s * z;
        }
        let ax = u[0] + u[1..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let ay = u[0] + u[1..].iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        let p = libm::erf(ax) * libm::erf(ay);
        sum += p;
        sum_sq += p * p;
    }
    let n = draws as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean) * n / (n - 1.0);
    (variance * mean, variance * (var / n).sqrt())
}

/// Log of the multivariate normal density `N(y; μ̂1, K)` with `μ̂` the GLS
/// estimate, computed with a full-pivot LU (determinant and solves).
pub fn dense_log_likelihood(k: &DMatrix<f64>, y: &[f64]) -> f64 {
    let n = y.len();
    let lu = k.clone().full_piv_lu();
    let yv = DVector::from_column_slice(y);
    let ones = DVector::from_element(n, 1.0);
    let kinv_y = lu.solve(&yv).expect("singular");
    let kinv_1 = lu.solve(&ones).expect("singular");
    let mu = ones.dot(&kinv_y) / ones.dot(&kinv_1);
    let r = &yv - &ones * mu;
    let kinv_r = lu.solve(&r).expect("singular");
    let det = lu.determinant();
    -0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln() - 0.5 * r.dot(&kinv_r)
}

/// Posterior mean and variance from an explicit inverse of `K`.
pub struct DensePosterior {
    pub kinv: DMatrix<f64>,
    pub mu: f64,
    pub weights: DVector<f64>,
    pub one_kinv_one: f64,
}

impl DensePosterior {
    pub fn new(k: &DMatrix<f64>, y: &[f64]) -> Self {
        let n = y.len();
        let kinv = k.clone().full_piv_lu().try_inverse().expect("singular");
        let yv = DVector::from_column_slice(y);
        let ones = DVector::from_element(n, 1.0);
        let one_kinv_one = (ones.transpose() * &kinv * &ones)[(0, 0)];
        let mu = (ones.transpose() * &kinv * &yv)[(0, 0)] / one_kinv_one;
        let weights = &kinv * (yv - ones * mu);
        DensePosterior {
            kinv,
            mu,
            weights,
            one_kinv_one,
        }
    }

    /// `(mean, variance)` given `k(x)` and `k(x, x)`.
    pub fn predict(&self, kx: &[f64], kxx: f64) -> (f64, f64) {
        let kv = DVector::from_column_slice(kx);
        let mean = self.mu + kv.dot(&self.weights);
        let kinv_k = &self.kinv * &kv;
        let u = 1.0 - kinv_k.sum();
        let var = kxx - kv.dot(&kinv_k) + u * u / self.one_kinv_one;
        (mean, var)
    }
}

/// Draws one zero-mean GP sample path at `points` (Cholesky of `K + 1e-10 I`).
pub fn sample_path<R: Rng>(kernel: &Kernel, points: &[Vec<f64>], rng: &mut R) -> Vec<f64> {
    let n = points.len();
    let mut k = kernel.gram(points).expect("gram");
    let scale = k.diagonal().mean();
    for i in 0..n {
        k[(i, i)] += 1e-10 * scale;
    }
    let l = k.cholesky().expect("sample covariance not PD").unpack();
    let z = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
    (l * z).iter().copied().collect()
}

/// One random likelihood comparison: `(log_likelihood, dense oracle)`, or
/// `None` when the drawn covariance is too ill-conditioned (condition number
/// above 1e6) for the oracle to be trusted at 1e-8.
pub fn likelihood_oracle_case<R: Rng>(rng: &mut R) -> Option<(f64, f64)> {
    let kind = ALL_KINDS[rng.random_range(0..ALL_KINDS.len())];
    let d = rng.random_range(1..=2);
    let n = rng.random_range(2..=10);
    let kernel = random_kernel(kind, d, rng);
    let x = random_points(n, d, rng);
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let ts = TrainingSet::from_points(x.clone(), y.clone()).ok()?;
    let gp = crate::gp::fit(&kernel, &ts).ok()?;
    let mut k = kernel.gram(&x).ok()?;
    for i in 0..n {
        k[(i, i)] += gp.jitter_used();
    }
    let (lo, hi) = eigen_extremes(&k);
    if !(lo > 0.0 && hi / lo <= 1e6) {
        return None;
    }
    let ours = crate::hyperopt::log_likelihood(&kernel, &ts).ok()?;
    Some((ours, dense_log_likelihood(&k, &y)))
}

/// Minimum pairwise distance of a plain (unoptimized) centered Latin
/// hypercube of `n` points in `[0, 1]^d`, drawn with a hand-rolled
/// Fisher–Yates shuffle per axis.
pub fn random_lhs_min_dist<R: Rng>(n: usize, d: usize, rng: &mut R) -> f64 {
    let mut cols = vec![vec![0usize; n]; d];
    for col in &mut cols {
        for (i, v) in col.iter_mut().enumerate() {
            *v = i;
        }
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            col.swap(i, j);
        }
    }
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            let d2: f64 = cols
                .iter()
                .map(|c| (c[i] as f64 - c[j] as f64) / n as f64)
                .map(|t| t * t)
                .sum();
            best = best.min(d2.sqrt());
        }
    }
    best
}

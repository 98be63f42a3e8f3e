use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::kernels::{LengthScaleFn, Sigmoid, WarpMap};
use crate::testing::{likelihood_oracle_case, sample_path};

fn grid(n: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..n).map(|i| vec![lo + (hi - lo) * i as f64 / (n - 1) as f64]).collect()
}

#[test]
fn identity_covariance_by_hand() {
    // far-apart points and a tiny length-scale make K = I up to jitter
    let k = Kernel::squared_exp(1.0, &[1e-3]);
    let ts = TrainingSet::new(vec![vec![0.0], vec![1.0]], vec![0.0, 0.0], Domain::unit(1)).unwrap();
    let ll = log_likelihood(&k, &ts).unwrap();
    let expected = -(2.0 * std::f64::consts::PI).ln();
    assert!((ll - expected).abs() < 1e-8 * expected.abs());
    assert!((ll + 1.83788).abs() < 1e-5);
}

#[test]
fn agrees_with_fitted_model() {
    let k = Kernel::matern52(1.3, &[0.4]);
    let ts = TrainingSet::new(grid(7, 0.0, 1.0), vec![0.1, 0.5, -0.2, 0.3, 0.9, 1.0, 0.2], Domain::unit(1)).unwrap();
    let a = log_likelihood(&k, &ts).unwrap();
    let b = crate::gp::fit(&k, &ts).unwrap().log_likelihood();
    assert!((a - b).abs() <= 1e-12 * a.abs());
}

#[test]
fn matches_dense_density_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 100 {
        if let Some((ours, oracle)) = likelihood_oracle_case(&mut rng) {
            assert!((ours - oracle).abs() <= 1e-8 * oracle.abs(), "{ours} vs {oracle}");
            checked += 1;
        }
    }
}

#[test]
fn unit_box_stationary_bounds() {
    let b = default_bounds(&Kernel::squared_exp(1.0, &[0.3, 0.3]), &Domain::unit(2), 1.0);
    assert_eq!(b[0], (1e-6, 1e3));
    assert_eq!(b[1], (1e-2, 10.0));
    assert_eq!(b[2], (1e-2, 10.0));
    let b = default_bounds(&Kernel::matern32(1.0, &[0.3]), &Domain::cube(-2.0, 2.0, 1).unwrap(), 4.0);
    assert_eq!(b[0], (4e-6, 4e3));
    assert_eq!(b[1], (4e-2, 40.0));
}

#[test]
fn neural_net_bounds() {
    let d = Domain::cube(-2.0, 2.0, 2).unwrap();
    let k = Kernel::neural_net_shifted(1.0, &[1.0, 1.0, 1.0], &[0.0, 0.0]);
    let names = k.param_names();
    let b = default_bounds(&k, &d, 1.0);
    for (n, bound) in names.iter().zip(&b) {
        if n.starts_with("sigma") {
            assert_eq!(*bound, (1e-2, 1e3), "{n}");
        }
        if n.starts_with("tau") {
            assert_eq!(*bound, (-2.0, 2.0), "{n}");
        }
    }
}

#[test]
fn constant_data_fall_back_to_unit_variance() {
    let b = default_bounds(&Kernel::squared_exp(1.0, &[0.3]), &Domain::unit(1), 0.0);
    assert_eq!(b[0], (1e-6, 1e3));
}

#[test]
fn length_scale_function_bounds() {
    let k = Kernel::gibbs(1.0, 1, LengthScaleFn::sigmoid(Sigmoid::Arctan, 1.0, 2.0, 0));
    let b = default_bounds(&k, &Domain::unit(1), 1.0);
    let floor = std::f64::consts::FRAC_PI_2;
    assert_eq!(b[1], (1e-2, 1e3));
    assert!((b[2].0 - (floor + 1e-2)).abs() < 1e-15);
    assert!((b[2].1 - (floor + 100.0)).abs() < 1e-12);
    let k = Kernel::gibbs(1.0, 1, LengthScaleFn::quadratic(1.0, 0.5, 0));
    let b = default_bounds(&k, &Domain::unit(1), 1.0);
    assert_eq!(b[1], (1e-2, 1e3));
    assert_eq!(b[2], (1e-2, 100.0));
}

#[test]
fn warped_child_sees_the_warp_image() {
    let k = Kernel::warped(WarpMap::sigmoid(Sigmoid::Logistic, 1.0, 0), Kernel::squared_exp(1.0, &[0.5, 0.5])).unwrap();
    let b = default_bounds(&k, &Domain::cube(-2.0, 2.0, 2).unwrap(), 1.0);
    assert_eq!(b[0], (1e-2, 1e3));
    // logistic image has width 1, the untouched axis keeps width 4
    assert_eq!(b[2], (1e-2, 10.0));
    assert_eq!(b[3], (4e-2, 40.0));
    let k = Kernel::warped(WarpMap::periodic(1.0, 0), Kernel::squared_exp(1.0, &[0.5, 0.5])).unwrap();
    let b = default_bounds(&k, &Domain::unit(1), 1.0);
    assert_eq!(b[1], (2e-2, 20.0));
    assert_eq!(b[2], (2e-2, 20.0));
}

fn se_problem(seed: u64, n: usize) -> (TrainingSet, Kernel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..n)
        .map(|i| vec![-2.0 + 4.0 * (i as f64 + rng.random_range(0.0..1.0)) / n as f64])
        .collect();
    let truth = Kernel::squared_exp(1.0, &[0.2]);
    let y = sample_path(&truth, &x, &mut rng);
    let ts = TrainingSet::new(x, y, Domain::cube(-2.0, 2.0, 1).unwrap()).unwrap();
    (ts, Kernel::squared_exp(1.0, &[1.0]))
}

#[test]
fn deterministic_given_seed() {
    let (ts, k) = se_problem(3, 15);
    let a = maximize_likelihood(&MLProblem::new(k.clone(), ts.clone(), 11).with_restarts(4)).unwrap();
    let b = maximize_likelihood(&MLProblem::new(k, ts, 11).with_restarts(4)).unwrap();
    assert_eq!(a, b);
    for (x, y) in a.best_params.iter().zip(&b.best_params) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn best_is_max_over_converged_restarts() {
    let (ts, k) = se_problem(5, 12);
    let r = maximize_likelihood(&MLProblem::new(k, ts, 1).with_restarts(6)).unwrap();
    let max = r
        .restart_logliks
        .iter()
        .zip(&r.converged)
        .filter(|(_, c)| **c)
        .map(|(v, _)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(r.best_loglik, max);
    assert_eq!(r.restart_logliks[r.best_restart], max);
}

#[test]
fn more_restarts_never_lower_the_optimum() {
    let ts = TrainingSet::new(
        grid(8, -2.0, 2.0),
        vec![-1.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 1.0],
        Domain::cube(-2.0, 2.0, 1).unwrap(),
    )
    .unwrap();
    let k = Kernel::gibbs(1.0, 1, LengthScaleFn::sigmoid(Sigmoid::Tanh, 1.0, 1.5, 0));
    let mut prev = f64::NEG_INFINITY;
    for n in 1..=6 {
        let r = maximize_likelihood(&MLProblem::new(k.clone(), ts.clone(), 77).with_restarts(n)).unwrap();
        assert!(r.best_loglik >= prev, "{n}: {} < {prev}", r.best_loglik);
        prev = r.best_loglik;
    }
}

#[test]
fn flags_parameters_on_bounds() {
    // a straight line favors ever longer length-scales
    let ts = TrainingSet::new(grid(6, 0.0, 1.0), (0..6).map(|i| i as f64).collect(), Domain::unit(1)).unwrap();
    let r = maximize_likelihood(&MLProblem::new(Kernel::squared_exp(1.0, &[0.5]), ts, 4)).unwrap();
    assert!(r.is_at_bound("length_scale[0]"), "{:?} {:?}", r.best_params, r.at_bounds);
    for f in &r.at_bounds {
        assert!((f.value - f.bound).abs() <= 1e-5 * f.bound.abs().max(1.0));
    }
}

#[test]
fn fixed_parameters_stay_put() {
    let (ts, k) = se_problem(8, 10);
    let mut bounds = default_bounds(&k, &ts.domain, ts.y_variance());
    bounds[0] = (1.0, 1.0);
    let r = maximize_likelihood(&MLProblem::new(k, ts, 2).with_bounds(bounds).with_restarts(3)).unwrap();
    assert_eq!(r.best_params[0], 1.0);
}

#[test]
fn all_failed_restarts_report_diagnostics() {
    let ts = TrainingSet::new(vec![vec![0.5], vec![0.5], vec![0.1]], vec![1.0, 1.0, 0.0], Domain::unit(1)).unwrap();
    let err = maximize_likelihood(&MLProblem::new(Kernel::squared_exp(1.0, &[0.5]), ts, 0).with_restarts(3)).unwrap_err();
    match err {
        GpError::Optimization { diagnostics, .. } => {
            assert_eq!(diagnostics.len(), 3);
            assert!(diagnostics[0].contains("duplicate"));
        }
        e => panic!("unexpected {e:?}"),
    }
}

#[test]
fn rejects_bad_problems() {
    let (ts, k) = se_problem(1, 5);
    assert!(maximize_likelihood(&MLProblem::new(k.clone(), ts.clone(), 0).with_restarts(0)).is_err());
    assert!(maximize_likelihood(&MLProblem::new(k.clone(), ts.clone(), 0).with_bounds(vec![(1.0, 2.0)])).is_err());
    let bad = vec![(1.0, f64::INFINITY), (0.1, 1.0)];
    assert!(maximize_likelihood(&MLProblem::new(k, ts, 0).with_bounds(bad)).is_err());
}

#[test]
fn result_serializes() {
    let (ts, k) = se_problem(2, 8);
    let r = maximize_likelihood(&MLProblem::new(k, ts, 9).with_restarts(2)).unwrap();
    let text = r.to_toml().unwrap();
    let back: MLResult = toml::from_str(&text).unwrap();
    assert_eq!(back, r);
}

#[test]
fn recovers_squared_exponential_length_scale() {
    let hits = (0..20u64)
        .filter(|&trial| {
            let (ts, k) = se_problem(100 + trial, 40);
            let r = maximize_likelihood(&MLProblem::new(k, ts, trial)).unwrap();
            let l = r.param("length_scale[0]").unwrap();
            (0.1..=0.4).contains(&l)
        })
        .count();
    assert!(hits >= 18, "recovered in {hits}/20 trials");
}

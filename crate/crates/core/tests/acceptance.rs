//! Acceptance suite. Runs every criterion and prints one PASS/FAIL line per
//! criterion; exits non-zero if any fails.
//!
//! The 5-D step ordering check is long-running and opt-in: pass `--ignored`
//! (or `--include-ignored`) after `--`, or set `STEPGP_ACCEPTANCE_5D=1`.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stepgp::benchmark::{run_experiment, summarize, ExperimentConfig, Method, MethodSummary, TestFunction};
use stepgp::design::{maximin_lhs, DesignSpec};
use stepgp::hyperopt::{maximize_likelihood, MLProblem};
use stepgp::kernels::Kernel;
use stepgp::testing::{
    eigen_extremes, likelihood_oracle_case, neural_net_monte_carlo, random_kernel, random_lhs_min_dist,
    random_points, ALL_KINDS,
};
use stepgp::{fit, Domain, TrainingSet};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Random smooth data on a fresh maximin design in `[-2, 2]^d`.
fn random_training_set(rng: &mut ChaCha8Rng, d: usize) -> TrainingSet {
    let n = if d == 1 { rng.random_range(5..=10) } else { rng.random_range(8..=16) };
    let domain = Domain::cube(-2.0, 2.0, d).unwrap();
    let x = maximin_lhs(&DesignSpec::new(n, domain.clone(), rng.random()).unwrap().with_iters(20)).points;
    let terms: Vec<(f64, Vec<f64>, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(-2.0..2.0),
                (0..d).map(|_| rng.random_range(-2.0..2.0)).collect(),
                rng.random_range(0.0..6.3),
            )
        })
        .collect();
    let y = x
        .iter()
        .map(|p| {
            terms
                .iter()
                .map(|(a, b, c)| a * (b.iter().zip(p).map(|(bj, pj)| bj * pj).sum::<f64>() + c).sin())
                .sum()
        })
        .collect();
    TrainingSet::new(x, y, domain).unwrap()
}

fn training_point_check(kernel_for: impl Fn(usize) -> Kernel, seed: u64) -> Vec<(f64, f64, f64)> {
    // per training set: (max |m - y| / max|y|, max s² / σ̂², min s²)
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..20)
        .map(|i| {
            let d = 1 + i % 2;
            let ts = random_training_set(&mut rng, d);
            let ml = maximize_likelihood(&MLProblem::new(kernel_for(d), ts.clone(), rng.random()).with_restarts(3))
                .expect("fit");
            let gp = fit(&ml.kernel, &ts).unwrap();
            let ymax = ts.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut err = 0.0f64;
            let mut var_max = 0.0f64;
            let mut var_min = f64::INFINITY;
            for (x, y) in ts.x.iter().zip(&ts.y) {
                let p = gp.predict(x).unwrap();
                err = err.max((p.mean - y).abs() / ymax);
                var_max = var_max.max(p.variance);
                var_min = var_min.min(p.variance);
            }
            let sigma2 = ml.kernel.signal_variance().unwrap();
            (err, var_max / sigma2, var_min)
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let families: [(&str, fn(usize) -> Kernel); 4] = [
        ("Exponential", |d| Kernel::exponential(1.0, &vec![1.0; d])),
        ("Matern32", |d| Kernel::matern32(1.0, &vec![1.0; d])),
        ("Matern52", |d| Kernel::matern52(1.0, &vec![1.0; d])),
        ("SquaredExp", |d| Kernel::squared_exp(1.0, &vec![1.0; d])),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, (name, make)) in families.iter().enumerate() {
        let rows = training_point_check(make, 100 + i as u64);
        let worst_err = rows.iter().map(|r| r.0).fold(0.0, f64::max);
        let worst_var = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        pass &= worst_err <= 1e-6 && worst_var <= 1e-6;
        parts.push(format!("{name}: |m-y|/max|y| {worst_err:.1e}, s²/σ̂² {worst_var:.1e}"));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_2() -> Outcome {
    let rows = training_point_check(|d| Kernel::neural_net(1.0, &vec![1.0; d + 1]), 200);
    let zero_sets = rows.iter().filter(|r| !(r.2 > 0.0)).count();
    let smallest = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    outcome(
        zero_sets == 0,
        format!("{} of 20 sets have a non-positive training-point variance; smallest {smallest:.3e}", zero_sets),
    )
}

fn criterion_3() -> Outcome {
    let tf = TestFunction::step(1).unwrap();
    let mut hits = 0;
    let mut values = Vec::new();
    for rep in 0..20u64 {
        let x = maximin_lhs(&DesignSpec::new(10, tf.domain.clone(), rep).unwrap()).points;
        let y = x.iter().map(|p| tf.eval(p).unwrap()).collect();
        let ts = TrainingSet::new(x, y, tf.domain.clone()).unwrap();
        let ml = maximize_likelihood(&MLProblem::new(Kernel::neural_net(1.0, &[1.0, 1.0]), ts, 1000 + rep)).unwrap();
        let s1 = ml.param("sigma[1]").unwrap();
        if ml.at_bounds.iter().any(|f| f.name == "sigma[1]" && f.upper && f.bound == 1e3) {
            hits += 1;
        }
        values.push(s1);
    }
    let median = median_of(&values);
    outcome(hits >= 15, format!("σ̂₁ at its 1e3 upper bound in {hits}/20 replicates (median σ̂₁ {median:.4e})"))
}

fn criterion_4() -> Outcome {
    let tf = TestFunction::step_at(Domain::unit(1), 0.5).unwrap();
    let mut hits = 0;
    let mut taus = Vec::new();
    for rep in 0..20u64 {
        let x = maximin_lhs(&DesignSpec::new(10, tf.domain.clone(), rep).unwrap()).points;
        let y = x.iter().map(|p| tf.eval(p).unwrap()).collect();
        let ts = TrainingSet::new(x, y, tf.domain.clone()).unwrap();
        let k = Kernel::neural_net_shifted(1.0, &[1.0, 1.0], &[0.5]);
        let ml = maximize_likelihood(&MLProblem::new(k, ts, 2000 + rep)).unwrap();
        let tau = ml.param("tau[0]").unwrap();
        if (tau - 0.5).abs() <= 0.1 {
            hits += 1;
        }
        taus.push(tau);
    }
    outcome(hits >= 15, format!("|τ̂ − 0.5| ≤ 0.1 in {hits}/20 replicates (median τ̂ {:.4})", median_of(&taus)))
}

fn median_of(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    stepgp::benchmark::quantile(&s, 0.5)
}

fn medians(summary: &[MethodSummary]) -> impl Fn(&str) -> f64 + '_ {
    move |m| summary.iter().find(|s| s.method == m).map(|s| s.median).unwrap()
}

fn criterion_5() -> Outcome {
    let mut cfg = ExperimentConfig::new(vec![TestFunction::nonstat()], vec![Method::GibbsQuad, Method::Mat32], 20, 5);
    cfg.n_train = Some(15);
    let rows = run_experiment(&cfg).unwrap();
    let summary = summarize(&rows);
    let med = medians(&summary);
    let (g, m) = (med("Gibbs-Quad"), med("Mat32"));
    let failures: usize = summary.iter().map(|s| s.failures).sum();
    outcome(g < m, format!("median RMSE Gibbs-Quad {g:.4e} vs Mat32 {m:.4e} ({failures} failed fits)"))
}

fn step_ordering(d: usize, n_train: usize) -> Outcome {
    let mut cfg = ExperimentConfig::new(vec![TestFunction::step(d).unwrap()], Method::standard_set(), 20, 6);
    cfg.n_train = Some(n_train);
    cfg.n_test = 1000;
    let rows = run_experiment(&cfg).unwrap();
    let summary = summarize(&rows);
    let med = medians(&summary);
    let worst_baseline = med("SquarExp").min(med("Mat32"));
    let contenders = ["NeurNet", "Gibbs-Arctan", "Warp-Arctan"];
    let pass = rows.len() == 220 && contenders.iter().all(|c| med(c) < worst_baseline);
    let table: Vec<String> = summary
        .iter()
        .map(|s| format!("{} {:.3}{}", s.method, s.median, if s.failures > 0 { format!(" ({} failed)", s.failures) } else { String::new() }))
        .collect();
    outcome(pass, format!("medians: {}", table.join(", ")))
}

fn criterion_6() -> Outcome {
    step_ordering(2, 20)
}

fn criterion_6_5d() -> Outcome {
    step_ordering(5, 50)
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let d = rng.random_range(1..=3);
        let var = rng.random_range(0.5..2.0);
        let sigmas: Vec<f64> = (0..=d).map(|_| rng.random_range(0.2..3.0)).collect();
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let closed = Kernel::neural_net(var, &sigmas).eval(&x, &y).unwrap();
        let (mc, se) = neural_net_monte_carlo(var, &sigmas, &x, &y, 1_000_000, &mut rng);
        worst = worst.max((closed - mc).abs() / se);
    }
    outcome(worst <= 4.0, format!("largest deviation {worst:.2} standard errors over 10 pairs"))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 100 {
        if let Some((ours, oracle)) = likelihood_oracle_case(&mut rng) {
            worst = worst.max((ours - oracle).abs() / oracle.abs());
            checked += 1;
        }
    }
    outcome(worst <= 1e-8, format!("largest relative error {worst:.2e} over 100 problems"))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = Vec::new();
    for kind in ALL_KINDS {
        for _ in 0..200 {
            let d = rng.random_range(1..=3);
            let n = rng.random_range(2..=30);
            let k = random_kernel(*kind, d, &mut rng);
            let g = k.gram(&random_points(n, d, &mut rng)).unwrap();
            let (min, max) = eigen_extremes(&g);
            if min < -1e-8 * max.abs() {
                failures.push(format!("{kind:?}: {min:e}"));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{} kinds × 200 instances, {} failures {}", ALL_KINDS.len(), failures.len(), failures.join(" ")),
    )
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut base: Vec<f64> = (0..1000).map(|_| random_lhs_min_dist(20, 2, &mut rng)).collect();
    base.sort_by(f64::total_cmp);
    let median = stepgp::benchmark::quantile(&base, 0.5);
    let design = maximin_lhs(&DesignSpec::new(20, Domain::unit(2), 10).unwrap());
    let latin = (0..2).all(|axis| {
        let mut strata: Vec<usize> = design.points.iter().map(|p| (p[axis] * 20.0).floor() as usize).collect();
        strata.sort_unstable();
        strata == (0..20).collect::<Vec<_>>()
    });
    outcome(
        latin && design.min_dist >= 0.95 * median,
        format!(
            "min_dist {:.4} vs 0.95 × baseline median {:.4}; projection property {}",
            design.min_dist,
            0.95 * median,
            if latin { "holds" } else { "violated" }
        ),
    )
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let long = args.iter().any(|a| a == "--ignored" || a == "--include-ignored")
        || std::env::var("STEPGP_ACCEPTANCE_5D").is_ok_and(|v| v == "1");

    let mut criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 interpolation (stationary kernels)", criterion_1),
        ("2 arcsine kernel training-point variance > 0", criterion_2),
        ("3 arcsine σ̂₁ at upper bound (1-D step)", criterion_3),
        ("4 shifted arcsine τ̂ near the jump", criterion_4),
        ("5 Gibbs-quadratic beats Matérn 3/2 (nonstationary)", criterion_5),
        ("6 2-D step ordering", criterion_6),
        ("7 arcsine kernel Monte-Carlo oracle", criterion_7),
        ("8 likelihood oracle", criterion_8),
        ("9 PSD suite", criterion_9),
        ("10 design quality", criterion_10),
    ];
    if long {
        criteria.push(("6b 5-D step ordering", criterion_6_5d));
    }

    let mut failed = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let o = run();
        println!(
            "criterion {name}: {} [{:.1}s] {}",
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    if !long {
        println!("criterion 6b 5-D step ordering: SKIPPED (opt-in, pass --ignored)");
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

use super::*;

fn row(method: &str, rmse: f64, failed: bool) -> ExperimentResult {
    ExperimentResult {
        function: "f".into(),
        dim: 1,
        method: method.into(),
        replicate: 0,
        seed: 0,
        rmse,
        n_train: 2,
        n_test: 1,
        jitter: 0.0,
        wall_ms: 0,
        loglik: 0.0,
        params: Vec::new(),
        at_bounds: Vec::new(),
        failure: failed.then(|| "boom".to_string()),
    }
}

#[test]
fn step_branches() {
    let f = TestFunction::step(2).unwrap();
    assert_eq!(f.eval(&[0.0, 1.7]).unwrap(), -1.0);
    assert_eq!(f.eval(&[0.5, -2.0]).unwrap(), 1.0);
    assert!(f.eval(&[2.5, 0.0]).is_err());
    assert!(f.eval(&[0.0]).is_err());
    let g = TestFunction::step_at(Domain::unit(1), 0.5).unwrap();
    assert_eq!(g.eval(&[0.5]).unwrap(), -1.0);
    assert_eq!(g.eval(&[0.51]).unwrap(), 1.0);
}

#[test]
fn nonstationary_function_values() {
    let f = TestFunction::nonstat();
    assert_eq!(f.eval(&[0.9]).unwrap(), 0.0);
    // independent evaluation at x = 0.2
    assert!((f.eval(&[0.2]).unwrap() - (-0.2147929490688)).abs() < 1e-12);
    assert!(f.eval(&[1.1]).is_err());
}

#[test]
fn rmse_examples() {
    assert_eq!(rmse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
    let t = [0.5, -1.0, 2.0, 7.0];
    let p: Vec<f64> = t.iter().map(|v| v + 0.3).collect();
    assert!((rmse(&t, &p).unwrap() - 0.3).abs() < 1e-12);
    assert_eq!(rmse(&[-1.0, 1.0], &[0.0, 0.0]).unwrap(), 1.0);
    assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    assert!(rmse(&[], &[]).is_err());
}

#[test]
fn quantiles_match_sorted_list_oracle() {
    // 20 shuffled values 1..=20; with h = 19p the quartiles are 5.75, 10.5, 15.25
    let vals = [7, 3, 20, 1, 15, 9, 12, 18, 2, 5, 11, 4, 16, 6, 19, 8, 14, 10, 17, 13];
    let rows: Vec<ExperimentResult> = vals.iter().map(|&v| row("A", v as f64, false)).collect();
    let s = &summarize(&rows)[0];
    assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (1.0, 5.75, 10.5, 15.25, 20.0));
    assert_eq!(s.mean, 10.5);
    assert_eq!(s.failures, 0);
}

#[test]
fn single_result_summary_and_failures() {
    let rows = vec![row("A", 0.7, false), row("B", 0.2, false), row("B", f64::NAN, true), row("B", 0.4, false)];
    let s = summarize(&rows);
    assert_eq!(s.len(), 2);
    assert_eq!(s[0].method, "A");
    for v in [s[0].min, s[0].q1, s[0].median, s[0].q3, s[0].max, s[0].mean] {
        assert_eq!(v, 0.7);
    }
    assert_eq!(s[1].failures, 1);
    assert!((s[1].median - 0.3).abs() < 1e-15);
    let all_failed = summarize(&[row("C", f64::NAN, true)]);
    assert!(all_failed[0].median.is_nan());
    assert_eq!(all_failed[0].failures, 1);
}

#[test]
fn method_labels_parse_back() {
    let set = Method::standard_set();
    assert_eq!(set.len(), 11);
    for m in set.iter().chain(&[Method::GibbsQuad, Method::NeurNetShift]) {
        assert_eq!(m.label().parse::<Method>().unwrap(), *m);
    }
    assert!("Gibbs-Sinc".parse::<Method>().is_err());
}

#[test]
fn axis_methods_enumerate_axes() {
    let d = Domain::cube(-2.0, 2.0, 3).unwrap();
    assert_eq!(Method::Gibbs(Sigmoid::Erf).candidates(&d).len(), 3);
    assert_eq!(Method::Warp(Sigmoid::Tanh).candidates(&d).len(), 3);
    assert_eq!(Method::NeurNet.candidates(&d).len(), 1);
    for m in Method::standard_set() {
        for k in m.candidates(&d) {
            assert_eq!(k.dim(), 3);
            k.validate().unwrap();
        }
    }
}

#[test]
fn seed_scheme() {
    let cfg = ExperimentConfig::new(vec![TestFunction::step(1).unwrap()], vec![Method::SquarExp], 1, 10);
    assert_eq!(cfg.cell_seed(0, 3, 2), 3012);
    assert_eq!(cfg.cell_seed(1, 0, 0), 1_000_010);
    assert_eq!(cfg.design_seed(0, 1), 2009);
    assert_eq!(cfg.test_seed(2), 3_000_009);
}

fn small_config(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(
        vec![TestFunction::step(1).unwrap()],
        vec![Method::SquarExp, Method::NeurNet],
        2,
        seed,
    );
    cfg.n_test = 50;
    cfg.restarts = 3;
    cfg.record_timing = false;
    cfg
}

#[test]
fn rows_are_conserved_and_deterministic() {
    let cfg = small_config(5);
    let a = run_experiment(&cfg).unwrap();
    assert_eq!(a.len(), 4);
    assert!(a.iter().all(|r| r.ok() && r.rmse >= 0.0));
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[1].method, "NeurNet");
    assert_eq!(a[2].replicate, 1);
    assert_eq!(a[3].seed, cfg.cell_seed(0, 1, 1));
}

#[test]
fn failures_are_recorded_not_raised() {
    let bad = TestFunction::user("nan", Domain::unit(1), |_| f64::NAN);
    let mut cfg = small_config(1);
    cfg.functions.push(bad);
    let rows = run_experiment(&cfg).unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows[..4].iter().all(ExperimentResult::ok));
    assert!(rows[4..].iter().all(|r| !r.ok() && r.rmse.is_nan()));
    assert!(rows[4].status().starts_with("failed"));
}

#[test]
fn constant_target_is_reproduced() {
    let f = TestFunction::user("const", Domain::cube(-2.0, 2.0, 1).unwrap(), |_| 3.25);
    let mut cfg = ExperimentConfig::new(vec![f], Method::standard_set(), 1, 0);
    cfg.n_train = Some(6);
    cfg.n_test = 100;
    cfg.restarts = 2;
    for r in run_experiment(&cfg).unwrap() {
        assert!(r.ok(), "{}: {}", r.method, r.status());
        assert!(r.rmse <= 1e-6, "{}: {}", r.method, r.rmse);
    }
}

#[test]
fn large_errors_are_bounded_by_rmse() {
    // every error is at most 2 in magnitude away from pathological fits, and
    // #{|e| > 1/2} / n ≤ mean(e²) / (1/2)² = 4 r²
    let tf = TestFunction::step(2).unwrap();
    let mut cfg = ExperimentConfig::new(vec![tf.clone()], vec![Method::Mat32, Method::NeurNet], 1, 3);
    cfg.n_test = 400;
    cfg.restarts = 3;
    let data = prepare(&cfg).unwrap();
    let (pts, truth) = &data.tests[0];
    for (k, &m) in cfg.methods.iter().enumerate() {
        let ts = data.training[0][0].as_ref().unwrap();
        let (gp, _) = fit_method(m, ts, cfg.cell_seed(0, 0, k), cfg.restarts).unwrap();
        let pred: Vec<f64> = gp.predict_batch(pts).unwrap().iter().map(|p| p.mean).collect();
        let r = rmse(truth, &pred).unwrap();
        let frac = truth.iter().zip(&pred).filter(|(t, p)| (*t - *p).abs() > 0.5).count() as f64 / pts.len() as f64;
        assert!(frac <= 4.0 * r * r, "{m}: {frac} > 4·{r}²");
    }
}

#[test]
fn csv_layouts() {
    let rows = vec![row("A", 0.125, false), row("A", f64::NAN, true)];
    let mut buf = Vec::new();
    write_results_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "function,dim,method,replicate,seed,rmse,n_train,n_test,jitter,wall_ms,status");
    assert_eq!(lines.next().unwrap(), "f,1,A,0,0,0.125,2,1,0,0,ok");
    assert!(lines.next().unwrap().ends_with("failed: boom"));
    let mut buf = Vec::new();
    write_summary_csv(&summarize(&rows), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("method,min,q1,median,q3,max,mean,failures\nA,0.125,"));
    assert!(text.trim_end().ends_with(",1"));
}

#[test]
fn config_validation() {
    let mut cfg = small_config(0);
    cfg.replicates = 0;
    assert!(cfg.validate().is_err());
    let mut cfg = small_config(0);
    cfg.methods.push(Method::SquarExp);
    assert!(cfg.validate().is_err());
    let mut cfg = small_config(0);
    cfg.n_train = Some(1);
    assert!(cfg.validate().is_err());
}

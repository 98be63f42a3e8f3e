//! Derivative-free Nelder–Mead minimization inside a box.
//!
//! Every trial vertex is projected onto the box before evaluation, so the
//! objective is never called outside its bounds.

#[derive(Clone, Debug)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Relative tolerance on the simplex spread in each coordinate.
    pub xtol: f64,
    /// Relative tolerance on the spread of objective values.
    pub ftol: f64,
    /// Initial step as a fraction of each box width.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_evals: 2000,
            xtol: 1e-8,
            ftol: 1e-8,
            initial_step: 0.1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

/// Minimizes `f` over `[lower, upper]` starting at `x0`. Non-finite objective
/// values are treated as `+∞`.
pub fn minimize<F>(mut f: F, x0: &[f64], lower: &[f64], upper: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut start = x0.to_vec();
    project(&mut start, lower, upper);
    if n == 0 {
        let fx = eval(&start, &mut evals);
        return NelderMeadResult {
            x: start,
            f: fx,
            evals,
            converged: true,
        };
    }

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.clone());
    for i in 0..n {
        let mut v = start.clone();
        let width = upper[i] - lower[i];
        let step = if width > 0.0 { opts.initial_step * width } else { 0.0 };
        // step away from the nearer bound
        if v[i] + step <= upper[i] {
            v[i] += step;
        } else {
            v[i] -= step;
        }
        simplex.push(v);
    }
    let mut fvals: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    let mut order: Vec<usize> = (0..=n).collect();

    while evals < opts.max_evals {
        order.sort_by(|&a, &b| fvals[a].total_cmp(&fvals[b]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let f_spread = fvals[worst] - fvals[best];
        let f_ok = f_spread.is_finite() && f_spread <= opts.ftol * (1.0 + fvals[best].abs());
        let x_ok = (0..=n).all(|k| {
            simplex[k]
                .iter()
                .zip(&simplex[best])
                .all(|(a, b)| (a - b).abs() <= opts.xtol * (1.0 + b.abs()))
        });
        if f_ok || x_ok {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for &k in &order[..n] {
            for (c, v) in centroid.iter_mut().zip(&simplex[k]) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect();
            project(&mut p, lower, upper);
            p
        };

        let xr = along(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < fvals[best] {
            let xe = along(gamma);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[worst] = xe;
                fvals[worst] = fe;
            } else {
                simplex[worst] = xr;
                fvals[worst] = fr;
            }
            continue;
        }
        if fr < fvals[second_worst] {
            simplex[worst] = xr;
            fvals[worst] = fr;
            continue;
        }
        let (xc, fc) = if fr < fvals[worst] {
            let xc = along(rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < fvals[worst].min(fr) {
            simplex[worst] = xc;
            fvals[worst] = fc;
            continue;
        }
        // shrink towards the best vertex
        let xb = simplex[best].clone();
        for k in 0..=n {
            if k == best {
                continue;
            }
            for (v, b) in simplex[k].iter_mut().zip(&xb) {
                *v = b + sigma * (*v - b);
            }
            fvals[k] = eval(&simplex[k], &mut evals);
        }
    }

    let best = (0..=n).min_by(|&a, &b| fvals[a].total_cmp(&fvals[b])).unwrap();
    NelderMeadResult {
        x: simplex[best].clone(),
        f: fvals[best],
        evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_rosenbrock_minimum() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = NelderMeadOptions {
            max_evals: 5000,
            ..Default::default()
        };
        let r = minimize(rosen, &[-1.2, 1.0], &[-5.0, -5.0], &[5.0, 5.0], &opts);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn respects_bounds() {
        let f = |x: &[f64]| (x[0] - 10.0).powi(2) + (x[1] + 3.0).powi(2);
        let r = minimize(f, &[0.0, 0.0], &[-1.0, -1.0], &[2.0, 2.0], &NelderMeadOptions::default());
        assert!((r.x[0] - 2.0).abs() < 1e-6 && (r.x[1] + 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn infinite_values_are_avoided() {
        let f = |x: &[f64]| if x[0] < 0.5 { f64::NAN } else { (x[0] - 0.7).powi(2) };
        let r = minimize(f, &[0.9], &[0.0], &[1.0], &NelderMeadOptions::default());
        assert!((r.x[0] - 0.7).abs() < 1e-4);
    }

    #[test]
    fn stops_at_eval_cap() {
        let opts = NelderMeadOptions {
            max_evals: 30,
            ..Default::default()
        };
        let r = minimize(|x: &[f64]| x.iter().map(|v| v.sin()).sum(), &[0.3; 4], &[-9.0; 4], &[9.0; 4], &opts);
        assert!(r.evals <= 30 + 5);
    }
}

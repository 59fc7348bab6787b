//! Nelder-Mead direct search with dimension-adaptive coefficients.
//!
//! The objective receives a cutoff: whenever a trial point can only be
//! accepted if its value is below some threshold, that threshold is passed
//! along and the objective may stop early and return any value `>= cutoff`.
//! Values below the cutoff must be exact.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadConfig {
    pub max_evals: usize,
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// ... and the simplex diameter falls below this.
    pub x_tol: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            f_tol: 1e-11,
            x_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

pub fn minimize<F>(mut f: F, x0: &[f64], steps: &[f64], cfg: &NelderMeadConfig) -> NelderMeadResult
where
    F: FnMut(&[f64], f64) -> f64,
{
    let dim = x0.len();
    let nd = dim as f64;
    let (alpha, beta, gamma, delta) = if dim >= 2 {
        (1.0, 1.0 + 2.0 / nd, 0.75 - 0.5 / nd, 1.0 - 1.0 / nd)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };
    let mut evals = 0usize;
    let mut eval = |x: &[f64], cutoff: f64, evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x, cutoff);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex
        .iter()
        .map(|v| eval(v, f64::INFINITY, &mut evals))
        .collect();

    let mut converged = false;
    let mut order: Vec<usize> = (0..=dim).collect();
    while evals < cfg.max_evals {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[dim];
        let second = order[dim.saturating_sub(1)];

        let spread = values[worst] - values[best];
        let diameter = simplex
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread.abs() <= cfg.f_tol && diameter <= cfg.x_tol {
            converged = true;
            break;
        }
        if dim == 0 {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; dim];
        for &i in order.iter().take(dim) {
            for (c, &x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x / nd;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(&c, &w)| c + t * (c - w))
                .collect()
        };

        let xr = along(alpha);
        let fr = eval(&xr, values[worst], &mut evals);
        if fr < values[best] {
            let xe = along(alpha * beta);
            let fe = eval(&xe, fr, &mut evals);
            if fe < fr {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second] {
            simplex[worst] = xr;
            values[worst] = fr;
            continue;
        }
        let (xc, fc, threshold) = if fr < values[worst] {
            let xc = along(alpha * gamma);
            let fc = eval(&xc, fr, &mut evals);
            (xc, fc, fr)
        } else {
            let xc = along(-gamma);
            let fc = eval(&xc, values[worst], &mut evals);
            (xc, fc, values[worst])
        };
        if fc < threshold {
            simplex[worst] = xc;
            values[worst] = fc;
            continue;
        }
        let anchor = simplex[best].clone();
        for &i in order.iter().skip(1) {
            let v: Vec<f64> = anchor
                .iter()
                .zip(&simplex[i])
                .map(|(&b, &x)| b + delta * (x - b))
                .collect();
            values[i] = eval(&v, f64::INFINITY, &mut evals);
            simplex[i] = v;
        }
    }

    let best = (0..=dim)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    NelderMeadResult {
        x: simplex[best].clone(),
        value: values[best],
        evals,
        converged,
    }
}

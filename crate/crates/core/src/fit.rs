//! Small dense Levenberg–Marquardt solver for models with a handful of parameters.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    /// Stop once every parameter changes by less than this relative amount.
    pub rel_step_tol: f64,
    pub max_iterations: usize,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            rel_step_tol: 1e-10,
            max_iterations: 200,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport {
    pub params: Vec<f64>,
    /// Root-mean-square residual at the solution.
    pub rms_residual: f64,
    pub iterations: usize,
}

/// Minimises `Σ r_i(p)²`. `residuals` fills `r` and the row-major Jacobian
/// `jac` (len(r) × len(p)).
pub fn levenberg_marquardt<F>(mut residuals: F, initial: &[f64], m: usize, opts: LmOptions) -> Result<LmReport>
where
    F: FnMut(&[f64], &mut [f64], &mut [f64]),
{
    let n = initial.len();
    let mut p = initial.to_vec();
    let mut r = vec![0.0; m];
    let mut jac = vec![0.0; m * n];
    let mut trial_r = vec![0.0; m];
    let mut trial_jac = vec![0.0; m * n];
    residuals(&p, &mut r, &mut jac);
    let mut cost = sum_sq(&r);
    let mut lambda = opts.initial_lambda;

    for iter in 1..=opts.max_iterations {
        // Normal equations (JᵀJ + λ diag(JᵀJ)) δ = −Jᵀr
        let mut jtj = vec![0.0; n * n];
        let mut jtr = vec![0.0; n];
        for i in 0..m {
            let row = &jac[i * n..(i + 1) * n];
            for a in 0..n {
                jtr[a] += row[a] * r[i];
                for b in 0..n {
                    jtj[a * n + b] += row[a] * row[b];
                }
            }
        }
        loop {
            let mut lhs = jtj.clone();
            for a in 0..n {
                lhs[a * n + a] += lambda * jtj[a * n + a].max(1e-300);
            }
            let rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
            let Some(delta) = solve(&mut lhs, rhs, n) else {
                lambda *= 10.0;
                if lambda > 1e20 {
                    return Err(non_convergent(iter, cost, m, p));
                }
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(&delta).map(|(a, d)| a + d).collect();
            residuals(&trial, &mut trial_r, &mut trial_jac);
            let trial_cost = sum_sq(&trial_r);
            if trial_cost.is_finite() && trial_cost <= cost {
                let converged = p
                    .iter()
                    .zip(&delta)
                    .all(|(a, d)| d.abs() <= opts.rel_step_tol * a.abs().max(1e-300));
                p = trial;
                std::mem::swap(&mut r, &mut trial_r);
                std::mem::swap(&mut jac, &mut trial_jac);
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-15);
                if converged || cost == 0.0 {
                    return Ok(LmReport {
                        params: p,
                        rms_residual: (cost / m as f64).sqrt(),
                        iterations: iter,
                    });
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e20 {
                // No descent direction left: we sit at a minimum to working precision.
                return Ok(LmReport {
                    params: p,
                    rms_residual: (cost / m as f64).sqrt(),
                    iterations: iter,
                });
            }
        }
    }
    Err(non_convergent(opts.max_iterations, cost, m, p))
}

fn non_convergent(iterations: usize, cost: f64, m: usize, best: Vec<f64>) -> Error {
    Error::NonConvergent {
        iterations,
        residual: (cost / m as f64).sqrt(),
        best,
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Gaussian elimination with partial pivoting on an n×n row-major system.
fn solve(a: &mut [f64], mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row * n + row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_saturating_exponential() {
        let ts: Vec<f64> = (0..200).map(|i| i as f64 * 0.02).collect();
        let (e_true, tau_true) = (0.31, 0.47);
        let data: Vec<f64> = ts.iter().map(|t| e_true * (1.0 - (-t / tau_true).exp())).collect();
        let rep = levenberg_marquardt(
            |p, r, j| {
                for (i, &t) in ts.iter().enumerate() {
                    let e = (-t / p[1]).exp();
                    r[i] = p[0] * (1.0 - e) - data[i];
                    j[2 * i] = 1.0 - e;
                    j[2 * i + 1] = -p[0] * e * t / (p[1] * p[1]);
                }
            },
            &[0.2, 0.8],
            ts.len(),
            LmOptions::default(),
        )
        .unwrap();
        assert!((rep.params[0] - e_true).abs() < 1e-9);
        assert!((rep.params[1] - tau_true).abs() < 1e-9);
    }

    #[test]
    fn reports_best_iterate_on_iteration_cap() {
        let opts = LmOptions {
            max_iterations: 1,
            ..LmOptions::default()
        };
        let err = levenberg_marquardt(
            |p, r, j| {
                r[0] = p[0] * p[0] - 2.0;
                j[0] = 2.0 * p[0];
            },
            &[10.0],
            1,
            opts,
        )
        .unwrap_err();
        match err {
            Error::NonConvergent { best, iterations, .. } => {
                assert_eq!(iterations, 1);
                assert_eq!(best.len(), 1);
                assert!(best[0] < 10.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}

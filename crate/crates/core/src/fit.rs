//! Damped least squares (Levenberg–Marquardt) for small dense models.

use crate::error::{Error, Result};

/// Outcome of a converged fit.
#[derive(Clone, Debug)]
pub struct LmSolution {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Relative gradient tolerance `‖Jᵀr‖∞ / (‖J‖·‖r‖)`.
    pub gtol: f64,
    /// Step tolerance relative to the parameter norm.
    pub xtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iter: 500, gtol: 1e-10, xtol: 1e-13 }
    }
}

/// Minimizes `½‖r(p)‖²`. `model(p, r, jac)` fills the residuals and the
/// row-major `m × n` Jacobian.
pub fn levenberg_marquardt<F>(mut model: F, p0: &[f64], m: usize, opts: LmOptions) -> Result<LmSolution>
where
    F: FnMut(&[f64], &mut [f64], &mut [f64]),
{
    let n = p0.len();
    let mut p = p0.to_vec();
    let mut r = vec![0.0; m];
    let mut jac = vec![0.0; m * n];
    model(&p, &mut r, &mut jac);
    let mut cost = sumsq(&r);
    if !cost.is_finite() {
        return Err(Error::Fit("non-finite residual at the initial guess".into()));
    }
    let mut lambda = 1e-3;
    let mut trial_r = vec![0.0; m];
    let mut trial_j = vec![0.0; m * n];

    for iter in 0..opts.max_iter {
        let mut jtj = vec![0.0; n * n];
        let mut grad = vec![0.0; n];
        for row in 0..m {
            let jr = &jac[row * n..(row + 1) * n];
            for a in 0..n {
                grad[a] += jr[a] * r[row];
                for b in 0..n {
                    jtj[a * n + b] += jr[a] * jr[b];
                }
            }
        }
        let jnorm = jac.iter().map(|v| v * v).sum::<f64>().sqrt();
        let gmax = grad.iter().fold(0.0f64, |acc, g| acc.max(g.abs()));
        if cost == 0.0 || gmax <= opts.gtol * jnorm * cost.sqrt() {
            return Ok(LmSolution { params: p, residuals: r, iterations: iter });
        }

        loop {
            let mut a = jtj.clone();
            for k in 0..n {
                a[k * n + k] += lambda * jtj[k * n + k].max(1e-300);
            }
            let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            let step = match solve_dense(&mut a, rhs, n) {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    if lambda > 1e16 {
                        return Err(Error::Fit("singular normal equations".into()));
                    }
                    continue;
                }
            };
            let trial: Vec<f64> = p.iter().zip(&step).map(|(x, s)| x + s).collect();
            model(&trial, &mut trial_r, &mut trial_j);
            let trial_cost = sumsq(&trial_r);
            if trial_cost.is_finite() && trial_cost <= cost {
                let small_step = norm(&step) <= opts.xtol * (norm(&p) + opts.xtol);
                p = trial;
                std::mem::swap(&mut r, &mut trial_r);
                std::mem::swap(&mut jac, &mut trial_j);
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-15);
                if small_step {
                    return Ok(LmSolution { params: p, residuals: r, iterations: iter + 1 });
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                // No descent left along any damped direction: we sit at a minimum
                // to working precision.
                return Ok(LmSolution { params: p, residuals: r, iterations: iter + 1 });
            }
        }
    }
    Err(Error::Fit(format!("no convergence after {} iterations", opts.max_iter)))
}

fn norm(v: &[f64]) -> f64 {
    sumsq(v).sqrt()
}

fn sumsq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Gaussian elimination with partial pivoting on a row-major `n × n` system.
fn solve_dense(a: &mut [f64], mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[piv * n + col].abs() < 1e-300 || !a[piv * n + col].is_finite() {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            b.swap(piv, col);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_exponential() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * (-1.3 * x).exp()).collect();
        let sol = levenberg_marquardt(
            |p, r, j| {
                for (i, (&x, &y)) in xs.iter().zip(&ys).enumerate() {
                    let e = (-p[1] * x).exp();
                    r[i] = p[0] * e - y;
                    j[i * 2] = e;
                    j[i * 2 + 1] = -p[0] * x * e;
                }
            },
            &[1.0, 0.5],
            xs.len(),
            LmOptions::default(),
        )
        .unwrap();
        assert!((sol.params[0] - 2.5).abs() < 1e-9);
        assert!((sol.params[1] - 1.3).abs() < 1e-9);
    }

    #[test]
    fn dense_solver() {
        let mut a = vec![0.0, 2.0, 1.0, 1.0];
        let x = solve_dense(&mut a, vec![4.0, 3.0], 2).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }
}

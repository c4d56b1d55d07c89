//! Small dense Levenberg–Marquardt least-squares solver.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LsqFit {
    pub params: Vec<f64>,
    /// Parameter covariance s²(JᵀJ)⁻¹, row-major k×k.
    pub covariance: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub rms: f64,
    pub iterations: usize,
}

pub struct LsqOptions {
    pub max_iterations: usize,
    /// Stop once the relative parameter step falls below this.
    pub step_tol: f64,
}

impl Default for LsqOptions {
    fn default() -> Self {
        LsqOptions {
            max_iterations: 500,
            step_tol: 1e-14,
        }
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Minimizes Σ r_i(p)² from `p0`. `residual` returns r and `jacobian`
/// returns ∂r_i/∂p_j as rows.
pub fn levenberg_marquardt(
    p0: &[f64],
    residual: impl Fn(&[f64]) -> Vec<f64>,
    jacobian: impl Fn(&[f64]) -> Vec<Vec<f64>>,
    opts: &LsqOptions,
) -> Result<LsqFit> {
    let k = p0.len();
    let mut p = p0.to_vec();
    let mut r = residual(&p);
    let m = r.len();
    if m < k {
        return Err(Error::Argument(format!(
            "need at least {k} data points, got {m}"
        )));
    }
    let mut cost = sum_sq(&r);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(&p);
        let j = DMatrix::from_fn(m, k, |i, c| jac[i][c]);
        let jt = j.transpose();
        let jtj = &jt * &j;
        let g = &jt * DVector::from_column_slice(&r);
        if g.amax() < 1e-300 {
            converged = true;
            break;
        }
        let mut improved = false;
        for _ in 0..60 {
            let mut a = jtj.clone();
            for d in 0..k {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-30);
            }
            let step = match a.lu().solve(&(-&g)) {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let r_trial = residual(&trial);
            let c_trial = sum_sq(&r_trial);
            if c_trial.is_finite() && c_trial <= cost {
                let rel = step
                    .iter()
                    .zip(&p)
                    .map(|(s, x)| s.abs() / x.abs().max(1e-12))
                    .fold(0.0, f64::max);
                p = trial;
                r = r_trial;
                let done = rel < opts.step_tol || cost - c_trial <= 1e-32;
                cost = c_trial;
                lambda = (lambda / 10.0).max(1e-15);
                improved = true;
                if done {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // no descent direction left: at a (numerical) minimum
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }
    let rms = (cost / m as f64).sqrt();
    if !converged || !p.iter().all(|x| x.is_finite()) {
        return Err(Error::FitFailure {
            iterations,
            rms,
            residuals: r,
        });
    }
    let jac = jacobian(&p);
    let j = DMatrix::from_fn(m, k, |i, c| jac[i][c]);
    let jtj = j.transpose() * &j;
    let s2 = if m > k { cost / (m - k) as f64 } else { 0.0 };
    let covariance = match jtj.try_inverse() {
        Some(inv) => (0..k)
            .map(|a| (0..k).map(|b| s2 * inv[(a, b)]).collect())
            .collect(),
        None => vec![vec![f64::NAN; k]; k],
    };
    Ok(LsqFit {
        params: p,
        covariance,
        residuals: r,
        rms,
        iterations,
    })
}

/// Ordinary linear least squares `min ‖A x − y‖` via SVD.
pub fn linear_lsq(a: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let m = a.len();
    let k = a.first().map(|r| r.len()).unwrap_or(0);
    if m < k || k == 0 {
        return Err(Error::Argument("under-determined linear fit".into()));
    }
    let mat = DMatrix::from_fn(m, k, |i, j| a[i][j]);
    let svd = mat.svd(true, true);
    let x = svd
        .solve(&DVector::from_column_slice(y), 1e-14)
        .map_err(|e| Error::Argument(e.to_string()))?;
    Ok(x.iter().copied().collect())
}

//! Cyclic coordinate descent for the lasso and the row-sparse multi-task lasso.
//!
//! With `standardize` (the default) every column is centred and scaled to
//! unit population variance before fitting, so the objective minimized is
//!
//! `½‖y - ȳ - X̃b‖² / n + λ ‖b‖₁`
//!
//! on the standardized scale, i.e. `½‖y - α - Xβ‖² / n + λ Σ_j sd_j |β_j|`
//! in the original units reported back. Constant columns get a zero
//! coefficient. Without `standardize` columns are only centred.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{FitKind, LinearFit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LassoConfig {
    /// Maximum number of full coordinate sweeps.
    pub max_iter: usize,
    /// Convergence when the largest coefficient change in a sweep is below this.
    pub tol: f64,
    pub standardize: bool,
}

impl Default for LassoConfig {
    fn default() -> Self {
        LassoConfig {
            max_iter: 10_000,
            tol: 1e-10,
            standardize: true,
        }
    }
}

/// Centred (and optionally scaled) copy of the design, stored column-major
/// as plain vectors for fast column access.
struct Prepared {
    columns: Vec<Vec<f64>>,
    means: Vec<f64>,
    scales: Vec<f64>,
    /// `‖x̃_j‖² / n`; zero for constant columns.
    sq_norms: Vec<f64>,
}

fn prepare(x: &DMatrix<f64>, standardize: bool) -> Prepared {
    let n = x.nrows() as f64;
    let mut columns = Vec::with_capacity(x.ncols());
    let mut means = Vec::with_capacity(x.ncols());
    let mut scales = Vec::with_capacity(x.ncols());
    let mut sq_norms = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let col = x.column(j);
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let scale = if standardize && var > 0.0 {
            var.sqrt()
        } else {
            1.0
        };
        let centred: Vec<f64> = col.iter().map(|v| (v - mean) / scale).collect();
        let sq = if var > 0.0 {
            centred.iter().map(|v| v * v).sum::<f64>() / n
        } else {
            0.0
        };
        columns.push(centred);
        means.push(mean);
        scales.push(scale);
        sq_norms.push(sq);
    }
    Prepared {
        columns,
        means,
        scales,
        sq_norms,
    }
}

fn soft_threshold(v: f64, lambda: f64) -> f64 {
    if v > lambda {
        v - lambda
    } else if v < -lambda {
        v + lambda
    } else {
        0.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check(x: &DMatrix<f64>, rows: usize, lambda: f64) -> Result<()> {
    if rows != x.nrows() {
        return Err(Error::shape(format!(
            "{} rows but {rows} targets",
            x.nrows()
        )));
    }
    if x.nrows() == 0 {
        return Err(Error::Insufficient("lasso needs at least one row".into()));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::config("lambda must be finite and >= 0"));
    }
    Ok(())
}

/// Smallest λ for which every coefficient is zero:
/// `max_j |x̃_jᵀ(y - ȳ)| / n` on the prepared (centred, optionally scaled) design.
pub fn lasso_lambda_max(x: &DMatrix<f64>, y: &[f64], standardize: bool) -> f64 {
    let prep = prepare(x, standardize);
    let n = x.nrows() as f64;
    let ybar = y.iter().sum::<f64>() / n;
    let yc: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    prep.columns
        .iter()
        .zip(&prep.sq_norms)
        .filter(|(_, sq)| **sq > 0.0)
        .map(|(c, _)| (dot(c, &yc) / n).abs())
        .fold(0.0, f64::max)
}

pub fn fit_lasso(x: &DMatrix<f64>, y: &[f64], lambda: f64, cfg: &LassoConfig) -> Result<LinearFit> {
    check(x, y.len(), lambda)?;
    let n = x.nrows() as f64;
    let p = x.ncols();
    let prep = prepare(x, cfg.standardize);
    let ybar = y.iter().sum::<f64>() / n;
    let mut resid: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    let mut b = vec![0.0; p];

    let objective = |resid: &[f64], b: &[f64]| {
        0.5 * dot(resid, resid) / n + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
    };
    let mut trace = vec![objective(&resid, &b)];
    let mut sweeps = 0;
    let mut max_change = f64::INFINITY;
    while sweeps < cfg.max_iter {
        max_change = 0.0;
        for j in 0..p {
            let sq = prep.sq_norms[j];
            if sq == 0.0 {
                continue;
            }
            let col = &prep.columns[j];
            let rho = dot(col, &resid) / n + sq * b[j];
            let updated = soft_threshold(rho, lambda) / sq;
            let delta = updated - b[j];
            if delta != 0.0 {
                for (r, c) in resid.iter_mut().zip(col) {
                    *r -= delta * c;
                }
                b[j] = updated;
                max_change = max_change.max(delta.abs());
            }
        }
        sweeps += 1;
        trace.push(objective(&resid, &b));
        if max_change < cfg.tol {
            break;
        }
    }

    let coefficients: Vec<f64> = b.iter().zip(&prep.scales).map(|(b, s)| b / s).collect();
    let intercept = ybar
        - coefficients
            .iter()
            .zip(&prep.means)
            .map(|(c, m)| c * m)
            .sum::<f64>();
    Ok(LinearFit {
        kind: FitKind::Lasso,
        coefficients,
        intercept,
        residual_variance: None,
        vcov: None,
        iterations: sweeps,
        converged: max_change < cfg.tol,
        optimality: max_change,
        regularization: lambda,
        objective_trace: trace,
    })
}

/// Block coordinate descent for `½‖Y - XB‖²_F / n + λ Σ_j ‖B_j·‖₂`.
///
/// Returns one fit per task; coefficient rows are jointly zero or jointly
/// nonzero across tasks.
pub fn fit_multitask_lasso(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    lambda: f64,
    cfg: &LassoConfig,
) -> Result<Vec<LinearFit>> {
    check(x, y.nrows(), lambda)?;
    let n = x.nrows() as f64;
    let p = x.ncols();
    let k = y.ncols();
    if k == 0 {
        return Err(Error::shape("multi-task lasso needs at least one task"));
    }
    let prep = prepare(x, cfg.standardize);
    let ybar: Vec<f64> = (0..k).map(|t| y.column(t).sum() / n).collect();
    let mut resid: Vec<Vec<f64>> = (0..k)
        .map(|t| y.column(t).iter().map(|v| v - ybar[t]).collect())
        .collect();
    let mut b = vec![vec![0.0; k]; p];

    let objective = |resid: &[Vec<f64>], b: &[Vec<f64>]| {
        0.5 * resid.iter().map(|r| dot(r, r)).sum::<f64>() / n
            + lambda
                * b.iter()
                    .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt())
                    .sum::<f64>()
    };
    let mut trace = vec![objective(&resid, &b)];
    let mut sweeps = 0;
    let mut max_change = f64::INFINITY;
    let mut rho = vec![0.0; k];
    while sweeps < cfg.max_iter {
        max_change = 0.0;
        for j in 0..p {
            let sq = prep.sq_norms[j];
            if sq == 0.0 {
                continue;
            }
            let col = &prep.columns[j];
            for t in 0..k {
                rho[t] = dot(col, &resid[t]) / n + sq * b[j][t];
            }
            let norm = rho.iter().map(|v| v * v).sum::<f64>().sqrt();
            let shrink = if norm > lambda {
                1.0 - lambda / norm
            } else {
                0.0
            };
            for t in 0..k {
                let updated = shrink * rho[t] / sq;
                let delta = updated - b[j][t];
                if delta != 0.0 {
                    for (r, c) in resid[t].iter_mut().zip(col) {
                        *r -= delta * c;
                    }
                    b[j][t] = updated;
                    max_change = max_change.max(delta.abs());
                }
            }
        }
        sweeps += 1;
        trace.push(objective(&resid, &b));
        if max_change < cfg.tol {
            break;
        }
    }

    Ok((0..k)
        .map(|t| {
            let coefficients: Vec<f64> = (0..p).map(|j| b[j][t] / prep.scales[j]).collect();
            let intercept = ybar[t]
                - coefficients
                    .iter()
                    .zip(&prep.means)
                    .map(|(c, m)| c * m)
                    .sum::<f64>();
            LinearFit {
                kind: FitKind::MultitaskRow,
                coefficients,
                intercept,
                residual_variance: None,
                vcov: None,
                iterations: sweeps,
                converged: max_change < cfg.tol,
                optimality: max_change,
                regularization: lambda,
                objective_trace: trace.clone(),
            }
        })
        .collect())
}

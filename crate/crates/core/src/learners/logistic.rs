//! Logistic regression by iteratively reweighted least squares.
//!
//! Minimizes the weighted mean negative log-likelihood plus a ridge penalty
//! on the slopes (the intercept is unpenalized):
//!
//! `f(a, b) = Σ w_i [ln(1 + e^{s_i}) - y_i s_i] / Σ w_i + l2/2 ‖b‖²`,
//! with `s_i = a + x_i · b`.
//!
//! Each iteration takes a Newton step with Armijo step halving, falling back
//! to a gradient step when the Hessian has no Cholesky factor.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{sigmoid, softplus, FitKind, LinearFit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            max_iter: 100,
            tol: 1e-8,
            l2: 0.0,
        }
    }
}

/// Objective value at `(intercept, coefficients)`; `weights = None` means uniform.
pub fn logistic_objective(
    x: &DMatrix<f64>,
    y: &[f64],
    weights: Option<&[f64]>,
    l2: f64,
    intercept: f64,
    coefficients: &[f64],
) -> f64 {
    let scores = scores(x, intercept, coefficients);
    objective(&scores, y, weights, l2, coefficients)
}

/// Gradient `(d/d intercept, d/d coefficients...)` of [`logistic_objective`].
pub fn logistic_gradient(
    x: &DMatrix<f64>,
    y: &[f64],
    weights: Option<&[f64]>,
    l2: f64,
    intercept: f64,
    coefficients: &[f64],
) -> Vec<f64> {
    let scores = scores(x, intercept, coefficients);
    gradient(x, &scores, y, weights, l2, coefficients)
        .iter()
        .copied()
        .collect()
}

fn scores(x: &DMatrix<f64>, intercept: f64, coefficients: &[f64]) -> Vec<f64> {
    let b = DVector::from_column_slice(coefficients);
    let xb = x * b;
    xb.iter().map(|v| v + intercept).collect()
}

fn weight(weights: Option<&[f64]>, i: usize) -> f64 {
    weights.map_or(1.0, |w| w[i])
}

fn total_weight(weights: Option<&[f64]>, n: usize) -> f64 {
    weights.map_or(n as f64, |w| w.iter().sum())
}

fn objective(s: &[f64], y: &[f64], weights: Option<&[f64]>, l2: f64, b: &[f64]) -> f64 {
    let total = total_weight(weights, s.len());
    let nll: f64 = s
        .iter()
        .zip(y)
        .enumerate()
        .map(|(i, (s, y))| weight(weights, i) * (softplus(*s) - y * s))
        .sum();
    nll / total + 0.5 * l2 * b.iter().map(|v| v * v).sum::<f64>()
}

fn gradient(
    x: &DMatrix<f64>,
    s: &[f64],
    y: &[f64],
    weights: Option<&[f64]>,
    l2: f64,
    b: &[f64],
) -> DVector<f64> {
    let total = total_weight(weights, s.len());
    let p = x.ncols();
    let mut g = DVector::zeros(p + 1);
    for i in 0..s.len() {
        let r = weight(weights, i) * (sigmoid(s[i]) - y[i]) / total;
        g[0] += r;
        for j in 0..p {
            g[j + 1] += r * x[(i, j)];
        }
    }
    for j in 0..p {
        g[j + 1] += l2 * b[j];
    }
    g
}

fn hessian(x: &DMatrix<f64>, s: &[f64], weights: Option<&[f64]>, l2: f64) -> DMatrix<f64> {
    let total = total_weight(weights, s.len());
    let p = x.ncols();
    let mut h = DMatrix::zeros(p + 1, p + 1);
    let mut z = vec![0.0; p + 1];
    z[0] = 1.0;
    for i in 0..s.len() {
        let mu = sigmoid(s[i]);
        let v = weight(weights, i) * mu * (1.0 - mu) / total;
        if v == 0.0 {
            continue;
        }
        for j in 0..p {
            z[j + 1] = x[(i, j)];
        }
        for a in 0..=p {
            let za = v * z[a];
            for c in a..=p {
                h[(a, c)] += za * z[c];
            }
        }
    }
    for a in 0..=p {
        for c in 0..a {
            h[(a, c)] = h[(c, a)];
        }
    }
    for j in 1..=p {
        h[(j, j)] += l2;
    }
    h
}

pub fn fit_logistic(x: &DMatrix<f64>, y: &[f64], cfg: &LogisticConfig) -> Result<LinearFit> {
    fit_logistic_weighted(x, y, None, cfg)
}

/// Weighted fit; weights are non-negative and normalized internally.
pub fn fit_logistic_weighted(
    x: &DMatrix<f64>,
    y: &[f64],
    weights: Option<&[f64]>,
    cfg: &LogisticConfig,
) -> Result<LinearFit> {
    let n = x.nrows();
    let p = x.ncols();
    if y.len() != n {
        return Err(Error::shape(format!("{n} rows but {} labels", y.len())));
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(Error::shape(format!("{n} rows but {} weights", w.len())));
        }
        if w.iter().any(|v| !(*v >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::config(
                "weights must be non-negative and not all zero",
            ));
        }
    }
    if n < 2 {
        return Err(Error::Insufficient(
            "logistic regression needs n >= 2".into(),
        ));
    }
    if !(cfg.l2 >= 0.0) {
        return Err(Error::config("l2 must be >= 0"));
    }

    let mut positive = 0.0;
    let mut total = 0.0;
    for i in 0..n {
        let w = weight(weights, i);
        positive += w * y[i];
        total += w;
    }
    let single_class = positive <= 0.0 || positive >= total;
    if single_class && cfg.l2 == 0.0 {
        // no finite optimum exists; keep the audit going with a flagged fit
        let rate = (positive + 0.5) / (total + 1.0);
        return Ok(LinearFit {
            kind: FitKind::Logistic,
            coefficients: vec![0.0; p],
            intercept: (rate / (1.0 - rate)).ln(),
            residual_variance: None,
            vcov: None,
            iterations: 0,
            converged: false,
            optimality: f64::INFINITY,
            regularization: 0.0,
            objective_trace: Vec::new(),
        });
    }

    let mut intercept = {
        let rate = ((positive + 0.5) / (total + 1.0)).clamp(1e-6, 1.0 - 1e-6);
        (rate / (1.0 - rate)).ln()
    };
    let mut beta = vec![0.0; p];
    let mut s = scores(x, intercept, &beta);
    let mut f = objective(&s, y, weights, cfg.l2, &beta);
    let mut trace = vec![f];
    let mut iterations = 0;
    let mut grad_norm = f64::INFINITY;
    let mut converged = false;

    while iterations < cfg.max_iter {
        let g = gradient(x, &s, y, weights, cfg.l2, &beta);
        grad_norm = g.norm();
        if grad_norm < cfg.tol {
            converged = true;
            break;
        }
        let h = hessian(x, &s, weights, cfg.l2);
        let direction = match h.cholesky() {
            Some(ch) => {
                let d = ch.solve(&(-&g));
                if d.iter().all(|v| v.is_finite()) && d.dot(&g) < 0.0 {
                    d
                } else {
                    -g.clone()
                }
            }
            None => -g.clone(),
        };
        let slope = direction.dot(&g);
        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-12 {
            let cand_intercept = intercept + step * direction[0];
            let cand_beta: Vec<f64> = beta
                .iter()
                .enumerate()
                .map(|(j, b)| b + step * direction[j + 1])
                .collect();
            let cand_s = scores(x, cand_intercept, &cand_beta);
            let cand_f = objective(&cand_s, y, weights, cfg.l2, &cand_beta);
            if cand_f <= f + 1e-4 * step * slope {
                intercept = cand_intercept;
                beta = cand_beta;
                s = cand_s;
                f = cand_f;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break;
        }
        trace.push(f);
    }
    if !converged {
        let g = gradient(x, &s, y, weights, cfg.l2, &beta);
        grad_norm = g.norm();
        converged = grad_norm < cfg.tol;
    }

    Ok(LinearFit {
        kind: FitKind::Logistic,
        coefficients: beta,
        intercept,
        residual_variance: None,
        vcov: None,
        iterations,
        converged,
        optimality: grad_norm,
        regularization: cfg.l2,
        objective_trace: trace,
    })
}

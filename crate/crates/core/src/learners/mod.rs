//! Linear learners: logistic regression, OLS with coefficient covariance,
//! lasso and multi-task lasso.

mod lasso;
mod logistic;
mod multilabel;
mod ols;

pub use lasso::{fit_lasso, fit_multitask_lasso, lasso_lambda_max, LassoConfig};
pub use logistic::{
    fit_logistic, fit_logistic_weighted, logistic_gradient, logistic_objective, LogisticConfig,
};
pub use multilabel::{fit_multilabel, fit_multilabel_regression, MultiLabelModel, MODEL_VERSION};
pub use ols::{fit_ols, fit_ols_named};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    Logistic,
    Ols,
    Lasso,
    MultitaskRow,
}

/// A fitted linear model `score = intercept + coefficients · x`.
///
/// For OLS fits `vcov` is the `(p+1)×(p+1)` covariance of
/// `(intercept, coefficients...)`, intercept first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub kind: FitKind,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    #[serde(default)]
    pub residual_variance: Option<f64>,
    #[serde(default, with = "matrix_rows::option")]
    pub vcov: Option<DMatrix<f64>>,
    pub iterations: usize,
    pub converged: bool,
    /// Gradient norm (logistic) or largest last coefficient update (lasso).
    pub optimality: f64,
    pub regularization: f64,
    /// Objective value after each iteration or sweep.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objective_trace: Vec<f64>,
}

impl LinearFit {
    pub fn n_inputs(&self) -> usize {
        self.coefficients.len()
    }

    pub fn scores(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.coefficients.len() {
            return Err(Error::shape(format!(
                "model has {} inputs, matrix has {} columns",
                self.coefficients.len(),
                x.ncols()
            )));
        }
        Ok((0..x.nrows())
            .map(|i| {
                self.intercept
                    + x.row(i)
                        .iter()
                        .zip(&self.coefficients)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
            })
            .collect())
    }

    /// `P(Y = 1 | x)` for logistic fits.
    pub fn predict_proba(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        Ok(self.scores(x)?.into_iter().map(sigmoid).collect())
    }

    /// Standard errors `sqrt(diag(vcov))`, intercept first.
    pub fn std_errors(&self) -> Option<Vec<f64>> {
        self.vcov
            .as_ref()
            .map(|v| (0..v.nrows()).map(|i| v[(i, i)].max(0.0).sqrt()).collect())
    }
}

/// `predict_proba` as a free function.
pub fn predict_proba(fit: &LinearFit, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    fit.predict_proba(x)
}

/// Logistic function that never overflows.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Serializes matrices as a list of rows.
pub mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
        (0..m.nrows())
            .map(|i| m.row(i).iter().copied().collect())
            .collect()
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, String> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err("ragged matrix".into());
        }
        Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        from_rows(&rows).map_err(serde::de::Error::custom)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(m: &Option<DMatrix<f64>>, s: S) -> Result<S::Ok, S::Error> {
            m.as_ref().map(to_rows).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> Result<Option<DMatrix<f64>>, D::Error> {
            match Option::<Vec<Vec<f64>>>::deserialize(d)? {
                None => Ok(None),
                Some(rows) => from_rows(&rows).map(Some).map_err(serde::de::Error::custom),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(beta: Vec<f64>, intercept: f64) -> LinearFit {
        LinearFit {
            kind: FitKind::Logistic,
            coefficients: beta,
            intercept,
            residual_variance: None,
            vcov: None,
            iterations: 0,
            converged: true,
            optimality: 0.0,
            regularization: 0.0,
            objective_trace: Vec::new(),
        }
    }

    #[test]
    fn zero_model_predicts_one_half() {
        let x = DMatrix::from_row_slice(3, 2, &[1., 2., -3., 4., 0., 0.]);
        let p = predict_proba(&fit(vec![0.0, 0.0], 0.0), &x).unwrap();
        assert!(p.iter().all(|v| *v == 0.5));
    }

    #[test]
    fn huge_scores_stay_finite() {
        let x = DMatrix::from_row_slice(2, 1, &[1e6, -1e6]);
        let p = predict_proba(&fit(vec![1.0], 0.0), &x).unwrap();
        assert!(p[0] > 1.0 - 1e-9 && p[0] <= 1.0);
        assert!(p[1] >= 0.0 && p[1] < 1e-9);
        assert!(p.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn closed_form_sigmoid() {
        let x = DMatrix::from_row_slice(1, 1, &[3f64.ln()]);
        let p = predict_proba(&fit(vec![1.0], 0.0), &x).unwrap();
        assert!((p[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn monotone_in_score() {
        let x = DMatrix::from_fn(50, 1, |i, _| i as f64 / 5.0 - 5.0);
        let p = predict_proba(&fit(vec![2.0], 0.3), &x).unwrap();
        assert!(p.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn dimension_mismatch() {
        let x = DMatrix::zeros(2, 3);
        assert!(matches!(
            predict_proba(&fit(vec![1.0], 0.0), &x).unwrap_err(),
            Error::DimensionMismatch(_)
        ));
    }

    #[test]
    fn softplus_matches_naive() {
        for z in [-30.0, -1.0, 0.0, 0.5, 20.0] {
            assert!((softplus(z) - (1.0f64 + f64::exp(z)).ln()).abs() < 1e-12);
        }
        assert!((softplus(1000.0) - 1000.0).abs() < 1e-12);
    }
}

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::learners::{fit_ols_named, matrix_rows, LinearFit};
use crate::metrics::MetricTable;

pub const DEFAULT_CORRELATION_FLAG: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Intercept,
    Feature,
    PredictedLabel,
    Demographic,
}

impl Block {
    fn as_str(self) -> &'static str {
        match self {
            Block::Intercept => "intercept",
            Block::Feature => "feature",
            Block::PredictedLabel => "predicted_label",
            Block::Demographic => "demographic",
        }
    }
}

/// One group of regressors with column names.
#[derive(Debug, Clone, Copy)]
pub struct DesignBlock<'a> {
    pub block: Block,
    pub matrix: &'a DMatrix<f64>,
    pub names: &'a [String],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub block: Block,
    pub estimate: f64,
    pub std_error: f64,
    pub t: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Coefficient {
    pub fn ci_covers(&self, v: f64) -> bool {
        self.ci_low <= v && v <= self.ci_high
    }
}

/// `bias = α + X β + Ŷ γ + D δ + ε`, fitted once by OLS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionFit {
    pub alpha: Coefficient,
    pub beta: Vec<Coefficient>,
    pub gamma: Vec<Coefficient>,
    pub delta: Vec<Coefficient>,
    pub sigma2: f64,
    pub n: usize,
    pub df: usize,
    /// `(name, block)` for every row of `vcov`, intercept first.
    pub columns: Vec<(String, Block)>,
    #[serde(with = "matrix_rows")]
    pub vcov: DMatrix<f64>,
    pub residuals: Vec<f64>,
    #[serde(skip)]
    pub fit: Option<LinearFit>,
}

impl DecompositionFit {
    /// All coefficients in design order, intercept first.
    pub fn coefficients(&self) -> Vec<&Coefficient> {
        std::iter::once(&self.alpha)
            .chain(&self.beta)
            .chain(&self.gamma)
            .chain(&self.delta)
            .collect()
    }

    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients().into_iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Regresses a caller-supplied bias quantity on the stacked blocks with an
/// intercept. Coefficients come back partitioned by block, with standard
/// errors and 95% Student-t intervals. Rank deficiency names the offending
/// columns as `block:name`.
pub fn bias_decomposition(bias: &[f64], blocks: &[DesignBlock<'_>]) -> Result<DecompositionFit> {
    let n = bias.len();
    let mut columns = Vec::new();
    for b in blocks {
        if b.block == Block::Intercept {
            return Err(Error::config("the intercept is added automatically"));
        }
        if b.matrix.nrows() != n || b.names.len() != b.matrix.ncols() {
            return Err(Error::shape(format!(
                "{} block is {:?} with {} names for {n} rows",
                b.block.as_str(),
                b.matrix.shape(),
                b.names.len()
            )));
        }
        columns.extend(b.names.iter().map(|nm| (nm.clone(), b.block)));
    }
    let p = columns.len();
    let mut x = DMatrix::zeros(n, p);
    let mut at = 0;
    for b in blocks {
        x.columns_mut(at, b.matrix.ncols()).copy_from(b.matrix);
        at += b.matrix.ncols();
    }
    let qualified: Vec<String> = columns
        .iter()
        .map(|(nm, b)| format!("{}:{nm}", b.as_str()))
        .collect();
    let fit = fit_ols_named(&x, bias, Some(&qualified))?;
    let vcov = fit.vcov.clone().expect("ols fits carry vcov");
    let sigma2 = fit.residual_variance.expect("ols fits carry sigma2");
    let df = n - p - 1;
    let tq = StudentsT::new(0.0, 1.0, df as f64)
        .map_err(|e| Error::config(e.to_string()))?
        .inverse_cdf(0.975);
    let estimates: Vec<f64> = std::iter::once(fit.intercept)
        .chain(fit.coefficients.iter().copied())
        .collect();
    let all_cols: Vec<(String, Block)> =
        std::iter::once(("intercept".to_string(), Block::Intercept))
            .chain(columns)
            .collect();
    let coefs: Vec<Coefficient> = all_cols
        .iter()
        .zip(&estimates)
        .enumerate()
        .map(|(j, ((name, block), &est))| {
            let se = vcov[(j, j)].max(0.0).sqrt();
            Coefficient {
                name: name.clone(),
                block: *block,
                estimate: est,
                std_error: se,
                t: if se > 0.0 { est / se } else { f64::NAN },
                ci_low: est - tq * se,
                ci_high: est + tq * se,
            }
        })
        .collect();
    let scores = fit.scores(&x)?;
    let residuals = bias.iter().zip(&scores).map(|(b, s)| b - s).collect();
    let of = |blk: Block| {
        coefs
            .iter()
            .filter(|c| c.block == blk)
            .cloned()
            .collect::<Vec<_>>()
    };
    Ok(DecompositionFit {
        alpha: coefs[0].clone(),
        beta: of(Block::Feature),
        gamma: of(Block::PredictedLabel),
        delta: of(Block::Demographic),
        sigma2,
        n,
        df,
        columns: all_cols,
        vcov,
        residuals,
        fit: Some(fit),
    })
}

/// Residuals `y - ŷ` regressed on demographic dummies with an intercept.
pub fn residual_regression(
    y_true: &[f64],
    y_pred: &[f64],
    demographics: &DMatrix<f64>,
    names: &[String],
) -> Result<DecompositionFit> {
    if y_true.len() != y_pred.len() {
        return Err(Error::shape("y_true and y_pred differ in length"));
    }
    let resid: Vec<f64> = y_true.iter().zip(y_pred).map(|(a, b)| a - b).collect();
    bias_decomposition(
        &resid,
        &[DesignBlock {
            block: Block::Demographic,
            matrix: demographics,
            names,
        }],
    )
}

/// Cell-level entry point: one observation per usable `(label, group)` cell
/// of `table`, the cell value being the bias. Label dummies (first label
/// dropped) form the predicted-label block; the levels of each attribute in
/// the group key (split on `|`, first observed level dropped) form the
/// demographic block.
pub fn cell_bias_decomposition(
    table: &MetricTable,
    attributes: &[String],
    include_flagged: bool,
) -> Result<DecompositionFit> {
    let mut obs: Vec<(usize, Vec<&str>, f64)> = Vec::new();
    for (k, row) in table.cells.iter().enumerate() {
        for (g, cell) in row.iter().enumerate() {
            if let Some(v) = cell.usable(include_flagged) {
                let key: Vec<&str> = table.groups[g].split('|').collect();
                if key.len() != attributes.len() {
                    return Err(Error::shape(format!(
                        "group {:?} does not have {} levels",
                        table.groups[g],
                        attributes.len()
                    )));
                }
                obs.push((k, key, v));
            }
        }
    }
    let n = obs.len();
    let mut seen_labels: Vec<usize> = obs.iter().map(|o| o.0).collect();
    seen_labels.sort_unstable();
    seen_labels.dedup();
    let label_names: Vec<String> = seen_labels[1.min(seen_labels.len())..]
        .iter()
        .map(|&k| table.labels[k].clone())
        .collect();
    let labels = DMatrix::from_fn(n, label_names.len(), |i, j| {
        (obs[i].0 == seen_labels[j + 1]) as u8 as f64
    });
    let mut demo_names = Vec::new();
    let mut demo_of: Vec<(usize, String)> = Vec::new();
    for (a, attr) in attributes.iter().enumerate() {
        let mut levels: Vec<&str> = Vec::new();
        for o in &obs {
            if !levels.contains(&o.1[a]) {
                levels.push(o.1[a]);
            }
        }
        for l in levels.iter().skip(1) {
            demo_names.push(format!("{attr}={l}"));
            demo_of.push((a, l.to_string()));
        }
    }
    let demo = DMatrix::from_fn(n, demo_names.len(), |i, j| {
        let (a, level) = &demo_of[j];
        (obs[i].1[*a] == level) as u8 as f64
    });
    let bias: Vec<f64> = obs.iter().map(|o| o.2).collect();
    bias_decomposition(
        &bias,
        &[
            DesignBlock {
                block: Block::PredictedLabel,
                matrix: &labels,
                names: &label_names,
            },
            DesignBlock {
                block: Block::Demographic,
                matrix: &demo,
                names: &demo_names,
            },
        ],
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedPair {
    pub a: String,
    pub b: String,
    pub covariance: f64,
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VcovReport {
    /// `block:name`, intercept first.
    pub labels: Vec<String>,
    pub covariance: Vec<Vec<f64>>,
    pub correlation: Vec<Vec<f64>>,
    pub threshold: f64,
    /// Coefficient pairs with `|correlation| > threshold`.
    pub flagged: Vec<FlaggedPair>,
}

/// Labeled coefficient covariance with its correlation form; pairs above
/// `threshold` in absolute correlation point to multicollinearity.
pub fn coef_vcov_report(fit: &DecompositionFit, threshold: f64) -> VcovReport {
    let v = &fit.vcov;
    let m = v.nrows();
    let labels: Vec<String> = fit
        .columns
        .iter()
        .map(|(nm, b)| format!("{}:{nm}", b.as_str()))
        .collect();
    let corr = DMatrix::from_fn(m, m, |i, j| {
        let d = (v[(i, i)] * v[(j, j)]).sqrt();
        if i == j {
            1.0
        } else if d > 0.0 {
            v[(i, j)] / d
        } else {
            0.0
        }
    });
    let mut flagged = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            if corr[(i, j)].abs() > threshold {
                flagged.push(FlaggedPair {
                    a: labels[i].clone(),
                    b: labels[j].clone(),
                    covariance: v[(i, j)],
                    correlation: corr[(i, j)],
                });
            }
        }
    }
    VcovReport {
        covariance: matrix_rows::to_rows(v),
        correlation: matrix_rows::to_rows(&corr),
        labels,
        threshold,
        flagged,
    }
}

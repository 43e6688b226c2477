use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_logistic, fit_multitask_lasso, FitKind, LassoConfig, LinearFit, LogisticConfig};
use crate::dataset::{hstack, Dataset, OneHotEncoding};
use crate::error::{Error, Result};

pub const MODEL_VERSION: &str = "1.0";

/// One-vs-rest model: one independent linear fit per label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLabelModel {
    pub model_version: String,
    pub fits: Vec<LinearFit>,
    pub label_names: Vec<String>,
    /// Input columns in order: features, then `attribute=level` dummies.
    pub input_names: Vec<String>,
    pub n_features: usize,
    /// Whether protected attributes were model inputs.
    pub include_protected: bool,
    pub encoding: Option<OneHotEncoding>,
}

impl MultiLabelModel {
    pub fn design(&self, ds: &Dataset) -> Result<DMatrix<f64>> {
        if ds.n_features() != self.n_features {
            return Err(Error::shape(format!(
                "model expects {} features, dataset has {}",
                self.n_features,
                ds.n_features()
            )));
        }
        match &self.encoding {
            Some(enc) => Ok(hstack(ds.features(), &enc.transform(ds)?)),
            None => Ok(ds.features().clone()),
        }
    }

    /// `n × K` scores: probabilities for logistic fits, predictions for
    /// regression fits.
    pub fn predict_scores(&self, ds: &Dataset) -> Result<DMatrix<f64>> {
        let x = self.design(ds)?;
        let mut out = DMatrix::zeros(x.nrows(), self.fits.len());
        for (k, fit) in self.fits.iter().enumerate() {
            let col = match fit.kind {
                FitKind::Logistic => fit.predict_proba(&x)?,
                _ => fit.scores(&x)?,
            };
            out.column_mut(k).copy_from_slice(&col);
        }
        Ok(out)
    }

    /// Binary decisions `proba >= threshold`.
    pub fn predict(&self, ds: &Dataset, threshold: f64) -> Result<DMatrix<f64>> {
        Ok(self
            .predict_scores(ds)?
            .map(|p| if p >= threshold { 1.0 } else { 0.0 }))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: MultiLabelModel = serde_json::from_str(text)?;
        let width = model.input_names.len();
        if model.fits.iter().any(|f| f.n_inputs() != width) {
            return Err(Error::shape("fits disagree on input width"));
        }
        Ok(model)
    }
}

fn inputs(
    ds: &Dataset,
    include_protected: bool,
) -> Result<(DMatrix<f64>, Vec<String>, Option<OneHotEncoding>)> {
    let mut names = ds.feature_names().to_vec();
    if include_protected {
        let enc = OneHotEncoding::new(ds, &ds.attribute_names())?;
        names.extend(enc.column_names());
        Ok((hstack(ds.features(), &enc.transform(ds)?), names, Some(enc)))
    } else {
        Ok((ds.features().clone(), names, None))
    }
}

/// Trains one logistic regression per label. With `include_protected`,
/// every protected attribute enters as dummies with its first level dropped.
pub fn fit_multilabel(
    ds: &Dataset,
    cfg: &LogisticConfig,
    include_protected: bool,
) -> Result<MultiLabelModel> {
    if !ds.task().is_classification() {
        return Err(Error::config(
            "fit_multilabel needs a classification dataset",
        ));
    }
    let (x, input_names, encoding) = inputs(ds, include_protected)?;
    let fits = (0..ds.n_labels())
        .into_par_iter()
        .map(|k| {
            fit_logistic(&x, &ds.label(k), cfg).map_err(|e| Error::Label {
                label: k,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiLabelModel {
        model_version: MODEL_VERSION.to_string(),
        fits,
        label_names: ds.label_names().to_vec(),
        input_names,
        n_features: ds.n_features(),
        include_protected,
        encoding,
    })
}

/// Multi-task lasso over all spend labels (shared feature support).
pub fn fit_multilabel_regression(
    ds: &Dataset,
    lambda: f64,
    cfg: &LassoConfig,
    include_protected: bool,
) -> Result<MultiLabelModel> {
    let (x, input_names, encoding) = inputs(ds, include_protected)?;
    let fits = fit_multitask_lasso(&x, ds.targets(), lambda, cfg)?;
    Ok(MultiLabelModel {
        model_version: MODEL_VERSION.to_string(),
        fits,
        label_names: ds.label_names().to_vec(),
        input_names,
        n_features: ds.n_features(),
        include_protected,
        encoding,
    })
}

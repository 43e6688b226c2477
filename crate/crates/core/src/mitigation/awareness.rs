use serde::{Deserialize, Serialize};

use crate::dataset::{derive_intersections, split_indices, Dataset, DEFAULT_MIN_SUPPORT};
use crate::error::{Error, Result};
use crate::learners::{fit_multilabel, LogisticConfig, MultiLabelModel};
use crate::metrics::{confusion_named, metric_table, Cell, MetricId, MetricTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AwarenessConfig {
    pub learner: LogisticConfig,
    pub holdout_fraction: f64,
    pub seed: u64,
    pub threshold: f64,
    /// Attributes whose joint levels define the recall-grid groups; all
    /// protected attributes when empty.
    pub attrs: Vec<String>,
    pub min_support: usize,
}

impl Default for AwarenessConfig {
    fn default() -> Self {
        AwarenessConfig {
            learner: LogisticConfig {
                l2: 1e-3,
                ..LogisticConfig::default()
            },
            holdout_fraction: 0.3,
            seed: 42,
            threshold: 0.5,
            attrs: Vec::new(),
            min_support: DEFAULT_MIN_SUPPORT,
        }
    }
}

/// Held-out comparison of a model trained without the protected attributes
/// against one trained with them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AwarenessComparison {
    pub labels: Vec<String>,
    pub metrics: Vec<MetricId>,
    /// `unaware[k][m]`: pooled held-out metric of the unaware model.
    pub unaware: Vec<Vec<Cell>>,
    pub aware: Vec<Vec<Cell>>,
    /// `unaware - aware`; undefined where either side is.
    pub difference: Vec<Vec<Cell>>,
    pub recall_unaware: MetricTable,
    pub recall_aware: MetricTable,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
}

impl AwarenessComparison {
    pub fn shape(&self) -> (usize, usize) {
        (self.difference.len(), self.metrics.len())
    }

    pub fn difference_of(&self, label: usize, metric: MetricId) -> Option<f64> {
        let m = self.metrics.iter().position(|&x| x == metric)?;
        self.difference.get(label)?[m].value
    }

    /// One row per label, one column per metric, as in a printed table.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["label".to_string()];
        header.extend(self.metrics.iter().map(|m| m.as_str().to_string()));
        w.write_record(&header)?;
        for (k, row) in self.difference.iter().enumerate() {
            let mut rec = vec![self.labels[k].clone()];
            rec.extend(
                row.iter()
                    .map(|c| c.value.map(|v| v.to_string()).unwrap_or_default()),
            );
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn pooled_row(
    test: &Dataset,
    preds: &nalgebra::DMatrix<f64>,
    idx: &crate::dataset::IntersectionIndex,
    metrics: &[MetricId],
) -> Result<Vec<Vec<Cell>>> {
    let counts = confusion_named(test.targets(), preds, idx, test.label_names())?;
    Ok((0..test.n_labels())
        .map(|k| {
            let pooled = counts.pooled(k);
            metrics.iter().map(|&m| pooled.metric(m)).collect()
        })
        .collect())
}

/// Fits the multi-label learner twice on the same split, once without and
/// once with the protected attributes as inputs, and reports held-out
/// metrics for both.
pub fn awareness_comparison(ds: &Dataset, cfg: &AwarenessConfig) -> Result<AwarenessComparison> {
    if !ds.task().is_classification() {
        return Err(Error::config(
            "awareness comparison needs a classification dataset",
        ));
    }
    let attrs = if cfg.attrs.is_empty() {
        ds.attribute_names()
    } else {
        cfg.attrs.clone()
    };
    let (train, test) = split_indices(ds.n_rows(), cfg.holdout_fraction, cfg.seed, None)?;
    let (train, test) = (ds.select_rows(&train), ds.select_rows(&test));
    let unaware = fit_multilabel(&train, &cfg.learner, false)?;
    let aware = fit_multilabel(&train, &cfg.learner, true)?;
    let idx = derive_intersections(&test, &attrs, cfg.min_support)?;
    let metrics = MetricId::TABLE.to_vec();
    let evaluate = |model: &MultiLabelModel| -> Result<(Vec<Vec<Cell>>, MetricTable)> {
        let preds = model.predict(&test, cfg.threshold)?;
        let rows = pooled_row(&test, &preds, &idx, &metrics)?;
        let recall = metric_table(
            test.targets(),
            &preds,
            &idx,
            MetricId::RecallTpr,
            test.label_names(),
        )?;
        Ok((rows, recall))
    };
    let (u_rows, recall_unaware) = evaluate(&unaware)?;
    let (a_rows, recall_aware) = evaluate(&aware)?;
    let difference = u_rows
        .iter()
        .zip(&a_rows)
        .map(|(u, a)| {
            u.iter()
                .zip(a)
                .map(|(u, a)| match (u.value, a.value) {
                    (Some(u), Some(a)) => Cell::ok(u - a),
                    _ => Cell::undefined(),
                })
                .collect()
        })
        .collect();
    Ok(AwarenessComparison {
        labels: ds.label_names().to_vec(),
        metrics,
        unaware: u_rows,
        aware: a_rows,
        difference,
        recall_unaware,
        recall_aware,
        seed: cfg.seed,
        n_train: train.n_rows(),
        n_test: test.n_rows(),
    })
}

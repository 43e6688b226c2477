use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_shapes, default_label_names, Cell, MetricId, MetricTable};
use crate::dataset::IntersectionIndex;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    fn add(&mut self, o: &Counts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.tn += o.tn;
        self.fn_ += o.fn_;
    }

    pub fn metric(&self, metric: MetricId) -> Cell {
        let (tp, fp, tn, fn_) = (
            self.tp as f64,
            self.fp as f64,
            self.tn as f64,
            self.fn_ as f64,
        );
        let n = tp + fp + tn + fn_;
        match metric {
            MetricId::SelectionRate => Cell::ratio(tp + fp, n),
            MetricId::Accuracy => Cell::ratio(tp + tn, n),
            MetricId::Precision | MetricId::Ppv => Cell::ratio(tp, tp + fp),
            MetricId::RecallTpr => Cell::ratio(tp, tp + fn_),
            MetricId::Fpr => Cell::ratio(fp, fp + tn),
            MetricId::Fnr => Cell::ratio(fn_, tp + fn_),
            MetricId::OverallError => Cell::ratio(fp + fn_, n),
            MetricId::Npv => Cell::ratio(tn, tn + fn_),
            MetricId::F1 => {
                match (
                    Cell::ratio(tp, tp + fp).value,
                    Cell::ratio(tp, tp + fn_).value,
                ) {
                    (Some(p), Some(r)) => Cell::ratio(2.0 * p * r, p + r),
                    _ => Cell::undefined(),
                }
            }
            _ => unreachable!("regression metric on confusion counts"),
        }
    }
}

/// Confusion counts per `(label, group)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub labels: Vec<String>,
    pub groups: Vec<String>,
    pub flagged: Vec<bool>,
    /// `counts[k][g]`.
    pub counts: Vec<Vec<Counts>>,
}

impl ConfusionCounts {
    pub fn get(&self, label: usize, group: usize) -> Counts {
        self.counts[label][group]
    }

    /// Counts summed over all groups for one label.
    pub fn pooled(&self, label: usize) -> Counts {
        let mut acc = Counts::default();
        for c in &self.counts[label] {
            acc.add(c);
        }
        acc
    }
}

pub fn confusion(
    targets: &DMatrix<f64>,
    preds: &DMatrix<f64>,
    idx: &IntersectionIndex,
) -> Result<ConfusionCounts> {
    confusion_named(targets, preds, idx, &default_label_names(targets.ncols()))
}

/// Tabulates binary predictions against binary targets. Both must hold only
/// 0 and 1.
pub fn confusion_named(
    targets: &DMatrix<f64>,
    preds: &DMatrix<f64>,
    idx: &IntersectionIndex,
    label_names: &[String],
) -> Result<ConfusionCounts> {
    check_shapes(targets, preds, idx, label_names)?;
    let binary = |v: f64| v == 0.0 || v == 1.0;
    if let Some(v) = preds.iter().find(|&&v| !binary(v)) {
        return Err(Error::config(format!("predictions must be 0/1, found {v}")));
    }
    if let Some(v) = targets.iter().find(|&&v| !binary(v)) {
        return Err(Error::config(format!("targets must be 0/1, found {v}")));
    }
    let mut counts = vec![vec![Counts::default(); idx.n_groups()]; targets.ncols()];
    for (k, row) in counts.iter_mut().enumerate() {
        let (t, p) = (targets.column(k), preds.column(k));
        for i in 0..targets.nrows() {
            let c = &mut row[idx.group_of(i)];
            match (t[i] == 1.0, p[i] == 1.0) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
    }
    Ok(ConfusionCounts {
        labels: label_names.to_vec(),
        groups: idx.group_names(),
        flagged: idx.flags().to_vec(),
        counts,
    })
}

pub fn classification_metric(counts: &ConfusionCounts, metric: MetricId) -> Result<MetricTable> {
    if !metric.is_classification() {
        return Err(Error::config(format!(
            "{metric} is not a classification metric"
        )));
    }
    let sizes = counts.counts.first().map_or_else(Vec::new, |row| {
        row.iter().map(|c| c.total() as usize).collect()
    });
    let cells = counts
        .counts
        .iter()
        .map(|row| {
            row.iter()
                .zip(&counts.flagged)
                .map(|(c, &flag)| {
                    let mut cell = c.metric(metric);
                    if flag && cell.value.is_some() {
                        cell.status = super::CellStatus::BelowMinSupport;
                    }
                    cell
                })
                .collect()
        })
        .collect();
    Ok(MetricTable {
        metric,
        labels: counts.labels.clone(),
        groups: counts.groups.clone(),
        group_sizes: sizes,
        cells,
    })
}

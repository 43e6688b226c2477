//! Per-(label, group) metrics, fairness gaps, disparity and calibration.
//!
//! Cells whose formula has a zero denominator are undefined and say so; they
//! are never silently replaced by 0 or 1.

mod calibration;
mod classification;
mod gaps;
mod regression;

pub use calibration::{calibration_by_group, CalibrationBin, CalibrationTable, DEFAULT_BINS};
pub use classification::{
    classification_metric, confusion, confusion_named, ConfusionCounts, Counts,
};
pub use gaps::{disparity, fairness_gap, Disparity, GapMode, GapVector, Reference};
pub use regression::{regression_group_metrics, regression_metric};

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::IntersectionIndex;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    SelectionRate,
    Accuracy,
    Precision,
    #[serde(alias = "recall", alias = "tpr")]
    RecallTpr,
    Fpr,
    Fnr,
    F1,
    #[serde(alias = "error")]
    OverallError,
    Ppv,
    Npv,
    Mse,
    Mae,
    Rmse,
    R2,
    ExplainedVariance,
}

impl MetricId {
    pub const CLASSIFICATION: [MetricId; 10] = [
        MetricId::SelectionRate,
        MetricId::Accuracy,
        MetricId::Precision,
        MetricId::RecallTpr,
        MetricId::Fpr,
        MetricId::Fnr,
        MetricId::F1,
        MetricId::OverallError,
        MetricId::Ppv,
        MetricId::Npv,
    ];

    pub const REGRESSION: [MetricId; 5] = [
        MetricId::Mse,
        MetricId::Mae,
        MetricId::Rmse,
        MetricId::R2,
        MetricId::ExplainedVariance,
    ];

    /// The seven columns of the standard per-label comparison table.
    pub const TABLE: [MetricId; 7] = [
        MetricId::SelectionRate,
        MetricId::Accuracy,
        MetricId::Precision,
        MetricId::Fpr,
        MetricId::RecallTpr,
        MetricId::Fnr,
        MetricId::F1,
    ];

    pub fn is_classification(self) -> bool {
        Self::CLASSIFICATION.contains(&self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::SelectionRate => "selection_rate",
            MetricId::Accuracy => "accuracy",
            MetricId::Precision => "precision",
            MetricId::RecallTpr => "recall_tpr",
            MetricId::Fpr => "fpr",
            MetricId::Fnr => "fnr",
            MetricId::F1 => "f1",
            MetricId::OverallError => "overall_error",
            MetricId::Ppv => "ppv",
            MetricId::Npv => "npv",
            MetricId::Mse => "mse",
            MetricId::Mae => "mae",
            MetricId::Rmse => "rmse",
            MetricId::R2 => "r2",
            MetricId::ExplainedVariance => "explained_variance",
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let id = match s.as_str() {
            "recall" | "tpr" => MetricId::RecallTpr,
            "error" => MetricId::OverallError,
            _ => Self::CLASSIFICATION
                .iter()
                .chain(Self::REGRESSION.iter())
                .copied()
                .find(|m| m.as_str() == s)
                .ok_or_else(|| Error::config(format!("unknown metric {s:?}")))?,
        };
        Ok(id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    ZeroDenominator,
    /// The value is computed but the group is smaller than `min_support`;
    /// such cells are left out of disparities unless asked for.
    BelowMinSupport,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::ZeroDenominator => "zero_denominator",
            CellStatus::BelowMinSupport => "below_min_support",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub value: Option<f64>,
    pub status: CellStatus,
}

impl Cell {
    pub fn ok(v: f64) -> Self {
        Cell {
            value: Some(v),
            status: CellStatus::Ok,
        }
    }

    pub fn undefined() -> Self {
        Cell {
            value: None,
            status: CellStatus::ZeroDenominator,
        }
    }

    /// `num / den`, undefined when `den == 0`.
    pub fn ratio(num: f64, den: f64) -> Self {
        if den == 0.0 {
            Cell::undefined()
        } else {
            Cell::ok(num / den)
        }
    }

    /// Value usable for comparisons; `include_flagged` admits small groups.
    pub fn usable(&self, include_flagged: bool) -> Option<f64> {
        match self.status {
            CellStatus::Ok => self.value,
            CellStatus::BelowMinSupport if include_flagged => self.value,
            _ => None,
        }
    }
}

/// Values of one metric on a `(label × group)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub metric: MetricId,
    pub labels: Vec<String>,
    pub groups: Vec<String>,
    pub group_sizes: Vec<usize>,
    /// `cells[k][g]`.
    pub cells: Vec<Vec<Cell>>,
}

impl MetricTable {
    pub(crate) fn build(
        metric: MetricId,
        labels: Vec<String>,
        idx: &IntersectionIndex,
        mut f: impl FnMut(usize, usize) -> Cell,
    ) -> Self {
        let cells = (0..labels.len())
            .map(|k| {
                (0..idx.n_groups())
                    .map(|g| {
                        let mut c = f(k, g);
                        if idx.is_flagged(g) && c.status == CellStatus::Ok {
                            c.status = CellStatus::BelowMinSupport;
                        }
                        c
                    })
                    .collect()
            })
            .collect();
        MetricTable {
            metric,
            labels,
            groups: idx.group_names(),
            group_sizes: idx.sizes(),
            cells,
        }
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn cell(&self, label: usize, group: usize) -> Cell {
        self.cells[label][group]
    }

    pub fn value(&self, label: usize, group: usize) -> Option<f64> {
        self.cells[label][group].value
    }

    pub fn label_index(&self, name: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == name)
            .or_else(|| {
                name.parse::<usize>()
                    .ok()
                    .filter(|&k| k < self.labels.len())
            })
            .ok_or_else(|| Error::config(format!("no label {name:?} in table")))
    }

    pub fn group_index(&self, name: &str) -> Result<usize> {
        self.groups
            .iter()
            .position(|g| g == name)
            .ok_or_else(|| Error::UnknownGroup(name.to_string()))
    }

    /// Appends long-form rows `metric,label,group,value,status`.
    pub fn write_csv_rows<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        for (k, label) in self.labels.iter().enumerate() {
            for (g, group) in self.groups.iter().enumerate() {
                let c = self.cells[k][g];
                let value = c.value.map(|v| v.to_string()).unwrap_or_default();
                w.write_record([
                    self.metric.as_str(),
                    label,
                    group,
                    &value,
                    c.status.as_str(),
                ])?;
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        tables_to_csv(std::slice::from_ref(self))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Long-form CSV of several tables under one header.
pub fn tables_to_csv(tables: &[MetricTable]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "label", "group", "value", "status"])?;
    for t in tables {
        t.write_csv_rows(&mut w)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One metric from targets and predictions, dispatching on the metric kind.
/// Classification metrics need binary `preds`; regression metrics take real
/// predictions.
pub fn metric_table(
    targets: &DMatrix<f64>,
    preds: &DMatrix<f64>,
    idx: &IntersectionIndex,
    metric: MetricId,
    label_names: &[String],
) -> Result<MetricTable> {
    if metric.is_classification() {
        let counts = confusion_named(targets, preds, idx, label_names)?;
        classification_metric(&counts, metric)
    } else {
        regression_metric(targets, preds, idx, metric, label_names)
    }
}

pub(crate) fn default_label_names(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("label_{i}")).collect()
}

pub(crate) fn check_shapes(
    targets: &DMatrix<f64>,
    preds: &DMatrix<f64>,
    idx: &IntersectionIndex,
    names: &[String],
) -> Result<()> {
    if targets.shape() != preds.shape() {
        return Err(Error::shape(format!(
            "targets are {:?} but predictions are {:?}",
            targets.shape(),
            preds.shape()
        )));
    }
    if targets.nrows() != idx.n_rows() {
        return Err(Error::shape(format!(
            "{} rows but the group index covers {}",
            targets.nrows(),
            idx.n_rows()
        )));
    }
    if names.len() != targets.ncols() {
        return Err(Error::shape("label names do not match label count"));
    }
    Ok(())
}

//! The audit report: every measured cell with its coordinates, plus the
//! summaries built on top of them.

use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::AuditConfig;
use crate::dataset::{
    data_quality_report, derive_intersections, Dataset, IntersectionIndex, QualityOptions,
    QualityReport, TaskKind,
};
use crate::error::{Error, Result};
use crate::metrics::{
    calibration_by_group, disparity, metric_table, CalibrationTable, CellStatus, Disparity,
    MetricId, MetricTable,
};
use crate::statistics::{multiclass_attr_test, MulticlassResult};
use crate::tensor::{
    aggregate, apply_weights, build_tensor, Aggregate, BuildMode, FairnessTensor, GroupLabelGrid,
    Scheme, WeightMatrix,
};

pub const REPORT_VERSION: &str = "1.0";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Wall-clock fields, kept apart so that reports can be compared without
/// them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timestamps {
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

/// Pretty JSON of `value` with every `timestamps` field removed, at any
/// depth.
pub fn json_without_timestamps<T: Serialize>(value: &T) -> Result<String> {
    fn strip(v: &mut serde_json::Value) {
        match v {
            serde_json::Value::Object(map) => {
                map.remove("timestamps");
                map.values_mut().for_each(strip);
            }
            serde_json::Value::Array(items) => items.iter_mut().for_each(strip),
            _ => {}
        }
    }
    let mut v = serde_json::to_value(value)?;
    strip(&mut v);
    Ok(serde_json::to_string_pretty(&v)?)
}

/// Name of a unit enum variant as it appears in JSON.
pub(crate) fn variant_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

pub(crate) fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub config_hash: String,
    pub dataset_hash: Option<String>,
    pub model_hash: Option<String>,
    pub task: TaskKind,
    pub attributes: Vec<String>,
    pub n_rows: usize,
    pub n_train: usize,
    pub n_evaluated: usize,
    /// Which rows the measurements come from (`held_out`, `train`, ...).
    pub evaluated_on: String,
    /// Whether the train/held-out split is stratified on the groups; it is
    /// not when some group has a single row.
    pub split_stratified: bool,
    pub engine_version: String,
}

/// One metric value with its full coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub metric: MetricId,
    pub label: String,
    pub group: String,
    pub group_size: usize,
    pub value: Option<f64>,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedDisparity {
    pub metric: MetricId,
    pub label: String,
    pub reason: String,
}

/// A disparity above the configured fail threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breach {
    pub metric: MetricId,
    pub label: String,
    pub value: f64,
    pub threshold: f64,
    pub max_group: String,
    pub max_value: f64,
    pub min_group: String,
    pub min_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSection {
    pub tensor: FairnessTensor,
    pub aggregates: Vec<Aggregate>,
    pub weighted: Option<FairnessTensor>,
    pub weighted_aggregates: Vec<Aggregate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelCalibration {
    pub label: String,
    pub table: CalibrationTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub report_version: String,
    pub command: String,
    pub metadata: RunMetadata,
    pub timestamps: Timestamps,
    /// The effective configuration, flags applied.
    pub config: AuditConfig,
    pub quality: QualityReport,
    pub cells: Vec<CellRecord>,
    pub disparities: Vec<Disparity>,
    pub skipped_disparities: Vec<SkippedDisparity>,
    pub breaches: Vec<Breach>,
    pub tensor: Option<TensorSection>,
    pub tensor_note: Option<String>,
    pub calibration: Vec<LabelCalibration>,
    pub proxy: Vec<MulticlassResult>,
}

impl AuditReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with the timestamp fields removed; identical inputs give
    /// identical bytes.
    pub fn to_json_without_timestamps(&self) -> Result<String> {
        json_without_timestamps(self)
    }

    pub fn exceeds_threshold(&self) -> bool {
        !self.breaches.is_empty()
    }

    /// Rows `metric,label,group,group_size,value,status`.
    pub fn cells_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["metric", "label", "group", "group_size", "value", "status"])?;
        for c in &self.cells {
            w.write_record([
                c.metric.as_str().to_string(),
                c.label.clone(),
                c.group.clone(),
                c.group_size.to_string(),
                c.value.map(|v| v.to_string()).unwrap_or_default(),
                c.status.as_str().to_string(),
            ])?;
        }
        finish(w)
    }

    /// Rows `metric,label,value,max_group,max_value,min_group,min_value,n_groups`.
    pub fn disparities_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "metric",
            "label",
            "value",
            "max_group",
            "max_value",
            "min_group",
            "min_value",
            "n_groups",
        ])?;
        for d in &self.disparities {
            w.write_record([
                d.metric.as_str().to_string(),
                d.label.clone(),
                d.value.to_string(),
                d.max_group.clone(),
                d.max_value.to_string(),
                d.min_group.clone(),
                d.min_value.to_string(),
                d.n_groups.to_string(),
            ])?;
        }
        finish(w)
    }
}

pub(crate) fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub(crate) fn resolve_attrs(ds: &Dataset, attrs: &[String]) -> Result<Vec<String>> {
    if attrs.is_empty() {
        return Ok(ds.attribute_names());
    }
    for a in attrs {
        ds.attribute(a)?;
    }
    Ok(attrs.to_vec())
}

pub(crate) fn metrics_for(ds: &Dataset, requested: &[MetricId]) -> Result<Vec<MetricId>> {
    if requested.is_empty() {
        return Ok(if ds.task().is_classification() {
            MetricId::CLASSIFICATION.to_vec()
        } else {
            MetricId::REGRESSION.to_vec()
        });
    }
    if let Some(m) = requested
        .iter()
        .find(|m| m.is_classification() != ds.task().is_classification())
    {
        return Err(Error::config(format!(
            "metric {m} does not apply to a {:?} dataset",
            ds.task()
        )));
    }
    let mut out = requested.to_vec();
    out.dedup();
    Ok(out)
}

/// What the report is built from: the evaluated rows, their decisions (or
/// spend predictions) and scores.
pub struct Evaluation<'a> {
    pub ds: &'a Dataset,
    pub preds: &'a DMatrix<f64>,
    /// Probabilities for calibration; `None` skips calibration.
    pub scores: Option<&'a DMatrix<f64>>,
    pub evaluated_on: &'a str,
}

/// Provenance shared by every report of one run.
pub struct RunContext<'a> {
    pub full: &'a Dataset,
    pub n_train: usize,
    pub dataset_hash: Option<String>,
    pub model_hash: Option<String>,
    pub command: &'a str,
    pub started_unix_ms: u128,
    pub split_stratified: bool,
}

pub fn build_report(
    eval: &Evaluation<'_>,
    prov: &RunContext<'_>,
    cfg: &AuditConfig,
) -> Result<AuditReport> {
    let ds = eval.ds;
    let attrs = resolve_attrs(ds, &cfg.attrs)?;
    let metrics = metrics_for(ds, &cfg.metrics)?;
    let idx = derive_intersections(ds, &attrs, cfg.min_support)?;
    let quality = data_quality_report(
        prov.full,
        &QualityOptions {
            attrs: Some(attrs.clone()),
            min_support: cfg.min_support,
            ..cfg.quality.clone()
        },
    )?;

    let tables = metrics
        .iter()
        .map(|&m| metric_table(ds.targets(), eval.preds, &idx, m, ds.label_names()))
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    let mut disparities = Vec::new();
    let mut skipped = Vec::new();
    let mut breaches = Vec::new();
    for t in &tables {
        for (k, label) in t.labels.iter().enumerate() {
            for (g, group) in t.groups.iter().enumerate() {
                let c = t.cell(k, g);
                cells.push(CellRecord {
                    metric: t.metric,
                    label: label.clone(),
                    group: group.clone(),
                    group_size: t.group_sizes[g],
                    value: c.value,
                    status: c.status,
                });
            }
            match disparity(t, k, cfg.include_flagged) {
                Ok(d) => {
                    if let Some(th) = cfg.fail_threshold {
                        if d.value > th {
                            breaches.push(Breach {
                                metric: d.metric,
                                label: d.label.clone(),
                                value: d.value,
                                threshold: th,
                                max_group: d.max_group.clone(),
                                max_value: d.max_value,
                                min_group: d.min_group.clone(),
                                min_value: d.min_value,
                            });
                        }
                    }
                    disparities.push(d);
                }
                Err(e) => skipped.push(SkippedDisparity {
                    metric: t.metric,
                    label: label.clone(),
                    reason: e.to_string(),
                }),
            }
        }
    }

    let (tensor, tensor_note) = match tensor_section(ds, eval.preds, &idx, cfg, prov) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let calibration = match (eval.scores, ds.task().is_classification()) {
        (Some(scores), true) => (0..ds.n_labels())
            .map(|k| {
                let p: Vec<f64> = scores.column(k).iter().copied().collect();
                Ok(LabelCalibration {
                    label: ds.label_names()[k].clone(),
                    table: calibration_by_group(&ds.label(k), &p, &idx, cfg.calibration_bins)?,
                })
            })
            .collect::<Result<Vec<_>>>()?,
        _ => Vec::new(),
    };

    let proxy = match &cfg.proxy {
        Some(test) => attrs
            .iter()
            .map(|a| {
                multiclass_attr_test(
                    prov.full.features(),
                    prov.full.attribute(a)?,
                    None,
                    prov.full.feature_names(),
                    &crate::statistics::TwoSampleConfig {
                        seed: cfg.seed,
                        ..test.clone()
                    },
                )
            })
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };

    let config_hash = sha256_hex(&serde_json::to_vec(cfg)?);
    Ok(AuditReport {
        report_version: REPORT_VERSION.to_string(),
        command: prov.command.to_string(),
        metadata: RunMetadata {
            seed: cfg.seed,
            config_hash,
            dataset_hash: prov.dataset_hash.clone(),
            model_hash: prov.model_hash.clone(),
            task: ds.task(),
            attributes: attrs,
            n_rows: prov.full.n_rows(),
            n_train: prov.n_train,
            n_evaluated: ds.n_rows(),
            evaluated_on: eval.evaluated_on.to_string(),
            split_stratified: prov.split_stratified,
            engine_version: env!("CARGO_PKG_VERSION").to_string(),
        },
        timestamps: Timestamps {
            started_unix_ms: prov.started_unix_ms,
            finished_unix_ms: now_ms(),
        },
        config: cfg.clone(),
        quality,
        cells,
        disparities,
        skipped_disparities: skipped,
        breaches,
        tensor,
        tensor_note,
        calibration,
        proxy,
    })
}

fn tensor_section(
    ds: &Dataset,
    preds: &DMatrix<f64>,
    idx: &IntersectionIndex,
    cfg: &AuditConfig,
    prov: &RunContext<'_>,
) -> Result<TensorSection> {
    let metric = cfg
        .tensor_metric
        .unwrap_or(if ds.task().is_classification() {
            MetricId::RecallTpr
        } else {
            MetricId::Mae
        });
    let table: MetricTable = metric_table(ds.targets(), preds, idx, metric, ds.label_names())?;
    let grid = GroupLabelGrid::from_table(&table);
    let tensor = build_tensor(&grid, BuildMode::Masked)?
        .with_provenance(prov.dataset_hash.clone(), prov.model_hash.clone());
    let schemes = [
        Scheme::WeightedMean,
        Scheme::Median,
        Scheme::HarmonicMeanAbs,
        Scheme::MaxAbs,
    ];
    let aggregates = schemes
        .iter()
        .map(|&s| aggregate(&tensor, s, None))
        .collect::<Result<Vec<_>>>()?;
    let (weighted, weighted_aggregates) = match &cfg.weights {
        Some(spec) => {
            let w = WeightMatrix::from_spec(spec, &tensor.groups, &tensor.labels)?;
            let wt = apply_weights(&tensor, &w)?;
            let aggs = schemes
                .iter()
                .map(|&s| aggregate(&wt, s, None))
                .collect::<Result<Vec<_>>>()?;
            (Some(wt), aggs)
        }
        None => (None, Vec::new()),
    };
    Ok(TensorSection {
        tensor,
        aggregates,
        weighted,
        weighted_aggregates,
    })
}

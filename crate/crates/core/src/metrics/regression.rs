use nalgebra::DMatrix;

use super::{check_shapes, Cell, MetricId, MetricTable};
use crate::dataset::IntersectionIndex;
use crate::error::{Error, Result};

fn group_cell(y: &[f64], yhat: &[f64], metric: MetricId) -> Cell {
    let n = y.len() as f64;
    let resid: Vec<f64> = y.iter().zip(yhat).map(|(a, b)| a - b).collect();
    let rss: f64 = resid.iter().map(|r| r * r).sum();
    let mean_y = y.iter().sum::<f64>() / n;
    let tss: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    match metric {
        MetricId::Mse => Cell::ok(rss / n),
        MetricId::Rmse => Cell::ok((rss / n).sqrt()),
        MetricId::Mae => Cell::ok(resid.iter().map(|r| r.abs()).sum::<f64>() / n),
        MetricId::R2 => Cell::ratio(rss, tss)
            .value
            .map_or(Cell::undefined(), |q| Cell::ok(1.0 - q)),
        MetricId::ExplainedVariance => {
            let mean_r = resid.iter().sum::<f64>() / n;
            let var_r: f64 = resid.iter().map(|r| (r - mean_r).powi(2)).sum();
            Cell::ratio(var_r, tss)
                .value
                .map_or(Cell::undefined(), |q| Cell::ok(1.0 - q))
        }
        _ => unreachable!("classification metric on regression outputs"),
    }
}

/// One regression metric per `(label, group)`. `r2` uses the group's own
/// mean for the total sum of squares and is undefined when that is zero.
pub fn regression_metric(
    y_true: &DMatrix<f64>,
    y_pred: &DMatrix<f64>,
    idx: &IntersectionIndex,
    metric: MetricId,
    label_names: &[String],
) -> Result<MetricTable> {
    if metric.is_classification() {
        return Err(Error::config(format!(
            "{metric} is not a regression metric"
        )));
    }
    check_shapes(y_true, y_pred, idx, label_names)?;
    Ok(MetricTable::build(
        metric,
        label_names.to_vec(),
        idx,
        |k, g| {
            let rows = idx.members(g);
            let y: Vec<f64> = rows.iter().map(|&i| y_true[(i, k)]).collect();
            let yhat: Vec<f64> = rows.iter().map(|&i| y_pred[(i, k)]).collect();
            group_cell(&y, &yhat, metric)
        },
    ))
}

/// All five regression metrics, in [`MetricId::REGRESSION`] order.
pub fn regression_group_metrics(
    y_true: &DMatrix<f64>,
    y_pred: &DMatrix<f64>,
    idx: &IntersectionIndex,
    label_names: &[String],
) -> Result<Vec<MetricTable>> {
    MetricId::REGRESSION
        .iter()
        .map(|&m| regression_metric(y_true, y_pred, idx, m, label_names))
        .collect()
}

//! The multi-label fairness tensor `G[l, k1, k2] = g(l, k1) - g(l, k2)`,
//! its stakeholder-weighted variant, and scalar aggregation.

mod aggregate;
mod weights;

pub use aggregate::{aggregate, compare_models, Aggregate, Scheme, TensorComparison};
pub use weights::{apply_weights, Ranking, WeightMatrix, WeightSpec};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, IntersectionIndex};
use crate::error::{Error, Result};
use crate::metrics::{metric_table, Cell, CellStatus, MetricId, MetricTable};

/// Metric values `g[l][k]` for group `l` and label `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupLabelGrid {
    pub metric: MetricId,
    pub groups: Vec<String>,
    pub labels: Vec<String>,
    pub cells: Vec<Vec<Cell>>,
}

impl GroupLabelGrid {
    /// Transposes a `(label × group)` table.
    pub fn from_table(t: &MetricTable) -> Self {
        GroupLabelGrid {
            metric: t.metric,
            groups: t.groups.clone(),
            labels: t.labels.clone(),
            cells: (0..t.n_groups())
                .map(|g| (0..t.n_labels()).map(|k| t.cell(k, g)).collect())
                .collect(),
        }
    }

    /// Builds a grid from plain values (`None` = undefined).
    pub fn from_values(
        metric: MetricId,
        groups: Vec<String>,
        labels: Vec<String>,
        values: &[Vec<Option<f64>>],
    ) -> Result<Self> {
        if values.len() != groups.len() || values.iter().any(|r| r.len() != labels.len()) {
            return Err(Error::shape("grid values do not match groups × labels"));
        }
        let cells = values
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| v.map_or(Cell::undefined(), Cell::ok))
                    .collect()
            })
            .collect();
        Ok(GroupLabelGrid {
            metric,
            groups,
            labels,
            cells,
        })
    }

    pub fn value(&self, l: usize, k: usize) -> Option<f64> {
        self.cells[l][k].value
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }
}

/// `g[l][k]` for every group of `idx` and every label of `ds`. Binary
/// predictions for classification metrics, real ones for regression metrics.
pub fn metric_by_group_and_label(
    ds: &Dataset,
    preds: &DMatrix<f64>,
    idx: &IntersectionIndex,
    metric: MetricId,
) -> Result<GroupLabelGrid> {
    if metric.is_classification() != ds.task().is_classification() {
        return Err(Error::config(format!(
            "metric {metric} does not apply to a {:?} dataset",
            ds.task()
        )));
    }
    let table = metric_table(ds.targets(), preds, idx, metric, ds.label_names())?;
    Ok(GroupLabelGrid::from_table(&table))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BuildMode {
    /// Any undefined grid cell is an error.
    #[default]
    Strict,
    /// Cells touching an undefined grid value are dropped.
    Masked,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset_hash: Option<String>,
    pub model_id: Option<String>,
}

/// An `L × K × K` array with axis labels. `values[l][k1][k2]` is `None` only
/// for masked cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessTensor {
    pub metric: MetricId,
    pub axes: [String; 3],
    pub groups: Vec<String>,
    pub labels: Vec<String>,
    /// Groups whose grid values came from fewer than `min_support` rows.
    pub flagged_groups: Vec<String>,
    pub weighted: bool,
    pub provenance: Provenance,
    pub values: Vec<Vec<Vec<Option<f64>>>>,
}

impl FairnessTensor {
    pub fn shape(&self) -> (usize, usize) {
        (self.groups.len(), self.labels.len())
    }

    pub fn get(&self, l: usize, k1: usize, k2: usize) -> Option<f64> {
        self.values[l][k1][k2]
    }

    /// A tensor of the given shape from raw values, mainly for tests.
    pub fn from_fn(
        metric: MetricId,
        groups: Vec<String>,
        labels: Vec<String>,
        mut f: impl FnMut(usize, usize, usize) -> Option<f64>,
    ) -> Self {
        let (l_n, k_n) = (groups.len(), labels.len());
        let values = (0..l_n)
            .map(|l| {
                (0..k_n)
                    .map(|a| (0..k_n).map(|b| f(l, a, b)).collect())
                    .collect()
            })
            .collect();
        FairnessTensor {
            metric,
            axes: axes(),
            groups,
            labels,
            flagged_groups: Vec::new(),
            weighted: false,
            provenance: Provenance::default(),
            values,
        }
    }

    /// Index triples `(l, k1, k2)` with `k1 < k2`, in row-major order.
    pub fn upper_cells(&self) -> Vec<(usize, usize, usize)> {
        let (l_n, k_n) = self.shape();
        let mut out = Vec::new();
        for l in 0..l_n {
            for a in 0..k_n {
                for b in a + 1..k_n {
                    out.push((l, a, b));
                }
            }
        }
        out
    }

    /// Fraction of upper-triangle cells that are defined.
    pub fn coverage(&self) -> f64 {
        let cells = self.upper_cells();
        if cells.is_empty() {
            return 1.0;
        }
        let defined = cells
            .iter()
            .filter(|&&(l, a, b)| self.get(l, a, b).is_some())
            .count();
        defined as f64 / cells.len() as f64
    }

    /// Largest `|G[l,k1,k2] + G[l,k2,k1]|` and `|G[l,k,k]|` over defined cells.
    pub fn antisymmetry_error(&self) -> f64 {
        let (l_n, k_n) = self.shape();
        let mut worst: f64 = 0.0;
        for l in 0..l_n {
            for a in 0..k_n {
                for b in 0..k_n {
                    if let (Some(x), Some(y)) = (self.get(l, a, b), self.get(l, b, a)) {
                        worst = worst.max((x + y).abs());
                    }
                }
            }
        }
        worst
    }

    pub fn with_provenance(
        mut self,
        dataset_hash: Option<String>,
        model_id: Option<String>,
    ) -> Self {
        self.provenance = Provenance {
            dataset_hash,
            model_id,
        };
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: FairnessTensor = serde_json::from_str(text)?;
        let (l_n, k_n) = t.shape();
        if t.values.len() != l_n
            || t.values.iter().flatten().any(|r| r.len() != k_n)
            || t.values.iter().any(|m| m.len() != k_n)
        {
            return Err(Error::shape("tensor values do not match axis labels"));
        }
        Ok(t)
    }

    /// Flat CSV `l,k1,k2,value`; masked cells have an empty value.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["l", "k1", "k2", "value"])?;
        for (l, m) in self.values.iter().enumerate() {
            for (a, row) in m.iter().enumerate() {
                for (b, v) in row.iter().enumerate() {
                    let v = v.map(|v| v.to_string()).unwrap_or_default();
                    w.write_record([l.to_string(), a.to_string(), b.to_string(), v])?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn axes() -> [String; 3] {
    ["group".into(), "label".into(), "label".into()]
}

/// `G[l,k1,k2] = g[l,k1] - g[l,k2]`.
pub fn build_tensor(grid: &GroupLabelGrid, mode: BuildMode) -> Result<FairnessTensor> {
    if mode == BuildMode::Strict {
        let missing: Vec<String> = grid
            .cells
            .iter()
            .enumerate()
            .flat_map(|(l, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, c)| c.value.is_none())
                    .map(move |(k, _)| format!("({}, {})", grid.groups[l], grid.labels[k]))
            })
            .collect();
        if !missing.is_empty() {
            return Err(Error::UndefinedCells(missing.join(", ")));
        }
    }
    let mut t = FairnessTensor::from_fn(
        grid.metric,
        grid.groups.clone(),
        grid.labels.clone(),
        |l, a, b| match (grid.value(l, a), grid.value(l, b)) {
            (Some(x), Some(y)) => Some(x - y),
            _ => None,
        },
    );
    t.flagged_groups = grid
        .cells
        .iter()
        .zip(&grid.groups)
        .filter(|(row, _)| row.iter().any(|c| c.status == CellStatus::BelowMinSupport))
        .map(|(_, g)| g.clone())
        .collect();
    Ok(t)
}

/// `g[l0,k] - g[l,k]` for every `l != l0`, in group order.
pub fn pairwise_group_vector(
    grid: &GroupLabelGrid,
    label: usize,
    reference: usize,
) -> Result<Vec<(String, f64)>> {
    if label >= grid.n_labels() || reference >= grid.n_groups() {
        return Err(Error::config("label or reference group out of range"));
    }
    let undefined =
        |l: usize| Error::UndefinedCells(format!("({}, {})", grid.groups[l], grid.labels[label]));
    let r = grid
        .value(reference, label)
        .ok_or_else(|| undefined(reference))?;
    (0..grid.n_groups())
        .filter(|&l| l != reference)
        .map(|l| {
            let v = grid.value(l, label).ok_or_else(|| undefined(l))?;
            Ok((grid.groups[l].clone(), r - v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    pub(crate) fn grid(values: &[Vec<Option<f64>>]) -> GroupLabelGrid {
        GroupLabelGrid::from_values(
            MetricId::Accuracy,
            names("g", values.len()),
            names("y", values[0].len()),
            values,
        )
        .unwrap()
    }

    #[test]
    fn constant_grid_gives_zero_tensor() {
        let t = build_tensor(&grid(&vec![vec![Some(0.4); 3]; 2]), BuildMode::Strict).unwrap();
        assert!(t.values.iter().flatten().flatten().all(|v| *v == Some(0.0)));
    }

    #[test]
    fn two_labels() {
        let t = build_tensor(&grid(&[vec![Some(0.8), Some(0.5)]]), BuildMode::Strict).unwrap();
        assert!((t.get(0, 0, 1).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(t.get(0, 1, 0).unwrap(), -t.get(0, 0, 1).unwrap());
        assert_eq!(t.get(0, 0, 0), Some(0.0));
    }

    #[test]
    fn single_label_tensor() {
        let t = build_tensor(
            &grid(&[vec![Some(0.8)], vec![Some(0.1)]]),
            BuildMode::Strict,
        )
        .unwrap();
        assert_eq!(t.values, vec![vec![vec![Some(0.0)]]; 2]);
    }

    #[test]
    fn strict_lists_undefined_cells() {
        let g = grid(&[vec![Some(0.8), None], vec![Some(0.1), Some(0.2)]]);
        match build_tensor(&g, BuildMode::Strict).unwrap_err() {
            Error::UndefinedCells(msg) => assert_eq!(msg, "(g0, y1)"),
            e => panic!("{e}"),
        }
        let t = build_tensor(&g, BuildMode::Masked).unwrap();
        assert_eq!(t.get(0, 0, 1), None);
        assert_eq!(t.coverage(), 0.5);
    }

    #[test]
    fn group_vector() {
        let g = grid(&[vec![Some(0.9)], vec![Some(0.8)], vec![Some(0.6)]]);
        let v = pairwise_group_vector(&g, 0, 0).unwrap();
        assert_eq!(v.len(), 2);
        assert!((v[0].1 - 0.1).abs() < 1e-15 && (v[1].1 - 0.3).abs() < 1e-15);
        let g = grid(&[vec![Some(0.9)], vec![Some(0.9)]]);
        assert_eq!(
            pairwise_group_vector(&g, 0, 1).unwrap(),
            vec![("g0".to_string(), 0.0)]
        );
    }

    #[test]
    fn json_and_csv() {
        let t = build_tensor(&grid(&[vec![Some(0.8), Some(0.5)]]), BuildMode::Strict)
            .unwrap()
            .with_provenance(Some("abc".into()), None);
        let back = FairnessTensor::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
        let csv = t.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("l,k1,k2,value\n"));
    }
}

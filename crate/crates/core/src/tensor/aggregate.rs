use serde::{Deserialize, Serialize};

use super::FairnessTensor;
use crate::error::{Error, Result};

/// Added to each `|value|` by the harmonic mean so zero cells are finite.
pub const HARMONIC_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    WeightedMean,
    Median,
    HarmonicMeanAbs,
    MaxAbs,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::config(format!("unknown aggregation scheme {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub scheme: Scheme,
    pub value: f64,
    /// Upper-triangle cells that entered the reduction.
    pub n_cells: usize,
    pub coverage: f64,
    /// `(l, k1, k2)` of the largest `|value|` (max_abs only).
    pub argmax: Option<(usize, usize, usize)>,
    pub convention: String,
}

/// Reduces the strict upper triangle (`k1 < k2`) of the label axes to one
/// number. Mean, harmonic and max use `|value|`; the median is taken over
/// signed values. `cell_weights` follows [`FairnessTensor::upper_cells`]
/// order; zero-weight cells are ignored. Masked cells are skipped.
pub fn aggregate(
    t: &FairnessTensor,
    scheme: Scheme,
    cell_weights: Option<&[f64]>,
) -> Result<Aggregate> {
    let cells = t.upper_cells();
    if let Some(w) = cell_weights {
        if w.len() != cells.len() {
            return Err(Error::shape(format!(
                "{} cell weights for {} cells",
                w.len(),
                cells.len()
            )));
        }
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::config("cell weights must be finite and >= 0"));
        }
    }
    let used: Vec<((usize, usize, usize), f64, f64)> = cells
        .iter()
        .enumerate()
        .filter_map(|(i, &c)| {
            let w = cell_weights.map_or(1.0, |w| w[i]);
            let v = t.get(c.0, c.1, c.2)?;
            (w > 0.0).then_some((c, v, w))
        })
        .collect();
    if used.is_empty() {
        return Err(Error::UndefinedCells(
            "tensor has no defined off-diagonal cells to aggregate".into(),
        ));
    }
    let total_w: f64 = used.iter().map(|u| u.2).sum();
    let mut argmax = None;
    let (value, convention) = match scheme {
        Scheme::WeightedMean => (
            used.iter().map(|(_, v, w)| w * v.abs()).sum::<f64>() / total_w,
            "weighted mean of |G|".to_string(),
        ),
        Scheme::HarmonicMeanAbs => {
            let denom: f64 = used
                .iter()
                .map(|(_, v, w)| w / (v.abs() + HARMONIC_EPS))
                .sum();
            (
                (total_w / denom - HARMONIC_EPS).max(0.0),
                format!("weighted harmonic mean of |G| + {HARMONIC_EPS:e}, minus the same"),
            )
        }
        Scheme::MaxAbs => {
            let (c, v, _) =
                used.iter().fold(
                    used[0],
                    |best, u| if u.1.abs() > best.1.abs() { *u } else { best },
                );
            argmax = Some(c);
            (v.abs(), "max of |G|".to_string())
        }
        Scheme::Median => (
            weighted_median(used.iter().map(|u| (u.1, u.2)).collect()),
            "weighted median of signed G over k1 < k2".to_string(),
        ),
    };
    Ok(Aggregate {
        scheme,
        value,
        n_cells: used.len(),
        coverage: t.coverage(),
        argmax,
        convention,
    })
}

/// Median where a point whose cumulative weight lands exactly on half the
/// total is averaged with the next one, so uniform weights give the usual
/// median.
fn weighted_median(mut pts: Vec<(f64, f64)>) -> f64 {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half: f64 = pts.iter().map(|p| p.1).sum::<f64>() / 2.0;
    let mut acc = 0.0;
    for (i, &(v, w)) in pts.iter().enumerate() {
        acc += w;
        if (acc - half).abs() <= 1e-12 * half && i + 1 < pts.len() {
            return 0.5 * (v + pts[i + 1].0);
        }
        if acc > half {
            return v;
        }
    }
    pts.last().unwrap().0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorComparison {
    pub scheme: Scheme,
    /// `tB - tA` per cell.
    pub deltas: Vec<Vec<Vec<Option<f64>>>>,
    pub aggregate_a: f64,
    pub aggregate_b: f64,
    /// `aggregate(tB) - aggregate(tA)`; negative means B is fairer under the
    /// magnitude schemes.
    pub delta: f64,
}

pub fn compare_models(
    a: &FairnessTensor,
    b: &FairnessTensor,
    scheme: Scheme,
) -> Result<TensorComparison> {
    if a.shape() != b.shape() {
        return Err(Error::shape(format!(
            "tensor shapes {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if a.metric != b.metric || a.groups != b.groups || a.labels != b.labels {
        return Err(Error::shape(
            "tensors differ in metric, group order or label order",
        ));
    }
    let deltas = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(ma, mb)| {
            ma.iter()
                .zip(mb)
                .map(|(ra, rb)| {
                    ra.iter()
                        .zip(rb)
                        .map(|(x, y)| Some(y.as_ref()? - x.as_ref()?))
                        .collect()
                })
                .collect()
        })
        .collect();
    let sa = aggregate(a, scheme, None)?.value;
    let sb = aggregate(b, scheme, None)?.value;
    Ok(TensorComparison {
        scheme,
        deltas,
        aggregate_a: sa,
        aggregate_b: sb,
        delta: sb - sa,
    })
}

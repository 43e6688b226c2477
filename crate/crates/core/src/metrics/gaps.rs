use serde::{Deserialize, Serialize};

use super::{Cell, CellStatus, MetricTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GapMode {
    #[default]
    Difference,
    Ratio,
}

/// What each group is compared against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// A named group.
    Group(String),
    /// The group with the largest usable value.
    #[default]
    Maximum,
    /// The group with the most rows.
    LargestGroup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapVector {
    pub metric: super::MetricId,
    pub label: String,
    pub mode: GapMode,
    pub reference_group: String,
    pub reference_value: f64,
    pub groups: Vec<String>,
    pub gaps: Vec<Cell>,
}

/// Gap of every group to a reference: `v_g - v_ref` or `v_g / v_ref`.
/// Groups with undefined cells keep their status; a zero reference makes
/// every ratio undefined.
pub fn fairness_gap(
    table: &MetricTable,
    label: usize,
    mode: GapMode,
    reference: &Reference,
) -> Result<GapVector> {
    if label >= table.n_labels() {
        return Err(Error::config(format!("no label with index {label}")));
    }
    let row = &table.cells[label];
    let ref_g = match reference {
        Reference::Group(name) => table.group_index(name)?,
        Reference::LargestGroup => (0..table.n_groups())
            .max_by_key(|&g| (table.group_sizes[g], std::cmp::Reverse(g)))
            .ok_or_else(|| Error::Insufficient("table has no groups".into()))?,
        Reference::Maximum => {
            let mut best: Option<(usize, f64)> = None;
            for (g, c) in row.iter().enumerate() {
                if let Some(v) = c.usable(false) {
                    if best.is_none_or(|(_, b)| v > b) {
                        best = Some((g, v));
                    }
                }
            }
            best.ok_or_else(|| Error::UndefinedCells(format!("label {label}: no usable group")))?
                .0
        }
    };
    let ref_v = row[ref_g].value.ok_or_else(|| {
        Error::UndefinedCells(format!(
            "reference group {} is undefined for label {}",
            table.groups[ref_g], table.labels[label]
        ))
    })?;
    let gaps = row
        .iter()
        .map(|c| match c.value {
            None => *c,
            Some(v) => {
                let mut out = match mode {
                    GapMode::Difference => Cell::ok(v - ref_v),
                    GapMode::Ratio => Cell::ratio(v, ref_v),
                };
                if out.value.is_some() {
                    out.status = c.status;
                }
                out
            }
        })
        .collect();
    Ok(GapVector {
        metric: table.metric,
        label: table.labels[label].clone(),
        mode,
        reference_group: table.groups[ref_g].clone(),
        reference_value: ref_v,
        groups: table.groups.clone(),
        gaps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disparity {
    pub metric: super::MetricId,
    pub label: String,
    pub value: f64,
    pub max_group: String,
    pub max_value: f64,
    pub min_group: String,
    pub min_value: f64,
    pub n_groups: usize,
    /// Groups left out, with the reason.
    pub excluded: Vec<(String, CellStatus)>,
}

/// `max_g v_g - min_g v_g` over groups with defined values. Groups below the
/// support threshold are left out unless `include_flagged`.
pub fn disparity(table: &MetricTable, label: usize, include_flagged: bool) -> Result<Disparity> {
    if label >= table.n_labels() {
        return Err(Error::config(format!("no label with index {label}")));
    }
    let mut max: Option<(usize, f64)> = None;
    let mut min: Option<(usize, f64)> = None;
    let mut used = 0;
    let mut excluded = Vec::new();
    for (g, c) in table.cells[label].iter().enumerate() {
        let Some(v) = c.usable(include_flagged) else {
            excluded.push((table.groups[g].clone(), c.status));
            continue;
        };
        used += 1;
        if max.is_none_or(|(_, m)| v > m) {
            max = Some((g, v));
        }
        if min.is_none_or(|(_, m)| v < m) {
            min = Some((g, v));
        }
    }
    if used < 2 {
        return Err(Error::Insufficient(format!(
            "{} on {}: {used} usable group(s), need 2",
            table.metric, table.labels[label]
        )));
    }
    let (gmax, vmax) = max.unwrap();
    let (gmin, vmin) = min.unwrap();
    Ok(Disparity {
        metric: table.metric,
        label: table.labels[label].clone(),
        value: vmax - vmin,
        max_group: table.groups[gmax].clone(),
        max_value: vmax,
        min_group: table.groups[gmin].clone(),
        min_value: vmin,
        n_groups: used,
        excluded,
    })
}

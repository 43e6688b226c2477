use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::IntersectionIndex;
use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    EqualSelectionRate,
    EqualTpr,
}

/// Per-(label, group) decision thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub criterion: Criterion,
    pub tol: f64,
    /// Used for groups not in `groups`; `None` makes them an error.
    pub default_threshold: Option<f64>,
    pub labels: Vec<String>,
    pub groups: Vec<String>,
    /// `thresholds[k][g]`.
    pub thresholds: Vec<Vec<f64>>,
    /// Range of the criterion metric on the fitting data, per label.
    pub residual_gap: Vec<f64>,
    pub achieved: Vec<bool>,
    /// Groups left at the default threshold because the criterion is
    /// undefined for them (no positives under `equal_tpr`).
    pub excluded: Vec<Vec<String>>,
}

impl ThresholdPolicy {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// One reachable rate of a group and a threshold that reaches it.
#[derive(Debug, Clone, Copy)]
struct Reach {
    rate: f64,
    threshold: f64,
}

/// Rates reachable by thresholding `scores`, with thresholds on sorted
/// unique scores (select all), midpoints between neighbours, and one point
/// above the maximum (select none) when it fits in `[0, 1]`.
fn options(scores: &mut [f64]) -> Vec<Reach> {
    scores.sort_by(|a, b| a.total_cmp(b));
    let m = scores.len() as f64;
    let mut out = Vec::new();
    let mut i = 0;
    let mut prev: Option<f64> = None;
    while i < scores.len() {
        let u = scores[i];
        let threshold = prev.map_or(u, |p| 0.5 * (p + u));
        out.push(Reach {
            rate: (scores.len() - i) as f64 / m,
            threshold,
        });
        while i < scores.len() && scores[i] == u {
            i += 1;
        }
        prev = Some(u);
    }
    if let Some(max) = prev {
        if max < 1.0 {
            out.push(Reach {
                rate: 0.0,
                threshold: 0.5 * (max + 1.0),
            });
        }
    }
    out
}

/// Smallest window over the merged option lists that holds at least one
/// option of every group. Among windows with range `<= tol` the one centred
/// closest to `anchor` wins; if none qualify, the narrowest does.
fn choose(opts: &[Vec<Reach>], tol: f64, anchor: f64) -> Vec<usize> {
    let mut merged: Vec<(f64, usize, usize)> = opts
        .iter()
        .enumerate()
        .flat_map(|(g, os)| os.iter().enumerate().map(move |(j, o)| (o.rate, g, j)))
        .collect();
    merged.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let n_groups = opts.len();
    let mut count = vec![0usize; n_groups];
    let mut covered = 0;
    let mut best: Option<(bool, f64, f64, f64)> = None; // (feasible, key, lo, hi)
    let mut right = 0;
    for left in 0..merged.len() {
        while covered < n_groups && right < merged.len() {
            let g = merged[right].1;
            if count[g] == 0 {
                covered += 1;
            }
            count[g] += 1;
            right += 1;
        }
        if covered < n_groups {
            break;
        }
        let (lo, hi) = (merged[left].0, merged[right - 1].0);
        let range = hi - lo;
        let feasible = range <= tol + 1e-12;
        let key = if feasible {
            (0.5 * (lo + hi) - anchor).abs()
        } else {
            range
        };
        let better = match best {
            None => true,
            Some((bf, bk, _, _)) => (feasible && !bf) || (feasible == bf && key < bk),
        };
        if better {
            best = Some((feasible, key, lo, hi));
        }
        let g = merged[left].1;
        count[g] -= 1;
        if count[g] == 0 {
            covered -= 1;
        }
    }
    let (_, _, lo, hi) = best.expect("every group has at least one option");
    let centre = 0.5 * (lo + hi);
    opts.iter()
        .map(|os| {
            let mut pick = 0;
            let mut dist = f64::INFINITY;
            for (j, o) in os.iter().enumerate() {
                if o.rate >= lo && o.rate <= hi && (o.rate - centre).abs() < dist {
                    dist = (o.rate - centre).abs();
                    pick = j;
                }
            }
            pick
        })
        .collect()
}

fn rate(scores: &[f64], t: f64) -> f64 {
    scores.iter().filter(|&&s| s >= t).count() as f64 / scores.len() as f64
}

/// Chooses group thresholds per label so that the criterion rate (selection
/// rate or TPR) has range at most `tol` across groups on the fitting data.
/// When the default 0.5 already satisfies `tol` it is kept.
pub fn fit_thresholds(
    probas: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    idx: &IntersectionIndex,
    criterion: Criterion,
    tol: f64,
    label_names: &[String],
) -> Result<ThresholdPolicy> {
    if probas.shape() != targets.shape() || probas.nrows() != idx.n_rows() {
        return Err(Error::shape(
            "probabilities, targets and group index disagree",
        ));
    }
    if label_names.len() != probas.ncols() {
        return Err(Error::shape("label names do not match label count"));
    }
    if let Some(p) = probas.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::config(format!("probability {p} outside [0, 1]")));
    }
    if !(tol >= 0.0) {
        return Err(Error::config("tol must be >= 0"));
    }
    let groups = idx.group_names();
    let n_groups = idx.n_groups();
    let mut policy = ThresholdPolicy {
        criterion,
        tol,
        default_threshold: Some(DEFAULT_THRESHOLD),
        labels: label_names.to_vec(),
        groups: groups.clone(),
        thresholds: Vec::new(),
        residual_gap: Vec::new(),
        achieved: Vec::new(),
        excluded: Vec::new(),
    };
    for k in 0..probas.ncols() {
        let relevant: Vec<Vec<f64>> = (0..n_groups)
            .map(|g| {
                idx.members(g)
                    .iter()
                    .filter(|&&i| {
                        criterion == Criterion::EqualSelectionRate || targets[(i, k)] == 1.0
                    })
                    .map(|&i| probas[(i, k)])
                    .collect()
            })
            .collect();
        let included: Vec<usize> = (0..n_groups).filter(|&g| !relevant[g].is_empty()).collect();
        let excluded = (0..n_groups)
            .filter(|g| relevant[*g].is_empty())
            .map(|g| groups[g].clone())
            .collect();
        let mut thr = vec![DEFAULT_THRESHOLD; n_groups];
        let spread = |thr: &[f64]| {
            let rates: Vec<f64> = included
                .iter()
                .map(|&g| rate(&relevant[g], thr[g]))
                .collect();
            let max = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = rates.iter().cloned().fold(f64::INFINITY, f64::min);
            if rates.is_empty() {
                0.0
            } else {
                max - min
            }
        };
        if included.len() >= 2 && spread(&thr) > tol {
            let pooled: Vec<f64> = included
                .iter()
                .flat_map(|&g| relevant[g].iter().copied())
                .collect();
            let anchor = rate(&pooled, DEFAULT_THRESHOLD);
            let opts: Vec<Vec<Reach>> = included
                .iter()
                .map(|&g| options(&mut relevant[g].clone()))
                .collect();
            let picks = choose(&opts, tol, anchor);
            for ((&g, os), &j) in included.iter().zip(&opts).zip(&picks) {
                thr[g] = os[j].threshold;
            }
        }
        let gap = spread(&thr);
        policy.residual_gap.push(gap);
        policy.achieved.push(gap <= tol + 1e-12);
        policy.thresholds.push(thr);
        policy.excluded.push(excluded);
    }
    Ok(policy)
}

/// `1` iff `proba >= threshold(label, group)`; groups are matched by name.
pub fn apply_thresholds(
    probas: &DMatrix<f64>,
    idx: &IntersectionIndex,
    policy: &ThresholdPolicy,
) -> Result<DMatrix<f64>> {
    if probas.ncols() != policy.labels.len() || probas.nrows() != idx.n_rows() {
        return Err(Error::shape(
            "probabilities do not match policy or group index",
        ));
    }
    let pos: HashMap<&str, usize> = policy
        .groups
        .iter()
        .enumerate()
        .map(|(g, n)| (n.as_str(), g))
        .collect();
    let map: Vec<Option<usize>> = idx
        .group_names()
        .iter()
        .map(|name| match pos.get(name.as_str()) {
            Some(&g) => Ok(Some(g)),
            None if policy.default_threshold.is_some() => Ok(None),
            None => Err(Error::UnknownGroup(name.clone())),
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(probas.nrows(), probas.ncols(), |i, k| {
        let t = match map[idx.group_of(i)] {
            Some(g) => policy.thresholds[k][g],
            None => policy.default_threshold.unwrap(),
        };
        if probas[(i, k)] >= t {
            1.0
        } else {
            0.0
        }
    }))
}

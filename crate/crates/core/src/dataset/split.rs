use std::collections::BTreeMap;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{Purpose, Stream};

/// Splits `0..n` into `(train, holdout)` index lists, each sorted ascending.
///
/// The holdout holds `round(n * fraction)` rows. With `strata`, each stratum
/// receives `floor(n_s * h / n)` holdout rows and the leftover rows go to the
/// strata with the largest fractional remainders (earlier stratum on ties).
/// Rows are then taken in the order of one seeded shuffle of `0..n`.
pub fn split_indices(
    n: usize,
    fraction: f64,
    seed: u64,
    strata: Option<&[u64]>,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::config(format!(
            "holdout fraction {fraction} outside (0, 1)"
        )));
    }
    let holdout = (n as f64 * fraction).round() as usize;
    if holdout == 0 || holdout >= n {
        return Err(Error::Insufficient(format!(
            "cannot split {n} rows with holdout fraction {fraction}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    Stream::new(seed, Purpose::Split, 0).shuffle(&mut order);

    let mut in_holdout = vec![false; n];
    match strata {
        None => {
            for &r in &order[..holdout] {
                in_holdout[r] = true;
            }
        }
        Some(values) => {
            if values.len() != n {
                return Err(Error::shape("strata length differs from row count"));
            }
            let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
            for &v in values {
                *counts.entry(v).or_default() += 1;
            }
            if let Some((v, c)) = counts.iter().find(|(_, c)| **c < 2) {
                return Err(Error::Stratification(format!(
                    "stratum {v} has only {c} row(s)"
                )));
            }
            let strata: Vec<(u64, usize)> = counts.into_iter().collect();
            let mut quota: Vec<usize> = Vec::with_capacity(strata.len());
            let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(strata.len());
            for (i, (_, count)) in strata.iter().enumerate() {
                let exact = (*count * holdout) as f64 / n as f64;
                let floor = (*count * holdout) / n;
                quota.push(floor);
                remainders.push((i, exact - floor as f64));
            }
            let mut leftover = holdout - quota.iter().sum::<usize>();
            remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            for (i, _) in remainders {
                if leftover == 0 {
                    break;
                }
                quota[i] += 1;
                leftover -= 1;
            }
            for (i, (_, count)) in strata.iter().enumerate() {
                if quota[i] == *count {
                    return Err(Error::Stratification(format!(
                        "stratum {} would leave the training part",
                        strata[i].0
                    )));
                }
            }
            let slot: BTreeMap<u64, usize> = strata
                .iter()
                .enumerate()
                .map(|(i, (v, _))| (*v, i))
                .collect();
            for &r in &order {
                let s = slot[&values[r]];
                if quota[s] > 0 {
                    quota[s] -= 1;
                    in_holdout[r] = true;
                }
            }
        }
    }
    let train = (0..n).filter(|&r| !in_holdout[r]).collect();
    let test = (0..n).filter(|&r| in_holdout[r]).collect();
    Ok((train, test))
}

/// Row split of a dataset into `(train, holdout)`, optionally stratified on
/// one label.
pub fn split(
    ds: &Dataset,
    holdout_fraction: f64,
    seed: u64,
    stratify_label: Option<usize>,
) -> Result<(Dataset, Dataset)> {
    let strata: Option<Vec<u64>> = match stratify_label {
        None => None,
        Some(k) if k >= ds.n_labels() => {
            return Err(Error::config(format!("no label with index {k}")))
        }
        Some(k) => {
            if !ds.task().is_classification() {
                return Err(Error::Stratification(
                    "stratification needs a binary label".into(),
                ));
            }
            Some(ds.targets().column(k).iter().map(|v| *v as u64).collect())
        }
    };
    let (train, test) = split_indices(ds.n_rows(), holdout_fraction, seed, strata.as_deref())?;
    Ok((ds.select_rows(&train), ds.select_rows(&test)))
}

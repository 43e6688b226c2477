use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{split_indices, ProtectedAttribute};
use crate::error::{Error, Result};
use crate::learners::{fit_logistic, LinearFit, LogisticConfig};
use crate::rng::{Purpose, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Accuracy,
    #[default]
    Auc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TwoSampleConfig {
    pub classifier: LogisticConfig,
    pub n_permutations: usize,
    pub seed: u64,
    /// Share of rows held out for scoring.
    pub test_fraction: f64,
    pub statistic: Statistic,
}

impl Default for TwoSampleConfig {
    fn default() -> Self {
        TwoSampleConfig {
            classifier: LogisticConfig {
                l2: 1e-4,
                ..LogisticConfig::default()
            },
            n_permutations: 200,
            seed: 42,
            test_fraction: 0.3,
            statistic: Statistic::Auc,
        }
    }
}

/// Per-feature exact contributions of a linear score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    /// Mean `|φ_ij|` over rows, per feature.
    pub mean_abs: Vec<f64>,
    /// `mean_abs` scaled to sum to 1 (all zero when every β is zero).
    pub share: Vec<f64>,
    /// Signed `n × p` contributions, when requested.
    #[serde(skip)]
    pub contributions: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleResult {
    pub statistic: Statistic,
    pub observed: f64,
    pub null_samples: Vec<f64>,
    /// Null draws dropped from `null_samples` by [`TwoSampleResult::truncated`].
    #[serde(default)]
    pub null_samples_omitted: usize,
    pub p_value: f64,
    pub n_permutations: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub fit: LinearFit,
    pub feature_names: Vec<String>,
    pub attribution: Attribution,
}

impl TwoSampleResult {
    /// Copy keeping only the first `limit` null draws, for compact reports.
    pub fn truncated(&self, limit: usize) -> Self {
        let mut out = self.clone();
        if out.null_samples.len() > limit {
            out.null_samples_omitted = out.null_samples.len() - limit;
            out.null_samples.truncate(limit);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Area under the ROC curve by the rank-sum formula, ties counted as 1/2.
/// `None` when either class is missing.
pub fn auc(scores: &[f64], labels: &[f64]) -> Option<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &r in &order[i..=j] {
            if labels[r] == 1.0 {
                rank_sum_pos += mid;
            }
        }
        i = j + 1;
    }
    let n_pos = labels.iter().filter(|&&y| y == 1.0).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return None;
    }
    Some((rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

/// `φ_ij = β_j (x_ij - mean_j)`; each row sums to `score_i - mean(score)`.
pub fn linear_attribution(fit: &LinearFit, x: &DMatrix<f64>, per_row: bool) -> Result<Attribution> {
    let p = fit.n_inputs();
    if x.ncols() != p {
        return Err(Error::shape(format!(
            "fit has {p} inputs, matrix has {} columns",
            x.ncols()
        )));
    }
    if x.nrows() == 0 {
        return Err(Error::Insufficient("no rows to attribute".into()));
    }
    let n = x.nrows() as f64;
    let means: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n).collect();
    let phi = DMatrix::from_fn(x.nrows(), p, |i, j| {
        fit.coefficients[j] * (x[(i, j)] - means[j])
    });
    let mean_abs: Vec<f64> = (0..p)
        .map(|j| phi.column(j).iter().map(|v| v.abs()).sum::<f64>() / n)
        .collect();
    let total: f64 = mean_abs.iter().sum();
    let share = mean_abs
        .iter()
        .map(|v| if total > 0.0 { v / total } else { 0.0 })
        .collect();
    Ok(Attribution {
        mean_abs,
        share,
        contributions: per_row.then_some(phi),
    })
}

fn standardize(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows() as f64;
    let mut z = x.clone();
    for mut col in z.column_iter_mut() {
        let mean = col.sum() / n;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let sd = if sd > 0.0 { sd } else { 1.0 };
        col.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    }
    z
}

fn evaluate(
    fit: &LinearFit,
    x_test: &DMatrix<f64>,
    y_test: &[f64],
    stat: Statistic,
) -> Result<f64> {
    let p = fit.predict_proba(x_test)?;
    Ok(match stat {
        Statistic::Accuracy => {
            let hits = p
                .iter()
                .zip(y_test)
                .filter(|(p, y)| (**p >= 0.5) == (**y == 1.0))
                .count();
            hits as f64 / y_test.len() as f64
        }
        Statistic::Auc => auc(&p, y_test).unwrap_or(0.5),
    })
}

fn fit_and_score(
    z: &DMatrix<f64>,
    labels: &[f64],
    train: &[usize],
    test: &[usize],
    cfg: &TwoSampleConfig,
) -> Result<(LinearFit, f64)> {
    let x_train = z.select_rows(train.iter());
    let x_test = z.select_rows(test.iter());
    let y_train: Vec<f64> = train.iter().map(|&i| labels[i]).collect();
    let y_test: Vec<f64> = test.iter().map(|&i| labels[i]).collect();
    let fit = fit_logistic(&x_train, &y_train, &cfg.classifier)?;
    let s = evaluate(&fit, &x_test, &y_test, cfg.statistic)?;
    Ok((fit, s))
}

fn run(
    x: &DMatrix<f64>,
    attr: &[f64],
    strata: &[u64],
    names: &[String],
    cfg: &TwoSampleConfig,
) -> Result<TwoSampleResult> {
    let n = x.nrows();
    if attr.len() != n {
        return Err(Error::shape(format!(
            "{n} rows but {} attribute values",
            attr.len()
        )));
    }
    if names.len() != x.ncols() {
        return Err(Error::shape("feature names do not match columns"));
    }
    if attr.iter().any(|&a| a != 0.0 && a != 1.0) {
        return Err(Error::config("attribute indicator must be 0/1"));
    }
    let n_pos = attr.iter().filter(|&&a| a == 1.0).count();
    if n_pos == 0 || n_pos == n {
        return Err(Error::Insufficient(
            "attribute indicator has a single class".into(),
        ));
    }
    if cfg.n_permutations == 0 {
        return Err(Error::config("n_permutations must be >= 1"));
    }
    let (train, test) = split_indices(n, cfg.test_fraction, cfg.seed, Some(strata))?;
    let test_pos = test.iter().filter(|&&i| attr[i] == 1.0).count();
    let train_pos = train.iter().filter(|&&i| attr[i] == 1.0).count();
    if test_pos == 0 || test_pos == test.len() || train_pos == 0 || train_pos == train.len() {
        return Err(Error::Insufficient("held-out split lost a class".into()));
    }
    let z = standardize(x);
    let (fit, observed) = fit_and_score(&z, attr, &train, &test, cfg)?;
    let null_samples = (0..cfg.n_permutations)
        .into_par_iter()
        .map(|b| {
            let mut perm = attr.to_vec();
            Stream::new(cfg.seed, Purpose::Permutation, b as u32).shuffle(&mut perm);
            fit_and_score(&z, &perm, &train, &test, cfg).map(|r| r.1)
        })
        .collect::<Result<Vec<f64>>>()?;
    let exceed = null_samples.iter().filter(|&&s| s >= observed).count();
    let attribution = linear_attribution(&fit, &z, false)?;
    Ok(TwoSampleResult {
        statistic: cfg.statistic,
        observed,
        p_value: (1 + exceed) as f64 / (1 + cfg.n_permutations) as f64,
        null_samples,
        null_samples_omitted: 0,
        n_permutations: cfg.n_permutations,
        seed: cfg.seed,
        n_train: train.len(),
        n_test: test.len(),
        fit,
        feature_names: names.to_vec(),
        attribution,
    })
}

/// Tests whether features separate `attr = 1` from `attr = 0` better than
/// chance.
///
/// Features are standardized, rows split once (stratified on `attr`) into
/// train and held-out parts, and a logistic classifier is scored on the
/// held-out part. Each permutation `b` shuffles `attr` over all rows with
/// its own stream, refits on the same train rows and rescores on the same
/// held-out rows. `p = (1 + #{null >= observed}) / (1 + B)`.
pub fn two_sample_test(
    x: &DMatrix<f64>,
    attr: &[f64],
    feature_names: &[String],
    cfg: &TwoSampleConfig,
) -> Result<TwoSampleResult> {
    let strata: Vec<u64> = attr.iter().map(|&a| a as u64).collect();
    run(x, attr, &strata, feature_names, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelTest {
    pub level: String,
    pub n_rows: usize,
    pub result: TwoSampleResult,
    pub p_holm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassResult {
    pub attribute: String,
    pub levels: Vec<LevelTest>,
}

/// Holm step-down adjustment, returned in input order.
pub fn holm_adjust(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut out = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        running = running.max(((m - rank) as f64 * p[i]).min(1.0));
        out[i] = running;
    }
    out
}

/// One level-vs-rest test per level. All tests share one split, stratified
/// on the full attribute, and the same permutation streams. `levels = None`
/// tests every observed level; naming a level with no rows is an error.
pub fn multiclass_attr_test(
    x: &DMatrix<f64>,
    attr: &ProtectedAttribute,
    levels: Option<&[String]>,
    feature_names: &[String],
    cfg: &TwoSampleConfig,
) -> Result<MulticlassResult> {
    let counts: Vec<usize> = (0..attr.levels.len())
        .map(|c| attr.codes.iter().filter(|&&v| v as usize == c).count())
        .collect();
    let chosen: Vec<usize> = match levels {
        Some(ls) => ls
            .iter()
            .map(|l| {
                let c = attr
                    .level_code(l)
                    .ok_or_else(|| Error::UnknownGroup(l.clone()))?
                    as usize;
                if counts[c] == 0 {
                    return Err(Error::Insufficient(format!("level {l:?} has no rows")));
                }
                Ok(c)
            })
            .collect::<Result<_>>()?,
        None => (0..attr.levels.len()).filter(|&c| counts[c] > 0).collect(),
    };
    if chosen.len() < 2 && levels.is_none() {
        return Err(Error::Insufficient(format!(
            "{:?} has fewer than 2 observed levels",
            attr.name
        )));
    }
    let strata: Vec<u64> = attr.codes.iter().map(|&c| c as u64).collect();
    let results = chosen
        .iter()
        .map(|&c| {
            let ind: Vec<f64> = attr
                .codes
                .iter()
                .map(|&v| if v as usize == c { 1.0 } else { 0.0 })
                .collect();
            run(x, &ind, &strata, feature_names, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let adjusted = holm_adjust(&results.iter().map(|r| r.p_value).collect::<Vec<_>>());
    Ok(MulticlassResult {
        attribute: attr.name.clone(),
        levels: chosen
            .iter()
            .zip(results)
            .zip(adjusted)
            .map(|((&c, result), p_holm)| LevelTest {
                level: attr.levels[c].clone(),
                n_rows: counts[c],
                result,
                p_holm,
            })
            .collect(),
    })
}

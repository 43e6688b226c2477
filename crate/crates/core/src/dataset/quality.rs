use serde::{Deserialize, Serialize};

use super::{derive_intersections, Dataset, TaskKind, DEFAULT_MIN_SUPPORT};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QualityOptions {
    pub correlation_threshold: f64,
    pub min_support: usize,
    /// Attributes whose intersections are sized; `None` means all.
    pub attrs: Option<Vec<String>>,
}

impl Default for QualityOptions {
    fn default() -> Self {
        QualityOptions {
            correlation_threshold: 0.8,
            min_support: DEFAULT_MIN_SUPPORT,
            attrs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnspecifiedRate {
    pub attribute: String,
    pub rate: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LabelSummary {
    PositiveRate {
        label: String,
        rate: f64,
        positives: usize,
    },
    Spend {
        label: String,
        mean: f64,
        std_dev: f64,
        min: f64,
        median: f64,
        max: f64,
        zero_fraction: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedPair {
    pub a: String,
    pub b: String,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSize {
    pub group: String,
    pub size: usize,
    pub below_min_support: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub n_rows: usize,
    pub unspecified_rates: Vec<UnspecifiedRate>,
    pub labels: Vec<LabelSummary>,
    pub feature_names: Vec<String>,
    /// Pearson correlations; `None` where a column is constant.
    pub correlation: Vec<Vec<Option<f64>>>,
    pub high_correlation_pairs: Vec<CorrelatedPair>,
    pub groups: Vec<GroupSize>,
}

pub(crate) fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn data_quality_report(ds: &Dataset, opts: &QualityOptions) -> Result<QualityReport> {
    let n = ds.n_rows();
    let unspecified_rates = ds
        .protected()
        .iter()
        .map(|a| {
            let u = a.unspecified_code();
            let count = a.codes.iter().filter(|&&c| c == u).count();
            UnspecifiedRate {
                attribute: a.name.clone(),
                rate: count as f64 / n as f64,
                count,
            }
        })
        .collect();

    let labels = (0..ds.n_labels())
        .map(|k| {
            let col = ds.label(k);
            let name = ds.label_names()[k].clone();
            match ds.task() {
                TaskKind::Adoption => {
                    let positives = col.iter().filter(|v| **v == 1.0).count();
                    LabelSummary::PositiveRate {
                        label: name,
                        rate: positives as f64 / n as f64,
                        positives,
                    }
                }
                TaskKind::Spending => {
                    let mean = col.iter().sum::<f64>() / n as f64;
                    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
                    let mut sorted = col.clone();
                    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    let median = if n % 2 == 1 {
                        sorted[n / 2]
                    } else {
                        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
                    };
                    LabelSummary::Spend {
                        label: name,
                        mean,
                        std_dev: var.sqrt(),
                        min: sorted[0],
                        median,
                        max: sorted[n - 1],
                        zero_fraction: col.iter().filter(|v| **v == 0.0).count() as f64 / n as f64,
                    }
                }
            }
        })
        .collect();

    let p = ds.n_features();
    let columns: Vec<Vec<f64>> = (0..p)
        .map(|j| ds.features().column(j).iter().copied().collect())
        .collect();
    let mut correlation = vec![vec![None; p]; p];
    let mut high_correlation_pairs = Vec::new();
    for a in 0..p {
        correlation[a][a] = pearson(&columns[a], &columns[a]).map(|_| 1.0);
        for b in a + 1..p {
            let r = pearson(&columns[a], &columns[b]);
            correlation[a][b] = r;
            correlation[b][a] = r;
            if let Some(r) = r {
                if r.abs() >= opts.correlation_threshold {
                    high_correlation_pairs.push(CorrelatedPair {
                        a: ds.feature_names()[a].clone(),
                        b: ds.feature_names()[b].clone(),
                        r,
                    });
                }
            }
        }
    }

    let attrs = opts.attrs.clone().unwrap_or_else(|| ds.attribute_names());
    let idx = derive_intersections(ds, &attrs, opts.min_support)?;
    let groups = (0..idx.n_groups())
        .map(|g| GroupSize {
            group: idx.groups()[g].to_string(),
            size: idx.size(g),
            below_min_support: idx.is_flagged(g),
        })
        .collect();

    Ok(QualityReport {
        n_rows: n,
        unspecified_rates,
        labels,
        feature_names: ds.feature_names().to_vec(),
        correlation,
        high_correlation_pairs,
        groups,
    })
}

use serde::{Deserialize, Serialize};

use super::FairnessTensor;
use crate::error::{Error, Result};

/// Non-negative `L × K` stakeholder weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    pub weights: Vec<Vec<f64>>,
    pub normalized: bool,
}

/// Preference orderings, most important first. Every group and label of
/// the tensor must appear exactly once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub groups: Vec<String>,
    pub labels: Vec<String>,
}

/// Weight input accepted from JSON: explicit weights or rankings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Explicit {
        weights: Vec<Vec<f64>>,
        #[serde(default)]
        normalize: bool,
    },
    Ranked {
        ranking: Ranking,
        #[serde(default)]
        normalize: bool,
    },
}

impl WeightMatrix {
    /// Validates entries and, with `normalize`, scales each row to sum 1.
    pub fn new(weights: Vec<Vec<f64>>, normalize: bool) -> Result<Self> {
        let k = weights.first().map_or(0, |r| r.len());
        if weights.is_empty() || k == 0 || weights.iter().any(|r| r.len() != k) {
            return Err(Error::shape("weight matrix must be a non-empty rectangle"));
        }
        if let Some(w) = weights
            .iter()
            .flatten()
            .find(|w| !(w.is_finite() && **w >= 0.0))
        {
            return Err(Error::config(format!(
                "weights must be finite and >= 0, found {w}"
            )));
        }
        let mut weights = weights;
        if normalize {
            for (l, row) in weights.iter_mut().enumerate() {
                let s: f64 = row.iter().sum();
                if s == 0.0 {
                    return Err(Error::config(format!("weight row {l} sums to zero")));
                }
                row.iter_mut().for_each(|w| *w /= s);
            }
        }
        Ok(WeightMatrix {
            weights,
            normalized: normalize,
        })
    }

    pub fn constant(l: usize, k: usize, value: f64) -> Result<Self> {
        Self::new(vec![vec![value; k]; l], false)
    }

    /// Borda scores from rankings: `W[l,k] = (L - rank_l) · (K - rank_k)`
    /// with 0-based ranks, so the top group and label get `L · K`.
    pub fn from_ranking(
        ranking: &Ranking,
        groups: &[String],
        labels: &[String],
        normalize: bool,
    ) -> Result<Self> {
        let group_rank = ranks(&ranking.groups, groups, "group")?;
        let label_rank = ranks(&ranking.labels, labels, "label")?;
        let (l_n, k_n) = (groups.len(), labels.len());
        let weights = (0..l_n)
            .map(|l| {
                (0..k_n)
                    .map(|k| ((l_n - group_rank[l]) * (k_n - label_rank[k])) as f64)
                    .collect()
            })
            .collect();
        Self::new(weights, normalize)
    }

    pub fn from_spec(spec: &WeightSpec, groups: &[String], labels: &[String]) -> Result<Self> {
        match spec {
            WeightSpec::Explicit { weights, normalize } => Self::new(weights.clone(), *normalize),
            WeightSpec::Ranked { ranking, normalize } => {
                Self::from_ranking(ranking, groups, labels, *normalize)
            }
        }
    }

    pub fn from_json(text: &str, groups: &[String], labels: &[String]) -> Result<Self> {
        Self::from_spec(&serde_json::from_str(text)?, groups, labels)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.weights.len(), self.weights[0].len())
    }
}

fn ranks(order: &[String], names: &[String], what: &str) -> Result<Vec<usize>> {
    if order.len() != names.len() {
        return Err(Error::config(format!(
            "{what} ranking lists {} entries, tensor has {}",
            order.len(),
            names.len()
        )));
    }
    names
        .iter()
        .map(|n| {
            let mut hits = order.iter().enumerate().filter(|(_, o)| *o == n);
            match (hits.next(), hits.next()) {
                (Some((r, _)), None) => Ok(r),
                (None, _) => Err(Error::config(format!("{what} {n:?} missing from ranking"))),
                _ => Err(Error::config(format!("{what} {n:?} ranked twice"))),
            }
        })
        .collect()
}

/// `G^W[l,k1,k2] = W[l,k1]·G[l,k1,k2] - W[l,k2]·G[l,k1,k2]`, evaluated as
/// written. Equal weights within a group therefore cancel to zero.
pub fn apply_weights(t: &FairnessTensor, w: &WeightMatrix) -> Result<FairnessTensor> {
    if w.shape() != t.shape() {
        return Err(Error::shape(format!(
            "weights are {:?} but the tensor is {:?}",
            w.shape(),
            t.shape()
        )));
    }
    let mut out = t.clone();
    for (l, m) in out.values.iter_mut().enumerate() {
        for (a, row) in m.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                if let Some(g) = v {
                    *v = Some(w.weights[l][a] * *g - w.weights[l][b] * *g);
                }
            }
        }
    }
    out.weighted = true;
    Ok(out)
}

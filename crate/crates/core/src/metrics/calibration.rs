use serde::{Deserialize, Serialize};

use crate::dataset::IntersectionIndex;
use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub group: String,
    pub bin: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `None` for empty bins.
    pub mean_predicted: Option<f64>,
    pub positive_rate: Option<f64>,
}

impl CalibrationBin {
    pub fn gap(&self) -> Option<f64> {
        Some(self.positive_rate? - self.mean_predicted?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub n_bins: usize,
    pub bins: Vec<CalibrationBin>,
}

impl CalibrationTable {
    pub fn get(&self, group: usize, bin: usize) -> &CalibrationBin {
        &self.bins[group * self.n_bins + bin]
    }
}

/// Observed positive rate vs mean predicted probability per `(group, bin)`.
///
/// Bins are equal-width on `[0, 1]`, each `[lo, hi)` except the last which
/// also takes `1.0`.
pub fn calibration_by_group(
    y_true: &[f64],
    probas: &[f64],
    idx: &IntersectionIndex,
    n_bins: usize,
) -> Result<CalibrationTable> {
    if n_bins == 0 {
        return Err(Error::config("n_bins must be positive"));
    }
    if y_true.len() != probas.len() || probas.len() != idx.n_rows() {
        return Err(Error::shape(
            "targets, probabilities and group index disagree on rows",
        ));
    }
    if let Some(p) = probas.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::config(format!("probability {p} outside [0, 1]")));
    }
    let g_n = idx.n_groups();
    let mut count = vec![0usize; g_n * n_bins];
    let mut sum_p = vec![0.0; g_n * n_bins];
    let mut sum_y = vec![0.0; g_n * n_bins];
    for (i, (&y, &p)) in y_true.iter().zip(probas).enumerate() {
        let b = ((p * n_bins as f64) as usize).min(n_bins - 1);
        let c = idx.group_of(i) * n_bins + b;
        count[c] += 1;
        sum_p[c] += p;
        sum_y[c] += y;
    }
    let names = idx.group_names();
    let mut bins = Vec::with_capacity(g_n * n_bins);
    for (g, name) in names.iter().enumerate() {
        for b in 0..n_bins {
            let c = g * n_bins + b;
            let m = count[c] as f64;
            bins.push(CalibrationBin {
                group: name.clone(),
                bin: b,
                lo: b as f64 / n_bins as f64,
                hi: (b + 1) as f64 / n_bins as f64,
                count: count[c],
                mean_predicted: (count[c] > 0).then(|| sum_p[c] / m),
                positive_rate: (count[c] > 0).then(|| sum_y[c] / m),
            });
        }
    }
    Ok(CalibrationTable { n_bins, bins })
}

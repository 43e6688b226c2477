use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::egr::{evaluate, exponentiated_gradient, DecisionEvaluation, EgrConfig};
use crate::dataset::{derive_intersections, split_indices, Dataset, IntersectionIndex};
use crate::error::{Error, Result};
use crate::rng::{Purpose, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    /// Base configuration; `epsilon` is overridden by each grid value.
    pub egr: EgrConfig,
    pub label: usize,
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            egr: EgrConfig::default(),
            label: 0,
            holdout_fraction: 0.3,
            seed: 42,
        }
    }
}

/// One run of the sweep. `accuracy` and `violation` are the held-out values
/// of the randomized classifier; both splits are kept in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub knob: f64,
    pub seed: u64,
    pub accuracy: f64,
    pub violation: f64,
    pub converged: bool,
    pub rounds: usize,
    pub train: DecisionEvaluation,
    pub held_out: DecisionEvaluation,
    /// Some other point has strictly higher accuracy and strictly lower
    /// violation.
    pub dominated: bool,
}

/// Lowest violation reached at one knob value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub knob: f64,
    /// Smallest violation among the runs at exactly this knob.
    pub min_violation: f64,
    /// Smallest violation among the runs at this knob or any looser one.
    pub envelope: f64,
}

/// Train/held-out row split stratified on the groups of `attrs`, and the
/// group index of each part. Falls back to an unstratified split when some
/// group is too small to stratify.
pub(crate) fn split_by_groups(
    ds: &Dataset,
    attrs: &[String],
    holdout_fraction: f64,
    seed: u64,
) -> Result<((Dataset, IntersectionIndex), (Dataset, IntersectionIndex))> {
    let full = derive_intersections(ds, attrs, 1)?;
    let strata: Vec<u64> = full.row_groups().iter().map(|&g| g as u64).collect();
    let (train, test) = match split_indices(ds.n_rows(), holdout_fraction, seed, Some(&strata)) {
        Err(Error::Stratification(_)) => split_indices(ds.n_rows(), holdout_fraction, seed, None)?,
        rows => rows?,
    };
    let (train, test) = (ds.select_rows(&train), ds.select_rows(&test));
    let train_idx = derive_intersections(&train, attrs, 1)?;
    let test_idx = derive_intersections(&test, attrs, 1)?;
    Ok(((train, train_idx), (test, test_idx)))
}

/// Seed of the `i`-th point: the base seed for the first occurrence of a
/// knob value, a fresh derived seed for every repeat.
fn point_seeds(grid: &[f64], seed: u64) -> Vec<u64> {
    (0..grid.len())
        .map(|i| {
            let repeat = grid[..i].iter().filter(|&&e| e == grid[i]).count();
            if repeat == 0 {
                seed
            } else {
                Stream::new(seed, Purpose::Sweep, repeat as u32).next_u64()
            }
        })
        .collect()
}

fn run_point(
    ds: &Dataset,
    attrs: &[String],
    knob: f64,
    seed: u64,
    cfg: &SweepConfig,
) -> Result<TradeoffPoint> {
    let ((train, train_idx), (test, test_idx)) =
        split_by_groups(ds, attrs, cfg.holdout_fraction, seed)?;
    let egr = EgrConfig {
        epsilon: knob,
        ..cfg.egr.clone()
    };
    let (ytr, yte) = (train.label(cfg.label), test.label(cfg.label));
    let rc = exponentiated_gradient(train.features(), &ytr, &train_idx, &egr)?;
    let train_eval = evaluate(&rc, train.features(), &ytr, &train_idx)?;
    let held_out = evaluate(&rc, test.features(), &yte, &test_idx)?;
    Ok(TradeoffPoint {
        knob,
        seed,
        accuracy: held_out.accuracy,
        violation: held_out.violation,
        converged: rc.converged,
        rounds: rc.trace.len(),
        train: train_eval,
        held_out,
        dominated: false,
    })
}

/// One exponentiated-gradient run per grid value, on label `cfg.label` with
/// groups from the joint levels of `attrs`. Points come back sorted by knob
/// (repeats in grid order) with dominated points flagged.
pub fn pareto_sweep(
    ds: &Dataset,
    attrs: &[String],
    eps_grid: &[f64],
    cfg: &SweepConfig,
) -> Result<Vec<TradeoffPoint>> {
    if eps_grid.is_empty() {
        return Err(Error::config("the epsilon grid is empty"));
    }
    if let Some(e) = eps_grid.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
        return Err(Error::config(format!("epsilon {e} outside (0, 1]")));
    }
    if cfg.label >= ds.n_labels() {
        return Err(Error::config(format!("no label with index {}", cfg.label)));
    }
    let seeds = point_seeds(eps_grid, cfg.seed);
    let mut points = eps_grid
        .par_iter()
        .zip(seeds)
        .map(|(&knob, seed)| {
            run_point(ds, attrs, knob, seed, cfg).map_err(|e| Error::Knob {
                knob,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| a.knob.total_cmp(&b.knob));
    mark_dominated(&mut points);
    Ok(points)
}

pub fn mark_dominated(points: &mut [TradeoffPoint]) {
    let flags: Vec<bool> = points
        .iter()
        .map(|p| {
            points
                .iter()
                .any(|q| q.accuracy > p.accuracy && q.violation < p.violation)
        })
        .collect();
    for (p, d) in points.iter_mut().zip(flags) {
        p.dominated = d;
    }
}

/// Envelope over any number of points (for example, several seeded sweeps
/// concatenated), in ascending knob order. `envelope` never increases as
/// the knob tightens.
pub fn feasible_envelope(points: &[TradeoffPoint]) -> Vec<EnvelopePoint> {
    let mut knobs: Vec<f64> = points.iter().map(|p| p.knob).collect();
    knobs.sort_by(f64::total_cmp);
    knobs.dedup();
    let mut out: Vec<EnvelopePoint> = knobs
        .iter()
        .map(|&knob| EnvelopePoint {
            knob,
            min_violation: points
                .iter()
                .filter(|p| p.knob == knob)
                .map(|p| p.violation)
                .fold(f64::INFINITY, f64::min),
            envelope: f64::INFINITY,
        })
        .collect();
    let mut running = f64::INFINITY;
    for e in out.iter_mut().rev() {
        running = running.min(e.min_violation);
        e.envelope = running;
    }
    out
}

/// CSV with columns `knob,accuracy,violation,dominated`.
pub fn sweep_to_csv(points: &[TradeoffPoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["knob", "accuracy", "violation", "dominated"])?;
    for p in points {
        w.write_record([
            p.knob.to_string(),
            p.accuracy.to_string(),
            p.violation.to_string(),
            p.dominated.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

//! Exponentiated-gradient reduction for fair binary classification.
//!
//! Both players of the Lagrangian game are run: multipliers `λ` over the
//! moment constraints follow exponentiated-gradient updates, and each round
//! the learner best-responds with a logistic fit on cost-reweighted labels.
//! The answer is a randomized mixture of the per-round classifiers.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::IntersectionIndex;
use crate::error::{Error, Result};
use crate::learners::{fit_logistic_weighted, LinearFit, LogisticConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// `E[h | A=a] - E[h]` per group.
    DemographicParity,
    /// `E[h | A=a, Y=y] - E[h | Y=y]` per group and label value.
    EqualizedOdds,
    /// `E[h | A=a, Y=1] - E[h | Y=1]` per group (true positive rates only).
    EqualOpportunity,
}

/// Which averaged mixture is returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MixtureRule {
    /// Running average at the round with the smallest Lagrangian gap.
    #[default]
    BestGap,
    /// Average over all rounds.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EgrConfig {
    pub constraint: Constraint,
    pub epsilon: f64,
    pub max_iter: usize,
    /// Step on the multiplier log-weights; defaults to `2 / B = 2 ε`.
    pub learning_rate: Option<f64>,
    /// Gap at which iteration stops; defaults to `1 / sqrt(n)`.
    pub nu: Option<f64>,
    pub base: LogisticConfig,
    pub mixture: MixtureRule,
}

impl Default for EgrConfig {
    fn default() -> Self {
        EgrConfig {
            constraint: Constraint::DemographicParity,
            epsilon: 0.05,
            max_iter: 50,
            learning_rate: None,
            nu: None,
            base: LogisticConfig {
                l2: 1e-3,
                ..LogisticConfig::default()
            },
            mixture: MixtureRule::BestGap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgrRound {
    pub iteration: usize,
    /// Error of the running-average mixture.
    pub error: f64,
    /// Largest `|moment|` of the running-average mixture.
    pub violation: f64,
    pub lagrangian: f64,
    pub gap: f64,
    /// Smallest gap seen so far.
    pub best_gap: f64,
}

/// Mixture of deterministic classifiers `h_t(x) = 1[p_t(x) >= 0.5]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizedClassifier {
    pub constraint: Constraint,
    pub epsilon: f64,
    pub bound: f64,
    pub components: Vec<LinearFit>,
    pub weights: Vec<f64>,
    pub trace: Vec<EgrRound>,
    pub converged: bool,
    pub gap: f64,
    /// Round whose running average was returned (1-based).
    pub chosen_round: usize,
}

impl RandomizedClassifier {
    /// `E[h(x)] = Σ_t w_t h_t(x)`.
    pub fn expected(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.nrows()];
        for (fit, &w) in self.components.iter().zip(&self.weights) {
            if w == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(fit.predict_proba(x)?) {
                if p >= 0.5 {
                    *o += w;
                }
            }
        }
        Ok(out)
    }

    /// Deterministic decisions `E[h(x)] >= 0.5`.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        Ok(self
            .expected(x)?
            .into_iter()
            .map(|e| if e >= 0.5 { 1.0 } else { 0.0 })
            .collect())
    }
}

/// Moment coefficient vectors: `γ_j(h) = Σ_i h_i m_j[i]`.
pub(crate) fn moments(
    constraint: Constraint,
    y: &[f64],
    groups: &[usize],
    n_groups: usize,
) -> Vec<Vec<f64>> {
    let n = y.len() as f64;
    let mut out = Vec::new();
    match constraint {
        Constraint::DemographicParity => {
            for a in 0..n_groups {
                let n_a = groups.iter().filter(|&&g| g == a).count() as f64;
                if n_a == 0.0 {
                    continue;
                }
                out.push(
                    groups
                        .iter()
                        .map(|&g| (g == a) as u8 as f64 / n_a - 1.0 / n)
                        .collect(),
                );
            }
        }
        Constraint::EqualizedOdds | Constraint::EqualOpportunity => {
            let values: &[f64] = if constraint == Constraint::EqualizedOdds {
                &[0.0, 1.0]
            } else {
                &[1.0]
            };
            for &label in values {
                let n_y = y.iter().filter(|&&v| v == label).count() as f64;
                if n_y == 0.0 {
                    continue;
                }
                for a in 0..n_groups {
                    let n_ay = groups
                        .iter()
                        .zip(y)
                        .filter(|(&g, &v)| g == a && v == label)
                        .count() as f64;
                    if n_ay == 0.0 {
                        continue;
                    }
                    out.push(
                        groups
                            .iter()
                            .zip(y)
                            .map(|(&g, &v)| {
                                if v != label {
                                    0.0
                                } else {
                                    (g == a) as u8 as f64 / n_ay - 1.0 / n_y
                                }
                            })
                            .collect(),
                    );
                }
            }
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest `|moment|` of (soft) predictions `h`, the constraint's own
/// violation measure.
pub fn constraint_violation(
    constraint: Constraint,
    h: &[f64],
    y: &[f64],
    groups: &[usize],
    n_groups: usize,
) -> f64 {
    moments(constraint, y, groups, n_groups)
        .iter()
        .map(|m| dot(m, h).abs())
        .fold(0.0, f64::max)
}

struct Game<'a> {
    x: &'a DMatrix<f64>,
    y: &'a [f64],
    moments: Vec<Vec<f64>>,
    eps: f64,
    base: LogisticConfig,
}

impl Game<'_> {
    fn error(&self, h: &[f64]) -> f64 {
        h.iter()
            .zip(self.y)
            .map(|(h, y)| (h - y).abs())
            .sum::<f64>()
            / self.y.len() as f64
    }

    fn gammas(&self, h: &[f64]) -> Vec<f64> {
        self.moments.iter().map(|m| dot(m, h)).collect()
    }

    /// `err(h) + Σ_j (λ⁺_j - λ⁻_j) γ_j(h) - ε Σ λ`.
    fn lagrangian(&self, h: &[f64], lam: &[f64]) -> f64 {
        let g = self.gammas(h);
        let m = g.len();
        let mut l = self.error(h);
        for j in 0..m {
            l += lam[j] * (g[j] - self.eps) + lam[m + j] * (-g[j] - self.eps);
        }
        l
    }

    /// Logistic fit to the cost-sensitive problem `min_h Σ_i h_i c_i`,
    /// relabelled as `ỹ_i = 1[c_i < 0]` with weights `|c_i|`.
    fn best_response(&self, lam: &[f64]) -> Result<(LinearFit, Vec<f64>)> {
        let n = self.y.len() as f64;
        let m = self.moments.len();
        let cost: Vec<f64> = (0..self.y.len())
            .map(|i| {
                let mut c = (1.0 - 2.0 * self.y[i]) / n;
                for j in 0..m {
                    c += (lam[j] - lam[m + j]) * self.moments[j][i];
                }
                c
            })
            .collect();
        let labels: Vec<f64> = cost.iter().map(|&c| (c < 0.0) as u8 as f64).collect();
        let weights: Vec<f64> = cost.iter().map(|c| c.abs()).collect();
        let fit = if weights.iter().sum::<f64>() > 0.0 {
            fit_logistic_weighted(self.x, &labels, Some(&weights), &self.base)?
        } else {
            fit_logistic_weighted(self.x, self.y, None, &self.base)?
        };
        let h = fit
            .predict_proba(self.x)?
            .into_iter()
            .map(|p| if p >= 0.5 { 1.0 } else { 0.0 })
            .collect();
        Ok((fit, h))
    }
}

/// Fits a randomized classifier whose constraint moments are within
/// `epsilon` on the training rows. Groups come from `idx`.
pub fn exponentiated_gradient(
    x: &DMatrix<f64>,
    y: &[f64],
    idx: &IntersectionIndex,
    cfg: &EgrConfig,
) -> Result<RandomizedClassifier> {
    let n = x.nrows();
    if y.len() != n || idx.n_rows() != n {
        return Err(Error::shape("features, labels and groups disagree on rows"));
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::config("exponentiated gradient needs a 0/1 label"));
    }
    if idx.n_groups() < 2 {
        return Err(Error::Insufficient(
            "the attribute needs at least 2 groups".into(),
        ));
    }
    if !(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0) {
        return Err(Error::config(format!(
            "epsilon {} outside (0, 1]",
            cfg.epsilon
        )));
    }
    if cfg.max_iter == 0 {
        return Err(Error::config("max_iter must be >= 1"));
    }
    let game = Game {
        x,
        y,
        moments: moments(cfg.constraint, y, idx.row_groups(), idx.n_groups()),
        eps: cfg.epsilon,
        base: cfg.base,
    };
    let m = 2 * game.moments.len();
    let bound = 1.0 / cfg.epsilon;
    // Larger steps, such as 2 ln(M) / sqrt(T), make consecutive best
    // responses flip between opposite extremes when B is large.
    let eta = cfg.learning_rate.unwrap_or(2.0 / bound);
    let nu = cfg.nu.unwrap_or(1.0 / (n as f64).sqrt());

    // With λ = 0 the best response is the unconstrained fit. If that is
    // already feasible, (h, 0) is an exact saddle point: gap 0.
    let zero = vec![0.0; m];
    let (free, h_free) = game.best_response(&zero)?;
    let g_free = game.gammas(&h_free);
    let free_violation = g_free.iter().map(|g| g.abs()).fold(0.0, f64::max);
    if free_violation <= cfg.epsilon {
        let error = game.error(&h_free);
        return Ok(RandomizedClassifier {
            constraint: cfg.constraint,
            epsilon: cfg.epsilon,
            bound,
            components: vec![free],
            weights: vec![1.0],
            trace: vec![EgrRound {
                iteration: 1,
                error,
                violation: free_violation,
                lagrangian: error,
                gap: 0.0,
                best_gap: 0.0,
            }],
            converged: true,
            gap: 0.0,
            chosen_round: 1,
        });
    }

    let mut theta = vec![0.0f64; m];
    let mut lam_sum = vec![0.0; m];
    let mut h_sum = vec![0.0; n];
    let mut components = Vec::new();
    let mut trace: Vec<EgrRound> = Vec::new();
    let (mut best_gap, mut best_round) = (f64::INFINITY, 0);
    let mut converged = false;

    for t in 1..=cfg.max_iter {
        // λ = B e^θ / (1 + Σ e^θ), shifted by max(0, θ) against overflow
        let c = theta.iter().fold(0.0f64, |a, &b| a.max(b));
        let z: f64 = (-c).exp() + theta.iter().map(|v| (v - c).exp()).sum::<f64>();
        let lam: Vec<f64> = theta.iter().map(|v| bound * (v - c).exp() / z).collect();
        let (fit, h) = game.best_response(&lam)?;
        components.push(fit);
        for (s, v) in h_sum.iter_mut().zip(&h) {
            *s += v;
        }
        for (s, v) in lam_sum.iter_mut().zip(&lam) {
            *s += v;
        }
        let q: Vec<f64> = h_sum.iter().map(|s| s / t as f64).collect();
        let lam_bar: Vec<f64> = lam_sum.iter().map(|s| s / t as f64).collect();

        let l_bar = game.lagrangian(&q, &lam_bar);
        let (_, h_best) = game.best_response(&lam_bar)?;
        let l_low = game.lagrangian(&h_best, &lam_bar);
        let gq = game.gammas(&q);
        let worst = gq.iter().map(|g| g.abs()).fold(0.0, f64::max);
        let err_q = game.error(&q);
        let l_high = err_q + bound * (worst - cfg.epsilon).max(0.0);
        let gap = (l_bar - l_low).max(l_high - l_bar).max(0.0);
        if gap < best_gap {
            best_gap = gap;
            best_round = t;
        }
        trace.push(EgrRound {
            iteration: t,
            error: err_q,
            violation: worst,
            lagrangian: l_bar,
            gap,
            best_gap,
        });
        if gap <= nu {
            converged = true;
            break;
        }
        // θ_j += η (γ_j(h_t) - ε), with γ for both signs of every moment
        let gh = game.gammas(&h);
        let half = gh.len();
        for j in 0..half {
            theta[j] += eta * (gh[j] - cfg.epsilon);
            theta[half + j] += eta * (-gh[j] - cfg.epsilon);
        }
    }

    let rounds = components.len();
    let chosen = match cfg.mixture {
        MixtureRule::BestGap => best_round,
        MixtureRule::Uniform => rounds,
    };
    let weights = (0..rounds)
        .map(|t| if t < chosen { 1.0 / chosen as f64 } else { 0.0 })
        .collect();
    let gap = trace[chosen - 1].gap;
    Ok(RandomizedClassifier {
        constraint: cfg.constraint,
        epsilon: cfg.epsilon,
        bound,
        components,
        weights,
        trace,
        converged,
        gap,
        chosen_round: chosen,
    })
}

/// Accuracy and constraint violation of a (randomized) classifier on one
/// set of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionEvaluation {
    pub n_rows: usize,
    /// Expected accuracy of the randomized classifier.
    pub accuracy: f64,
    /// Constraint violation of the expected predictions.
    pub violation: f64,
    /// Accuracy of the determinized decisions `E[h] >= 0.5`.
    pub decision_accuracy: f64,
    /// Constraint violation of the determinized decisions.
    pub decision_violation: f64,
    /// Expected selection rate per group, in index order.
    pub selection_rates: Vec<(String, f64)>,
}

pub fn evaluate(
    rc: &RandomizedClassifier,
    x: &DMatrix<f64>,
    y: &[f64],
    idx: &IntersectionIndex,
) -> Result<DecisionEvaluation> {
    evaluate_predictions(rc.constraint, &rc.expected(x)?, y, idx)
}

/// Evaluation of expected predictions `soft` (0/1 for a deterministic
/// classifier) under `constraint`.
pub fn evaluate_predictions(
    constraint: Constraint,
    soft: &[f64],
    y: &[f64],
    idx: &IntersectionIndex,
) -> Result<DecisionEvaluation> {
    if y.len() != soft.len() || idx.n_rows() != soft.len() {
        return Err(Error::shape(
            "predictions, labels and groups disagree on rows",
        ));
    }
    let hard: Vec<f64> = soft
        .iter()
        .map(|&e| if e >= 0.5 { 1.0 } else { 0.0 })
        .collect();
    let accuracy =
        |h: &[f64]| 1.0 - h.iter().zip(y).map(|(h, y)| (h - y).abs()).sum::<f64>() / y.len() as f64;
    let groups = idx.row_groups();
    let selection_rates = idx
        .group_names()
        .into_iter()
        .enumerate()
        .map(|(g, name)| {
            let rows = idx.members(g);
            let rate = rows.iter().map(|&r| soft[r]).sum::<f64>() / rows.len().max(1) as f64;
            (name, rate)
        })
        .collect();
    Ok(DecisionEvaluation {
        n_rows: y.len(),
        accuracy: accuracy(soft),
        violation: constraint_violation(constraint, soft, y, groups, idx.n_groups()),
        decision_accuracy: accuracy(&hard),
        decision_violation: constraint_violation(constraint, &hard, y, groups, idx.n_groups()),
        selection_rates,
    })
}

/// One independent reduction per label of `targets`, all sharing `x` and
/// the groups of `idx`.
pub fn exponentiated_gradient_multilabel(
    x: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    idx: &IntersectionIndex,
    cfg: &EgrConfig,
) -> Result<Vec<RandomizedClassifier>> {
    (0..targets.ncols())
        .into_par_iter()
        .map(|k| {
            let y: Vec<f64> = targets.column(k).iter().copied().collect();
            exponentiated_gradient(x, &y, idx, cfg).map_err(|e| Error::Label {
                label: k,
                source: Box::new(e),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::GroupKey;
    use crate::rng::{Purpose, Stream};

    fn index(groups: &[usize], k: usize) -> IntersectionIndex {
        let keys = (0..k).map(|g| GroupKey(vec![format!("g{g}")])).collect();
        IntersectionIndex::from_assignments(vec!["a".into()], keys, groups.to_vec(), 0).unwrap()
    }

    /// Feature 0 carries the label, feature 1 the group; positives are more
    /// common in group 1.
    fn data(n: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>, Vec<usize>) {
        let mut s = Stream::new(seed, Purpose::Experiment, 0);
        let groups: Vec<usize> = (0..n).map(|_| s.below(2)).collect();
        let y: Vec<f64> = groups
            .iter()
            .map(|&g| s.bernoulli(if g == 1 { 0.6 } else { 0.2 }) as u8 as f64)
            .collect();
        let x = DMatrix::from_fn(n, 2, |i, j| match j {
            0 => 1.5 * y[i] + s.normal(),
            _ => groups[i] as f64 + 0.5 * s.normal(),
        });
        (x, y, groups)
    }

    #[test]
    fn moment_oracle() {
        let y = [1.0, 0.0, 1.0, 0.0];
        let g = [0, 0, 1, 1];
        let h = [1.0, 1.0, 0.0, 1.0];
        // E[h|0] = 1, E[h|1] = 0.5, E[h] = 0.75
        let dp = moments(Constraint::DemographicParity, &y, &g, 2);
        assert!((dot(&dp[0], &h) - 0.25).abs() < 1e-15);
        assert!((dot(&dp[1], &h) + 0.25).abs() < 1e-15);
        // y = 1 rows: h = (1, 0) → E[h|0,1] - E[h|1] = 0.5
        let eo = moments(Constraint::EqualizedOdds, &y, &g, 2);
        assert_eq!(eo.len(), 4);
        assert!((dot(&eo[2], &h) - 0.5).abs() < 1e-15);
        let op = moments(Constraint::EqualOpportunity, &y, &g, 2);
        assert_eq!(op, eo[2..].to_vec());
    }

    #[test]
    fn mixture_weights_and_running_min() {
        let (x, y, g) = data(600, 1);
        let idx = index(&g, 2);
        let cfg = EgrConfig {
            epsilon: 0.02,
            max_iter: 20,
            ..Default::default()
        };
        let rc = exponentiated_gradient(&x, &y, &idx, &cfg).unwrap();
        assert!(((rc.weights.iter().sum::<f64>()) - 1.0).abs() < 1e-9);
        assert!(rc.weights.iter().all(|w| *w >= 0.0));
        for w in rc.trace.windows(2) {
            assert!(w[1].best_gap <= w[0].best_gap);
        }
    }

    #[test]
    fn constraint_reduces_violation() {
        let (x, y, g) = data(2000, 2);
        let idx = index(&g, 2);
        let free = fit_logistic_weighted(&x, &y, None, &EgrConfig::default().base).unwrap();
        let h0: Vec<f64> = free
            .predict_proba(&x)
            .unwrap()
            .iter()
            .map(|p| (*p >= 0.5) as u8 as f64)
            .collect();
        let before = constraint_violation(Constraint::DemographicParity, &h0, &y, &g, 2);
        let cfg = EgrConfig {
            epsilon: 0.02,
            ..Default::default()
        };
        let rc = exponentiated_gradient(&x, &y, &idx, &cfg).unwrap();
        let after = constraint_violation(
            Constraint::DemographicParity,
            &rc.expected(&x).unwrap(),
            &y,
            &g,
            2,
        );
        assert!(before > 0.1, "{before}");
        assert!(after < 0.03, "{after}");
    }

    #[test]
    fn feasible_start_stays_put() {
        // group carries no signal: the free fit already satisfies DP
        let mut s = Stream::new(3, Purpose::Experiment, 0);
        let n = 1000;
        let g: Vec<usize> = (0..n).map(|_| s.below(2)).collect();
        let y: Vec<f64> = (0..n).map(|_| s.bernoulli(0.4) as u8 as f64).collect();
        let x = DMatrix::from_fn(n, 1, |i, _| 2.0 * y[i] + s.normal());
        let cfg = EgrConfig {
            epsilon: 0.1,
            ..Default::default()
        };
        let rc = exponentiated_gradient(&x, &y, &index(&g, 2), &cfg).unwrap();
        assert_eq!(rc.components.len(), 1);
        assert!(rc.converged);
        assert!(rc.trace[0].violation <= 0.1);
        let first = rc.components[0].predict_proba(&x).unwrap();
        let mix = rc.predict(&x).unwrap();
        let agree = first
            .iter()
            .zip(&mix)
            .filter(|(p, m)| ((**p >= 0.5) as u8 as f64) == **m)
            .count();
        assert!(agree as f64 >= 0.99 * n as f64);
    }

    #[test]
    fn invalid_inputs() {
        let (x, y, g) = data(50, 4);
        let idx = index(&g, 2);
        let bad = EgrConfig {
            epsilon: 0.0,
            ..Default::default()
        };
        assert!(exponentiated_gradient(&x, &y, &idx, &bad).is_err());
        let one = index(&vec![0; 50], 1);
        assert!(exponentiated_gradient(&x, &y, &one, &EgrConfig::default()).is_err());
    }
}

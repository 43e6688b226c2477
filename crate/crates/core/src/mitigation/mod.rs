//! Group-threshold post-processing, exponentiated-gradient reduction,
//! trade-off sweeps and the awareness comparison.

mod awareness;
mod egr;
mod sweep;
mod thresholds;

pub use awareness::{awareness_comparison, AwarenessComparison, AwarenessConfig};

pub use egr::{
    constraint_violation, evaluate, evaluate_predictions, exponentiated_gradient,
    exponentiated_gradient_multilabel, Constraint, DecisionEvaluation, EgrConfig, EgrRound,
    MixtureRule, RandomizedClassifier,
};
pub use sweep::{
    feasible_envelope, mark_dominated, pareto_sweep, sweep_to_csv, EnvelopePoint, SweepConfig,
    TradeoffPoint,
};
pub use thresholds::{
    apply_thresholds, fit_thresholds, Criterion, ThresholdPolicy, DEFAULT_THRESHOLD,
};

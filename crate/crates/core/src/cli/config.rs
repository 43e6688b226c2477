//! JSON configuration of every command. All fields have defaults, so a
//! config file only lists what it changes; command-line flags override
//! the file.

use serde::{Deserialize, Serialize};

use crate::dataset::{QualityOptions, DEFAULT_MIN_SUPPORT};
use crate::learners::{LassoConfig, LogisticConfig};
use crate::metrics::MetricId;
use crate::mitigation::{Criterion, EgrConfig};
use crate::statistics::{TwoSampleConfig, DEFAULT_CORRELATION_FLAG};
use crate::tensor::WeightSpec;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditConfig {
    pub seed: u64,
    /// Attributes whose joint levels define the audited groups; all
    /// protected attributes when empty.
    pub attrs: Vec<String>,
    pub min_support: usize,
    pub holdout_fraction: f64,
    /// Decision threshold on predicted probabilities.
    pub threshold: f64,
    /// Whether the protected attributes are model inputs.
    pub include_protected: bool,
    pub learner: LogisticConfig,
    /// Penalty of the multi-task lasso used for spend targets.
    pub lasso_lambda: f64,
    pub lasso: LassoConfig,
    /// Metrics to tabulate; all metrics of the task when empty.
    pub metrics: Vec<MetricId>,
    /// Let groups below `min_support` take part in disparities.
    pub include_flagged: bool,
    /// Disparities strictly above this value are breaches.
    pub fail_threshold: Option<f64>,
    /// Metric of the fairness tensor; recall (adoption) or MAE (spend)
    /// when unset.
    pub tensor_metric: Option<MetricId>,
    pub weights: Option<WeightSpec>,
    pub calibration_bins: usize,
    pub quality: QualityOptions,
    /// Runs a proxy test per audited attribute when set.
    pub proxy: Option<TwoSampleConfig>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            seed: DEFAULT_SEED,
            attrs: Vec::new(),
            min_support: DEFAULT_MIN_SUPPORT,
            holdout_fraction: 0.3,
            threshold: 0.5,
            include_protected: false,
            learner: LogisticConfig {
                l2: 1e-3,
                ..LogisticConfig::default()
            },
            lasso_lambda: 0.01,
            lasso: LassoConfig::default(),
            metrics: Vec::new(),
            include_flagged: false,
            fail_threshold: None,
            tensor_metric: None,
            weights: None,
            calibration_bins: crate::metrics::DEFAULT_BINS,
            quality: QualityOptions::default(),
            proxy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProxyConfig {
    pub test: TwoSampleConfig,
    /// Levels to test one-vs-rest; every observed level when empty.
    pub levels: Vec<String>,
    /// Appends the predicted labels of an attribute-blind model to the
    /// features before testing.
    pub augment_with_predictions: bool,
    pub learner: LogisticConfig,
    pub threshold: f64,
    /// Keep at most this many null samples per test in the output.
    pub null_sample_limit: Option<usize>,
}

impl Default for ProxyConfig {
    fn default() -> Self {
        ProxyConfig {
            test: TwoSampleConfig::default(),
            levels: Vec::new(),
            augment_with_predictions: false,
            learner: LogisticConfig {
                l2: 1e-3,
                ..LogisticConfig::default()
            },
            threshold: 0.5,
            null_sample_limit: None,
        }
    }
}

/// Per-row bias quantity for the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BiasKind {
    /// `ŷ - y` with binary decisions (or predictions for spend targets).
    #[default]
    SignedError,
    /// `|ŷ - y|`.
    Error,
    /// `y - p̂` with predicted probabilities (or predictions).
    Residual,
}

impl std::str::FromStr for BiasKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.trim().to_string()))
            .map_err(|_| crate::Error::InvalidConfig(format!("unknown bias kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecomposeConfig {
    pub seed: u64,
    pub bias: BiasKind,
    /// Label whose bias is decomposed; the first label when unset.
    pub label: Option<String>,
    /// Attributes entering the demographic block; all when empty.
    pub attrs: Vec<String>,
    pub include_features: bool,
    pub include_predictions: bool,
    pub learner: LogisticConfig,
    pub lasso_lambda: f64,
    pub lasso: LassoConfig,
    pub threshold: f64,
    pub correlation_flag: f64,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        DecomposeConfig {
            seed: DEFAULT_SEED,
            bias: BiasKind::default(),
            label: None,
            attrs: Vec::new(),
            include_features: true,
            include_predictions: true,
            learner: LogisticConfig {
                l2: 1e-3,
                ..LogisticConfig::default()
            },
            lasso_lambda: 0.01,
            lasso: LassoConfig::default(),
            threshold: 0.5,
            correlation_flag: DEFAULT_CORRELATION_FLAG,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Thresholds,
    Egr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MitigateConfig {
    /// Split, learner, groups and report settings.
    pub audit: AuditConfig,
    pub criterion: Criterion,
    pub tol: f64,
    /// The EGR base learner is always the audit learner, so that a
    /// vacuous constraint reproduces the unmitigated model.
    pub egr: EgrConfig,
    /// Labels to mitigate; all labels when empty.
    pub labels: Vec<String>,
    /// Knob values of the trade-off table (`tol` for thresholds, `ε` for
    /// EGR); a default grid per strategy when unset.
    pub tradeoff_grid: Option<Vec<f64>>,
}

impl Default for MitigateConfig {
    fn default() -> Self {
        MitigateConfig {
            audit: AuditConfig::default(),
            criterion: Criterion::EqualSelectionRate,
            tol: 0.02,
            egr: EgrConfig::default(),
            labels: Vec::new(),
            tradeoff_grid: None,
        }
    }
}

pub const THRESHOLD_GRID: [f64; 5] = [0.01, 0.02, 0.05, 0.1, 0.2];
pub const EPSILON_GRID: [f64; 6] = [0.01, 0.02, 0.05, 0.1, 0.5, 1.0];

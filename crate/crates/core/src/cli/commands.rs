//! The commands as library functions. The binary only parses flags, loads
//! files and writes the results.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::config::{
    AuditConfig, BiasKind, DecomposeConfig, MitigateConfig, ProxyConfig, Strategy,
};
use super::config::{EPSILON_GRID, THRESHOLD_GRID};
use super::report::{
    build_report, finish, now_ms, resolve_attrs, sha256_hex, variant_name, AuditReport, Evaluation,
    RunContext, Timestamps, REPORT_VERSION,
};
use crate::dataset::{
    derive_intersections, generate_synthetic, hstack, load_csv, read_schema, split_indices,
    write_csv, Dataset, OneHotEncoding, Schema, SynthConfig,
};
use crate::error::{Error, Result};
use crate::learners::{fit_multilabel, fit_multilabel_regression, MultiLabelModel};
use crate::mitigation::{
    apply_thresholds, evaluate_predictions, exponentiated_gradient_multilabel, feasible_envelope,
    fit_thresholds, mark_dominated, pareto_sweep, Constraint, Criterion, DecisionEvaluation,
    EgrConfig, EnvelopePoint, RandomizedClassifier, SweepConfig, ThresholdPolicy, TradeoffPoint,
};
use crate::statistics::{
    bias_decomposition, coef_vcov_report, multiclass_attr_test, Block, DecompositionFit,
    DesignBlock, MulticlassResult, VcovReport,
};

/// A dataset with the hash of the file it came from.
pub struct LoadedData {
    pub ds: Dataset,
    pub hash: String,
}

/// `data.csv` → `data.schema.json`.
pub fn schema_path_for(data: &Path) -> PathBuf {
    data.with_extension("schema.json")
}

pub fn load_data(data: &Path, schema: &Path) -> Result<LoadedData> {
    let bytes = std::fs::read(data).map_err(|e| Error::io(data, e))?;
    let ds = load_csv(data, &read_schema(schema)?)?;
    Ok(LoadedData {
        ds,
        hash: sha256_hex(&bytes),
    })
}

pub(crate) fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Generates the dataset, writes it to `out` and its schema next to it.
/// Returns the dataset and the schema path.
pub fn synth(cfg: &SynthConfig, out: &Path) -> Result<(Dataset, PathBuf)> {
    let ds = generate_synthetic(cfg)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_csv(&ds, out)?;
    let schema_path = schema_path_for(out);
    let schema = serde_json::to_string_pretty(&Schema::for_dataset(&ds))?;
    write_file(&schema_path, schema.as_bytes())?;
    Ok((ds, schema_path))
}

/// Train/held-out split stratified on the joint groups of `attrs`; falls
/// back to a plain split when some group has a single row.
pub(crate) fn audit_split(
    ds: &Dataset,
    attrs: &[String],
    fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset, bool)> {
    let idx = derive_intersections(ds, attrs, 1)?;
    let strata: Vec<u64> = idx.row_groups().iter().map(|&g| g as u64).collect();
    let (rows, stratified) = match split_indices(ds.n_rows(), fraction, seed, Some(&strata)) {
        Ok(rows) => (rows, true),
        Err(Error::Stratification(_)) => (split_indices(ds.n_rows(), fraction, seed, None)?, false),
        Err(e) => return Err(e),
    };
    Ok((ds.select_rows(&rows.0), ds.select_rows(&rows.1), stratified))
}

pub(crate) fn train_model(train: &Dataset, cfg: &AuditConfig) -> Result<MultiLabelModel> {
    if train.task().is_classification() {
        fit_multilabel(train, &cfg.learner, cfg.include_protected)
    } else {
        fit_multilabel_regression(train, cfg.lasso_lambda, &cfg.lasso, cfg.include_protected)
    }
}

/// Scores and decisions (spend predictions for regression) of `model`.
pub(crate) fn score(
    model: &MultiLabelModel,
    ds: &Dataset,
    threshold: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let scores = model.predict_scores(ds)?;
    let preds = if ds.task().is_classification() {
        scores.map(|p| if p >= threshold { 1.0 } else { 0.0 })
    } else {
        scores.clone()
    };
    Ok((scores, preds))
}

/// Splits, trains the configured learner on the training part and measures
/// it on the held-out part.
pub fn audit(ds: &Dataset, dataset_hash: Option<String>, cfg: &AuditConfig) -> Result<AuditReport> {
    let started = now_ms();
    let attrs = resolve_attrs(ds, &cfg.attrs)?;
    let (train, test, stratified) = audit_split(ds, &attrs, cfg.holdout_fraction, cfg.seed)?;
    let model = train_model(&train, cfg)?;
    let model_hash = sha256_hex(model.to_json()?.as_bytes());
    let (scores, preds) = score(&model, &test, cfg.threshold)?;
    build_report(
        &Evaluation {
            ds: &test,
            preds: &preds,
            scores: Some(&scores),
            evaluated_on: "held_out",
        },
        &RunContext {
            full: ds,
            n_train: train.n_rows(),
            dataset_hash,
            model_hash: Some(model_hash),
            command: "audit",
            started_unix_ms: started,
            split_stratified: stratified,
        },
        cfg,
    )
}

/// Model trained by [`audit`], for callers that want to keep it.
pub fn audit_model(ds: &Dataset, cfg: &AuditConfig) -> Result<MultiLabelModel> {
    let attrs = resolve_attrs(ds, &cfg.attrs)?;
    let (train, _, _) = audit_split(ds, &attrs, cfg.holdout_fraction, cfg.seed)?;
    train_model(&train, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyReport {
    pub report_version: String,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub dataset_hash: Option<String>,
    pub timestamps: Timestamps,
    pub config: ProxyConfig,
    /// Columns the tests saw: features, then any appended predictions.
    pub tested_columns: Vec<String>,
    pub results: Vec<MulticlassResult>,
}

impl ProxyReport {
    /// Rows `attribute,level,n_rows,statistic,observed,p_value,p_holm,n_permutations,seed`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "attribute",
            "level",
            "n_rows",
            "statistic",
            "observed",
            "p_value",
            "p_holm",
            "n_permutations",
            "seed",
        ])?;
        for r in &self.results {
            for l in &r.levels {
                w.write_record([
                    r.attribute.clone(),
                    l.level.clone(),
                    l.n_rows.to_string(),
                    variant_name(&l.result.statistic),
                    l.result.observed.to_string(),
                    l.result.p_value.to_string(),
                    l.p_holm.to_string(),
                    l.result.n_permutations.to_string(),
                    l.result.seed.to_string(),
                ])?;
            }
        }
        finish(w)
    }
}

/// One-vs-rest proxy tests of every attribute in `attrs` (all when empty)
/// against the features.
pub fn proxy(
    ds: &Dataset,
    dataset_hash: Option<String>,
    attrs: &[String],
    cfg: &ProxyConfig,
) -> Result<ProxyReport> {
    let started = now_ms();
    let attrs = resolve_attrs(ds, attrs)?;
    let mut names = ds.feature_names().to_vec();
    let x = if cfg.augment_with_predictions {
        let model = if ds.task().is_classification() {
            fit_multilabel(ds, &cfg.learner, false)?
        } else {
            fit_multilabel_regression(ds, 0.01, &Default::default(), false)?
        };
        let (_, preds) = score(&model, ds, cfg.threshold)?;
        names.extend(ds.label_names().iter().map(|l| format!("predicted:{l}")));
        hstack(ds.features(), &preds)
    } else {
        ds.features().clone()
    };
    let levels = (!cfg.levels.is_empty()).then_some(cfg.levels.as_slice());
    let results = attrs
        .iter()
        .map(|a| {
            let mut r = multiclass_attr_test(&x, ds.attribute(a)?, levels, &names, &cfg.test)?;
            if let Some(limit) = cfg.null_sample_limit {
                for l in &mut r.levels {
                    l.result = l.result.truncated(limit);
                }
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProxyReport {
        report_version: REPORT_VERSION.to_string(),
        command: "proxy".to_string(),
        seed: cfg.test.seed,
        config_hash: sha256_hex(&serde_json::to_vec(cfg)?),
        dataset_hash,
        timestamps: Timestamps {
            started_unix_ms: started,
            finished_unix_ms: now_ms(),
        },
        config: cfg.clone(),
        tested_columns: names,
        results,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeReport {
    pub report_version: String,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub dataset_hash: Option<String>,
    pub model_hash: String,
    pub timestamps: Timestamps,
    pub config: DecomposeConfig,
    pub label: String,
    pub bias: BiasKind,
    pub mean_bias: f64,
    /// Constant regressors left out of the design, as `block:name`.
    pub dropped_columns: Vec<String>,
    pub fit: DecompositionFit,
    pub vcov: VcovReport,
}

impl DecomposeReport {
    /// Rows `name,block,estimate,std_error,t,ci_low,ci_high`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "name",
            "block",
            "estimate",
            "std_error",
            "t",
            "ci_low",
            "ci_high",
        ])?;
        for c in self.fit.coefficients() {
            w.write_record([
                c.name.clone(),
                variant_name(&c.block),
                c.estimate.to_string(),
                c.std_error.to_string(),
                c.t.to_string(),
                c.ci_low.to_string(),
                c.ci_high.to_string(),
            ])?;
        }
        finish(w)
    }
}

/// Per-row bias of label `k`.
pub fn bias_values(kind: BiasKind, y: &[f64], preds: &[f64], scores: &[f64]) -> Vec<f64> {
    match kind {
        BiasKind::SignedError => preds.iter().zip(y).map(|(p, y)| p - y).collect(),
        BiasKind::Error => preds.iter().zip(y).map(|(p, y)| (p - y).abs()).collect(),
        BiasKind::Residual => scores.iter().zip(y).map(|(s, y)| y - s).collect(),
    }
}

/// Keeps the non-constant columns of `m`; the dropped names are appended to
/// `dropped` as `block:name`.
fn drop_constant(
    m: &DMatrix<f64>,
    names: &[String],
    block: Block,
    dropped: &mut Vec<String>,
) -> (DMatrix<f64>, Vec<String>) {
    let keep: Vec<usize> = (0..m.ncols())
        .filter(|&j| {
            let col = m.column(j);
            let constant = col.iter().all(|&v| v == col[0]);
            if constant {
                dropped.push(format!("{}:{}", variant_name(&block), names[j]));
            }
            !constant
        })
        .collect();
    let kept = DMatrix::from_fn(m.nrows(), keep.len(), |i, j| m[(i, keep[j])]);
    (kept, keep.iter().map(|&j| names[j].clone()).collect())
}

/// Fits the learner on all rows and regresses the chosen bias of one label
/// on features, predicted labels and demographic dummies.
pub fn decompose(
    ds: &Dataset,
    dataset_hash: Option<String>,
    cfg: &DecomposeConfig,
) -> Result<DecomposeReport> {
    let started = now_ms();
    let k = match &cfg.label {
        Some(name) => ds
            .label_names()
            .iter()
            .position(|l| l == name)
            .ok_or_else(|| Error::config(format!("unknown label {name:?}")))?,
        None => 0,
    };
    let attrs = resolve_attrs(ds, &cfg.attrs)?;
    let model = if ds.task().is_classification() {
        fit_multilabel(ds, &cfg.learner, false)?
    } else {
        fit_multilabel_regression(ds, cfg.lasso_lambda, &cfg.lasso, false)?
    };
    let (scores, preds) = score(&model, ds, cfg.threshold)?;
    let col = |m: &DMatrix<f64>| m.column(k).iter().copied().collect::<Vec<f64>>();
    let bias = bias_values(cfg.bias, &ds.label(k), &col(&preds), &col(&scores));

    let mut dropped = Vec::new();
    let mut parts = Vec::new();
    if cfg.include_features {
        parts.push((
            Block::Feature,
            drop_constant(
                ds.features(),
                ds.feature_names(),
                Block::Feature,
                &mut dropped,
            ),
        ));
    }
    if cfg.include_predictions {
        let names: Vec<String> = ds
            .label_names()
            .iter()
            .map(|l| format!("predicted:{l}"))
            .collect();
        parts.push((
            Block::PredictedLabel,
            drop_constant(&preds, &names, Block::PredictedLabel, &mut dropped),
        ));
    }
    let enc = OneHotEncoding::observed(ds, &attrs)?;
    parts.push((
        Block::Demographic,
        drop_constant(
            &enc.transform(ds)?,
            &enc.column_names(),
            Block::Demographic,
            &mut dropped,
        ),
    ));
    let blocks: Vec<DesignBlock<'_>> = parts
        .iter()
        .map(|(block, (m, names))| DesignBlock {
            block: *block,
            matrix: m,
            names,
        })
        .collect();
    let fit = bias_decomposition(&bias, &blocks)?;
    let vcov = coef_vcov_report(&fit, cfg.correlation_flag);
    Ok(DecomposeReport {
        report_version: REPORT_VERSION.to_string(),
        command: "decompose".to_string(),
        seed: cfg.seed,
        config_hash: sha256_hex(&serde_json::to_vec(cfg)?),
        dataset_hash,
        model_hash: sha256_hex(model.to_json()?.as_bytes()),
        timestamps: Timestamps {
            started_unix_ms: started,
            finished_unix_ms: now_ms(),
        },
        config: cfg.clone(),
        label: ds.label_names()[k].clone(),
        bias: cfg.bias,
        mean_bias: bias.iter().sum::<f64>() / bias.len() as f64,
        dropped_columns: dropped,
        fit,
        vcov,
    })
}

/// Reports on the training and the held-out rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReports {
    pub train: AuditReport,
    pub held_out: AuditReport,
}

/// Outcome of mitigating one label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelOutcome {
    pub label: String,
    pub constraint: Constraint,
    pub baseline_train: DecisionEvaluation,
    pub baseline_held_out: DecisionEvaluation,
    pub train: DecisionEvaluation,
    pub held_out: DecisionEvaluation,
    /// Held-out accuracy after minus before.
    pub accuracy_delta: f64,
    /// Share of held-out decisions left unchanged.
    pub agreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigationReport {
    pub report_version: String,
    pub command: String,
    pub strategy: Strategy,
    pub seed: u64,
    pub config_hash: String,
    pub dataset_hash: Option<String>,
    pub model_hash: String,
    pub timestamps: Timestamps,
    pub config: MitigateConfig,
    pub before: SplitReports,
    pub after: SplitReports,
    pub outcomes: Vec<LabelOutcome>,
    pub policy: Option<ThresholdPolicy>,
    pub classifiers: Vec<RandomizedClassifier>,
    /// Label whose trade-off is tabulated.
    pub tradeoff_label: String,
    pub tradeoff: Vec<TradeoffPoint>,
    pub envelope: Vec<EnvelopePoint>,
}

impl MitigationReport {
    pub fn exceeds_threshold(&self) -> bool {
        self.after.held_out.exceeds_threshold()
    }
}

fn constraint_for(c: Criterion) -> Constraint {
    match c {
        Criterion::EqualSelectionRate => Constraint::DemographicParity,
        Criterion::EqualTpr => Constraint::EqualOpportunity,
    }
}

fn column(m: &DMatrix<f64>, k: usize) -> Vec<f64> {
    m.column(k).iter().copied().collect()
}

fn select_columns(m: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

fn agreement(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / a.len().max(1) as f64
}

/// Trains the audit learner, mitigates the chosen labels with `strategy`
/// and reports before/after on both splits plus a trade-off table for the
/// first mitigated label.
pub fn mitigate(
    ds: &Dataset,
    dataset_hash: Option<String>,
    strategy: Strategy,
    cfg: &MitigateConfig,
) -> Result<MitigationReport> {
    let started = now_ms();
    if !ds.task().is_classification() {
        return Err(Error::config("mitigation needs binary labels"));
    }
    let a = &cfg.audit;
    let attrs = resolve_attrs(ds, &a.attrs)?;
    let labels: Vec<usize> = if cfg.labels.is_empty() {
        (0..ds.n_labels()).collect()
    } else {
        cfg.labels
            .iter()
            .map(|l| {
                ds.label_names()
                    .iter()
                    .position(|n| n == l)
                    .ok_or_else(|| Error::config(format!("unknown label {l:?}")))
            })
            .collect::<Result<_>>()?
    };
    let (train, test, stratified) = audit_split(ds, &attrs, a.holdout_fraction, a.seed)?;
    let model = train_model(&train, a)?;
    let model_hash = sha256_hex(model.to_json()?.as_bytes());
    let (s_tr, p_tr) = score(&model, &train, a.threshold)?;
    let (s_te, p_te) = score(&model, &test, a.threshold)?;
    let idx_tr = derive_intersections(&train, &attrs, a.min_support)?;
    let idx_te = derive_intersections(&test, &attrs, a.min_support)?;
    let names: Vec<String> = labels
        .iter()
        .map(|&k| ds.label_names()[k].clone())
        .collect();

    let (mut q_tr, mut q_te) = (p_tr.clone(), p_te.clone());
    let (mut soft_tr, mut soft_te) = (s_tr.clone(), s_te.clone());
    let (constraint, policy, classifiers) = match strategy {
        Strategy::Thresholds => {
            let policy = fit_thresholds(
                &select_columns(&s_tr, &labels),
                &select_columns(train.targets(), &labels),
                &idx_tr,
                cfg.criterion,
                cfg.tol,
                &names,
            )?;
            let d_tr = apply_thresholds(&select_columns(&s_tr, &labels), &idx_tr, &policy)?;
            let d_te = apply_thresholds(&select_columns(&s_te, &labels), &idx_te, &policy)?;
            for (j, &k) in labels.iter().enumerate() {
                q_tr.set_column(k, &d_tr.column(j));
                q_te.set_column(k, &d_te.column(j));
            }
            (constraint_for(cfg.criterion), Some(policy), Vec::new())
        }
        Strategy::Egr => {
            let egr = EgrConfig {
                base: a.learner,
                ..cfg.egr.clone()
            };
            let groups_tr = derive_intersections(&train, &attrs, 1)?;
            let rcs = exponentiated_gradient_multilabel(
                train.features(),
                &select_columns(train.targets(), &labels),
                &groups_tr,
                &egr,
            )?;
            for (rc, &k) in rcs.iter().zip(&labels) {
                let (e_tr, e_te) = (
                    rc.expected(train.features())?,
                    rc.expected(test.features())?,
                );
                let hard = |e: &[f64]| {
                    e.iter()
                        .map(|&v| if v >= 0.5 { 1.0 } else { 0.0 })
                        .collect::<Vec<_>>()
                };
                q_tr.set_column(k, &nalgebra::DVector::from_vec(hard(&e_tr)));
                q_te.set_column(k, &nalgebra::DVector::from_vec(hard(&e_te)));
                soft_tr.set_column(k, &nalgebra::DVector::from_vec(e_tr));
                soft_te.set_column(k, &nalgebra::DVector::from_vec(e_te));
            }
            (egr.constraint, None, rcs)
        }
    };

    let groups_tr = derive_intersections(&train, &attrs, 1)?;
    let groups_te = derive_intersections(&test, &attrs, 1)?;
    let outcomes = labels
        .iter()
        .map(|&k| {
            let (y_tr, y_te) = (train.label(k), test.label(k));
            // EGR is judged on its expected predictions, thresholds on decisions
            let (after_tr, after_te) = if classifiers.is_empty() {
                (column(&q_tr, k), column(&q_te, k))
            } else {
                (column(&soft_tr, k), column(&soft_te, k))
            };
            let held_out = evaluate_predictions(constraint, &after_te, &y_te, &groups_te)?;
            let baseline_held_out =
                evaluate_predictions(constraint, &column(&p_te, k), &y_te, &groups_te)?;
            Ok(LabelOutcome {
                label: ds.label_names()[k].clone(),
                constraint,
                baseline_train: evaluate_predictions(
                    constraint,
                    &column(&p_tr, k),
                    &y_tr,
                    &groups_tr,
                )?,
                train: evaluate_predictions(constraint, &after_tr, &y_tr, &groups_tr)?,
                accuracy_delta: held_out.accuracy - baseline_held_out.accuracy,
                agreement: agreement(&column(&q_te, k), &column(&p_te, k)),
                baseline_held_out,
                held_out,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let k0 = labels[0];
    let mut tradeoff = match strategy {
        Strategy::Thresholds => {
            let grid = cfg
                .tradeoff_grid
                .clone()
                .unwrap_or_else(|| THRESHOLD_GRID.to_vec());
            let pr_tr = select_columns(&s_tr, &[k0]);
            let pr_te = select_columns(&s_te, &[k0]);
            let y_tr_m = select_columns(train.targets(), &[k0]);
            let (y_tr, y_te) = (train.label(k0), test.label(k0));
            grid.iter()
                .map(|&tol| {
                    let pol =
                        fit_thresholds(&pr_tr, &y_tr_m, &idx_tr, cfg.criterion, tol, &names[..1])?;
                    let d_tr = column(&apply_thresholds(&pr_tr, &idx_tr, &pol)?, 0);
                    let d_te = column(&apply_thresholds(&pr_te, &idx_te, &pol)?, 0);
                    let tr = evaluate_predictions(constraint, &d_tr, &y_tr, &groups_tr)?;
                    let te = evaluate_predictions(constraint, &d_te, &y_te, &groups_te)?;
                    Ok(TradeoffPoint {
                        knob: tol,
                        seed: a.seed,
                        accuracy: te.accuracy,
                        violation: te.violation,
                        converged: pol.achieved[0],
                        rounds: 0,
                        train: tr,
                        held_out: te,
                        dominated: false,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        Strategy::Egr => {
            let grid = cfg
                .tradeoff_grid
                .clone()
                .unwrap_or_else(|| EPSILON_GRID.to_vec());
            let sweep = SweepConfig {
                egr: EgrConfig {
                    base: a.learner,
                    ..cfg.egr.clone()
                },
                label: k0,
                holdout_fraction: a.holdout_fraction,
                seed: a.seed,
            };
            pareto_sweep(ds, &attrs, &grid, &sweep)?
        }
    };
    mark_dominated(&mut tradeoff);
    let envelope = feasible_envelope(&tradeoff);

    let report =
        |preds: &DMatrix<f64>, scores: &DMatrix<f64>, part: &Dataset, on: &str, command: &str| {
            build_report(
                &Evaluation {
                    ds: part,
                    preds,
                    scores: Some(scores),
                    evaluated_on: on,
                },
                &RunContext {
                    full: ds,
                    n_train: train.n_rows(),
                    dataset_hash: dataset_hash.clone(),
                    model_hash: Some(model_hash.clone()),
                    command,
                    started_unix_ms: started,
                    split_stratified: stratified,
                },
                a,
            )
        };
    let before = SplitReports {
        train: report(&p_tr, &s_tr, &train, "train", "mitigate:before")?,
        held_out: report(&p_te, &s_te, &test, "held_out", "mitigate:before")?,
    };
    let after = SplitReports {
        train: report(&q_tr, &soft_tr, &train, "train", "mitigate:after")?,
        held_out: report(&q_te, &soft_te, &test, "held_out", "mitigate:after")?,
    };
    Ok(MitigationReport {
        report_version: REPORT_VERSION.to_string(),
        command: "mitigate".to_string(),
        strategy,
        seed: a.seed,
        config_hash: sha256_hex(&serde_json::to_vec(cfg)?),
        dataset_hash,
        model_hash,
        timestamps: Timestamps {
            started_unix_ms: started,
            finished_unix_ms: now_ms(),
        },
        config: cfg.clone(),
        before,
        after,
        outcomes,
        policy,
        classifiers,
        tradeoff_label: ds.label_names()[k0].clone(),
        tradeoff,
        envelope,
    })
}

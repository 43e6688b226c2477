//! Group-specific decision thresholds that equalize selection rates,
//! fitted on training data and applied to held-out rows.

use fairaudit::dataset::{
    derive_intersections, generate_synthetic, split, IntersectionIndex, SynthConfig,
};
use fairaudit::learners::{fit_multilabel, LogisticConfig};
use fairaudit::metrics::{disparity, metric_table, MetricId};
use fairaudit::mitigation::{apply_thresholds, fit_thresholds, Criterion};
use nalgebra::DMatrix;

/// Selection-rate disparity of the first label.
fn gap(
    targets: &DMatrix<f64>,
    preds: &DMatrix<f64>,
    idx: &IntersectionIndex,
) -> fairaudit::Result<f64> {
    let names: Vec<String> = (1..=targets.ncols())
        .map(|k| format!("label_{k}"))
        .collect();
    let t = metric_table(targets, preds, idx, MetricId::SelectionRate, &names)?;
    Ok(disparity(&t, 0, false)?.value)
}

fn main() -> fairaudit::Result<()> {
    let ds = generate_synthetic(&SynthConfig::planted_gap(8000, 2))?;
    let (train, test) = split(&ds, 0.3, 42, None)?;
    let model = fit_multilabel(
        &train,
        &LogisticConfig {
            l2: 1e-3,
            ..Default::default()
        },
        false,
    )?;
    let attrs = ["group".to_string()];
    let (idx_tr, idx_te) = (
        derive_intersections(&train, &attrs, 30)?,
        derive_intersections(&test, &attrs, 30)?,
    );
    let (p_tr, p_te) = (model.predict_scores(&train)?, model.predict_scores(&test)?);

    let policy = fit_thresholds(
        &p_tr,
        train.targets(),
        &idx_tr,
        Criterion::EqualSelectionRate,
        0.02,
        train.label_names(),
    )?;
    println!("{}", policy.to_json()?);

    let before_tr = gap(train.targets(), &model.predict(&train, 0.5)?, &idx_tr)?;
    let after_tr = gap(
        train.targets(),
        &apply_thresholds(&p_tr, &idx_tr, &policy)?,
        &idx_tr,
    )?;
    let before_te = gap(test.targets(), &model.predict(&test, 0.5)?, &idx_te)?;
    let after_te = gap(
        test.targets(),
        &apply_thresholds(&p_te, &idx_te, &policy)?,
        &idx_te,
    )?;
    println!("label_1 selection-rate disparity: train {before_tr:.3} -> {after_tr:.3}, held-out {before_te:.3} -> {after_te:.3}");
    Ok(())
}

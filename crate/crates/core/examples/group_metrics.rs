//! Per-group metric tables, gaps and disparities for a model trained on
//! data with a planted selection gap between groups `a` and `b`.

use fairaudit::dataset::{derive_intersections, generate_synthetic, split, SynthConfig};
use fairaudit::learners::{fit_multilabel, LogisticConfig};
use fairaudit::metrics::{disparity, fairness_gap, metric_table, GapMode, MetricId, Reference};

fn main() -> fairaudit::Result<()> {
    let ds = generate_synthetic(&SynthConfig::planted_gap(6000, 1))?;
    let (train, test) = split(&ds, 0.3, 42, None)?;
    let model = fit_multilabel(
        &train,
        &LogisticConfig {
            l2: 1e-3,
            ..Default::default()
        },
        false,
    )?;
    let preds = model.predict(&test, 0.5)?;
    let idx = derive_intersections(&test, &["group".to_string()], 30)?;

    for metric in [
        MetricId::SelectionRate,
        MetricId::RecallTpr,
        MetricId::Fpr,
        MetricId::Accuracy,
    ] {
        let table = metric_table(test.targets(), &preds, &idx, metric, test.label_names())?;
        for (k, label) in table.labels.iter().enumerate() {
            let values: Vec<String> = table
                .groups
                .iter()
                .enumerate()
                .map(|(g, name)| match table.value(k, g) {
                    Some(v) => format!("{name}={v:.3}"),
                    None => format!("{name}=undefined"),
                })
                .collect();
            let d = disparity(&table, k, false)?;
            println!(
                "{metric:>14} {label}: {}  disparity {:.3}",
                values.join(" "),
                d.value
            );
        }
    }

    let sel = metric_table(
        test.targets(),
        &preds,
        &idx,
        MetricId::SelectionRate,
        test.label_names(),
    )?;
    let ratio = fairness_gap(&sel, 0, GapMode::Ratio, &Reference::Maximum)?;
    for (g, c) in ratio.groups.iter().zip(&ratio.gaps) {
        println!(
            "selection-rate ratio of {g} to {}: {:?}",
            ratio.reference_group, c.value
        );
    }
    Ok(())
}

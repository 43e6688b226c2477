//! Fairness tensor over label pairs, its aggregates, and stakeholder
//! weighting from a ranking of groups and labels.

use fairaudit::dataset::{derive_intersections, generate_synthetic, split, SynthConfig};
use fairaudit::learners::{fit_multilabel, LogisticConfig};
use fairaudit::metrics::{metric_table, MetricId};
use fairaudit::tensor::{
    aggregate, apply_weights, build_tensor, BuildMode, GroupLabelGrid, Ranking, Scheme,
    WeightMatrix,
};

fn main() -> fairaudit::Result<()> {
    let ds = generate_synthetic(&SynthConfig::planted_awareness(6000, true, 3))?;
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
    let idx = derive_intersections(&test, &["gender".to_string()], 30)?;
    let table = metric_table(
        test.targets(),
        &preds,
        &idx,
        MetricId::RecallTpr,
        test.label_names(),
    )?;

    let tensor = build_tensor(&GroupLabelGrid::from_table(&table), BuildMode::Masked)?;
    let (l, k) = tensor.shape();
    println!(
        "recall tensor: {l} groups x {k} x {k} labels, antisymmetry error {:e}",
        tensor.antisymmetry_error()
    );
    for scheme in [
        Scheme::WeightedMean,
        Scheme::Median,
        Scheme::HarmonicMeanAbs,
        Scheme::MaxAbs,
    ] {
        let a = aggregate(&tensor, scheme, None)?;
        println!("{scheme:?}: {:.4} over {} cells", a.value, a.n_cells);
    }

    // stakeholders care most about the first group and the second label
    let mut labels = tensor.labels.clone();
    labels.swap(0, 1);
    let ranking = Ranking {
        groups: tensor.groups.clone(),
        labels,
    };
    let w = WeightMatrix::from_ranking(&ranking, &tensor.groups, &tensor.labels, true)?;
    let weighted = apply_weights(&tensor, &w)?;
    let a = aggregate(&weighted, Scheme::MaxAbs, None)?;
    println!("weighted max |G|: {:.4} at {:?}", a.value, a.argmax);
    print!("{}", weighted.to_csv()?);
    Ok(())
}

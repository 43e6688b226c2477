//! Generate a transaction-shaped dataset, write it with its schema and
//! print the data-quality summary.
//!
//! cargo run --example synth_dataset -- [out.csv]

use fairaudit::dataset::{data_quality_report, LabelSummary, QualityOptions, SynthConfig};

fn main() -> fairaudit::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "synth.csv".to_string());
    let cfg = SynthConfig {
        n: 5000,
        ..SynthConfig::default()
    };
    let (ds, schema) = fairaudit::cli::commands::synth(&cfg, out.as_ref())?;
    println!(
        "wrote {out} ({} rows, {} features, {} labels) and {}",
        ds.n_rows(),
        ds.n_features(),
        ds.n_labels(),
        schema.display()
    );

    let q = data_quality_report(&ds, &QualityOptions::default())?;
    for u in &q.unspecified_rates {
        println!("{:>10}: {:.2}% unspecified", u.attribute, 100.0 * u.rate);
    }
    for l in &q.labels {
        if let LabelSummary::PositiveRate { label, rate, .. } = l {
            println!("{label:>10}: positive rate {rate:.3}");
        }
    }
    let small = q.groups.iter().filter(|g| g.below_min_support).count();
    println!(
        "{} intersectional groups, {small} below minimum support",
        q.groups.len()
    );
    for p in &q.high_correlation_pairs {
        println!("correlated features {} / {}: r = {:.3}", p.a, p.b, p.r);
    }
    Ok(())
}

//! The full audit as run by the `audit` command: split, train, measure on
//! held-out rows, flag disparities above a threshold.

use fairaudit::cli::commands::audit;
use fairaudit::cli::config::AuditConfig;
use fairaudit::dataset::{generate_synthetic, SynthConfig};

fn main() -> fairaudit::Result<()> {
    let ds = generate_synthetic(&SynthConfig::planted_gap(5000, 6))?;
    let cfg = AuditConfig {
        fail_threshold: Some(0.1),
        ..AuditConfig::default()
    };
    let report = audit(&ds, None, &cfg)?;
    println!(
        "{} rows ({} train, {} held out), model {}",
        report.metadata.n_rows,
        report.metadata.n_train,
        report.metadata.n_evaluated,
        &report.metadata.model_hash.as_deref().unwrap_or("-")[..12]
    );
    for d in &report.disparities {
        println!(
            "{:>14} {}: {:.3} ({} {:.3} vs {} {:.3})",
            d.metric, d.label, d.value, d.max_group, d.max_value, d.min_group, d.min_value
        );
    }
    if let Some(t) = &report.tensor {
        for a in &t.aggregates {
            println!("tensor {:?}: {:.4}", a.scheme, a.value);
        }
    }
    println!("breaches: {}", report.breaches.len());
    for b in &report.breaches {
        println!(
            "  {} on {}: {:.3} > {}",
            b.metric, b.label, b.value, b.threshold
        );
    }
    Ok(())
}

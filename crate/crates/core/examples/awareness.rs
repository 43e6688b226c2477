//! Does using the protected attributes as inputs change held-out
//! performance? Unaware minus aware, per label and metric.

use fairaudit::dataset::{generate_synthetic, SynthConfig};
use fairaudit::metrics::MetricId;
use fairaudit::mitigation::{awareness_comparison, AwarenessConfig};

fn main() -> fairaudit::Result<()> {
    let ds = generate_synthetic(&SynthConfig::planted_awareness(6000, true, 5))?;
    let cmp = awareness_comparison(&ds, &AwarenessConfig::default())?;
    print!("{}", cmp.to_csv()?);
    let k = 1;
    println!(
        "{}: recall difference {:+.3} (negative: the aware model finds more positives)",
        cmp.labels[k],
        cmp.difference_of(k, MetricId::RecallTpr)
            .unwrap_or(f64::NAN)
    );
    Ok(())
}

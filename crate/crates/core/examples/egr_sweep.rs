//! Exponentiated-gradient reduction under demographic parity, and the
//! accuracy/violation trade-off over a grid of constraint slacks.

use fairaudit::dataset::{generate_synthetic, SynthConfig};
use fairaudit::mitigation::{
    feasible_envelope, pareto_sweep, sweep_to_csv, EgrConfig, SweepConfig,
};

fn main() -> fairaudit::Result<()> {
    let ds = generate_synthetic(&SynthConfig::planted_gap(10_000, 4))?;
    let cfg = SweepConfig {
        egr: EgrConfig {
            max_iter: 40,
            ..EgrConfig::default()
        },
        ..SweepConfig::default()
    };
    let grid = [0.01, 0.02, 0.05, 0.1, 0.3, 1.0];
    let points = pareto_sweep(&ds, &["group".to_string()], &grid, &cfg)?;
    for p in &points {
        println!(
            "eps {:<5} held-out accuracy {:.3} violation {:.3} | train violation {:.3} | {} rounds{}",
            p.knob,
            p.accuracy,
            p.violation,
            p.train.violation,
            p.rounds,
            if p.dominated { " (dominated)" } else { "" }
        );
    }
    for e in feasible_envelope(&points) {
        println!("envelope at eps {}: {:.3}", e.knob, e.envelope);
    }
    print!("{}", sweep_to_csv(&points)?);
    Ok(())
}

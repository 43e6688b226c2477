//! Bias decomposition: regress a per-row bias on features, predicted
//! labels and demographic dummies, and recover planted effects.

use fairaudit::rng::{Purpose, Stream};
use fairaudit::statistics::{bias_decomposition, coef_vcov_report, Block, DesignBlock};
use nalgebra::DMatrix;

fn main() -> fairaudit::Result<()> {
    let n = 5000;
    let mut rng = Stream::new(7, Purpose::Experiment, 0);
    let x = DMatrix::from_fn(n, 2, |_, _| rng.normal());
    let yhat = DMatrix::from_fn(n, 1, |_, _| if rng.bernoulli(0.3) { 1.0 } else { 0.0 });
    let demo = DMatrix::from_fn(n, 1, |_, _| if rng.bernoulli(0.5) { 1.0 } else { 0.0 });
    // planted: 0.4·x1 + 0·x2 + 0.25·ŷ − 0.15·[group = b], noise sd 0.01
    let bias: Vec<f64> = (0..n)
        .map(|i| {
            0.1 + 0.4 * x[(i, 0)] + 0.25 * yhat[(i, 0)] - 0.15 * demo[(i, 0)] + 0.01 * rng.normal()
        })
        .collect();

    let (xn, yn, dn) = (
        vec!["x1".to_string(), "x2".to_string()],
        vec!["predicted:label_1".to_string()],
        vec!["group=b".to_string()],
    );
    let fit = bias_decomposition(
        &bias,
        &[
            DesignBlock {
                block: Block::Feature,
                matrix: &x,
                names: &xn,
            },
            DesignBlock {
                block: Block::PredictedLabel,
                matrix: &yhat,
                names: &yn,
            },
            DesignBlock {
                block: Block::Demographic,
                matrix: &demo,
                names: &dn,
            },
        ],
    )?;
    for c in fit.coefficients() {
        println!(
            "{:>20} {:>16?}: {:+.4} ± {:.4}  95% CI [{:+.4}, {:+.4}]",
            c.name, c.block, c.estimate, c.std_error, c.ci_low, c.ci_high
        );
    }
    let vcov = coef_vcov_report(&fit, 0.8);
    println!(
        "residual variance {:.2e}; {} strongly correlated coefficient pairs",
        fit.sigma2,
        vcov.flagged.len()
    );
    Ok(())
}

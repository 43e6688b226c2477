//! The linear learners: OLS with coefficient covariance, L2-penalized
//! logistic regression, and lasso along a penalty path.

use fairaudit::learners::{
    fit_lasso, fit_logistic, fit_ols, lasso_lambda_max, LassoConfig, LogisticConfig,
};
use fairaudit::rng::{Purpose, Stream};
use nalgebra::DMatrix;

fn main() -> fairaudit::Result<()> {
    let n = 1000;
    let mut rng = Stream::new(3, Purpose::Experiment, 0);
    let x = DMatrix::from_fn(n, 4, |_, _| rng.normal());
    let y: Vec<f64> = (0..n)
        .map(|i| 1.0 + 2.0 * x[(i, 0)] - x[(i, 2)] + 0.1 * rng.normal())
        .collect();

    let ols = fit_ols(&x, &y)?;
    let se = ols.std_errors().unwrap_or_default();
    println!(
        "OLS intercept {:.3}, coefficients {:.3?}, std errors {:.4?}",
        ols.intercept, ols.coefficients, se
    );

    let lmax = lasso_lambda_max(&x, &y, true);
    for frac in [1.0, 0.5, 0.1, 0.01] {
        let fit = fit_lasso(&x, &y, frac * lmax, &LassoConfig::default())?;
        println!("lasso lambda {:.4}: {:.3?}", frac * lmax, fit.coefficients);
    }

    let labels: Vec<f64> = (0..n)
        .map(|i| {
            if x[(i, 0)] + 0.5 * rng.normal() > 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let logit = fit_logistic(
        &x,
        &labels,
        &LogisticConfig {
            l2: 1e-3,
            ..Default::default()
        },
    )?;
    println!(
        "logistic: {:.3?} after {} iterations (gradient norm {:.1e})",
        logit.coefficients, logit.iterations, logit.optimality
    );
    Ok(())
}

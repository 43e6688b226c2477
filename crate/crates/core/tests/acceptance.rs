//! Acceptance suite: ten criteria, each checked against an independent
//! oracle at its stated tolerance and runtime budget. Prints one PASS/FAIL
//! line per criterion and fails if any criterion fails.

use std::time::Instant;

use fairaudit::cli::commands::{audit, synth};
use fairaudit::cli::config::AuditConfig;
use fairaudit::dataset::{
    generate_synthetic, split_indices, Dataset, GroupKey, IntersectionIndex, SynthConfig,
};
use fairaudit::learners::{
    fit_lasso, fit_logistic, fit_multilabel, fit_multitask_lasso, fit_ols, lasso_lambda_max,
    logistic_gradient, logistic_objective, LassoConfig, LogisticConfig,
};
use fairaudit::metrics::{metric_table, CellStatus, MetricId};
use fairaudit::mitigation::{
    apply_thresholds, awareness_comparison, exponentiated_gradient, fit_thresholds,
    AwarenessConfig, Constraint, Criterion, EgrConfig,
};
use fairaudit::rng::{Purpose, Stream};
use fairaudit::statistics::{
    bias_decomposition, two_sample_test, Block, DesignBlock, TwoSampleConfig,
};
use fairaudit::tensor::{apply_weights, build_tensor, BuildMode, GroupLabelGrid, WeightMatrix};
use nalgebra::{DMatrix, DVector};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: fairaudit::Result<T>) -> Result<T, String> {
    r.map_err(|e| format!("library error: {e}"))
}

fn rng(case: u64) -> Stream {
    Stream::new(case, Purpose::Experiment, 0)
}

// ---------------------------------------------------------------- criterion 1

fn random_index(r: &mut Stream, n: usize, groups: usize, min_support: usize) -> IntersectionIndex {
    let row_group: Vec<usize> = (0..n)
        .map(|i| if i < groups { i } else { r.below(groups) })
        .collect();
    let keys = (0..groups)
        .map(|g| GroupKey(vec![format!("g{g}")]))
        .collect();
    IntersectionIndex::from_assignments(vec!["attr".into()], keys, row_group, min_support).unwrap()
}

/// Naive recount of one classification cell: `(numerator, denominator)`.
fn recount(metric: MetricId, y: &[f64], h: &[f64], rows: &[usize]) -> (f64, f64) {
    let (mut tp, mut fp, mut tn, mut fn_) = (0u32, 0u32, 0u32, 0u32);
    for &i in rows {
        match (y[i] == 1.0, h[i] == 1.0) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fn_ += 1,
        }
    }
    let n = rows.len() as u32;
    let (num, den) = match metric {
        MetricId::SelectionRate => (tp + fp, n),
        MetricId::Accuracy => (tp + tn, n),
        MetricId::Precision | MetricId::Ppv => (tp, tp + fp),
        MetricId::RecallTpr => (tp, tp + fn_),
        MetricId::Fpr => (fp, fp + tn),
        MetricId::Fnr => (fn_, tp + fn_),
        MetricId::OverallError => (fp + fn_, n),
        MetricId::Npv => (tn, tn + fn_),
        // F1 = 2TP / (2TP + FP + FN), defined when both P and R are
        MetricId::F1 => {
            if tp + fp == 0 || tp + fn_ == 0 || tp == 0 {
                (0, 0)
            } else {
                (2 * tp, 2 * tp + fp + fn_)
            }
        }
        _ => unreachable!(),
    };
    (num as f64, den as f64)
}

fn regression_oracle(metric: MetricId, y: &[f64], p: &[f64], rows: &[usize]) -> Option<f64> {
    let n = rows.len() as f64;
    let mut se = 0.0;
    let mut ae = 0.0;
    for &i in rows {
        se += (y[i] - p[i]) * (y[i] - p[i]);
        ae += (y[i] - p[i]).abs();
    }
    let my = rows.iter().map(|&i| y[i]).sum::<f64>() / n;
    let var_y = rows.iter().map(|&i| (y[i] - my).powi(2)).sum::<f64>() / n;
    let mr = rows.iter().map(|&i| y[i] - p[i]).sum::<f64>() / n;
    let var_r = rows
        .iter()
        .map(|&i| (y[i] - p[i] - mr).powi(2))
        .sum::<f64>()
        / n;
    match metric {
        MetricId::Mse => Some(se / n),
        MetricId::Rmse => Some((se / n).sqrt()),
        MetricId::Mae => Some(ae / n),
        MetricId::R2 => (var_y > 0.0).then(|| 1.0 - (se / n) / var_y),
        MetricId::ExplainedVariance => (var_y > 0.0).then(|| 1.0 - var_r / var_y),
        _ => unreachable!(),
    }
}

fn metric_oracle() -> Check {
    let mut cells = 0usize;
    for case in 0..100u64 {
        let mut r = rng(1_000 + case);
        let n = 10 + r.below(191);
        let k = 1 + r.below(3);
        let groups = 1 + r.below(6);
        let min_support = r.below(20);
        let idx = random_index(&mut r, n, groups, min_support);
        let names: Vec<String> = (0..k).map(|j| format!("y{j}")).collect();
        let rate = 0.05 + 0.9 * r.uniform();
        let y = DMatrix::from_fn(n, k, |_, _| if r.bernoulli(rate) { 1.0 } else { 0.0 });
        let h = DMatrix::from_fn(n, k, |_, _| if r.bernoulli(rate) { 1.0 } else { 0.0 });
        for metric in MetricId::CLASSIFICATION {
            let t = lib(metric_table(&y, &h, &idx, metric, &names))?;
            for j in 0..k {
                let (yj, hj): (Vec<f64>, Vec<f64>) = (
                    y.column(j).iter().copied().collect(),
                    h.column(j).iter().copied().collect(),
                );
                for g in 0..groups {
                    let (num, den) = recount(metric, &yj, &hj, idx.members(g));
                    let c = t.cell(j, g);
                    if den == 0.0 {
                        ensure(
                            c.value.is_none() && c.status == CellStatus::ZeroDenominator,
                            || {
                                format!("case {case}: {metric} label {j} group {g} should be undefined, got {c:?}")
                            },
                        )?;
                    } else {
                        let want = num / den;
                        let v = c.value.ok_or_else(|| {
                            format!("case {case}: {metric} undefined, want {want}")
                        })?;
                        let ok = if metric == MetricId::F1 {
                            (v - want).abs() <= 1e-12
                        } else {
                            v == want
                        };
                        ensure(ok, || {
                            format!("case {case}: {metric} label {j} group {g}: {v} != {want}")
                        })?;
                        let flagged = idx.members(g).len() < min_support;
                        let want_status = if flagged {
                            CellStatus::BelowMinSupport
                        } else {
                            CellStatus::Ok
                        };
                        ensure(c.status == want_status, || {
                            format!("case {case}: status {:?}", c.status)
                        })?;
                    }
                    cells += 1;
                }
            }
        }
        let yr = DMatrix::from_fn(n, k, |_, _| 2.0 * r.normal() + 5.0);
        let pr = DMatrix::from_fn(n, k, |i, j| yr[(i, j)] + r.normal());
        for metric in MetricId::REGRESSION {
            let t = lib(metric_table(&yr, &pr, &idx, metric, &names))?;
            for j in 0..k {
                let (yj, pj): (Vec<f64>, Vec<f64>) = (
                    yr.column(j).iter().copied().collect(),
                    pr.column(j).iter().copied().collect(),
                );
                for g in 0..groups {
                    let want = regression_oracle(metric, &yj, &pj, idx.members(g));
                    let got = t.value(j, g);
                    let ok = match (got, want) {
                        (Some(a), Some(b)) => (a - b).abs() <= 1e-12,
                        (None, None) => true,
                        _ => false,
                    };
                    ensure(ok, || {
                        format!("case {case}: {metric} label {j} group {g}: {got:?} vs {want:?}")
                    })?;
                    cells += 1;
                }
            }
        }
    }
    Ok(format!("{cells} cells over 100 datasets match the recount"))
}

// ---------------------------------------------------------------- criterion 2

fn tensor_algebra() -> Check {
    let mut worst_anti: f64 = 0.0;
    let mut worst_identity: f64 = 0.0;
    for case in 0..1000u64 {
        let mut r = rng(2_000 + case);
        let (l_n, k_n) = (1 + r.below(8), 2 + r.below(7));
        let values: Vec<Vec<Option<f64>>> = (0..l_n)
            .map(|_| (0..k_n).map(|_| Some(r.uniform())).collect())
            .collect();
        let groups = (0..l_n).map(|l| format!("g{l}")).collect();
        let labels = (0..k_n).map(|k| format!("y{k}")).collect();
        let grid = lib(GroupLabelGrid::from_values(
            MetricId::RecallTpr,
            groups,
            labels,
            &values,
        ))?;
        let t = lib(build_tensor(&grid, BuildMode::Strict))?;
        let w: Vec<Vec<f64>> = (0..l_n)
            .map(|_| (0..k_n).map(|_| r.uniform()).collect())
            .collect();
        let tw = lib(apply_weights(
            &t,
            &lib(WeightMatrix::new(w.clone(), false))?,
        ))?;
        let tc = lib(apply_weights(
            &t,
            &lib(WeightMatrix::constant(l_n, k_n, 0.1 + r.uniform()))?,
        ))?;
        for l in 0..l_n {
            for a in 0..k_n {
                let v = |x: &fairaudit::tensor::FairnessTensor, i, j| x.get(l, i, j).unwrap();
                ensure(v(&t, a, a) == 0.0, || {
                    format!("case {case}: nonzero diagonal")
                })?;
                ensure(
                    v(&tc, a, a) == 0.0 && tc.values[l].iter().flatten().all(|x| *x == Some(0.0)),
                    || format!("case {case}: constant weights do not cancel"),
                )?;
                for b in 0..k_n {
                    let g = v(&t, a, b);
                    let expected = values[l][a].unwrap() - values[l][b].unwrap();
                    ensure((g - expected).abs() < 1e-12, || {
                        format!("case {case}: G != V[k1] - V[k2]")
                    })?;
                    worst_anti = worst_anti.max((g + v(&t, b, a)).abs());
                    let verbatim = w[l][a] * g - w[l][b] * g;
                    let factored = (w[l][a] - w[l][b]) * g;
                    worst_identity = worst_identity
                        .max((v(&tw, a, b) - verbatim).abs())
                        .max((v(&tw, a, b) - factored).abs());
                }
            }
        }
    }
    ensure(worst_anti < 1e-12, || {
        format!("antisymmetry error {worst_anti:e}")
    })?;
    ensure(worst_identity < 1e-12, || {
        format!("weighted identity error {worst_identity:e}")
    })?;
    Ok(format!(
        "1000 tensors; max |G + Gᵀ| {worst_anti:e}, max weighted deviation {worst_identity:e}"
    ))
}

// ---------------------------------------------------------------- criterion 3

fn ols_vcov() -> Check {
    let mut worst_coef: f64 = 0.0;
    let mut worst_vcov: f64 = 0.0;
    let mut worst_orth: f64 = 0.0;
    for case in 0..50u64 {
        let mut r = rng(3_000 + case);
        let (n, p) = (50 + r.below(200), 1 + r.below(6));
        let x = DMatrix::from_fn(n, p, |_, _| r.normal() * 3.0);
        let beta: Vec<f64> = (0..p).map(|_| r.normal()).collect();
        let alpha = r.normal();
        let clean: Vec<f64> = (0..n)
            .map(|i| alpha + (0..p).map(|j| x[(i, j)] * beta[j]).sum::<f64>())
            .collect();
        let fit = lib(fit_ols(&x, &clean))?;
        worst_coef = worst_coef.max((fit.intercept - alpha).abs());
        for j in 0..p {
            worst_coef = worst_coef.max((fit.coefficients[j] - beta[j]).abs());
        }

        let noisy: Vec<f64> = clean.iter().map(|v| v + 0.5 * r.normal()).collect();
        let fit = lib(fit_ols(&x, &noisy))?;
        let z = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
        let coef = DVector::from_iterator(
            p + 1,
            std::iter::once(fit.intercept).chain(fit.coefficients.iter().copied()),
        );
        let resid = DVector::from_column_slice(&noisy) - &z * &coef;
        let sigma2 = resid.norm_squared() / (n - p - 1) as f64;
        let inv = (z.transpose() * &z)
            .try_inverse()
            .ok_or("singular oracle design")?;
        let oracle = inv * sigma2;
        let vcov = fit.vcov.as_ref().ok_or("ols fit without vcov")?;
        let rel = (vcov - &oracle).abs().max() / oracle.abs().max();
        worst_vcov = worst_vcov.max(rel);
        worst_orth = worst_orth.max((z.transpose() * &resid).abs().max() / n as f64);
    }
    ensure(worst_coef < 1e-8, || {
        format!("noiseless recovery error {worst_coef:e}")
    })?;
    ensure(worst_vcov < 1e-8, || {
        format!("vcov relative error {worst_vcov:e}")
    })?;
    ensure(worst_orth < 1e-6, || {
        format!("residual orthogonality {worst_orth:e}·n")
    })?;
    Ok(format!(
        "50 instances; coef error {worst_coef:.1e}, vcov rel error {worst_vcov:.1e}, |Zᵀr|/n {worst_orth:.1e}"
    ))
}

// ---------------------------------------------------------------- criterion 4

fn logistic_gradient_check() -> Check {
    let mut worst: f64 = 0.0;
    for case in 0..20u64 {
        let mut r = rng(4_000 + case);
        let (n, p) = (30 + r.below(100), 1 + r.below(5));
        let x = DMatrix::from_fn(n, p, |_, _| r.normal());
        let y: Vec<f64> = (0..n)
            .map(|_| if r.bernoulli(0.4) { 1.0 } else { 0.0 })
            .collect();
        let weights: Option<Vec<f64>> =
            (case % 2 == 1).then(|| (0..n).map(|_| 0.1 + r.uniform()).collect());
        let l2 = if case % 3 == 0 { 0.0 } else { r.uniform() };
        let theta: Vec<f64> = (0..=p).map(|_| r.normal()).collect();
        let w = weights.as_deref();
        let g = logistic_gradient(&x, &y, w, l2, theta[0], &theta[1..]);
        let h = 1e-5;
        let fd: Vec<f64> = (0..=p)
            .map(|j| {
                let mut up = theta.clone();
                let mut dn = theta.clone();
                up[j] += h;
                dn[j] -= h;
                (logistic_objective(&x, &y, w, l2, up[0], &up[1..])
                    - logistic_objective(&x, &y, w, l2, dn[0], &dn[1..]))
                    / (2.0 * h)
            })
            .collect();
        let num: f64 = g
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let den: f64 = g
            .iter()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
            .max(fd.iter().map(|a| a * a).sum::<f64>().sqrt());
        worst = worst.max(num / den.max(1e-12));
    }
    ensure(worst < 1e-5, || {
        format!("relative gradient error {worst:e}")
    })?;
    Ok(format!("20 instances; max relative error {worst:.1e}"))
}

// ---------------------------------------------------------------- criterion 5

fn lasso_objective(x: &DMatrix<f64>, y: &[f64], lambda: f64, b: &[f64]) -> f64 {
    let n = x.nrows();
    let fitted: Vec<f64> = (0..n)
        .map(|i| (0..b.len()).map(|j| x[(i, j)] * b[j]).sum())
        .collect();
    let alpha = (0..n).map(|i| y[i] - fitted[i]).sum::<f64>() / n as f64;
    let rss: f64 = (0..n).map(|i| (y[i] - alpha - fitted[i]).powi(2)).sum();
    0.5 * rss / n as f64 + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
}

fn lasso_kkt() -> Check {
    let tight = LassoConfig {
        max_iter: 100_000,
        tol: 1e-12,
        ..LassoConfig::default()
    };
    let raw = LassoConfig {
        standardize: false,
        ..tight
    };
    let mut worst_ols: f64 = 0.0;
    let mut worst_mt: f64 = 0.0;
    for case in 0..20u64 {
        let mut r = rng(5_000 + case);
        let (n, p) = (40 + r.below(80), 2 + r.below(5));
        let x = DMatrix::from_fn(n, p, |_, _| r.normal() * (1.0 + r.uniform()));
        let y: Vec<f64> = (0..n)
            .map(|i| 1.0 + 2.0 * x[(i, 0)] - x[(i, 1)] + 0.3 * r.normal())
            .collect();
        for cfg in [tight, raw] {
            let lmax = lasso_lambda_max(&x, &y, cfg.standardize);
            for scale in [1.0, 1.5] {
                let fit = lib(fit_lasso(&x, &y, lmax * scale, &cfg))?;
                ensure(fit.coefficients.iter().all(|&c| c == 0.0), || {
                    format!(
                        "case {case}: nonzero coefficients at {scale}·λmax: {:?}",
                        fit.coefficients
                    )
                })?;
            }
            let zero = lib(fit_lasso(&x, &y, 0.0, &cfg))?;
            let ols = lib(fit_ols(&x, &y))?;
            for (a, b) in zero.coefficients.iter().zip(&ols.coefficients) {
                worst_ols = worst_ols.max((a - b).abs());
            }
        }

        // multi-task: rows are jointly zero or jointly nonzero; K = 1 is the lasso
        let k = 2 + r.below(3);
        let yk = DMatrix::from_fn(n, k, |i, t| {
            (t as f64 + 1.0) * x[(i, 0)] - x[(i, 1)] + 0.3 * r.normal()
        });
        let lmax_mt = lasso_lambda_max(&x, &yk.column(0).iter().copied().collect::<Vec<_>>(), true);
        let fits = lib(fit_multitask_lasso(&x, &yk, 0.3 * lmax_mt, &tight))?;
        for j in 0..p {
            let zeros = fits.iter().filter(|f| f.coefficients[j] == 0.0).count();
            ensure(zeros == 0 || zeros == k, || {
                format!("case {case}: feature {j} zero in {zeros}/{k} tasks")
            })?;
        }
        ensure(fits.iter().all(|f| f.coefficients[0] != 0.0), || {
            format!("case {case}: planted row dropped")
        })?;
        let y1 = DMatrix::from_column_slice(n, 1, &y);
        for lambda in [0.05, 0.2] {
            let single = lib(fit_lasso(&x, &y, lambda, &tight))?;
            let multi = lib(fit_multitask_lasso(&x, &y1, lambda, &tight))?;
            for (a, b) in single.coefficients.iter().zip(&multi[0].coefficients) {
                worst_mt = worst_mt.max((a - b).abs());
            }
            worst_mt = worst_mt.max((single.intercept - multi[0].intercept).abs());
        }
    }
    ensure(worst_ols < 1e-4, || {
        format!("λ = 0 deviates from OLS by {worst_ols:e}")
    })?;
    ensure(worst_mt < 1e-6, || {
        format!("K = 1 multi-task deviates by {worst_mt:e}")
    })?;

    // brute force on tiny instances (unstandardized objective)
    let mut worst_gap = f64::NEG_INFINITY;
    for case in 0..5u64 {
        let mut r = rng(5_500 + case);
        let n = 12;
        let x = DMatrix::from_fn(n, 2, |_, _| r.normal());
        let y: Vec<f64> = (0..n)
            .map(|i| 0.8 * x[(i, 0)] - 0.4 * x[(i, 1)] + 0.2 * r.normal())
            .collect();
        let lambda = 0.1;
        let fit = lib(fit_lasso(&x, &y, lambda, &raw))?;
        let solver = lasso_objective(&x, &y, lambda, &fit.coefficients);
        let mut best = f64::INFINITY;
        let steps = 400;
        for a in 0..=steps {
            for b in 0..=steps {
                let b0 = -2.0 + 4.0 * a as f64 / steps as f64;
                let b1 = -2.0 + 4.0 * b as f64 / steps as f64;
                best = best.min(lasso_objective(&x, &y, lambda, &[b0, b1]));
            }
        }
        ensure(solver <= best + 1e-6, || {
            format!("case {case}: objective {solver} > grid minimum {best}")
        })?;
        worst_gap = worst_gap.max(solver - best);
    }
    Ok(format!(
        "λ=0 vs OLS {worst_ols:.1e}, K=1 vs lasso {worst_mt:.1e}, solver − grid min ≤ {worst_gap:.1e}"
    ))
}

// ---------------------------------------------------------------- criterion 6

fn proxy_p_value(n: usize, strength: f64, seed: u64, permutations: usize) -> Result<f64, String> {
    let ds = lib(generate_synthetic(&SynthConfig::planted_proxy(
        n, 5, strength, seed,
    )))?;
    let attr = lib(ds.attribute("gender"))?;
    let female = attr.level_code("female").ok_or("no female level")?;
    let ind: Vec<f64> = attr
        .codes
        .iter()
        .map(|&c| if c == female { 1.0 } else { 0.0 })
        .collect();
    let cfg = TwoSampleConfig {
        n_permutations: permutations,
        seed,
        ..TwoSampleConfig::default()
    };
    Ok(lib(two_sample_test(
        ds.features(),
        &ind,
        ds.feature_names(),
        &cfg,
    ))?
    .p_value)
}

/// `sup |F_n(p) - p|` of a sample against Uniform[0, 1].
fn ks_uniform(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &p)| ((i + 1) as f64 / n - p).max(p - i as f64 / n))
        .fold(0.0, f64::max)
}

fn two_sample_calibration() -> Check {
    let null: Vec<f64> = (0..200u64)
        .map(|run| proxy_p_value(1000, 0.0, 6_000 + run, 200))
        .collect::<Result<_, _>>()?;
    let ks = ks_uniform(&null);
    let planted: Vec<f64> = (0..20u64)
        .map(|run| proxy_p_value(2000, 1.0, 6_500 + run, 200))
        .collect::<Result<_, _>>()?;
    let hits = planted.iter().filter(|&&p| p <= 1.0 / 201.0).count();
    ensure(ks < 0.12, || format!("null KS statistic {ks:.4}"))?;
    ensure(hits >= 19, || {
        format!("planted proxy detected in {hits}/20 runs")
    })?;
    Ok(format!(
        "null KS {ks:.4} over 200 runs; planted p ≤ 1/201 in {hits}/20"
    ))
}

// ---------------------------------------------------------------- criterion 7

fn decomposition_recovery() -> Check {
    let beta = [0.5, 0.0, -0.3];
    let gamma = [0.2, 0.0];
    let delta = [-0.1, 0.0, 0.15];
    let runs = 30;
    let (mut worst, mut covered, mut nulls) = (0.0f64, 0usize, 0usize);
    for run in 0..runs {
        let mut r = rng(7_000 + run);
        let n = 5000;
        let x = DMatrix::from_fn(n, 3, |_, _| r.normal());
        let yhat = DMatrix::from_fn(n, 2, |_, _| if r.bernoulli(0.4) { 1.0 } else { 0.0 });
        let level: Vec<usize> = (0..n).map(|_| r.below(4)).collect();
        let d = DMatrix::from_fn(n, 3, |i, j| if level[i] == j + 1 { 1.0 } else { 0.0 });
        let bias: Vec<f64> = (0..n)
            .map(|i| {
                0.05 + (0..3).map(|j| beta[j] * x[(i, j)]).sum::<f64>()
                    + (0..2).map(|j| gamma[j] * yhat[(i, j)]).sum::<f64>()
                    + (0..3).map(|j| delta[j] * d[(i, j)]).sum::<f64>()
                    + 0.01 * r.normal()
            })
            .collect();
        let names = |p: &str, m: usize| (0..m).map(|j| format!("{p}{j}")).collect::<Vec<_>>();
        let (xn, yn, dn) = (names("x", 3), names("yhat", 2), names("d", 3));
        let fit = lib(bias_decomposition(
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
                    matrix: &d,
                    names: &dn,
                },
            ],
        ))?;
        let planted = beta.iter().chain(&gamma).chain(&delta);
        let fitted = fit.beta.iter().chain(&fit.gamma).chain(&fit.delta);
        for (truth, c) in planted.zip(fitted) {
            worst = worst.max((c.estimate - truth).abs());
            if *truth == 0.0 {
                nulls += 1;
                covered += c.ci_covers(0.0) as usize;
            }
        }
    }
    let coverage = covered as f64 / nulls as f64;
    ensure(worst <= 0.05, || {
        format!("largest coefficient error {worst:.4}")
    })?;
    ensure(coverage >= 0.9, || {
        format!("null CI coverage {coverage:.3}")
    })?;
    Ok(format!(
        "{runs} runs; max error {worst:.2e}, null CI coverage {coverage:.3} ({covered}/{nulls})"
    ))
}

// ---------------------------------------------------------------- criterion 8

/// Train/held-out split of the planted-gap fixture, stratified on `group`.
fn gap_split(seed: u64) -> Result<(Dataset, Dataset), String> {
    let ds = lib(generate_synthetic(&SynthConfig::planted_gap(20_000, seed)))?;
    let codes: Vec<u64> = lib(ds.attribute("group"))?
        .codes
        .iter()
        .map(|&c| c as u64)
        .collect();
    let (tr, te) = lib(split_indices(ds.n_rows(), 0.3, seed, Some(&codes)))?;
    Ok((ds.select_rows(&tr), ds.select_rows(&te)))
}

fn two_group_index(ds: &Dataset) -> Result<(IntersectionIndex, Vec<u32>), String> {
    let codes = lib(ds.attribute("group"))?.codes.clone();
    let keys = vec![GroupKey(vec!["a".into()]), GroupKey(vec!["b".into()])];
    let idx = lib(IntersectionIndex::from_assignments(
        vec!["group".into()],
        keys,
        codes.iter().map(|&c| c as usize).collect(),
        1,
    ))?;
    Ok((idx, codes))
}

/// `max_a |E[h | A=a] - E[h]|`, recomputed from per-row expectations.
fn dp_violation(h: &[f64], codes: &[u32]) -> f64 {
    let overall = h.iter().sum::<f64>() / h.len() as f64;
    (0..2u32)
        .map(|a| {
            let rows: Vec<f64> = h
                .iter()
                .zip(codes)
                .filter(|(_, &c)| c == a)
                .map(|(v, _)| *v)
                .collect();
            (rows.iter().sum::<f64>() / rows.len() as f64 - overall).abs()
        })
        .fold(0.0, f64::max)
}

fn mitigation_effect() -> Check {
    let learner = LogisticConfig {
        l2: 1e-3,
        ..LogisticConfig::default()
    };

    // threshold post-processing on the fitting data
    let (train, _) = gap_split(1)?;
    let model = lib(fit_multilabel(&train, &learner, false))?;
    let (idx, codes) = two_group_index(&train)?;
    let probas = lib(model.predict_scores(&train))?;
    let policy = lib(fit_thresholds(
        &probas,
        train.targets(),
        &idx,
        Criterion::EqualSelectionRate,
        0.02,
        train.label_names(),
    ))?;
    let decided = lib(apply_thresholds(&probas, &idx, &policy))?;
    let rate = |m: &DMatrix<f64>, a: u32| {
        let rows: Vec<usize> = (0..m.nrows()).filter(|&i| codes[i] == a).collect();
        rows.iter().map(|&i| m[(i, 0)]).sum::<f64>() / rows.len() as f64
    };
    let before = (rate(&lib(model.predict(&train, 0.5))?, 1)
        - rate(&lib(model.predict(&train, 0.5))?, 0))
    .abs();
    let after = (rate(&decided, 1) - rate(&decided, 0)).abs();
    ensure(after < 0.02, || {
        format!("threshold disparity {after:.4} ≥ 0.02")
    })?;

    // EGR at ε = 0.02 and ε = 1 over ten seeds
    let mut ok = 0;
    let mut worst_agreement: f64 = 1.0;
    let mut deltas = Vec::new();
    let mut violations = Vec::new();
    for seed in 0..10u64 {
        let (train, test) = gap_split(100 + seed)?;
        let (idx_tr, _) = two_group_index(&train)?;
        let (_, codes_te) = two_group_index(&test)?;
        let (y_tr, y_te) = (train.label(0), test.label(0));
        let base = lib(fit_logistic(train.features(), &y_tr, &learner))?;
        let base_dec: Vec<f64> = lib(base.predict_proba(test.features()))?
            .iter()
            .map(|&p| if p >= 0.5 { 1.0 } else { 0.0 })
            .collect();
        let base_acc =
            base_dec.iter().zip(&y_te).filter(|(h, y)| h == y).count() as f64 / y_te.len() as f64;

        let cfg = EgrConfig {
            constraint: Constraint::DemographicParity,
            epsilon: 0.02,
            base: learner,
            ..EgrConfig::default()
        };
        let rc = lib(exponentiated_gradient(
            train.features(),
            &y_tr,
            &idx_tr,
            &cfg,
        ))?;
        let soft = lib(rc.expected(test.features()))?;
        let v = dp_violation(&soft, &codes_te);
        ok += (v <= 0.03) as usize;
        violations.push(v);
        let acc = 1.0
            - soft
                .iter()
                .zip(&y_te)
                .map(|(h, y)| (h - y).abs())
                .sum::<f64>()
                / y_te.len() as f64;
        deltas.push(acc - base_acc);

        let vacuous = lib(exponentiated_gradient(
            train.features(),
            &y_tr,
            &idx_tr,
            &EgrConfig {
                epsilon: 1.0,
                ..cfg
            },
        ))?;
        let dec = lib(vacuous.predict(test.features()))?;
        let agree =
            dec.iter().zip(&base_dec).filter(|(a, b)| a == b).count() as f64 / dec.len() as f64;
        worst_agreement = worst_agreement.min(agree);
    }
    ensure(ok >= 8, || {
        format!("EGR held-out violation ≤ 0.03 in {ok}/10 seeds: {violations:.3?}")
    })?;
    ensure(worst_agreement >= 0.99, || {
        format!("ε = 1 agreement {worst_agreement:.4}")
    })?;
    let mean_delta = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let max_v = violations.iter().copied().fold(0.0, f64::max);
    Ok(format!(
        "thresholds {before:.3} → {after:.4}; EGR ε=0.02 ok in {ok}/10 (max held-out violation {max_v:.4}), \
         accuracy delta {mean_delta:+.4} (mean); ε=1 agreement ≥ {worst_agreement:.4}"
    ))
}

// ---------------------------------------------------------------- criterion 9

/// Held-out recall of label `k`, counted from scratch.
fn recall(preds: &DMatrix<f64>, ds: &Dataset, k: usize) -> f64 {
    let y = ds.label(k);
    let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1.0).collect();
    pos.iter().filter(|&&i| preds[(i, k)] == 1.0).count() as f64 / pos.len() as f64
}

fn awareness_structure() -> Check {
    let cfg = AwarenessConfig::default();
    let mut wins = 0;
    for seed in 0..10u64 {
        let ds = lib(generate_synthetic(&SynthConfig::planted_awareness(
            4000,
            true,
            900 + seed,
        )))?;
        let cmp = lib(awareness_comparison(
            &ds,
            &AwarenessConfig {
                seed,
                ..cfg.clone()
            },
        ))?;
        ensure(cmp.shape() == (ds.n_labels(), 7), || {
            format!("table shape {:?}", cmp.shape())
        })?;
        ensure(cmp.metrics == MetricId::TABLE.to_vec(), || {
            "metric columns differ".to_string()
        })?;

        // re-derive the planted label's recall difference independently
        let (tr, te) = lib(split_indices(ds.n_rows(), cfg.holdout_fraction, seed, None))?;
        let (train, test) = (ds.select_rows(&tr), ds.select_rows(&te));
        let unaware =
            lib(lib(fit_multilabel(&train, &cfg.learner, false))?.predict(&test, cfg.threshold))?;
        let aware =
            lib(lib(fit_multilabel(&train, &cfg.learner, true))?.predict(&test, cfg.threshold))?;
        let expected = recall(&unaware, &test, 1) - recall(&aware, &test, 1);
        let got = cmp
            .difference_of(1, MetricId::RecallTpr)
            .ok_or("undefined recall difference")?;
        ensure((got - expected).abs() < 1e-12, || {
            format!("seed {seed}: difference {got} != unaware − aware {expected}")
        })?;
        wins += (got < 0.0) as usize;
    }
    ensure(wins >= 8, || {
        format!("aware recall higher in {wins}/10 seeds")
    })?;
    Ok(format!(
        "K × 7 table, unaware − aware orientation verified; aware recall higher in {wins}/10 seeds"
    ))
}

// --------------------------------------------------------------- criterion 10

fn audit_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = dir.path().join("data.csv");
    let (ds, schema) = lib(synth(
        &SynthConfig {
            n: 5000,
            seed: 10,
            ..SynthConfig::default()
        },
        &data,
    ))?;

    let cfg = AuditConfig {
        fail_threshold: Some(0.5),
        ..AuditConfig::default()
    };
    let a = lib(audit(&ds, None, &cfg))?;
    let b = lib(audit(&ds, None, &cfg))?;
    ensure(
        lib(a.to_json_without_timestamps())? == lib(b.to_json_without_timestamps())?,
        || "library reports differ".to_string(),
    )?;

    let bin = env!("CARGO_BIN_EXE_fairaudit");
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let o = std::process::Command::new(bin)
            .args([
                "audit",
                "--data",
                data.to_str().unwrap(),
                "--schema",
                schema.to_str().unwrap(),
            ])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(o.status.code().is_some_and(|c| c != 1), || {
            String::from_utf8_lossy(&o.stderr).into_owned()
        })?;
        let mut v: serde_json::Value =
            serde_json::from_slice(&o.stdout).map_err(|e| e.to_string())?;
        ensure(v.get("timestamps").is_some(), || {
            "stdout report lacks timestamps".to_string()
        })?;
        v.as_object_mut().unwrap().remove("timestamps");
        outputs.push(v);
    }
    ensure(outputs[0] == outputs[1], || {
        "binary reports differ beyond timestamps".to_string()
    })?;
    let cells = outputs[0]["cells"].as_array().map_or(0, |c| c.len());
    Ok(format!(
        "two library and two binary runs identical modulo timestamps ({cells} cells)"
    ))
}

// ------------------------------------------------------------------- harness

#[test]
fn acceptance() {
    type Criterion = (&'static str, f64, fn() -> Check);
    let criteria: [Criterion; 10] = [
        ("metric oracle equivalence", 10.0, metric_oracle),
        ("tensor algebra", 5.0, tensor_algebra),
        ("OLS and vcov", 5.0, ols_vcov),
        ("logistic gradient check", 5.0, logistic_gradient_check),
        ("lasso KKT", 30.0, lasso_kkt),
        ("two-sample test calibration", 300.0, two_sample_calibration),
        ("bias decomposition recovery", 60.0, decomposition_recovery),
        ("mitigation effect", 180.0, mitigation_effect),
        ("awareness comparison structure", 120.0, awareness_structure),
        ("end-to-end determinism", 30.0, audit_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let outcome = match outcome {
            Ok(detail) if secs > *budget => Err(format!("{detail}; over the {budget} s budget")),
            other => other,
        };
        match &outcome {
            Ok(detail) => println!(
                "PASS [{}] {name}: {detail} ({secs:.2} s / {budget} s)",
                i + 1
            ),
            Err(why) => {
                println!("FAIL [{}] {name}: {why} ({secs:.2} s / {budget} s)", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

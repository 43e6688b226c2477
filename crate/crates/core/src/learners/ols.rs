use nalgebra::{DMatrix, DVector};

use super::{FitKind, LinearFit};
use crate::error::{Error, Result};

/// Relative size of `|R_jj|` below which a design column counts as a
/// linear combination of the columns before it.
const RANK_TOL: f64 = 1e-9;

pub fn fit_ols(x: &DMatrix<f64>, y: &[f64]) -> Result<LinearFit> {
    fit_ols_named(x, y, None)
}

/// Least squares on `[1 | X]` via Householder QR.
///
/// `σ² = RSS / (n - p - 1)` and `vcov = σ² (ZᵀZ)⁻¹ = σ² R⁻¹R⁻ᵀ` over the
/// intercept-augmented design `Z`. Rank deficiency is reported with the
/// `names` of the offending columns (`x{j}` when no names are given).
pub fn fit_ols_named(x: &DMatrix<f64>, y: &[f64], names: Option<&[String]>) -> Result<LinearFit> {
    let n = x.nrows();
    let p = x.ncols();
    if y.len() != n {
        return Err(Error::shape(format!("{n} rows but {} targets", y.len())));
    }
    if let Some(names) = names {
        if names.len() != p {
            return Err(Error::shape("column names do not match design width"));
        }
    }
    if n <= p + 1 {
        return Err(Error::Insufficient(format!(
            "ols needs n > p + 1 (n = {n}, p = {p})"
        )));
    }
    let mut z = DMatrix::zeros(n, p + 1);
    z.column_mut(0).fill(1.0);
    z.columns_mut(1, p).copy_from(x);

    let qr = z.clone().qr();
    let r = qr.r();
    let dependent: Vec<String> = (0..=p)
        .filter(|&j| r[(j, j)].abs() <= RANK_TOL * z.column(j).norm().max(f64::MIN_POSITIVE))
        .map(|j| match (j, names) {
            (0, _) => "intercept".to_string(),
            (j, Some(names)) => names[j - 1].clone(),
            (j, None) => format!("x{}", j - 1),
        })
        .collect();
    if !dependent.is_empty() {
        return Err(Error::RankDeficient { columns: dependent });
    }

    let yv = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &yv;
    let theta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::RankDeficient {
            columns: vec!["design".into()],
        })?;
    let resid = &yv - &z * &theta;
    let rss = resid.norm_squared();
    let sigma2 = rss / (n - p - 1) as f64;

    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p + 1, p + 1))
        .ok_or_else(|| Error::RankDeficient {
            columns: vec!["design".into()],
        })?;
    // (ZᵀZ)⁻¹ = R⁻¹ R⁻ᵀ, filled symmetrically
    let mut vcov = DMatrix::zeros(p + 1, p + 1);
    for a in 0..=p {
        for b in a..=p {
            let mut acc = 0.0;
            for k in b.max(a)..=p {
                acc += r_inv[(a, k)] * r_inv[(b, k)];
            }
            vcov[(a, b)] = sigma2 * acc;
            vcov[(b, a)] = vcov[(a, b)];
        }
    }

    Ok(LinearFit {
        kind: FitKind::Ols,
        coefficients: theta.iter().skip(1).copied().collect(),
        intercept: theta[0],
        residual_variance: Some(sigma2),
        vcov: Some(vcov),
        iterations: 1,
        converged: true,
        optimality: 0.0,
        regularization: 0.0,
        objective_trace: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, Stream};

    #[test]
    fn noiseless_line() {
        let x = DMatrix::from_fn(10, 1, |i, _| i as f64 * 0.7 - 2.0);
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let fit = fit_ols(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-10);
        assert!((fit.intercept - 1.0).abs() < 1e-10);
    }

    #[test]
    fn duplicated_column_is_rank_deficient() {
        let mut s = Stream::new(1, Purpose::Experiment, 0);
        let x = DMatrix::from_fn(20, 3, |_, _| s.normal());
        let mut x2 = x.clone();
        let c0 = x.column(0).clone_owned();
        x2.column_mut(2).copy_from(&c0);
        let names: Vec<String> = ["a", "b", "a_copy"].map(String::from).to_vec();
        let err = fit_ols_named(&x2, &[0.0; 20], Some(&names)).unwrap_err();
        match err {
            Error::RankDeficient { columns } => assert_eq!(columns, vec!["a_copy"]),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn orthonormal_design_vcov() {
        // centred orthogonal columns with unit norm: ZᵀZ = diag(n, 1, 1)
        let n = 8;
        let c1: Vec<f64> = (0..n)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let c2: Vec<f64> = (0..n)
            .map(|i| if (i / 2) % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let scale = (n as f64).sqrt();
        let x = DMatrix::from_fn(n, 2, |i, j| [c1[i], c2[i]][j] / scale);
        let mut s = Stream::new(4, Purpose::Experiment, 0);
        let y: Vec<f64> = (0..n).map(|_| s.normal()).collect();
        let fit = fit_ols(&x, &y).unwrap();
        let v = fit.vcov.as_ref().unwrap();
        let s2 = fit.residual_variance.unwrap();
        assert!((v[(1, 1)] - s2).abs() < 1e-12);
        assert!((v[(2, 2)] - s2).abs() < 1e-12);
        assert!(v[(1, 2)].abs() < 1e-12);
        assert!((v[(0, 0)] - s2 / n as f64).abs() < 1e-12);
        assert_eq!(v, &v.transpose());
    }

    #[test]
    fn too_few_rows() {
        let x = DMatrix::zeros(3, 2);
        assert!(matches!(
            fit_ols(&x, &[0.0; 3]).unwrap_err(),
            Error::Insufficient(_)
        ));
    }
}

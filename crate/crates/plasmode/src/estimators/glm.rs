//! Regression fitters shared by the pseudolikelihood and the working
//! models: logistic regression via iteratively reweighted least squares
//! and linear least squares via SVD.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::util::sigmoid;

/// Coefficient magnitude treated as divergence during IRLS.
const SEPARATION_BOUND: f64 = 30.0;

#[derive(Clone, Debug)]
pub struct LogisticFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Inverse-Fisher standard errors; naive when rows are dependent.
    pub std_errors: Vec<f64>,
    pub iterations: usize,
    pub deviance: f64,
}

impl LogisticFit {
    /// Fitted probability for one design row.
    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum())
    }
}

#[derive(Clone, Debug)]
pub struct LinearFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Residual variance with denominator `n - p` (0 when `n == p`).
    pub residual_variance: f64,
}

impl LinearFit {
    pub fn predict(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum()
    }
}

fn check_design(x: &DMatrix<f64>, y_len: usize, names: &[String]) -> Result<()> {
    if x.nrows() != y_len {
        return Err(Error::Domain(format!(
            "design has {} rows but the response has {}",
            x.nrows(),
            y_len
        )));
    }
    if names.len() != x.ncols() {
        return Err(Error::Domain(format!(
            "{} column names for {} design columns",
            names.len(),
            x.ncols()
        )));
    }
    if x.ncols() == 0 || x.nrows() < x.ncols() {
        return Err(Error::Domain(format!(
            "cannot fit {} coefficients from {} rows",
            x.ncols(),
            x.nrows()
        )));
    }
    let svd = x.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > smax * 1e-10).count();
    if rank < x.ncols() {
        return Err(Error::RankDeficient { rank, cols: x.ncols() });
    }
    Ok(())
}

/// Maximum-likelihood logistic regression. `y` must be 0/1. Errors on
/// rank-deficient designs, apparent separation (diverging coefficients
/// or a collapsed information matrix), or `max_iter` exhaustion.
pub fn fit_logistic(
    x: &DMatrix<f64>,
    y: &[f64],
    names: &[String],
    max_iter: usize,
    tol: f64,
) -> Result<LogisticFit> {
    check_design(x, y.len(), names)?;
    if let Some(bad) = y.iter().find(|v| **v != 0.0 && **v != 1.0) {
        return Err(Error::Domain(format!("logistic response must be 0/1, got {bad}")));
    }
    let (n, p) = (x.nrows(), x.ncols());
    let mut beta = DVector::zeros(p);
    let mut iterations = 0usize;

    loop {
        let eta = x * &beta;
        let mu: DVector<f64> = eta.map(sigmoid);
        let grad = {
            let resid = DVector::from_fn(n, |i, _| y[i] - mu[i]);
            x.transpose() * resid
        };
        let mut xtwx = DMatrix::zeros(p, p);
        for i in 0..n {
            let w = mu[i] * (1.0 - mu[i]);
            if w > 0.0 {
                let row = x.row(i);
                for a in 0..p {
                    for b in a..p {
                        xtwx[(a, b)] += w * row[a] * row[b];
                    }
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                xtwx[(a, b)] = xtwx[(b, a)];
            }
        }

        if grad.amax() <= tol {
            let info: nalgebra::Cholesky<f64, nalgebra::Dyn> =
                xtwx.clone().cholesky().ok_or_else(|| separation_error(&beta, names))?;
            let cov = info.inverse();
            let std_errors = (0..p).map(|k| cov[(k, k)].sqrt()).collect();
            let deviance = -2.0
                * (0..n)
                    .map(|i| {
                        let m = mu[i].clamp(1e-12, 1.0 - 1e-12);
                        y[i] * m.ln() + (1.0 - y[i]) * (1.0 - m).ln()
                    })
                    .sum::<f64>();
            return Ok(LogisticFit {
                names: names.to_vec(),
                coefficients: beta.iter().copied().collect(),
                std_errors,
                iterations,
                deviance,
            });
        }
        if iterations >= max_iter {
            return Err(Error::NoConvergence(max_iter));
        }

        let chol = xtwx.cholesky().ok_or_else(|| separation_error(&beta, names))?;
        beta += chol.solve(&grad);
        iterations += 1;
        if beta.amax() > SEPARATION_BOUND {
            return Err(separation_error(&beta, names));
        }
    }
}

fn separation_error(beta: &DVector<f64>, names: &[String]) -> Error {
    let k = beta.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).map(|(k, _)| k);
    match k {
        Some(k) => Error::Separation { term: names[k].clone(), value: beta[k] },
        None => Error::Separation { term: "<empty>".into(), value: f64::NAN },
    }
}

/// Ordinary least squares via SVD; exact on consistent systems.
pub fn fit_linear(x: &DMatrix<f64>, y: &[f64], names: &[String]) -> Result<LinearFit> {
    check_design(x, y.len(), names)?;
    let yv = DVector::from_column_slice(y);
    let svd = x.clone().svd(true, true);
    let beta = svd
        .solve(&yv, x.singular_value_epsilon())
        .map_err(|e| Error::Internal(format!("SVD solve: {e}")))?;
    let resid = &yv - x * &beta;
    let dof = x.nrows() - x.ncols();
    let residual_variance =
        if dof > 0 { resid.iter().map(|r| r * r).sum::<f64>() / dof as f64 } else { 0.0 };
    Ok(LinearFit {
        names: names.to_vec(),
        coefficients: beta.iter().copied().collect(),
        residual_variance,
    })
}

trait SingularEps {
    fn singular_value_epsilon(&self) -> f64;
}

impl SingularEps for DMatrix<f64> {
    fn singular_value_epsilon(&self) -> f64 {
        // comfortably above roundoff, far below any honest singular value
        1e-12
    }
}

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lags::LagIndexSet;
use super::lambda::LambdaMatrix;
use crate::error::{FractalError, Result};
use crate::estimate::design_vector;
use crate::variogram::check_power;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaFlavor {
    /// Linearization of the robust estimator around the truth.
    Sigma1,
    /// Linearization of the difference between the robust and plain estimators.
    Sigma2,
}

/// Jacobian mapping normalized variogram fluctuations on a lag set to
/// fluctuations of `log f_p(k)`, `k = 1..m` (up to the factor 2 of the slope).
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaMatrix {
    pub flavor: DeltaFlavor,
    pub lags: LagIndexSet,
    pub prefactor: f64,
    /// Rows of `-1` at lag `k` and `kappa^{2 alpha + 1}` (first flavor) or
    /// `+1` (second flavor) at lag `kappa k`, before the prefactor.
    pub pattern: DMatrix<f64>,
}

impl DeltaMatrix {
    fn build(flavor: DeltaFlavor, alpha: f64, p: f64, m: usize, kappa: usize) -> Result<Self> {
        check_power(p)?;
        let lags = LagIndexSet::new(m, kappa)?;
        let ks = (kappa as f64).powf(2.0 * alpha + 1.0);
        let (prefactor, hi) = match flavor {
            DeltaFlavor::Sigma1 => (2.0 / (p * (ks - 1.0)), ks),
            DeltaFlavor::Sigma2 => (2.0 * ks / (p * (ks - 1.0)), 1.0),
        };
        let mut pattern = DMatrix::zeros(m, lags.len());
        for i in 0..m {
            let k = i + 1;
            let lo_col = lags.position(k).expect("lag k is in the set");
            let hi_col = lags.position(k * kappa).expect("lag kappa k is in the set");
            pattern[(i, lo_col)] = -1.0;
            pattern[(i, hi_col)] = hi;
        }
        Ok(Self {
            flavor,
            lags,
            prefactor,
            pattern,
        })
    }

    pub fn entries(&self) -> DMatrix<f64> {
        &self.pattern * self.prefactor
    }

    pub fn nrows(&self) -> usize {
        self.pattern.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.pattern.ncols()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            prefactor: self.prefactor * c,
            ..self.clone()
        }
    }
}

pub fn sigma1_matrix(alpha: f64, p: f64, m: usize, kappa: usize) -> Result<DeltaMatrix> {
    DeltaMatrix::build(DeltaFlavor::Sigma1, alpha, p, m, kappa)
}

pub fn sigma2_matrix(alpha: f64, p: f64, m: usize, kappa: usize) -> Result<DeltaMatrix> {
    DeltaMatrix::build(DeltaFlavor::Sigma2, alpha, p, m, kappa)
}

fn design_norms(m: usize) -> Result<(DVector<f64>, f64)> {
    let x = DVector::from_vec(design_vector(m)?);
    let xx = x.dot(&x);
    Ok((x, xx))
}

/// `x' Lambda x / ((x'x)^2 p^2)` for a matrix on lags `1..m`.
pub fn sigma2_mp(lambda: &LambdaMatrix, m: usize, p: f64) -> Result<f64> {
    check_power(p)?;
    let expected: Vec<usize> = (1..=m).collect();
    if lambda.lags != expected {
        return Err(FractalError::DimensionMismatch(format!(
            "matrix on lags {:?} but bandwidth {m} needs lags 1..={m}",
            lambda.lags
        )));
    }
    sigma2_mp_from_entries(&lambda.entries, p)
}

/// Same quadratic form from a bare matrix; its size sets the bandwidth.
pub fn sigma2_mp_from_entries(entries: &DMatrix<f64>, p: f64) -> Result<f64> {
    check_power(p)?;
    if !entries.is_square() {
        return Err(FractalError::DimensionMismatch(format!(
            "{}x{} matrix is not square",
            entries.nrows(),
            entries.ncols()
        )));
    }
    let (x, xx) = design_norms(entries.nrows())?;
    Ok(x.dot(&(entries * &x)) / (xx * xx * p * p))
}

fn robust_form(lambda_star: &LambdaMatrix, delta: &DeltaMatrix, m: usize) -> Result<f64> {
    if delta.nrows() != m {
        return Err(FractalError::DimensionMismatch(format!(
            "delta matrix has {} rows, bandwidth is {m}",
            delta.nrows()
        )));
    }
    if lambda_star.lags != delta.lags.members {
        return Err(FractalError::DimensionMismatch(format!(
            "matrix on lags {:?} but delta matrix on lags {:?}",
            lambda_star.lags, delta.lags.members
        )));
    }
    let (x, xx) = design_norms(m)?;
    let v = delta.entries().transpose() * x;
    Ok(v.dot(&(&lambda_star.entries * &v)) / (4.0 * xx * xx))
}

/// `x' S Lambda* S' x / (4 (x'x)^2)` with the first delta matrix `S`.
pub fn sigma2_star(
    lambda_star: &LambdaMatrix,
    sigma1: &DeltaMatrix,
    m: usize,
    p: f64,
) -> Result<f64> {
    check_power(p)?;
    robust_form(lambda_star, sigma1, m)
}

/// `x' S Lambda* S' x / (4 (x'x)^2)` with the second delta matrix `S`.
pub fn sigma2_dstar(
    lambda_star: &LambdaMatrix,
    sigma2: &DeltaMatrix,
    m: usize,
    p: f64,
) -> Result<f64> {
    check_power(p)?;
    robust_form(lambda_star, sigma2, m)
}

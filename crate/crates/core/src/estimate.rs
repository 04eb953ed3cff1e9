//! Log-log variogram regression estimators of the fractal index.
//!
//! The plain estimator regresses `log gamma_p(k/n)` on the centered design
//! vector `x_k = log k - mean(log 1..m)` and returns `slope / p - 1/2`.
//!
//! The noise-robust estimator regresses `log f_p(k/n)` instead, where
//! `f_p(k) = gamma_p(kappa k)^{2/p} - gamma_p(k)^{2/p}`. Raising to `2/p`
//! turns the variogram into a quantity scaling like `h^{2 alpha + 1}` for
//! every `p`, so its slope is divided by **2, not p**:
//! `alpha* = slope / 2 - 1/2`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FractalError, Result};
use crate::path::Path;
use crate::special::gaussian_abs_moment;
use crate::variogram::{check_lag, check_power, f_from_variogram_values, variogram_of};

/// Upper end of the fractal-index range covered by the sqrt(n) CLT.
pub const CLT_ALPHA_LIMIT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Power of the variogram.
    pub p: f64,
    /// Number of lags in the regression.
    pub m: usize,
    /// Lag multiplier of the robust estimator.
    pub kappa: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self::rough()
    }
}

impl EstimatorConfig {
    pub fn new(p: f64, m: usize, kappa: usize) -> Result<Self> {
        let c = Self { p, m, kappa };
        c.validate()?;
        Ok(c)
    }

    /// Bandwidth for presumably rough data: `p = 2`, `m = 5`, `kappa = 10`.
    pub fn rough() -> Self {
        Self {
            p: 2.0,
            m: 5,
            kappa: 10,
        }
    }

    /// Bandwidth for presumably smooth data: `m = 2`.
    pub fn smooth() -> Self {
        Self {
            m: 2,
            ..Self::rough()
        }
    }

    pub fn with_p(self, p: f64) -> Self {
        Self { p, ..self }
    }

    pub fn with_m(self, m: usize) -> Self {
        Self { m, ..self }
    }

    pub fn with_kappa(self, kappa: usize) -> Self {
        Self { kappa, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        check_power(self.p)?;
        if self.m < 2 {
            return Err(invalid(format!("bandwidth m = {} must be at least 2", self.m)));
        }
        if self.kappa < 2 {
            return Err(invalid(format!("kappa = {} must be at least 2", self.kappa)));
        }
        Ok(())
    }

    /// Minimum path length for the plain estimator.
    pub fn min_len(&self) -> usize {
        self.m + 1
    }

    /// Minimum path length for the robust estimator.
    pub fn min_len_robust(&self) -> usize {
        self.m * self.kappa + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractalEstimate {
    pub alpha_hat: f64,
    /// OLS slope of the log statistic on the log lag.
    pub slope: f64,
    /// Heteroskedasticity factor estimated from lag-1 variograms.
    pub s_p_hat: f64,
    pub config: EstimatorConfig,
    pub n: usize,
    pub robust: bool,
}

impl FractalEstimate {
    /// False when the estimate lies where the sqrt(n) CLT does not apply;
    /// standard errors derived from it are then not meaningful.
    pub fn clt_valid(&self) -> bool {
        self.alpha_hat < CLT_ALPHA_LIMIT
    }
}

/// `x_k = log k - mean(log 1..m)`, `k = 1..m`.
pub fn design_vector(m: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(invalid(format!("bandwidth m = {m} must be at least 2")));
    }
    let logs: Vec<f64> = (1..=m).map(|k| (k as f64).ln()).collect();
    let mean = logs.iter().sum::<f64>() / m as f64;
    Ok(logs.into_iter().map(|l| l - mean).collect())
}

/// OLS slope against a fixed design, reusable across many paths.
#[derive(Debug, Clone)]
pub struct Regressor {
    weights: Vec<f64>,
}

impl Regressor {
    pub fn new(m: usize) -> Result<Self> {
        let x = design_vector(m)?;
        let xx: f64 = x.iter().map(|v| v * v).sum();
        Ok(Self {
            weights: x.into_iter().map(|v| v / xx).collect(),
        })
    }

    pub fn m(&self) -> usize {
        self.weights.len()
    }

    /// `x'y / x'x`.
    pub fn slope(&self, y: &[f64]) -> f64 {
        debug_assert_eq!(y.len(), self.weights.len());
        self.weights.iter().zip(y).map(|(w, v)| w * v).sum()
    }
}

fn log_positive(values: &[f64]) -> Result<Vec<f64>> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v > 0.0 {
                Ok(v.ln())
            } else {
                Err(FractalError::DegenerateVariogram { lag: i + 1 })
            }
        })
        .collect()
}

fn log_robust(values: &[f64]) -> Result<Vec<f64>> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v > 0.0 {
                Ok(v.ln())
            } else {
                Err(FractalError::NonpositiveRobustStatistic {
                    lag: i + 1,
                    value: v,
                })
            }
        })
        .collect()
}

/// Slope and index from variogram values at lags `1..=values.len()`.
pub fn estimate_from_variogram(values: &[f64], p: f64) -> Result<(f64, f64)> {
    check_power(p)?;
    let reg = Regressor::new(values.len())?;
    let slope = reg.slope(&log_positive(values)?);
    Ok((slope, slope / p - 0.5))
}

/// Robust slope and index from variogram values at lags `k` and `kappa k`,
/// `k = 1..=at_lag.len()`.
pub fn estimate_robust_from_variogram(
    at_lag: &[f64],
    at_kappa_lag: &[f64],
    p: f64,
) -> Result<(f64, f64)> {
    check_power(p)?;
    if at_lag.len() != at_kappa_lag.len() {
        return Err(FractalError::DimensionMismatch(format!(
            "{} variogram values at lags k but {} at lags kappa k",
            at_lag.len(),
            at_kappa_lag.len()
        )));
    }
    let f: Vec<f64> = at_lag
        .iter()
        .zip(at_kappa_lag)
        .map(|(&lo, &hi)| f_from_variogram_values(hi, lo, p))
        .collect();
    let reg = Regressor::new(f.len())?;
    let slope = reg.slope(&log_robust(&f)?);
    Ok((slope, slope / 2.0 - 0.5))
}

/// Gaussian absolute moment `E|N(0,1)|^s`.
pub fn moment_constant(s: f64) -> Result<f64> {
    check_power(s)?;
    Ok(gaussian_abs_moment(s))
}

/// Heteroskedasticity factor from two lag-1 variogram values.
pub fn sp_from_variogram(gamma_p: f64, gamma_2p: f64, p: f64) -> Result<f64> {
    if !(gamma_p > 0.0) {
        return Err(FractalError::DegenerateVariogram { lag: 1 });
    }
    Ok((gamma_2p / gaussian_abs_moment(2.0 * p)).sqrt() / (gamma_p / gaussian_abs_moment(p)))
}

/// `sqrt(gamma_{2p}(1/n) / m_{2p}) / (gamma_p(1/n) / m_p)`.
pub fn estimate_sp(path: &Path, p: f64) -> Result<f64> {
    check_power(p)?;
    sp_of(path.values(), p)
}

pub(crate) fn sp_of(values: &[f64], p: f64) -> Result<f64> {
    sp_from_variogram(
        variogram_of(values, p, 1),
        variogram_of(values, 2.0 * p, 1),
        p,
    )
}

fn check_len(n: usize, need: usize) -> Result<()> {
    if n < need {
        Err(FractalError::PathTooShort { got: n, need })
    } else {
        Ok(())
    }
}

/// Plain slope from raw values; `values.len() > m`.
pub(crate) fn plain_slope(values: &[f64], p: f64, reg: &Regressor) -> Result<f64> {
    let g: Vec<f64> = (1..=reg.m()).map(|k| variogram_of(values, p, k)).collect();
    Ok(reg.slope(&log_positive(&g)?))
}

/// Robust slope from raw values; `values.len() > m kappa`.
pub(crate) fn robust_slope(values: &[f64], p: f64, kappa: usize, reg: &Regressor) -> Result<f64> {
    let f: Vec<f64> = (1..=reg.m())
        .map(|k| {
            f_from_variogram_values(
                variogram_of(values, p, kappa * k),
                variogram_of(values, p, k),
                p,
            )
        })
        .collect();
    Ok(reg.slope(&log_robust(&f)?))
}

pub fn estimate_alpha(path: &Path, config: &EstimatorConfig) -> Result<FractalEstimate> {
    config.validate()?;
    check_len(path.len(), config.min_len())?;
    let reg = Regressor::new(config.m)?;
    let slope = plain_slope(path.values(), config.p, &reg)?;
    Ok(FractalEstimate {
        alpha_hat: slope / config.p - 0.5,
        slope,
        s_p_hat: sp_of(path.values(), config.p)?,
        config: *config,
        n: path.len(),
        robust: false,
    })
}

pub fn estimate_alpha_robust(path: &Path, config: &EstimatorConfig) -> Result<FractalEstimate> {
    config.validate()?;
    check_len(path.len(), config.min_len_robust())?;
    check_lag(path.len(), config.m * config.kappa)?;
    let reg = Regressor::new(config.m)?;
    let slope = robust_slope(path.values(), config.p, config.kappa, &reg)?;
    Ok(FractalEstimate {
        alpha_hat: slope / 2.0 - 0.5,
        slope,
        s_p_hat: sp_of(path.values(), config.p)?,
        config: *config,
        n: path.len(),
        robust: true,
    })
}

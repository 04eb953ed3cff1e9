//! Feasible tests and confidence intervals built on the asymptotic normality
//! of the estimators, with Monte Carlo variances from [`VarianceEngine`].

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::asymvar::{VarianceEngine, VarianceSource, VarianceValue};
use crate::error::{invalid, FractalError, Result};
use crate::estimate::{
    estimate_alpha, estimate_alpha_robust, EstimatorConfig, FractalEstimate, CLT_ALPHA_LIMIT,
};
use crate::path::Path;

/// Range of fractal indices at which variances of the noise test are evaluated.
pub const NOISE_TEST_ALPHA_RANGE: (f64, f64) = (-0.49, 0.49);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    TwoSided,
    Greater,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
    pub level: f64,
    pub alternative: Alternative,
    /// Human-readable null hypothesis.
    pub null_spec: String,
    pub n: usize,
    pub alpha_hat: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_hat_robust: Option<f64>,
    pub s_p_hat: f64,
    pub variance_used: f64,
    pub variance_source: VarianceSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub std_error: f64,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("level {level} must lie in (0, 1)")))
    }
}

fn check_clt(alpha: f64) -> Result<()> {
    if alpha > -0.5 && alpha < CLT_ALPHA_LIMIT {
        Ok(())
    } else {
        Err(FractalError::OutsideCltRegime { alpha })
    }
}

pub fn p_value(statistic: f64, alternative: Alternative) -> f64 {
    let z = std_normal();
    match alternative {
        Alternative::TwoSided => (2.0 * z.sf(statistic.abs())).min(1.0),
        Alternative::Greater => z.sf(statistic),
    }
}

/// `sqrt(n) * diff / (s_p * sqrt(variance))`.
pub fn studentize(diff: f64, n: usize, s_p_hat: f64, variance: f64) -> f64 {
    if diff == 0.0 {
        return 0.0;
    }
    (n as f64).sqrt() * diff / (s_p_hat * variance.sqrt())
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    statistic: f64,
    alternative: Alternative,
    level: f64,
    null_spec: String,
    est: &FractalEstimate,
    robust: Option<f64>,
    var: VarianceValue,
) -> TestResult {
    let p = p_value(statistic, alternative);
    TestResult {
        statistic,
        p_value: p,
        reject: p < level,
        level,
        alternative,
        null_spec,
        n: est.n,
        alpha_hat: est.alpha_hat,
        alpha_hat_robust: robust,
        s_p_hat: est.s_p_hat,
        variance_used: var.value,
        variance_source: var.source,
    }
}

/// Test of `alpha = alpha0` from a precomputed estimate (plain or robust).
pub fn test_alpha_from_estimate(
    est: &FractalEstimate,
    alpha0: f64,
    engine: &VarianceEngine,
    level: f64,
) -> Result<TestResult> {
    check_level(level)?;
    check_clt(alpha0)?;
    let var = if est.robust {
        engine.sigma2_star(alpha0, &est.config, est.n)?
    } else {
        engine.sigma2(alpha0, &est.config, est.n)?
    };
    let stat = studentize(est.alpha_hat - alpha0, est.n, est.s_p_hat, var.value);
    Ok(assemble(
        stat,
        Alternative::TwoSided,
        level,
        format!("alpha = {alpha0}"),
        est,
        None,
        var,
    ))
}

/// Two-sided test of `alpha = alpha0` with the plain estimator; the variance
/// is evaluated under the null.
pub fn test_alpha(
    path: &Path,
    alpha0: f64,
    config: &EstimatorConfig,
    engine: &VarianceEngine,
    level: f64,
) -> Result<TestResult> {
    check_clt(alpha0)?;
    let est = estimate_alpha(path, config)?;
    test_alpha_from_estimate(&est, alpha0, engine, level)
}

/// Two-sided test of `alpha = alpha0` with the noise-robust estimator.
pub fn test_alpha_robust(
    path: &Path,
    alpha0: f64,
    config: &EstimatorConfig,
    engine: &VarianceEngine,
    level: f64,
) -> Result<TestResult> {
    check_clt(alpha0)?;
    let est = estimate_alpha_robust(path, config)?;
    test_alpha_from_estimate(&est, alpha0, engine, level)
}

/// Upper-tail test of the absence of noise from precomputed estimates; the
/// variance is evaluated at the robust estimate.
pub fn noise_test_from_estimates(
    plain: &FractalEstimate,
    robust: &FractalEstimate,
    engine: &VarianceEngine,
    level: f64,
) -> Result<TestResult> {
    check_level(level)?;
    if plain.robust || !robust.robust {
        return Err(invalid("noise test needs one plain and one robust estimate"));
    }
    let (lo, hi) = NOISE_TEST_ALPHA_RANGE;
    let at = robust.alpha_hat.clamp(lo, hi);
    let var = engine.sigma2_dstar(at, &robust.config, robust.n)?;
    let stat = studentize(
        robust.alpha_hat - plain.alpha_hat,
        plain.n,
        plain.s_p_hat,
        var.value,
    );
    Ok(assemble(
        stat,
        Alternative::Greater,
        level,
        "no additive noise".to_string(),
        plain,
        Some(robust.alpha_hat),
        var,
    ))
}

pub fn noise_test(
    path: &Path,
    config: &EstimatorConfig,
    engine: &VarianceEngine,
    level: f64,
) -> Result<TestResult> {
    let plain = estimate_alpha(path, config)?;
    let robust = estimate_alpha_robust(path, config)?;
    noise_test_from_estimates(&plain, &robust, engine, level)
}

/// Interval `alpha_hat -+ z * s_p * sqrt(variance / n)` with the variance
/// evaluated at the estimate.
pub fn confidence_interval(
    est: &FractalEstimate,
    engine: &VarianceEngine,
    level: f64,
) -> Result<ConfidenceInterval> {
    check_level(level)?;
    check_clt(est.alpha_hat)?;
    let var = if est.robust {
        engine.sigma2_star(est.alpha_hat, &est.config, est.n)?
    } else {
        engine.sigma2(est.alpha_hat, &est.config, est.n)?
    };
    Ok(interval_from_variance(est, var.value, level))
}

/// Interval for a given variance; exposed so the width arithmetic can be
/// checked without Monte Carlo.
pub fn interval_from_variance(est: &FractalEstimate, variance: f64, level: f64) -> ConfidenceInterval {
    let z = std_normal().inverse_cdf(1.0 - level / 2.0);
    let se = est.s_p_hat * (variance / est.n as f64).sqrt();
    ConfidenceInterval {
        lower: est.alpha_hat - z * se,
        upper: est.alpha_hat + z * se,
        level,
        std_error: se,
    }
}

/// One-sample Kolmogorov-Smirnov test against the standard normal. Returns
/// the statistic and its asymptotic p-value.
pub fn ks_test_normal(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (0.0, 1.0);
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let z = std_normal();
    let nf = n as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = z.cdf(x);
            (f - i as f64 / nf).max((i + 1) as f64 / nf - f)
        })
        .fold(0.0, f64::max);
    let sn = nf.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    (d, kolmogorov_sf(lambda))
}

fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymvar::McSettings;
    use crate::seed::SeedStream;
    use rand_distr::{Distribution, StandardNormal};

    fn engine() -> VarianceEngine {
        VarianceEngine::new(McSettings::default().with_replications(64).with_seed(1))
    }

    fn fake(alpha_hat: f64, robust: bool, n: usize) -> FractalEstimate {
        FractalEstimate {
            alpha_hat,
            slope: 0.0,
            s_p_hat: 1.0,
            config: EstimatorConfig::rough(),
            n,
            robust,
        }
    }

    #[test]
    fn exact_null_gives_zero_statistic() {
        let e = engine();
        let r = test_alpha_from_estimate(&fake(-0.1, false, 500), -0.1, &e, 0.05).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(!r.reject);
        let r = test_alpha_from_estimate(&fake(-0.1, true, 500), -0.1, &e, 0.05).unwrap();
        assert_eq!(r.statistic, 0.0);
        let n = noise_test_from_estimates(&fake(0.0, false, 600), &fake(0.0, true, 600), &e, 0.05)
            .unwrap();
        assert_eq!(n.statistic, 0.0);
        assert!((n.p_value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn statistic_is_recomputable() {
        let e = engine();
        let est = fake(0.03, false, 400);
        let r = test_alpha_from_estimate(&est, 0.0, &e, 0.05).unwrap();
        let manual = 20.0 * 0.03 / r.variance_used.sqrt();
        assert!((r.statistic - manual).abs() < 1e-12);
        assert_eq!(r.reject, r.p_value < 0.05);
    }

    #[test]
    fn clt_regime_enforced() {
        let e = engine();
        assert!(matches!(
            test_alpha_from_estimate(&fake(0.3, false, 400), 0.3, &e, 0.05),
            Err(FractalError::OutsideCltRegime { .. })
        ));
        assert!(confidence_interval(&fake(0.3, false, 400), &e, 0.05).is_err());
        assert!(test_alpha_from_estimate(&fake(0.0, false, 400), 0.0, &e, 1.5).is_err());
    }

    #[test]
    fn interval_width_arithmetic() {
        let est = fake(-0.2, false, 1000);
        let ci = interval_from_variance(&est, 0.6, 0.3173105078629141);
        assert!(((ci.upper - ci.lower) / 2.0 / (0.6f64 / 1000.0).sqrt() - 1.0).abs() < 0.01);
        let wide = interval_from_variance(&est, 0.6, 0.05);
        let narrow = interval_from_variance(&fake(-0.2, false, 4000), 0.6, 0.05);
        let ratio = (wide.upper - wide.lower) / (narrow.upper - narrow.lower);
        assert!((ratio - 2.0).abs() < 1e-12);
    }

    #[test]
    fn p_values() {
        assert!((p_value(1.959_963_984_540_054, Alternative::TwoSided) - 0.05).abs() < 1e-9);
        assert!((p_value(1.644_853_626_951_472_2, Alternative::Greater) - 0.05).abs() < 1e-9);
        assert!((p_value(0.0, Alternative::Greater) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ks_accepts_normal_and_rejects_shifted() {
        let mut rng = SeedStream::new(4, "ks").rng(0);
        let xs: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let (_, p) = ks_test_normal(&xs);
        assert!(p > 0.01, "{p}");
        let shifted: Vec<f64> = xs.iter().map(|x| x + 0.3).collect();
        let (_, p) = ks_test_normal(&shifted);
        assert!(p < 1e-6, "{p}");
    }
}

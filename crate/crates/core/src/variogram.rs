//! Empirical `p`-th order variograms and the kappa-differenced statistic.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FractalError, Result};
use crate::path::Path;
use crate::special::gaussian_abs_moment;

#[inline]
fn abs_pow(d: f64, p: f64) -> f64 {
    let a = d.abs();
    if a == 0.0 {
        0.0
    } else {
        (p * a.ln()).exp()
    }
}

pub(crate) fn check_power(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("power p = {p} must be positive and finite")))
    }
}

/// Variogram of raw observations; the caller guarantees `1 <= k < values.len()`
/// and `p > 0`.
pub(crate) fn variogram_of(values: &[f64], p: f64, k: usize) -> f64 {
    let n = values.len();
    let diffs = values[k..].iter().zip(&values[..n - k]).map(|(a, b)| a - b);
    let sum: f64 = if p == 2.0 {
        diffs.map(|d| d * d).sum()
    } else if p == 1.0 {
        diffs.map(f64::abs).sum()
    } else if p == 3.0 {
        diffs.map(|d| d * d * d.abs()).sum()
    } else if p == 4.0 {
        diffs
            .map(|d| {
                let s = d * d;
                s * s
            })
            .sum()
    } else {
        diffs.map(|d| abs_pow(d, p)).sum()
    };
    sum / (n - k) as f64
}

pub(crate) fn check_lag(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        Err(FractalError::LagOutOfRange { lag: k, n })
    } else {
        Ok(())
    }
}

/// `(n-k)^{-1} sum_i |X_{(i+k)/n} - X_{i/n}|^p` for `1 <= k <= n-1`.
pub fn empirical_variogram(path: &Path, p: f64, k: usize) -> Result<f64> {
    check_power(p)?;
    check_lag(path.len(), k)?;
    Ok(variogram_of(path.values(), p, k))
}

/// `f_p(k) = gamma_p(kappa k)^{2/p} - gamma_p(k)^{2/p}`. Negative values are
/// returned as is.
pub fn empirical_f(path: &Path, p: f64, k: usize, kappa: usize) -> Result<f64> {
    check_power(p)?;
    if kappa < 2 {
        return Err(invalid(format!("kappa = {kappa} must be at least 2")));
    }
    check_lag(path.len(), k)?;
    check_lag(path.len(), kappa * k)?;
    let lo = variogram_of(path.values(), p, k);
    let hi = variogram_of(path.values(), p, kappa * k);
    Ok(f_from_variogram_values(hi, lo, p))
}

/// The kappa-differenced statistic from two variogram values.
pub fn f_from_variogram_values(at_kappa_lag: f64, at_lag: f64, p: f64) -> f64 {
    at_kappa_lag.powf(2.0 / p) - at_lag.powf(2.0 / p)
}

/// Theoretical variogram `C_p h^{p(alpha + 1/2)}` of standard fBm.
pub fn fbm_variogram(p: f64, h: f64, alpha: f64) -> f64 {
    gaussian_abs_moment(p) * h.powf(p * (alpha + 0.5))
}

/// Empirical variogram evaluated on a set of lags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariogramCurve {
    pub p: f64,
    pub n: usize,
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
}

impl VariogramCurve {
    pub fn compute(path: &Path, p: f64, lags: &[usize]) -> Result<Self> {
        check_power(p)?;
        if lags.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("lags must be strictly increasing"));
        }
        for &k in lags {
            check_lag(path.len(), k)?;
        }
        Ok(Self {
            p,
            n: path.len(),
            lags: lags.to_vec(),
            values: lags
                .iter()
                .map(|&k| variogram_of(path.values(), p, k))
                .collect(),
        })
    }

    /// Lags `1..=max_lag`.
    pub fn up_to(path: &Path, p: f64, max_lag: usize) -> Result<Self> {
        let lags: Vec<usize> = (1..=max_lag).collect();
        Self::compute(path, p, &lags)
    }

    /// Natural logs of the values; fails at the first zero.
    pub fn log_values(&self) -> Result<Vec<f64>> {
        self.lags
            .iter()
            .zip(&self.values)
            .map(|(&lag, &v)| {
                if v > 0.0 {
                    Ok(v.ln())
                } else {
                    Err(FractalError::DegenerateVariogram { lag })
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(v: &[f64]) -> Path {
        Path::new(v.to_vec()).unwrap()
    }

    #[test]
    fn alternating_path() {
        let x = p(&[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(empirical_variogram(&x, 2.0, 1).unwrap(), 1.0);
        assert_eq!(empirical_variogram(&x, 2.0, 2).unwrap(), 0.0);
        assert_eq!(empirical_f(&x, 2.0, 1, 2).unwrap(), -1.0);
        assert!(empirical_variogram(&x, 2.0, 4).is_err());
        assert!(empirical_variogram(&x, 2.0, 0).is_err());
    }

    #[test]
    fn constant_path_is_zero() {
        let x = p(&[2.5; 10]);
        for &q in &[0.5, 1.0, 2.0, 3.0, 2.7] {
            for k in 1..10 {
                assert_eq!(empirical_variogram(&x, q, k).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn linear_path_f() {
        let n = 50;
        let x = p(&(1..=n).map(|i| i as f64 / n as f64).collect::<Vec<_>>());
        let f = empirical_f(&x, 2.0, 1, 2).unwrap();
        let expect = 3.0 / (n * n) as f64;
        assert!((f - expect).abs() < 1e-15);
    }

    #[test]
    fn fbm_variogram_values() {
        assert!((fbm_variogram(2.0, 1e-3, 0.0) / 1e-3 - 1.0).abs() < 1e-13);
        assert!((fbm_variogram(1.0, 1.0, 0.0) - 0.797_884_560_802_865_4).abs() < 1e-14);
        assert!((fbm_variogram(4.0, 1.0, 0.3) - 3.0).abs() < 1e-13);
    }

    #[test]
    fn fast_paths_agree_with_general_power() {
        let x = p(&[0.3, -1.2, 0.7, 0.7, 2.0, -0.4]);
        for &q in &[1.0, 2.0, 3.0, 4.0] {
            let fast = variogram_of(x.values(), q, 2);
            let n = x.len();
            let slow: f64 = (0..n - 2)
                .map(|i| abs_pow(x.values()[i + 2] - x.values()[i], q))
                .sum::<f64>()
                / (n - 2) as f64;
            assert!((fast - slow).abs() < 1e-13 * slow.max(1.0));
        }
    }

    proptest! {
        #[test]
        fn affine_scaling(
            v in prop::collection::vec(-10.0f64..10.0, 3..40),
            c in -5.0f64..5.0,
            mu in -100.0f64..100.0,
            q in 0.5f64..4.0,
        ) {
            let x = p(&v);
            let y = x.affine(c, mu);
            let k = 1 + v.len() / 3;
            let gx = empirical_variogram(&x, q, k).unwrap();
            let gy = empirical_variogram(&y, q, k).unwrap();
            let expect = c.abs().powf(q) * gx;
            prop_assert!((gy - expect).abs() <= 1e-9 * (1.0 + expect.abs()));
        }

        #[test]
        fn reversal_invariance(v in prop::collection::vec(-10.0f64..10.0, 3..40), q in 0.5f64..4.0) {
            let x = p(&v);
            let mut r = v.clone();
            r.reverse();
            let y = p(&r);
            let k = v.len() / 2;
            let a = empirical_variogram(&x, q, k).unwrap();
            let b = empirical_variogram(&y, q, k).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }

        #[test]
        fn shift_cancellation_for_p2(g1 in 1e-3f64..10.0, g2 in 1e-3f64..10.0, s in -1e-3f64..5.0) {
            let base = f_from_variogram_values(g2, g1, 2.0);
            let shifted = f_from_variogram_values(g2 + s, g1 + s, 2.0);
            prop_assert!((base - shifted).abs() <= 1e-12 * (1.0 + g1 + g2 + s.abs()));
        }

        #[test]
        fn fbm_variogram_p2_is_power(h in 1e-6f64..10.0, a in -0.49f64..0.49) {
            let v = fbm_variogram(2.0, h, a);
            let e = h.powf(2.0 * a + 1.0);
            prop_assert!((v - e).abs() <= 1e-13 * e);
        }
    }
}

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lags::LagIndexSet;
use crate::error::{invalid, Result};
use crate::seed::SeedStream;
use crate::sim::FbmSampler;
use crate::variogram::{check_power, fbm_variogram, variogram_of};

/// Stream tag shared by both Monte Carlo routines, so that the plain matrix is
/// exactly the leading block of the robust one under the same seed.
const STREAM_TAG: &str = "lambda";

/// Relative tolerance for negative eigenvalues of a covariance estimate.
pub const PSD_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McProvenance {
    pub alpha: f64,
    pub p: f64,
    pub n_inner: usize,
    pub replications: usize,
    pub master_seed: u64,
}

/// `n Cov(gamma_p(k/n) / gamma_p(k/n; fBm), gamma_p(v/n) / gamma_p(v/n; fBm))`
/// over a set of lags.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaMatrix {
    pub lags: Vec<usize>,
    pub entries: DMatrix<f64>,
    /// Monte Carlo standard error of each entry; zero for exact matrices.
    pub std_errors: DMatrix<f64>,
    pub provenance: Option<McProvenance>,
}

impl LambdaMatrix {
    /// An exactly known matrix, e.g. from closed-form moments.
    pub fn from_entries(entries: DMatrix<f64>, lags: Vec<usize>) -> Self {
        let (r, c) = entries.shape();
        Self {
            lags,
            entries,
            std_errors: DMatrix::zeros(r, c),
            provenance: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.lags.len()
    }

    /// Block on the lags `1..=m`, which must be the first `m` lags.
    pub fn leading(&self, m: usize) -> Result<LambdaMatrix> {
        let want: Vec<usize> = (1..=m).collect();
        if self.lags.len() < m || self.lags[..m] != want[..] {
            return Err(invalid(format!(
                "lags {:?} do not start with 1..={m}",
                self.lags
            )));
        }
        Ok(Self {
            lags: want,
            entries: self.entries.view((0, 0), (m, m)).into_owned(),
            std_errors: self.std_errors.view((0, 0), (m, m)).into_owned(),
            provenance: self.provenance,
        })
    }

    pub fn max_asymmetry(&self) -> f64 {
        (&self.entries - self.entries.transpose()).abs().max()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let sym = (&self.entries + self.entries.transpose()) * 0.5;
        sym.symmetric_eigenvalues().iter().copied().collect()
    }

    pub fn is_psd(&self) -> bool {
        let ev = self.eigenvalues();
        let max = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        ev.iter().all(|&v| v >= -PSD_TOLERANCE * max)
    }
}

fn check_mc(n_inner: usize, max_lag: usize, replications: usize) -> Result<()> {
    if replications < 2 {
        return Err(invalid(format!(
            "need at least 2 replications, got {replications}"
        )));
    }
    if n_inner <= max_lag {
        return Err(invalid(format!(
            "inner sample size {n_inner} must exceed the largest lag {max_lag}"
        )));
    }
    Ok(())
}

/// Normalized variograms `gamma_p(k/n) / gamma_p(k/n; fBm)` of independent
/// fBm paths, one row per replication, in replication order.
pub fn lambda_replicates(
    alpha: f64,
    p: f64,
    lags: &[usize],
    n_inner: usize,
    replications: usize,
    master_seed: u64,
) -> Result<Vec<Vec<f64>>> {
    check_power(p)?;
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    check_mc(n_inner, max_lag, replications)?;
    let sampler = FbmSampler::new(n_inner, alpha)?;
    let norm: Vec<f64> = lags
        .iter()
        .map(|&k| 1.0 / fbm_variogram(p, k as f64 / n_inner as f64, alpha))
        .collect();
    let stream = SeedStream::new(master_seed, STREAM_TAG);
    let normalize = |x: &[f64]| -> Vec<f64> {
        lags.iter()
            .zip(&norm)
            .map(|(&k, c)| variogram_of(x, p, k) * c)
            .collect()
    };
    // Each transform yields two independent paths.
    let pairs = replications.div_ceil(2);
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..pairs)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream.rng(j as u64);
            let (a, b) = sampler.sample_pair_values(&mut rng);
            (normalize(&a), normalize(&b))
        })
        .collect();
    let mut out = Vec::with_capacity(replications);
    for (a, b) in rows {
        out.push(a);
        if out.len() < replications {
            out.push(b);
        }
    }
    Ok(out)
}

fn covariance_matrix(
    rows: &[Vec<f64>],
    lags: Vec<usize>,
    scale: f64,
    provenance: McProvenance,
) -> LambdaMatrix {
    let b = rows.len() as f64;
    let d = lags.len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= b);
    let mut entries = DMatrix::zeros(d, d);
    let mut std_errors = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let (mut s, mut s2) = (0.0, 0.0);
            for r in rows {
                let z = (r[i] - mean[i]) * (r[j] - mean[j]);
                s += z;
                s2 += z * z;
            }
            let cov = s / (b - 1.0);
            let zbar = s / b;
            let var_z = (s2 / b - zbar * zbar).max(0.0) * b / (b - 1.0);
            let se = (var_z / b).sqrt() * b / (b - 1.0);
            entries[(i, j)] = scale * cov;
            entries[(j, i)] = scale * cov;
            std_errors[(i, j)] = scale * se;
            std_errors[(j, i)] = scale * se;
        }
    }
    LambdaMatrix {
        lags,
        entries,
        std_errors,
        provenance: Some(provenance),
    }
}

fn mc_on_lags(
    alpha: f64,
    p: f64,
    lags: Vec<usize>,
    n_inner: usize,
    replications: usize,
    master_seed: u64,
) -> Result<LambdaMatrix> {
    let rows = lambda_replicates(alpha, p, &lags, n_inner, replications, master_seed)?;
    Ok(covariance_matrix(
        &rows,
        lags,
        n_inner as f64,
        McProvenance {
            alpha,
            p,
            n_inner,
            replications,
            master_seed,
        },
    ))
}

/// Monte Carlo estimate of the plain estimator's covariance matrix on lags `1..=m`.
pub fn mc_lambda(
    alpha: f64,
    p: f64,
    m: usize,
    n_inner: usize,
    replications: usize,
    master_seed: u64,
) -> Result<LambdaMatrix> {
    if m < 2 {
        return Err(invalid(format!("bandwidth m = {m} must be at least 2")));
    }
    mc_on_lags(
        alpha,
        p,
        (1..=m).collect(),
        n_inner,
        replications,
        master_seed,
    )
}

/// Monte Carlo estimate of the robust estimator's covariance matrix on the
/// lag index set of `(m, kappa)`.
pub fn mc_lambda_star(
    alpha: f64,
    p: f64,
    m: usize,
    kappa: usize,
    n_inner: usize,
    replications: usize,
    master_seed: u64,
) -> Result<LambdaMatrix> {
    let set = LagIndexSet::new(m, kappa)?;
    mc_on_lags(alpha, p, set.members, n_inner, replications, master_seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_contains_plain_block() {
        let plain = mc_lambda(-0.1, 2.0, 3, 200, 51, 8).unwrap();
        let star = mc_lambda_star(-0.1, 2.0, 3, 4, 200, 51, 8).unwrap();
        assert_eq!(star.lags, vec![1, 2, 3, 4, 8, 12]);
        let lead = star.leading(3).unwrap();
        assert_eq!(lead.entries, plain.entries);
        assert_eq!(lead.std_errors, plain.std_errors);
    }

    #[test]
    fn symmetric_psd_and_deterministic() {
        let a = mc_lambda_star(-0.2, 1.0, 5, 10, 300, 200, 3).unwrap();
        let b = mc_lambda_star(-0.2, 1.0, 5, 10, 300, 200, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.max_asymmetry(), 0.0);
        assert!(a.is_psd());
        assert!((0..a.dim()).all(|i| a.entries[(i, i)] > 0.0));
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(mc_lambda(0.0, 2.0, 2, 100, 1, 0).is_err());
        assert!(mc_lambda(0.0, 2.0, 5, 5, 10, 0).is_err());
        assert!(mc_lambda_star(0.0, 2.0, 5, 10, 50, 10, 0).is_err());
        assert!(mc_lambda(0.0, 2.0, 1, 100, 10, 0).is_err());
    }

    #[test]
    fn brownian_p1_lag1_entry() {
        // Var|Z| / (E|Z|)^2 = pi/2 - 1 for i.i.d. increments.
        let lam = mc_lambda(0.0, 1.0, 2, 2000, 2000, 5).unwrap();
        let target = std::f64::consts::FRAC_PI_2 - 1.0;
        let (v, se) = (lam.entries[(0, 0)], lam.std_errors[(0, 0)]);
        assert!((v - target).abs() < 4.0 * se, "{v} +- {se}");
    }

    #[test]
    fn odd_replication_count() {
        let rows = lambda_replicates(0.0, 2.0, &[1, 2], 64, 7, 1).unwrap();
        assert_eq!(rows.len(), 7);
        let more = lambda_replicates(0.0, 2.0, &[1, 2], 64, 8, 1).unwrap();
        assert_eq!(rows[..], more[..7]);
    }
}

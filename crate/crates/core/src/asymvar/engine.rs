use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::cache::{CacheKey, DiskCache, MatrixKind};
use super::delta::{sigma1_matrix, sigma2_matrix, sigma2_dstar, sigma2_mp, sigma2_star};
use super::lambda::{mc_lambda, mc_lambda_star, LambdaMatrix};
use crate::error::Result;
use crate::estimate::EstimatorConfig;

/// Monte Carlo settings for asymptotic variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    /// Length of the simulated fBm paths. `None` uses the length of the data
    /// being analysed, giving the finite-sample analogue of the variance.
    pub n_inner: Option<usize>,
    pub replications: usize,
    pub master_seed: u64,
    pub cache_dir: Option<PathBuf>,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            n_inner: None,
            replications: 10_000,
            master_seed: 2024,
            cache_dir: None,
        }
    }
}

impl McSettings {
    pub fn with_replications(self, replications: usize) -> Self {
        Self {
            replications,
            ..self
        }
    }

    pub fn with_n_inner(self, n_inner: usize) -> Self {
        Self {
            n_inner: Some(n_inner),
            ..self
        }
    }

    pub fn with_seed(self, master_seed: u64) -> Self {
        Self {
            master_seed,
            ..self
        }
    }

    pub fn with_cache_dir(self, dir: impl Into<PathBuf>) -> Self {
        Self {
            cache_dir: Some(dir.into()),
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceKind {
    /// Plain estimator.
    Sigma2,
    /// Robust estimator.
    Sigma2Star,
    /// Difference between the robust and plain estimators.
    Sigma2DoubleStar,
}

/// Parameters of the Monte Carlo computation behind a variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceSource {
    pub kind: VarianceKind,
    /// Fractal index at which the variance was evaluated, rounded to `1e-4`.
    pub alpha: f64,
    pub p: f64,
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<usize>,
    pub n_inner: usize,
    pub replications: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceValue {
    pub value: f64,
    pub source: VarianceSource,
}

/// Round to the `1e-4` grid on which variances are computed and cached.
pub fn round_alpha(alpha: f64) -> f64 {
    (alpha * 1e4).round() * 1e-4
}

/// Computes and memoizes Monte Carlo covariance matrices, optionally
/// persisting them to disk.
#[derive(Debug)]
pub struct VarianceEngine {
    settings: McSettings,
    disk: Option<DiskCache>,
    memo: Mutex<HashMap<CacheKey, Arc<LambdaMatrix>>>,
}

impl VarianceEngine {
    pub fn new(settings: McSettings) -> Self {
        let disk = settings.cache_dir.clone().map(DiskCache::new);
        Self {
            settings,
            disk,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn settings(&self) -> &McSettings {
        &self.settings
    }

    pub fn n_inner_for(&self, n_path: usize) -> usize {
        self.settings.n_inner.unwrap_or(n_path)
    }

    fn key(&self, kind: MatrixKind, alpha: f64, p: f64, m: usize, n_path: usize) -> CacheKey {
        CacheKey {
            kind,
            alpha_e4: (alpha * 1e4).round() as i64,
            p_bits: p.to_bits(),
            m,
            n_inner: self.n_inner_for(n_path),
            replications: self.settings.replications,
            master_seed: self.settings.master_seed,
        }
    }

    fn fetch(&self, key: CacheKey) -> Result<Arc<LambdaMatrix>> {
        if let Some(hit) = self.memo.lock().expect("memo lock").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let loaded = self.disk.as_ref().and_then(|d| d.load(&key));
        let lambda = match loaded {
            Some(l) => l,
            None => {
                let (alpha, p) = (key.alpha(), key.p());
                let (n, b, s) = (key.n_inner, key.replications, key.master_seed);
                let l = match key.kind {
                    MatrixKind::Plain => mc_lambda(alpha, p, key.m, n, b, s)?,
                    MatrixKind::Star { kappa } => mc_lambda_star(alpha, p, key.m, kappa, n, b, s)?,
                };
                if let Some(d) = &self.disk {
                    if let Err(e) = d.store(&key, &l) {
                        log::warn!("could not write cache in {}: {e}", d.dir().display());
                    }
                }
                l
            }
        };
        let lambda = Arc::new(lambda);
        self.memo
            .lock()
            .expect("memo lock")
            .insert(key, Arc::clone(&lambda));
        Ok(lambda)
    }

    pub fn lambda(&self, alpha: f64, p: f64, m: usize, n_path: usize) -> Result<Arc<LambdaMatrix>> {
        self.fetch(self.key(MatrixKind::Plain, alpha, p, m, n_path))
    }

    pub fn lambda_star(
        &self,
        alpha: f64,
        p: f64,
        m: usize,
        kappa: usize,
        n_path: usize,
    ) -> Result<Arc<LambdaMatrix>> {
        self.fetch(self.key(MatrixKind::Star { kappa }, alpha, p, m, n_path))
    }

    fn source(
        &self,
        kind: VarianceKind,
        alpha: f64,
        cfg: &EstimatorConfig,
        kappa: Option<usize>,
        n_path: usize,
    ) -> VarianceSource {
        VarianceSource {
            kind,
            alpha: round_alpha(alpha),
            p: cfg.p,
            m: cfg.m,
            kappa,
            n_inner: self.n_inner_for(n_path),
            replications: self.settings.replications,
            master_seed: self.settings.master_seed,
        }
    }

    /// Asymptotic variance of the plain estimator at `alpha`.
    pub fn sigma2(&self, alpha: f64, cfg: &EstimatorConfig, n_path: usize) -> Result<VarianceValue> {
        cfg.validate()?;
        let lam = self.lambda(alpha, cfg.p, cfg.m, n_path)?;
        Ok(VarianceValue {
            value: sigma2_mp(&lam, cfg.m, cfg.p)?,
            source: self.source(VarianceKind::Sigma2, alpha, cfg, None, n_path),
        })
    }

    /// Asymptotic variance of the robust estimator at `alpha`.
    pub fn sigma2_star(
        &self,
        alpha: f64,
        cfg: &EstimatorConfig,
        n_path: usize,
    ) -> Result<VarianceValue> {
        cfg.validate()?;
        let a = round_alpha(alpha);
        let lam = self.lambda_star(alpha, cfg.p, cfg.m, cfg.kappa, n_path)?;
        let s1 = sigma1_matrix(a, cfg.p, cfg.m, cfg.kappa)?;
        Ok(VarianceValue {
            value: sigma2_star(&lam, &s1, cfg.m, cfg.p)?,
            source: self.source(VarianceKind::Sigma2Star, alpha, cfg, Some(cfg.kappa), n_path),
        })
    }

    /// Asymptotic variance of the difference between the robust and plain
    /// estimators at `alpha`.
    pub fn sigma2_dstar(
        &self,
        alpha: f64,
        cfg: &EstimatorConfig,
        n_path: usize,
    ) -> Result<VarianceValue> {
        cfg.validate()?;
        let a = round_alpha(alpha);
        let lam = self.lambda_star(alpha, cfg.p, cfg.m, cfg.kappa, n_path)?;
        let s2 = sigma2_matrix(a, cfg.p, cfg.m, cfg.kappa)?;
        Ok(VarianceValue {
            value: sigma2_dstar(&lam, &s2, cfg.m, cfg.p)?,
            source: self.source(
                VarianceKind::Sigma2DoubleStar,
                alpha,
                cfg,
                Some(cfg.kappa),
                n_path,
            ),
        })
    }
}

//! Parametric Gaussian fractal processes and their exact simulation.
//!
//! Every stationary model has unit variance and correlation `rho(|x|)` with
//! `1 - rho(x) ~ x^{2 alpha + 1}` near the origin, so `alpha` is its fractal
//! index. `beta > 0` scales the argument.
//!
//! | kind                | rho(x)                                                          |
//! |---------------------|-----------------------------------------------------------------|
//! | Matern              | `2^{1/2-a}/Gamma(a+1/2) |bx|^{a+1/2} K_{a+1/2}(|bx|)`            |
//! | Powered exponential | `exp(-|bx|^{2a+1})`                                             |
//! | Cauchy              | `(1 + |bx|^{2a+1})^{-tau/(2a+1)}`, `tau > 0`                    |
//! | Dagum               | `1 - (|bx|^{2t+1} / (1 + |bx|^{2t+1}))^{(2a+1)/(2t+1)}`, `a < t` |

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, FractalError, Result};
use crate::path::Path;
use crate::seed::rng_from_seed;
use crate::sim::circulant::{
    check_eigenvalues, circulant_eigenvalues, symmetric_row, CirculantSampler, EIGEN_TOLERANCE,
};
use crate::sim::fgn::check_alpha;
use crate::special::bessel_k;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Fbm,
    Matern,
    PoweredExponential,
    Cauchy,
    Dagum,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Fbm,
        ModelKind::Matern,
        ModelKind::PoweredExponential,
        ModelKind::Cauchy,
        ModelKind::Dagum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Fbm => "fbm",
            ModelKind::Matern => "matern",
            ModelKind::PoweredExponential => "powered-exponential",
            ModelKind::Cauchy => "cauchy",
            ModelKind::Dagum => "dagum",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = FractalError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fbm" => Ok(ModelKind::Fbm),
            "matern" => Ok(ModelKind::Matern),
            "powered-exponential" | "powexp" | "powered_exponential" => {
                Ok(ModelKind::PoweredExponential)
            }
            "cauchy" => Ok(ModelKind::Cauchy),
            "dagum" => Ok(ModelKind::Dagum),
            other => Err(invalid(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel {
    pub kind: ModelKind,
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
}

impl GaussianModel {
    pub fn new(kind: ModelKind, alpha: f64, beta: f64, tau: f64) -> Result<Self> {
        let model = Self {
            kind,
            alpha,
            beta,
            tau,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn fbm(alpha: f64) -> Result<Self> {
        Self::new(ModelKind::Fbm, alpha, 1.0, 0.0)
    }

    pub fn matern(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(ModelKind::Matern, alpha, beta, 0.0)
    }

    pub fn powered_exponential(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(ModelKind::PoweredExponential, alpha, beta, 0.0)
    }

    pub fn cauchy(alpha: f64, beta: f64, tau: f64) -> Result<Self> {
        Self::new(ModelKind::Cauchy, alpha, beta, tau)
    }

    pub fn dagum(alpha: f64, beta: f64, tau: f64) -> Result<Self> {
        Self::new(ModelKind::Dagum, alpha, beta, tau)
    }

    /// The parameterization used in the bandwidth studies: `beta = 1`,
    /// Cauchy `tau = 1`, Dagum `tau = 0` (or `0.45` when `alpha >= 0`, since
    /// Dagum needs `alpha < tau`).
    pub fn study_default(kind: ModelKind, alpha: f64) -> Result<Self> {
        let tau = match kind {
            ModelKind::Cauchy => 1.0,
            ModelKind::Dagum if alpha < 0.0 => 0.0,
            ModelKind::Dagum => 0.45,
            _ => 0.0,
        };
        Self::new(kind, alpha, 1.0, tau)
    }

    /// Parameter ranges under which the model satisfies the fractal assumptions.
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.kind != ModelKind::Fbm && !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid(format!("beta = {} must be positive", self.beta)));
        }
        match self.kind {
            ModelKind::Cauchy if !(self.tau > 0.0 && self.tau.is_finite()) => Err(invalid(
                format!("Cauchy requires tau > 0, got {}", self.tau),
            )),
            ModelKind::Dagum if !(self.tau > -0.5 && self.tau < 0.5) => Err(invalid(format!(
                "Dagum requires tau in (-1/2, 1/2), got {}",
                self.tau
            ))),
            ModelKind::Dagum if self.alpha >= self.tau => Err(invalid(format!(
                "Dagum requires alpha < tau, got alpha = {} and tau = {}",
                self.alpha, self.tau
            ))),
            _ => Ok(()),
        }
    }

    /// Reasons the central limit theory does not cover these parameters:
    /// the CLT regime `alpha < 1/4` and the model-specific ranges under which
    /// the slowly varying part has a well-behaved derivative.
    pub fn clt_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.alpha >= 0.25 {
            out.push(format!(
                "alpha = {} >= 1/4: the sqrt(n) central limit theorem does not apply",
                self.alpha
            ));
        }
        match self.kind {
            ModelKind::Matern if self.alpha >= 0.25 => {}
            ModelKind::PoweredExponential | ModelKind::Cauchy if self.alpha <= -0.25 => {
                out.push(format!(
                    "{} requires alpha in (-1/4, 1/2) for the CLT, got {}",
                    self.kind, self.alpha
                ));
            }
            ModelKind::Dagum if self.tau < -0.25 => {
                out.push(format!(
                    "dagum requires tau in [-1/4, 1/2) for the CLT, got {}",
                    self.tau
                ));
            }
            _ => {}
        }
        out
    }

    /// Errors if the CLT does not cover this parameterization.
    pub fn validate_for_clt(&self) -> Result<()> {
        self.validate()?;
        match self.clt_warnings().into_iter().next() {
            Some(w) => Err(invalid(w)),
            None => Ok(()),
        }
    }

    pub fn is_stationary(&self) -> bool {
        self.kind != ModelKind::Fbm
    }

    /// Autocorrelation at distance `x >= 0`.
    pub fn acf(&self, x: f64) -> Result<f64> {
        if !self.is_stationary() {
            return Err(FractalError::NotStationary("fbm"));
        }
        if !(x >= 0.0) {
            return Err(invalid(format!("acf argument {x} must be nonnegative")));
        }
        Ok(self.acf_unchecked(x))
    }

    fn acf_unchecked(&self, x: f64) -> f64 {
        let y = (self.beta * x).abs();
        if y == 0.0 {
            return 1.0;
        }
        let s = 2.0 * self.alpha + 1.0;
        match self.kind {
            ModelKind::Fbm => unreachable!(),
            ModelKind::Matern => {
                let nu = self.alpha + 0.5;
                let v = 2f64.powf(1.0 - nu) / gamma(nu) * y.powf(nu) * bessel_k(nu, y);
                v.min(1.0)
            }
            ModelKind::PoweredExponential => (-y.powf(s)).exp(),
            ModelKind::Cauchy => (1.0 + y.powf(s)).powf(-self.tau / s),
            ModelKind::Dagum => {
                let b = 2.0 * self.tau + 1.0;
                let yb = y.powf(b);
                1.0 - (yb / (1.0 + yb)).powf(s / b)
            }
        }
    }
}

impl fmt::Display for GaussianModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ModelKind::Fbm => write!(f, "fbm(alpha={})", self.alpha),
            ModelKind::Cauchy | ModelKind::Dagum => write!(
                f,
                "{}(alpha={}, beta={}, tau={})",
                self.kind, self.alpha, self.beta, self.tau
            ),
            _ => write!(f, "{}(alpha={}, beta={})", self.kind, self.alpha, self.beta),
        }
    }
}

/// Autocorrelation of `model` at distance `x`.
pub fn model_acf(model: &GaussianModel, x: f64) -> Result<f64> {
    model.acf(x)
}

fn raised_cosine(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * t).cos())
    }
}

/// Exact sampler for a stationary model on the grid `1/n, ..., 1`.
///
/// Lags `0..n-1` carry the model covariance; beyond that the covariance is
/// tapered smoothly to zero, which keeps the circulant spectrum nonnegative
/// for the smooth models where plain padding fails. The half-length doubles
/// from the first power of two `>= 2n` while the spectrum has negative
/// entries, up to `8n`.
#[derive(Debug, Clone)]
pub struct StationarySampler {
    model: GaussianModel,
    inner: CirculantSampler,
}

impl StationarySampler {
    pub fn new(model: &GaussianModel, n: usize) -> Result<Self> {
        model.validate()?;
        if !model.is_stationary() {
            return Err(FractalError::NotStationary("fbm"));
        }
        if n < 2 {
            return Err(invalid(format!("n = {n} must be at least 2")));
        }
        let limit = (8 * n).next_power_of_two();
        let mut half = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let mut acf: Vec<f64> = Vec::new();
        loop {
            let start = acf.len();
            acf.extend((start..=half).map(|k| model.acf_unchecked(k as f64 / n as f64)));
            let last_exact = (n - 1) as f64;
            let span = half as f64 - last_exact;
            let cov: Vec<f64> = acf
                .iter()
                .enumerate()
                .map(|(k, &r)| r * raised_cosine((k as f64 - last_exact) / span))
                .collect();
            let row = symmetric_row(&cov);
            let fft = planner.plan_fft_forward(row.len());
            let check = check_eigenvalues(circulant_eigenvalues(&row, &fft));
            let acceptable = check.min >= -EIGEN_TOLERANCE * check.max;
            if check.min >= 0.0 || (half >= limit && acceptable) {
                let inner = CirculantSampler::from_eigen_check(check, n, Arc::clone(&fft))?;
                return Ok(Self {
                    model: *model,
                    inner,
                });
            }
            if half >= limit {
                return Err(FractalError::EmbeddingFailed {
                    min_eigenvalue: check.min,
                    max_eigenvalue: check.max,
                    size: row.len(),
                });
            }
            half *= 2;
        }
    }

    pub fn model(&self) -> &GaussianModel {
        &self.model
    }

    pub fn embedding_size(&self) -> usize {
        self.inner.embedding_size()
    }

    pub fn sample_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.inner.sample(rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Path {
        Path::from_trusted(self.inner.sample(rng))
    }
}

/// Zero-mean unit-variance path of a stationary model on the grid `k/n`.
pub fn simulate_stationary_gaussian(model: &GaussianModel, n: usize, seed: u64) -> Result<Path> {
    let sampler = StationarySampler::new(model, n)?;
    let mut rng = rng_from_seed(seed);
    Ok(sampler
        .sample(&mut rng)
        .annotate("model", model)
        .annotate("n", n)
        .annotate("seed", seed))
}

/// Sampler for any Table-style model, fBm included.
#[derive(Debug, Clone)]
pub enum ModelSampler {
    Fbm(super::fgn::FbmSampler),
    Stationary(StationarySampler),
}

impl ModelSampler {
    pub fn new(model: &GaussianModel, n: usize) -> Result<Self> {
        if model.is_stationary() {
            Ok(Self::Stationary(StationarySampler::new(model, n)?))
        } else {
            Ok(Self::Fbm(super::fgn::FbmSampler::new(n, model.alpha)?))
        }
    }

    pub fn sample_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Self::Fbm(s) => s.sample_values(rng),
            Self::Stationary(s) => s.sample_values(rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acf_examples() {
        let pe = GaussianModel::powered_exponential(0.0, 1.0).unwrap();
        assert!((pe.acf(1.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        let c = GaussianModel::cauchy(0.0, 1.0, 1.0).unwrap();
        assert!((c.acf(1.0).unwrap() - 0.5).abs() < 1e-15);
        for m in [
            GaussianModel::matern(-0.2, 1.0).unwrap(),
            pe,
            c,
            GaussianModel::dagum(-0.2, 1.0, 0.0).unwrap(),
        ] {
            assert_eq!(m.acf(0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn matern_half_is_exponential() {
        // nu = alpha + 1/2 = 1/2 gives exp(-|beta x|).
        let m = GaussianModel::matern(0.0, 2.0).unwrap();
        for &x in &[1e-3, 0.1, 0.7, 3.0] {
            assert!((m.acf(x).unwrap() - (-2.0 * x).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn fbm_has_no_acf() {
        let m = GaussianModel::fbm(0.1).unwrap();
        assert!(matches!(m.acf(0.5), Err(FractalError::NotStationary(_))));
        assert!(StationarySampler::new(&m, 10).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(GaussianModel::dagum(0.1, 1.0, 0.0).is_err());
        assert!(GaussianModel::dagum(-0.1, 1.0, 0.0).is_ok());
        assert!(GaussianModel::cauchy(0.0, 1.0, 0.0).is_err());
        assert!(GaussianModel::matern(0.0, -1.0).is_err());
        assert!(GaussianModel::matern(0.5, 1.0).is_err());
        let m = GaussianModel::matern(0.3, 1.0).unwrap();
        assert!(!m.clt_warnings().is_empty());
        assert!(m.validate_for_clt().is_err());
        let c = GaussianModel::cauchy(-0.4, 1.0, 1.0).unwrap();
        assert!(c.validate_for_clt().is_err());
        assert!(GaussianModel::cauchy(-0.2, 1.0, 1.0)
            .unwrap()
            .validate_for_clt()
            .is_ok());
    }

    #[test]
    fn smooth_models_embed_without_clipping() {
        for kind in [
            ModelKind::Matern,
            ModelKind::PoweredExponential,
            ModelKind::Cauchy,
            ModelKind::Dagum,
        ] {
            let model = GaussianModel::study_default(kind, 0.2).unwrap();
            let s = StationarySampler::new(&model, 1000).unwrap();
            assert!(s.embedding_size() <= 16 * 1024, "{kind}");
        }
    }

    #[test]
    fn same_seed_same_path() {
        let m = GaussianModel::matern(-0.2, 1.0).unwrap();
        let a = simulate_stationary_gaussian(&m, 200, 9).unwrap();
        let b = simulate_stationary_gaussian(&m, 200, 9).unwrap();
        assert_eq!(a.values(), b.values());
    }
}

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{FractalError, Result};

/// Relative tolerance for negative circulant eigenvalues.
pub const EIGEN_TOLERANCE: f64 = 1e-8;

/// Exact sampler for a stationary Gaussian vector via a circulant embedding
/// of its covariance (Davies-Harte / Wood-Chan).
#[derive(Clone)]
pub struct CirculantSampler {
    n: usize,
    scale: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CirculantSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantSampler")
            .field("n", &self.n)
            .field("size", &self.scale.len())
            .finish()
    }
}

/// Eigenvalues of the symmetric circulant matrix with first row `row`.
pub(crate) fn circulant_eigenvalues(row: &[f64], fft: &Arc<dyn Fft<f64>>) -> Vec<f64> {
    let mut buf: Vec<Complex64> = row.iter().map(|&c| Complex64::new(c, 0.0)).collect();
    fft.process(&mut buf);
    buf.into_iter().map(|z| z.re).collect()
}

/// Symmetric first row of length `2 * half` from covariances at lags `0..=half`.
pub(crate) fn symmetric_row(cov: &[f64]) -> Vec<f64> {
    let half = cov.len() - 1;
    let mut row = Vec::with_capacity(2 * half);
    row.extend_from_slice(cov);
    row.extend(cov[1..half].iter().rev());
    row
}

pub(crate) struct EigenCheck {
    pub eigenvalues: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

pub(crate) fn check_eigenvalues(eigenvalues: Vec<f64>) -> EigenCheck {
    let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    EigenCheck {
        eigenvalues,
        min,
        max,
    }
}

impl CirculantSampler {
    /// Builds the sampler from lags `0..=half` of the (possibly extended)
    /// covariance sequence; the first `n` outputs have covariance `cov[|i-j|]`.
    pub fn from_covariances(cov: &[f64], n: usize) -> Result<Self> {
        let half = cov.len() - 1;
        if half + 1 < n {
            return Err(FractalError::InvalidParameter(format!(
                "embedding half-length {half} too short for n = {n}"
            )));
        }
        let row = symmetric_row(cov);
        let size = row.len();
        let fft = FftPlanner::new().plan_fft_forward(size);
        let check = check_eigenvalues(circulant_eigenvalues(&row, &fft));
        Self::from_eigen_check(check, n, fft)
    }

    pub(crate) fn from_eigen_check(
        check: EigenCheck,
        n: usize,
        fft: Arc<dyn Fft<f64>>,
    ) -> Result<Self> {
        let size = check.eigenvalues.len();
        if check.min < -EIGEN_TOLERANCE * check.max {
            return Err(FractalError::EmbeddingFailed {
                min_eigenvalue: check.min,
                max_eigenvalue: check.max,
                size,
            });
        }
        let m = size as f64;
        let scale = check
            .eigenvalues
            .iter()
            .map(|&ev| (ev.max(0.0) / m).sqrt())
            .collect();
        Ok(Self { n, scale, fft })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn embedding_size(&self) -> usize {
        self.scale.len()
    }

    fn transform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self
            .scale
            .iter()
            .map(|&s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(s * re, s * im)
            })
            .collect();
        self.fft.process(&mut buf);
        buf
    }

    /// One draw of the Gaussian vector.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let buf = self.transform(rng);
        buf[..self.n].iter().map(|z| z.re).collect()
    }

    /// Two independent draws from a single transform (real and imaginary parts).
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let buf = self.transform(rng);
        let a = buf[..self.n].iter().map(|z| z.re).collect();
        let b = buf[..self.n].iter().map(|z| z.im).collect();
        (a, b)
    }
}

use rand::Rng;

use crate::error::{invalid, Result};
use crate::path::Path;
use crate::seed::rng_from_seed;
use crate::sim::circulant::CirculantSampler;

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > -0.5 && alpha < 0.5) {
        return Err(invalid(format!(
            "alpha = {alpha} outside the admissible range (-1/2, 1/2)"
        )));
    }
    Ok(())
}

/// Correlation of unit fBm increments at lag `j` for fractal index `alpha`:
/// `(|j+1|^{2a+1} - 2|j|^{2a+1} + |j-1|^{2a+1}) / 2`.
pub fn fgn_correlation(j: usize, alpha: f64) -> f64 {
    if j == 0 {
        return 1.0;
    }
    let e = 2.0 * alpha + 1.0;
    let j = j as f64;
    0.5 * ((j + 1.0).powf(e) - 2.0 * j.powf(e) + (j - 1.0).powf(e))
}

/// Samples fBm on the grid `1/n, ..., 1` as scaled cumulative fGn.
#[derive(Debug, Clone)]
pub struct FbmSampler {
    alpha: f64,
    scale: f64,
    noise: CirculantSampler,
}

impl FbmSampler {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if n < 2 {
            return Err(invalid(format!("n = {n} must be at least 2")));
        }
        let half = n.next_power_of_two();
        let cov: Vec<f64> = (0..=half).map(|j| fgn_correlation(j, alpha)).collect();
        let noise = CirculantSampler::from_covariances(&cov, n)?;
        let hurst = alpha + 0.5;
        Ok(Self {
            alpha,
            scale: (n as f64).powf(-hurst),
            noise,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.noise.len()
    }

    pub fn is_empty(&self) -> bool {
        self.noise.is_empty()
    }

    fn integrate(&self, increments: Vec<f64>) -> Vec<f64> {
        let mut acc = 0.0;
        increments
            .into_iter()
            .map(|g| {
                acc += g;
                acc * self.scale
            })
            .collect()
    }

    pub fn sample_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.integrate(self.noise.sample(rng))
    }

    /// Two independent paths from one transform.
    pub fn sample_pair_values<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let (a, b) = self.noise.sample_pair(rng);
        (self.integrate(a), self.integrate(b))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Path {
        Path::from_trusted(self.sample_values(rng))
    }
}

/// Exact fBm path `X_{1/n}, ..., X_1` with Hurst index `alpha + 1/2`.
pub fn simulate_fbm(n: usize, alpha: f64, seed: u64) -> Result<Path> {
    let sampler = FbmSampler::new(n, alpha)?;
    let mut rng = rng_from_seed(seed);
    Ok(sampler
        .sample(&mut rng)
        .annotate("model", "fbm")
        .annotate("alpha", alpha)
        .annotate("n", n)
        .annotate("seed", seed))
}

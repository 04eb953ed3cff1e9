use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::path::Path;
use crate::seed::SeedStream;

/// Additive contamination `Z = mu + X + u` with `u` i.i.d. `N(0, sigma_u2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mu: f64,
    pub sigma_u2: f64,
}

impl NoiseSpec {
    pub fn new(mu: f64, sigma_u2: f64) -> Result<Self> {
        if !(sigma_u2 >= 0.0 && sigma_u2.is_finite()) || !mu.is_finite() {
            return Err(invalid(format!(
                "noise variance must be finite and nonnegative, got {sigma_u2}"
            )));
        }
        Ok(Self { mu, sigma_u2 })
    }

    pub fn is_absent(&self) -> bool {
        self.sigma_u2 == 0.0
    }

    /// Contaminates `values` in place with draws from `rng`.
    pub fn apply<R: rand::Rng + ?Sized>(&self, values: &mut [f64], rng: &mut R) {
        if self.is_absent() {
            values.iter_mut().for_each(|v| *v += self.mu);
            return;
        }
        let normal = Normal::new(0.0, self.sigma_u2.sqrt()).expect("validated variance");
        for v in values.iter_mut() {
            *v += self.mu + normal.sample(rng);
        }
    }
}

pub fn add_noise(path: &Path, spec: &NoiseSpec, seed: u64) -> Result<Path> {
    let spec = NoiseSpec::new(spec.mu, spec.sigma_u2)?;
    let mut values = path.values().to_vec();
    spec.apply(&mut values, &mut SeedStream::new(seed, "noise").rng(0));
    let mut out = Path::from_trusted(values);
    for (k, v) in path.annotations() {
        out = out.annotate(k.clone(), v);
    }
    Ok(out
        .annotate("noise_mu", spec.mu)
        .annotate("noise_sigma_u2", spec.sigma_u2))
}

//! Volatility-modulated Brownian semistationary paths with a gamma kernel.
//!
//! `X_t = int_{-inf}^t g(t - s) sigma_s dW_s` with `g(x) = x^alpha exp(-lambda x)`,
//! truncated to `[t - T, t]` where `T = max(1, 10 / lambda)` and discretized on
//! the grid `1/n`. The first cell uses the exact `L2` mass of `x^alpha` on
//! `[0, 1/n]`; later cells use the cell average of `x^alpha` times the damping
//! factor at the cell midpoint.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::path::Path;
use crate::seed::SeedStream;
use crate::sim::fgn::check_alpha;

/// Deterministic or stochastic volatility path `sigma_t` driving a BSS process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VolatilityModel {
    Constant {
        level: f64,
    },
    /// `first` up to and including `switch_time`, `second` afterwards.
    TwoRegime {
        first: f64,
        second: f64,
        switch_time: f64,
    },
    /// `exp` of an Ornstein-Uhlenbeck path (`d Y = -rate (Y - mean) dt + vol dB`)
    /// smoothed by a causal running mean over `window` time units.
    SmoothOu {
        mean: f64,
        rate: f64,
        vol: f64,
        window: f64,
    },
}

impl VolatilityModel {
    pub fn constant(level: f64) -> Result<Self> {
        let v = Self::Constant { level };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Constant { level } => level > 0.0 && level.is_finite(),
            Self::TwoRegime {
                first,
                second,
                switch_time,
            } => first > 0.0 && second > 0.0 && first.is_finite() && second.is_finite()
                && switch_time.is_finite(),
            Self::SmoothOu {
                mean,
                rate,
                vol,
                window,
            } => mean.is_finite() && rate > 0.0 && vol >= 0.0 && vol.is_finite() && window > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!(
                "volatility levels must be positive and finite: {self:?}"
            )))
        }
    }

    /// Hoelder exponent of the volatility path. Deterministic paths are smooth
    /// away from finitely many jumps and report 1, as does the running mean
    /// of a continuous path.
    pub fn xi(&self) -> f64 {
        1.0
    }

    /// Whether the sqrt(n) CLT condition `xi * min(p, 1) > 1/2` holds.
    pub fn supports_clt(&self, p: f64) -> bool {
        self.xi() * p.min(1.0) > 0.5
    }

    /// Volatility on the grid `t_0 + j / n`, `j = 0..len`.
    fn grid<R: Rng + ?Sized>(&self, t0: f64, n: usize, len: usize, rng: &mut R) -> Vec<f64> {
        let t = |j: usize| t0 + j as f64 / n as f64;
        match *self {
            Self::Constant { level } => vec![level; len],
            Self::TwoRegime {
                first,
                second,
                switch_time,
            } => (0..len)
                .map(|j| if t(j) <= switch_time { first } else { second })
                .collect(),
            Self::SmoothOu {
                mean,
                rate,
                vol,
                window,
            } => {
                let dt = 1.0 / n as f64;
                let phi = (-rate * dt).exp();
                let step_sd = vol * ((1.0 - phi * phi) / (2.0 * rate)).sqrt();
                let stat_sd = vol / (2.0 * rate).sqrt();
                let w = ((window * n as f64).ceil() as usize).max(1);
                let mut y = mean + stat_sd * rng.sample::<f64, _>(StandardNormal);
                let mut raw = Vec::with_capacity(len + w - 1);
                for _ in 0..len + w - 1 {
                    raw.push(y);
                    y = mean + phi * (y - mean) + step_sd * rng.sample::<f64, _>(StandardNormal);
                }
                let mut out = Vec::with_capacity(len);
                let mut acc: f64 = raw[..w].iter().sum();
                out.push((acc / w as f64).exp());
                for j in 1..len {
                    acc += raw[j + w - 1] - raw[j - 1];
                    out.push((acc / w as f64).exp());
                }
                out
            }
        }
    }
}

/// Reusable sampler holding the kernel transform.
#[derive(Clone)]
pub struct GammaBssSampler {
    n: usize,
    cells: usize,
    kernel_hat: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    vol: VolatilityModel,
}

impl std::fmt::Debug for GammaBssSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GammaBssSampler")
            .field("n", &self.n)
            .field("cells", &self.cells)
            .field("vol", &self.vol)
            .finish()
    }
}

/// Discretized kernel weights `w_0, ..., w_{L-1}` for `L` cells of width `1/n`.
pub(crate) fn kernel_weights(alpha: f64, lambda: f64, n: usize, cells: usize) -> Vec<f64> {
    let nf = n as f64;
    let head = nf.powf(-alpha);
    let a1 = alpha + 1.0;
    (0..cells)
        .map(|l| {
            if l == 0 {
                head / (2.0 * alpha + 1.0).sqrt()
            } else {
                let lf = l as f64;
                head * ((lf + 1.0).powf(a1) - lf.powf(a1)) / a1 * (-lambda * (lf + 0.5) / nf).exp()
            }
        })
        .collect()
}

impl GammaBssSampler {
    pub fn new(alpha: f64, lambda: f64, vol: VolatilityModel, n: usize) -> Result<Self> {
        check_alpha(alpha)?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("lambda = {lambda} must be positive")));
        }
        if n < 2 {
            return Err(invalid(format!("n = {n} must be at least 2")));
        }
        vol.validate()?;
        let horizon = (10.0 / lambda).max(1.0);
        let cells = (horizon * n as f64).ceil() as usize;
        let size = (n + cells - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let mut kernel_hat = vec![Complex64::new(0.0, 0.0); size];
        for (slot, w) in kernel_hat
            .iter_mut()
            .zip(kernel_weights(alpha, lambda, n, cells))
        {
            slot.re = w;
        }
        forward.process(&mut kernel_hat);
        Ok(Self {
            n,
            cells,
            kernel_hat,
            forward,
            inverse,
            vol,
        })
    }

    /// Path driven by the two given generators (Brownian increments, volatility).
    pub fn sample_with<R: Rng + ?Sized>(&self, noise_rng: &mut R, vol_rng: &mut R) -> Vec<f64> {
        let (n, cells) = (self.n, self.cells);
        let len = n + cells - 1;
        // Cell r covers [(r-1)/n, r/n] for r = 2 - cells, ..., n.
        let t0 = (1.0 - cells as f64) / n as f64;
        let sigma = self.vol.grid(t0, n, len, vol_rng);
        let sd = (1.0 / n as f64).sqrt();
        let size = self.kernel_hat.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        for (slot, s) in buf.iter_mut().zip(&sigma) {
            let z: f64 = noise_rng.sample(StandardNormal);
            slot.re = s * sd * z;
        }
        self.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        let norm = 1.0 / size as f64;
        buf[cells - 1..cells - 1 + n]
            .iter()
            .map(|z| z.re * norm)
            .collect()
    }

    pub fn sample_seeded(&self, seed: u64) -> Vec<f64> {
        let mut noise = SeedStream::new(seed, "bss-noise").rng(0);
        let mut vol = SeedStream::new(seed, "bss-vol").rng(0);
        self.sample_with(&mut noise, &mut vol)
    }
}

/// Gamma-kernel BSS path `X_{1/n}, ..., X_1`.
pub fn simulate_gamma_bss(
    alpha: f64,
    lambda: f64,
    vol: VolatilityModel,
    n: usize,
    seed: u64,
) -> Result<Path> {
    let sampler = GammaBssSampler::new(alpha, lambda, vol, n)?;
    Ok(Path::from_trusted(sampler.sample_seeded(seed))
        .annotate("model", "gamma-bss")
        .annotate("alpha", alpha)
        .annotate("lambda", lambda)
        .annotate("n", n)
        .annotate("seed", seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_in_constant_volatility() {
        let one = simulate_gamma_bss(-0.2, 1.0, VolatilityModel::Constant { level: 1.0 }, 300, 4)
            .unwrap();
        let three = simulate_gamma_bss(-0.2, 1.0, VolatilityModel::Constant { level: 3.0 }, 300, 4)
            .unwrap();
        for (a, b) in one.values().iter().zip(three.values()) {
            assert!((3.0 * a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn kernel_weights_match_direct_sum() {
        // Convolution via FFT equals a direct weighted sum.
        let s = GammaBssSampler::new(0.1, 2.0, VolatilityModel::Constant { level: 1.0 }, 8).unwrap();
        let w = kernel_weights(0.1, 2.0, 8, s.cells);
        let mut noise = SeedStream::new(1, "bss-noise").rng(0);
        let mut vol = SeedStream::new(1, "bss-vol").rng(0);
        let x = s.sample_with(&mut noise, &mut vol);
        let mut noise = SeedStream::new(1, "bss-noise").rng(0);
        let sd = (1.0f64 / 8.0).sqrt();
        let e: Vec<f64> = (0..8 + s.cells - 1)
            .map(|_| sd * noise.sample::<f64, _>(StandardNormal))
            .collect();
        for i in 0..8 {
            let j = i + s.cells - 1;
            let direct: f64 = (0..s.cells).map(|l| w[l] * e[j - l]).sum();
            assert!((x[i] - direct).abs() < 1e-12, "{i}");
        }
    }

    #[test]
    fn brownian_limit_increment_variance() {
        // alpha = 0, small lambda: increments are close to N(0, 1/n).
        let n = 200;
        let s = GammaBssSampler::new(0.0, 0.05, VolatilityModel::Constant { level: 1.0 }, n)
            .unwrap();
        let reps = 400;
        let mut acc = 0.0;
        for r in 0..reps {
            let x = s.sample_seeded(r);
            acc += x.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / (n - 1) as f64;
        }
        let gamma1 = acc / reps as f64;
        assert!((gamma1 * n as f64 - 1.0).abs() < 0.03, "{}", gamma1 * n as f64);
    }

    #[test]
    fn volatility_paths_are_positive() {
        let v = VolatilityModel::SmoothOu {
            mean: 0.0,
            rate: 2.0,
            vol: 1.0,
            window: 0.05,
        };
        let mut rng = SeedStream::new(3, "v").rng(0);
        let g = v.grid(-1.0, 100, 300, &mut rng);
        assert!(g.iter().all(|&s| s > 0.0 && s.is_finite()));
        assert!(v.supports_clt(1.0));
        assert!(!v.supports_clt(0.4));
        assert!(VolatilityModel::constant(0.0).is_err());
    }
}

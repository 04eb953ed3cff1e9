//! Estimation and inference for the fractal index of equidistantly sampled
//! time series via log-log variogram regression.
//!
//! The fractal index `alpha` of a process with variogram
//! `gamma_2(h) ~ h^{2 alpha + 1}` near zero measures roughness: `alpha < 0`
//! is rougher and `alpha > 0` smoother than Brownian motion.
//!
//! ```
//! use fracindex::{estimate_alpha, sim::simulate_fbm, EstimatorConfig};
//!
//! let path = simulate_fbm(2000, -0.2, 7).unwrap();
//! let est = estimate_alpha(&path, &EstimatorConfig::rough()).unwrap();
//! assert!((est.alpha_hat + 0.2).abs() < 0.1);
//! ```

pub mod asymvar;
pub mod error;
pub mod estimate;
pub mod infer;
pub mod io;
pub mod path;
pub mod seed;
pub mod sim;
pub mod special;
pub mod study;
pub mod variogram;

pub use asymvar::{McSettings, VarianceEngine};
pub use error::{FractalError, Result};
pub use estimate::{
    design_vector, estimate_alpha, estimate_alpha_robust, estimate_sp, moment_constant,
    EstimatorConfig, FractalEstimate,
};
pub use infer::{confidence_interval, noise_test, test_alpha, test_alpha_robust, TestResult};
pub use path::Path;

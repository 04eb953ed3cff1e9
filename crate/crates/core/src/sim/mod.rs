//! Simulators for fBm, the stationary Gaussian family, gamma-kernel BSS paths
//! and additive measurement noise. Every simulator is a pure function of its
//! parameters and seed.

mod bss;
pub(crate) mod circulant;
mod fgn;
mod models;
mod noise;

pub use bss::{simulate_gamma_bss, GammaBssSampler, VolatilityModel};
pub use circulant::CirculantSampler;
pub use fgn::{fgn_correlation, simulate_fbm, FbmSampler};
pub use models::{
    model_acf, simulate_stationary_gaussian, GaussianModel, ModelKind, ModelSampler,
    StationarySampler,
};
pub use noise::{add_noise, NoiseSpec};

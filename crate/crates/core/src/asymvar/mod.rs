//! Monte Carlo approximation of the asymptotic variances of the plain and
//! robust estimators, via the covariance of normalized fBm variograms and the
//! delta method.

mod cache;
mod delta;
mod engine;
mod lags;
mod lambda;

pub use delta::{
    sigma1_matrix, sigma2_dstar, sigma2_matrix, sigma2_mp, sigma2_mp_from_entries, sigma2_star,
    DeltaFlavor, DeltaMatrix,
};
pub use engine::{
    round_alpha, McSettings, VarianceEngine, VarianceKind, VarianceSource, VarianceValue,
};
pub use lags::{lag_index_set, LagIndexSet};
pub use lambda::{
    lambda_replicates, mc_lambda, mc_lambda_star, LambdaMatrix, McProvenance, PSD_TOLERANCE,
};

use fracindex::asymvar::mc_lambda_star;
use fracindex::seed::SeedStream;
use fracindex::sim::FbmSampler;
use fracindex::{
    estimate_alpha, estimate_alpha_robust, EstimatorConfig, McSettings, VarianceEngine,
};

fn var(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// Sample variance over `reps` fBm paths of `sqrt(n)` times `stat(path)`.
fn scaled_variance(
    n: usize,
    alpha: f64,
    reps: usize,
    seed: u64,
    stat: impl Fn(&fracindex::Path) -> f64,
) -> f64 {
    let sampler = FbmSampler::new(n, alpha).unwrap();
    let stream = SeedStream::new(seed, "variance-tests");
    let xs: Vec<f64> = (0..reps as u64)
        .map(|r| (n as f64).sqrt() * stat(&sampler.sample(&mut stream.rng(r))))
        .collect();
    var(&xs)
}

#[test]
fn star_matrix_lag_one_entry() {
    let lam = mc_lambda_star(0.0, 2.0, 2, 2, 10_000, 10_000, 31).unwrap();
    assert_eq!(lam.lags, vec![1, 2, 4]);
    let (v, se) = (lam.entries[(0, 0)], lam.std_errors[(0, 0)]);
    assert!((v - 2.0).abs() < 4.0 * se, "{v} +- {se}");
}

#[test]
fn robust_variance_matches_simulation() {
    let (n, alpha) = (3200, -0.2);
    let cfg = EstimatorConfig::rough();
    let engine = VarianceEngine::new(McSettings::default().with_seed(32));
    let theory = engine.sigma2_star(alpha, &cfg, n).unwrap().value;
    let empirical = scaled_variance(n, alpha, 10_000, 33, |p| {
        estimate_alpha_robust(p, &cfg).unwrap().alpha_hat - alpha
    });
    let rel = (empirical - theory).abs() / theory;
    assert!(rel < 0.15, "empirical {empirical}, delta method {theory}");
}

#[test]
fn difference_variance_matches_simulation() {
    let (n, alpha) = (3200, 0.0);
    let cfg = EstimatorConfig::rough();
    let engine = VarianceEngine::new(McSettings::default().with_seed(34));
    let theory = engine.sigma2_dstar(alpha, &cfg, n).unwrap().value;
    let empirical = scaled_variance(n, alpha, 10_000, 35, |p| {
        estimate_alpha_robust(p, &cfg).unwrap().alpha_hat
            - estimate_alpha(p, &cfg).unwrap().alpha_hat
    });
    let rel = (empirical - theory).abs() / theory;
    assert!(rel < 0.15, "empirical {empirical}, delta method {theory}");
}

#[test]
fn plain_variance_matches_simulation() {
    let (n, alpha) = (2000, -0.3);
    let cfg = EstimatorConfig::rough();
    let engine = VarianceEngine::new(McSettings::default().with_seed(36));
    let theory = engine.sigma2(alpha, &cfg, n).unwrap().value;
    let empirical = scaled_variance(n, alpha, 10_000, 37, |p| {
        estimate_alpha(p, &cfg).unwrap().alpha_hat - alpha
    });
    let rel = (empirical - theory).abs() / theory;
    assert!(rel < 0.1, "empirical {empirical}, delta method {theory}");
}

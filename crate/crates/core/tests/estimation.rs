use fracindex::seed::SeedStream;
use fracindex::sim::{add_noise, simulate_gamma_bss, FbmSampler, NoiseSpec, VolatilityModel};
use fracindex::{estimate_alpha, estimate_alpha_robust, estimate_sp, EstimatorConfig, Path};

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn fbm_paths(n: usize, alpha: f64, seed: u64, reps: usize) -> impl Iterator<Item = Path> {
    let sampler = FbmSampler::new(n, alpha).unwrap();
    let stream = SeedStream::new(seed, "estimation-tests");
    (0..reps as u64).map(move |r| sampler.sample(&mut stream.rng(r)))
}

#[test]
fn rough_fbm_bias_is_small() {
    let cfg = EstimatorConfig::rough();
    let est: Vec<f64> = fbm_paths(1000, -0.2, 201, 10_000)
        .map(|p| estimate_alpha(&p, &cfg).unwrap().alpha_hat)
        .collect();
    let bias = mean(&est) + 0.2;
    assert!(bias.abs() < 0.01, "bias {bias}");
}

#[test]
fn robust_estimator_removes_noise_bias() {
    let cfg = EstimatorConfig::rough();
    let noise = NoiseSpec::new(1.0, 0.05).unwrap();
    let (mut plain, mut robust) = (Vec::new(), Vec::new());
    for (r, path) in fbm_paths(2500, -0.2, 202, 10_000).enumerate() {
        let noisy = add_noise(&path, &noise, r as u64).unwrap();
        plain.push(estimate_alpha(&noisy, &cfg).unwrap().alpha_hat);
        robust.push(estimate_alpha_robust(&noisy, &cfg).unwrap().alpha_hat);
    }
    let robust_mean = mean(&robust);
    assert!((robust_mean + 0.2).abs() < 0.02, "robust mean {robust_mean}");
    assert!(mean(&plain) < -0.4, "noise should drag the plain estimate down");
}

#[test]
fn sp_of_fbm_is_one() {
    let sp: Vec<f64> = fbm_paths(10_000, -0.1, 203, 1000)
        .map(|p| estimate_sp(&p, 2.0).unwrap())
        .collect();
    let avg = mean(&sp);
    assert!((avg - 1.0).abs() < 0.02, "{avg}");
}

#[test]
fn sp_detects_volatility_regimes() {
    let vol = VolatilityModel::TwoRegime {
        first: 1.0,
        second: 2.0,
        switch_time: 0.5,
    };
    let sp: Vec<f64> = (0..1000)
        .map(|seed| {
            let path = simulate_gamma_bss(-0.2, 1.0, vol, 10_000, 9000 + seed).unwrap();
            estimate_sp(&path, 2.0).unwrap()
        })
        .collect();
    let want = 8.5f64.sqrt() / 2.5;
    let avg = mean(&sp);
    assert!((avg - want).abs() < 0.05, "{avg} vs {want}");
}

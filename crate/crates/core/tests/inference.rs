use fracindex::seed::SeedStream;
use fracindex::sim::FbmSampler;
use fracindex::study::{run_study, Report, StudyKind, StudySpec};
use fracindex::{confidence_interval, estimate_alpha, EstimatorConfig, McSettings, VarianceEngine};

fn rate(report: &Report, name: &str) -> f64 {
    report.cells[0].metrics[name].value
}

fn size_power(kind: StudyKind, alpha: f64, n: usize, p: f64, seed: u64) -> Report {
    let mut spec = StudySpec::defaults(kind);
    spec.alphas = vec![alpha];
    spec.ns = vec![n];
    spec.ps = vec![p];
    spec.replications = 10_000;
    spec.master_seed = seed;
    run_study(&spec, None).unwrap()
}

#[test]
fn plain_test_size() {
    let r = size_power(StudyKind::SizePowerClt, 0.0, 10_000, 1.0, 41);
    let size = rate(&r, "size");
    assert!((size - 0.0508).abs() < 0.01, "size {size}");
}

#[test]
fn plain_test_local_power() {
    let r = size_power(StudyKind::SizePowerClt, -0.4, 10_000, 2.0, 42);
    let power = rate(&r, "local_power");
    assert!((power - 0.4701).abs() < 0.02, "local power {power}");
}

#[test]
fn robust_test_size() {
    let r = size_power(StudyKind::SizePowerRobust, 0.0, 3200, 2.0, 43);
    let size = rate(&r, "size");
    assert!((size - 0.0527).abs() < 0.01, "size {size}");
}

#[test]
fn robust_test_local_power() {
    let r = size_power(StudyKind::SizePowerRobust, -0.4, 3200, 2.0, 44);
    let power = rate(&r, "local_power");
    assert!((power - 0.8348).abs() < 0.02, "local power {power}");
}

#[test]
fn interval_coverage_and_width() {
    let (n, alpha) = (10_000, -0.2);
    let cfg = EstimatorConfig::rough();
    let mc = McSettings::default()
        .with_replications(2000)
        .with_n_inner(2000);
    let engine = VarianceEngine::new(mc);
    let sampler = FbmSampler::new(n, alpha).unwrap();
    let stream = SeedStream::new(45, "coverage");
    let reps = 1000;
    let mut covered = 0;
    for r in 0..reps {
        let path = sampler.sample(&mut stream.rng(r));
        let est = estimate_alpha(&path, &cfg).unwrap();
        let ci = confidence_interval(&est, &engine, 0.05).unwrap();
        if ci.lower <= alpha && alpha <= ci.upper {
            covered += 1;
        }
    }
    let coverage = covered as f64 / reps as f64;
    assert!((coverage - 0.95).abs() < 0.02, "coverage {coverage}");

    let engine = VarianceEngine::new(McSettings::default().with_n_inner(10_000));
    let short = FbmSampler::new(2500, alpha).unwrap().sample(&mut stream.rng(0));
    let long = sampler.sample(&mut stream.rng(0));
    let w_short = confidence_interval(&estimate_alpha(&short, &cfg).unwrap(), &engine, 0.05)
        .unwrap()
        .std_error;
    let w_long = confidence_interval(&estimate_alpha(&long, &cfg).unwrap(), &engine, 0.05)
        .unwrap()
        .std_error;
    let ratio = w_short / w_long;
    assert!((ratio - 2.0).abs() < 0.15, "width ratio {ratio}");
}

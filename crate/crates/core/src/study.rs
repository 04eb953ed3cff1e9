//! Grid-based simulation studies: bandwidth choice, kappa tuning and the size
//! and power of the three tests.
//!
//! A study is split into groups of cells that share simulated paths. Each
//! finished group is appended as one JSON line to an optional progress file,
//! and a rerun with the same spec skips groups already present there.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path as FsPath;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymvar::{lambda_replicates, sigma2_mp_from_entries, McSettings, VarianceEngine};
use crate::error::{invalid, FractalError, Result};
use crate::estimate::{plain_slope, robust_slope, sp_of, EstimatorConfig, FractalEstimate, Regressor};
use crate::infer::{noise_test_from_estimates, test_alpha_from_estimate};
use crate::seed::{fnv1a, SeedStream};
use crate::sim::{GaussianModel, ModelKind, ModelSampler, NoiseSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// Number of batches used for batch-means standard errors of ratios.
const BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    BandwidthVariance,
    BandwidthBiasMse,
    RobustKappa,
    SizePowerClt,
    SizePowerRobust,
    SizePowerNoise,
}

impl StudyKind {
    pub const ALL: [StudyKind; 6] = [
        StudyKind::BandwidthVariance,
        StudyKind::BandwidthBiasMse,
        StudyKind::RobustKappa,
        StudyKind::SizePowerClt,
        StudyKind::SizePowerRobust,
        StudyKind::SizePowerNoise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StudyKind::BandwidthVariance => "bandwidth-variance",
            StudyKind::BandwidthBiasMse => "bandwidth-bias-mse",
            StudyKind::RobustKappa => "robust-kappa",
            StudyKind::SizePowerClt => "size-power-clt",
            StudyKind::SizePowerRobust => "size-power-robust",
            StudyKind::SizePowerNoise => "size-power-noise",
        }
    }
}

impl std::str::FromStr for StudyKind {
    type Err = FractalError;

    fn from_str(s: &str) -> Result<Self> {
        StudyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid(format!("unknown study '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySpec {
    pub study: StudyKind,
    pub models: Vec<ModelKind>,
    pub alphas: Vec<f64>,
    pub ns: Vec<usize>,
    pub ps: Vec<f64>,
    pub ms: Vec<usize>,
    pub kappas: Vec<usize>,
    pub noise_variances: Vec<f64>,
    pub noise_mu: f64,
    /// Outer replications per cell.
    pub replications: usize,
    pub master_seed: u64,
    pub level: f64,
    /// Settings for the variance engine used by the tests.
    pub mc: McSettings,
}

impl StudySpec {
    /// Desk-scale defaults for each study.
    pub fn defaults(study: StudyKind) -> Self {
        let base = Self {
            study,
            models: vec![ModelKind::Fbm],
            alphas: vec![-0.4, -0.2, 0.0, 0.2],
            ns: vec![1000],
            ps: vec![2.0],
            ms: vec![5],
            kappas: vec![10],
            noise_variances: vec![0.0],
            noise_mu: 1.0,
            replications: 2000,
            master_seed: 1,
            level: 0.05,
            mc: McSettings::default(),
        };
        match study {
            StudyKind::BandwidthVariance => Self {
                alphas: vec![-0.2, 0.2],
                ns: vec![100, 1000, 10_000],
                ms: vec![2, 3, 5, 10, 25],
                ..base
            },
            StudyKind::BandwidthBiasMse => Self {
                models: ModelKind::ALL.to_vec(),
                alphas: vec![-0.2, 0.2],
                ms: (2..=15).collect(),
                ..base
            },
            StudyKind::RobustKappa => Self {
                alphas: vec![-0.2],
                ns: vec![2500],
                kappas: vec![2, 3, 4, 5, 6, 8, 10, 15, 20, 25, 30, 40, 50],
                noise_variances: vec![0.05],
                ..base
            },
            StudyKind::SizePowerClt => Self {
                ns: vec![10, 20, 40, 80, 160, 320, 10_000],
                ps: vec![1.0, 2.0],
                ..base
            },
            StudyKind::SizePowerRobust => Self {
                ns: vec![100, 200, 400, 800, 1600, 3200],
                ps: vec![1.0, 2.0],
                ..base
            },
            StudyKind::SizePowerNoise => Self {
                ns: vec![100, 200, 400, 800, 1600],
                ps: vec![1.0, 2.0],
                noise_variances: vec![0.0, 0.05],
                replications: 1000,
                mc: McSettings::default().with_replications(2000),
                ..base
            },
        }
    }

    /// Full-scale replication counts: 10^4 outer replications and 10^4 Monte
    /// Carlo replications per variance, or 1000 and 2000 for the noise test.
    pub fn full_scale(self) -> Self {
        match self.study {
            StudyKind::SizePowerNoise => Self {
                replications: 1000,
                mc: self.mc.with_replications(2000),
                ..self
            },
            _ => Self {
                replications: 10_000,
                mc: self.mc.with_replications(10_000),
                ..self
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |name: &str, len: usize| -> Result<()> {
            if len == 0 {
                Err(invalid(format!("grid '{name}' is empty")))
            } else {
                Ok(())
            }
        };
        empty("models", self.models.len())?;
        empty("alphas", self.alphas.len())?;
        empty("ns", self.ns.len())?;
        empty("ps", self.ps.len())?;
        empty("ms", self.ms.len())?;
        empty("kappas", self.kappas.len())?;
        empty("noise_variances", self.noise_variances.len())?;
        if self.replications < 2 {
            return Err(invalid("a study needs at least 2 replications"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(invalid(format!("level {} must lie in (0, 1)", self.level)));
        }
        for &m in &self.ms {
            for &k in &self.kappas {
                EstimatorConfig::new(2.0, m, k)?;
            }
        }
        for &p in &self.ps {
            EstimatorConfig::new(p, 2, 2)?;
        }
        for &v in &self.noise_variances {
            NoiseSpec::new(self.noise_mu, v)?;
        }
        for &kind in &self.models {
            for &a in &self.alphas {
                GaussianModel::study_default(kind, a)?;
            }
        }
        Ok(())
    }

    fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        format!("{:016x}", fnv1a(&json))
    }
}

/// A Monte Carlo quantity and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub std_error: f64,
}

impl Measured {
    pub fn mean_of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Self {
                value: f64::NAN,
                std_error: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            f64::NAN
        };
        Self {
            value: mean,
            std_error: (var / n).sqrt(),
        }
    }

    pub fn rate(hits: usize, total: usize) -> Self {
        let r = hits as f64 / total as f64;
        Self {
            value: r,
            std_error: (r * (1.0 - r) / total as f64).sqrt(),
        }
    }

    /// Root of a mean square, with a delta-method standard error.
    fn root_of(mean_square: Measured) -> Self {
        let v = mean_square.value.sqrt();
        Self {
            value: v,
            std_error: mean_square.std_error / (2.0 * v),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    pub alpha: f64,
    pub n: usize,
    pub p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: CellKey,
    pub metrics: BTreeMap<String, Measured>,
    /// Replications for which the statistic could not be computed.
    pub failures: usize,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub study: StudyKind,
    pub spec: StudySpec,
    pub cells: Vec<CellResult>,
    pub elapsed_seconds: f64,
}

impl Report {
    pub fn find(&self, pred: impl Fn(&CellKey) -> bool) -> Option<&CellResult> {
        self.cells.iter().find(|c| pred(&c.cell))
    }

    /// Plot-ready grid: one row per cell, one column pair per metric.
    pub fn to_csv(&self) -> String {
        let mut names: Vec<&String> = self
            .cells
            .iter()
            .flat_map(|c| c.metrics.keys())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        names.dedup();
        let mut out = format!(
            "# schema_version: {SCHEMA_VERSION}\n# study: {}\n# master_seed: {}\n",
            self.study.name(),
            self.spec.master_seed
        );
        let mut header = vec![
            "model", "alpha", "n", "p", "m", "kappa", "noise_variance", "replications", "failures",
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
        for n in &names {
            header.push((*n).clone());
            header.push(format!("{n}_se"));
        }
        out.push_str(&header.join(","));
        out.push('\n');
        let opt = |v: Option<String>| v.unwrap_or_default();
        for c in &self.cells {
            let k = &c.cell;
            let mut row = vec![
                opt(k.model.map(|m| m.name().to_string())),
                k.alpha.to_string(),
                k.n.to_string(),
                k.p.to_string(),
                opt(k.m.map(|v| v.to_string())),
                opt(k.kappa.map(|v| v.to_string())),
                opt(k.noise_variance.map(|v| v.to_string())),
                c.replications.to_string(),
                c.failures.to_string(),
            ];
            for n in &names {
                match c.metrics.get(*n) {
                    Some(m) => {
                        row.push(m.value.to_string());
                        row.push(m.std_error.to_string());
                    }
                    None => {
                        row.push(String::new());
                        row.push(String::new());
                    }
                }
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProgressLine {
    fingerprint: String,
    group: String,
    cells: Vec<CellResult>,
}

/// Paths shared by the cells of one group.
#[derive(Debug, Clone, PartialEq)]
struct Group {
    model: ModelKind,
    alpha: f64,
    n: usize,
    p: f64,
    m: Option<usize>,
    kappa: Option<usize>,
    noise_variance: Option<f64>,
}

impl Group {
    fn label(&self) -> String {
        format!(
            "{}|{}|{}|{}|{:?}|{:?}|{:?}",
            self.model, self.alpha, self.n, self.p, self.m, self.kappa, self.noise_variance
        )
    }

    fn stream(&self, spec: &StudySpec) -> SeedStream {
        SeedStream::new(spec.master_seed, spec.study.name()).child(&self.label())
    }

    fn key(&self) -> CellKey {
        CellKey {
            model: Some(self.model),
            alpha: self.alpha,
            n: self.n,
            p: self.p,
            m: self.m,
            kappa: self.kappa,
            noise_variance: self.noise_variance,
        }
    }
}

fn groups(spec: &StudySpec) -> Vec<Group> {
    let mut out = Vec::new();
    let base = |model, alpha, n, p| Group {
        model,
        alpha,
        n,
        p,
        m: None,
        kappa: None,
        noise_variance: None,
    };
    for &model in &spec.models {
        for &alpha in &spec.alphas {
            for &n in &spec.ns {
                for &p in &spec.ps {
                    let g = base(model, alpha, n, p);
                    match spec.study {
                        StudyKind::BandwidthVariance | StudyKind::BandwidthBiasMse => out.push(g),
                        StudyKind::RobustKappa => {
                            for &m in &spec.ms {
                                for &v in &spec.noise_variances {
                                    out.push(Group {
                                        m: Some(m),
                                        noise_variance: Some(v),
                                        ..g.clone()
                                    });
                                }
                            }
                        }
                        StudyKind::SizePowerClt => {
                            for &m in &spec.ms {
                                out.push(Group {
                                    m: Some(m),
                                    ..g.clone()
                                });
                            }
                        }
                        StudyKind::SizePowerRobust => {
                            for &m in &spec.ms {
                                for &k in &spec.kappas {
                                    out.push(Group {
                                        m: Some(m),
                                        kappa: Some(k),
                                        ..g.clone()
                                    });
                                }
                            }
                        }
                        StudyKind::SizePowerNoise => {
                            for &m in &spec.ms {
                                for &k in &spec.kappas {
                                    for &v in &spec.noise_variances {
                                        out.push(Group {
                                            m: Some(m),
                                            kappa: Some(k),
                                            noise_variance: Some(v),
                                            ..g.clone()
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

struct Generator {
    sampler: ModelSampler,
    noise: Option<NoiseSpec>,
}

impl Generator {
    fn new(group: &Group, spec: &StudySpec) -> Result<Self> {
        let model = GaussianModel::study_default(group.model, group.alpha)?;
        let noise = match group.noise_variance {
            Some(v) => Some(NoiseSpec::new(spec.noise_mu, v)?),
            None => None,
        };
        Ok(Self {
            sampler: ModelSampler::new(&model, group.n)?,
            noise,
        })
    }

    fn draw(&self, stream: &SeedStream, rep: usize) -> Vec<f64> {
        let mut rng = stream.rng(rep as u64);
        let mut v = self.sampler.sample_values(&mut rng);
        if let Some(noise) = &self.noise {
            noise.apply(&mut v, &mut rng);
        }
        v
    }
}

fn run_replications<T: Send>(
    replications: usize,
    f: impl Fn(usize) -> T + Sync + Send,
) -> Vec<T> {
    (0..replications).into_par_iter().map(f).collect()
}

fn bias_mse_metrics(errors: &[f64], prefix: &str, metrics: &mut BTreeMap<String, Measured>) {
    let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
    let mse = Measured::mean_of(&sq);
    metrics.insert(format!("{prefix}bias"), Measured::mean_of(errors));
    metrics.insert(format!("{prefix}mse"), mse);
    metrics.insert(format!("{prefix}rmse"), Measured::root_of(mse));
}

fn run_bandwidth_variance(spec: &StudySpec, g: &Group) -> Result<Vec<CellResult>> {
    let mut ms = spec.ms.clone();
    if !ms.contains(&2) {
        ms.push(2);
    }
    let max_m = *ms.iter().max().expect("nonempty");
    let lags: Vec<usize> = (1..=max_m).collect();
    let seed = g.stream(spec).seed(0);
    let rows = lambda_replicates(g.alpha, g.p, &lags, g.n, spec.replications, seed)?;
    let n = g.n as f64;
    let sigma2_on = |rows: &[Vec<f64>], m: usize| -> Result<f64> {
        let b = rows.len() as f64;
        let mut mean = vec![0.0; m];
        for r in rows {
            for i in 0..m {
                mean[i] += r[i] / b;
            }
        }
        let mut cov = nalgebra::DMatrix::zeros(m, m);
        for r in rows {
            for i in 0..m {
                for j in 0..m {
                    cov[(i, j)] += (r[i] - mean[i]) * (r[j] - mean[j]);
                }
            }
        }
        cov *= n / (b - 1.0);
        sigma2_mp_from_entries(&cov, g.p)
    };
    let batch = rows.len() / BATCHES;
    let mut out = Vec::new();
    let base2 = sigma2_on(&rows, 2)?;
    for &m in &spec.ms {
        let full = sigma2_on(&rows, m)?;
        let mut per_batch = Vec::with_capacity(BATCHES);
        let mut ratio_batch = Vec::with_capacity(BATCHES);
        if batch >= 2 {
            for chunk in rows.chunks_exact(batch) {
                let s = sigma2_on(chunk, m)?;
                per_batch.push(s);
                ratio_batch.push(s / sigma2_on(chunk, 2)?);
            }
        }
        let se_of = |xs: &[f64]| Measured::mean_of(xs).std_error;
        let mut metrics = BTreeMap::new();
        let se = se_of(&per_batch);
        metrics.insert(
            "sigma2".to_string(),
            Measured {
                value: full,
                std_error: se,
            },
        );
        metrics.insert(
            "sigma2_over_n".to_string(),
            Measured {
                value: full / n,
                std_error: se / n,
            },
        );
        metrics.insert(
            "ratio_to_m2".to_string(),
            Measured {
                value: full / base2,
                std_error: se_of(&ratio_batch),
            },
        );
        out.push(CellResult {
            cell: CellKey {
                m: Some(m),
                ..g.key()
            },
            metrics,
            failures: 0,
            replications: spec.replications,
        });
    }
    Ok(out)
}

fn run_bias_mse(spec: &StudySpec, g: &Group) -> Result<Vec<CellResult>> {
    let gen = Generator::new(g, spec)?;
    let stream = g.stream(spec);
    let regs: Vec<Regressor> = spec
        .ms
        .iter()
        .map(|&m| Regressor::new(m))
        .collect::<Result<_>>()?;
    if let Some(&m) = spec.ms.iter().find(|&&m| m >= g.n) {
        return Err(invalid(format!("bandwidth {m} too large for n = {}", g.n)));
    }
    let per_rep: Vec<Vec<Option<f64>>> = run_replications(spec.replications, |r| {
        let x = gen.draw(&stream, r);
        regs.iter()
            .map(|reg| plain_slope(&x, g.p, reg).ok().map(|s| s / g.p - 0.5))
            .collect()
    });
    Ok(spec
        .ms
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let errs: Vec<f64> = per_rep
                .iter()
                .filter_map(|r| r[i])
                .map(|a| a - g.alpha)
                .collect();
            let mut metrics = BTreeMap::new();
            bias_mse_metrics(&errs, "", &mut metrics);
            CellResult {
                cell: CellKey {
                    m: Some(m),
                    ..g.key()
                },
                metrics,
                failures: spec.replications - errs.len(),
                replications: spec.replications,
            }
        })
        .collect())
}

fn run_robust_kappa(spec: &StudySpec, g: &Group) -> Result<Vec<CellResult>> {
    let m = g.m.expect("robust-kappa groups carry m");
    let gen = Generator::new(g, spec)?;
    let stream = g.stream(spec);
    let reg = Regressor::new(m)?;
    let kappas: Vec<usize> = spec.kappas.iter().copied().filter(|k| m * k < g.n).collect();
    let per_rep: Vec<(Option<f64>, Vec<Option<f64>>)> = run_replications(spec.replications, |r| {
        let x = gen.draw(&stream, r);
        let plain = plain_slope(&x, g.p, &reg).ok().map(|s| s / g.p - 0.5);
        let robust = kappas
            .iter()
            .map(|&k| robust_slope(&x, g.p, k, &reg).ok().map(|s| s / 2.0 - 0.5))
            .collect();
        (plain, robust)
    });
    let plain_err: Vec<f64> = per_rep
        .iter()
        .filter_map(|(p, _)| *p)
        .map(|a| a - g.alpha)
        .collect();
    Ok(kappas
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let errs: Vec<f64> = per_rep
                .iter()
                .filter_map(|(_, r)| r[i])
                .map(|a| a - g.alpha)
                .collect();
            let mut metrics = BTreeMap::new();
            bias_mse_metrics(&plain_err, "plain_", &mut metrics);
            bias_mse_metrics(&errs, "robust_", &mut metrics);
            CellResult {
                cell: CellKey {
                    kappa: Some(k),
                    ..g.key()
                },
                metrics,
                failures: spec.replications - errs.len(),
                replications: spec.replications,
            }
        })
        .collect())
}

fn local_alternative(alpha: f64, n: usize, rate: f64) -> Option<f64> {
    let a = alpha + (n as f64).powf(-rate);
    (a < crate::estimate::CLT_ALPHA_LIMIT).then_some(a)
}

fn run_size_power(
    spec: &StudySpec,
    g: &Group,
    engine: &VarianceEngine,
    robust: bool,
) -> Result<Vec<CellResult>> {
    let m = g.m.expect("size-power groups carry m");
    let kappa = g.kappa.unwrap_or(2);
    let cfg = EstimatorConfig::new(g.p, m, kappa)?;
    let need = if robust { cfg.min_len_robust() } else { cfg.min_len() };
    if g.n < need {
        return Err(invalid(format!("n = {} too small for {cfg:?}", g.n)));
    }
    let gen = Generator::new(g, spec)?;
    let stream = g.stream(spec);
    let reg = Regressor::new(m)?;
    let rate = if robust { 0.25 } else { 0.5 };
    let power_null = local_alternative(g.alpha, g.n, rate);
    // Warm the variance cache before fanning out.
    let warm = |a: f64| -> Result<()> {
        if robust {
            engine.sigma2_star(a, &cfg, g.n).map(|_| ())
        } else {
            engine.sigma2(a, &cfg, g.n).map(|_| ())
        }
    };
    warm(g.alpha)?;
    if let Some(a) = power_null {
        warm(a)?;
    }
    let per_rep: Vec<Option<(bool, Option<bool>, f64)>> =
        run_replications(spec.replications, |r| {
            let x = gen.draw(&stream, r);
            let slope = if robust {
                robust_slope(&x, g.p, kappa, &reg).ok()?
            } else {
                plain_slope(&x, g.p, &reg).ok()?
            };
            let est = FractalEstimate {
                alpha_hat: if robust { slope / 2.0 } else { slope / g.p } - 0.5,
                slope,
                s_p_hat: sp_of(&x, g.p).ok()?,
                config: cfg,
                n: g.n,
                robust,
            };
            let size = test_alpha_from_estimate(&est, g.alpha, engine, spec.level).ok()?;
            let power = power_null
                .map(|a| test_alpha_from_estimate(&est, a, engine, spec.level).map(|t| t.reject))
                .transpose()
                .ok()?;
            Some((size.reject, power, size.statistic))
        });
    let ok: Vec<&(bool, Option<bool>, f64)> = per_rep.iter().flatten().collect();
    let total = ok.len();
    let mut metrics = BTreeMap::new();
    metrics.insert(
        "size".to_string(),
        Measured::rate(ok.iter().filter(|t| t.0).count(), total),
    );
    if power_null.is_some() {
        metrics.insert(
            "local_power".to_string(),
            Measured::rate(ok.iter().filter(|t| t.1 == Some(true)).count(), total),
        );
    }
    let stats: Vec<f64> = ok.iter().map(|t| t.2).collect();
    metrics.insert("mean_statistic".to_string(), Measured::mean_of(&stats));
    Ok(vec![CellResult {
        cell: g.key(),
        metrics,
        failures: spec.replications - total,
        replications: spec.replications,
    }])
}

fn run_noise(spec: &StudySpec, g: &Group, engine: &VarianceEngine) -> Result<Vec<CellResult>> {
    let cfg = EstimatorConfig::new(g.p, g.m.expect("m"), g.kappa.expect("kappa"))?;
    if g.n < cfg.min_len_robust() {
        return Err(invalid(format!("n = {} too small for {cfg:?}", g.n)));
    }
    let gen = Generator::new(g, spec)?;
    let stream = g.stream(spec);
    let reg = Regressor::new(cfg.m)?;
    let per_rep: Vec<Option<(bool, f64)>> = run_replications(spec.replications, |r| {
        let x = gen.draw(&stream, r);
        let s_p_hat = sp_of(&x, g.p).ok()?;
        let plain_s = plain_slope(&x, g.p, &reg).ok()?;
        let robust_s = robust_slope(&x, g.p, cfg.kappa, &reg).ok()?;
        let make = |slope: f64, robust: bool| FractalEstimate {
            alpha_hat: if robust { slope / 2.0 } else { slope / g.p } - 0.5,
            slope,
            s_p_hat,
            config: cfg,
            n: g.n,
            robust,
        };
        let t = noise_test_from_estimates(
            &make(plain_s, false),
            &make(robust_s, true),
            engine,
            spec.level,
        )
        .ok()?;
        Some((t.reject, t.statistic))
    });
    let ok: Vec<&(bool, f64)> = per_rep.iter().flatten().collect();
    let mut metrics = BTreeMap::new();
    metrics.insert(
        "rejection_rate".to_string(),
        Measured::rate(ok.iter().filter(|t| t.0).count(), ok.len()),
    );
    let stats: Vec<f64> = ok.iter().map(|t| t.1).collect();
    metrics.insert("mean_statistic".to_string(), Measured::mean_of(&stats));
    Ok(vec![CellResult {
        cell: g.key(),
        metrics,
        failures: spec.replications - ok.len(),
        replications: spec.replications,
    }])
}

fn load_progress(path: &FsPath, fingerprint: &str) -> BTreeMap<String, Vec<CellResult>> {
    let mut done = BTreeMap::new();
    let Ok(file) = fs::File::open(path) else {
        return done;
    };
    for line in BufReader::new(file).lines().map_while(std::result::Result::ok) {
        if let Ok(p) = serde_json::from_str::<ProgressLine>(&line) {
            if p.fingerprint == fingerprint {
                done.insert(p.group, p.cells);
            }
        }
    }
    done
}

/// Runs every cell of `spec`. With a progress file, finished groups are
/// appended to it and reused on a later run of the same spec.
pub fn run_study(spec: &StudySpec, progress: Option<&FsPath>) -> Result<Report> {
    spec.validate()?;
    let start = Instant::now();
    let fingerprint = spec.fingerprint();
    let done = progress
        .map(|p| load_progress(p, &fingerprint))
        .unwrap_or_default();
    let mut writer = match progress {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Some(OpenOptions::new().create(true).append(true).open(p)?)
        }
        None => None,
    };
    let engine = VarianceEngine::new(spec.mc.clone());
    let mut cells = Vec::new();
    let mut seen = HashSet::new();
    for g in groups(spec) {
        let label = g.label();
        if !seen.insert(label.clone()) {
            continue;
        }
        if let Some(prev) = done.get(&label) {
            cells.extend(prev.iter().cloned());
            continue;
        }
        let out = match spec.study {
            StudyKind::BandwidthVariance => run_bandwidth_variance(spec, &g)?,
            StudyKind::BandwidthBiasMse => run_bias_mse(spec, &g)?,
            StudyKind::RobustKappa => run_robust_kappa(spec, &g)?,
            StudyKind::SizePowerClt => run_size_power(spec, &g, &engine, false)?,
            StudyKind::SizePowerRobust => run_size_power(spec, &g, &engine, true)?,
            StudyKind::SizePowerNoise => run_noise(spec, &g, &engine)?,
        };
        if let Some(w) = writer.as_mut() {
            let line = ProgressLine {
                fingerprint: fingerprint.clone(),
                group: label,
                cells: out.clone(),
            };
            writeln!(w, "{}", serde_json::to_string(&line).expect("serializable"))?;
            w.flush()?;
        }
        log::info!("finished {} cell group {}", spec.study.name(), g.label());
        cells.extend(out);
    }
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        study: spec.study,
        spec: spec.clone(),
        cells,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// For each group of cells that differ only in `m`, the `m` with the smallest
/// value of `metric`.
pub fn argmin_m(report: &Report, metric: &str) -> Vec<(CellKey, usize)> {
    let mut best: Vec<(CellKey, usize, f64)> = Vec::new();
    for c in &report.cells {
        let (Some(m), Some(v)) = (c.cell.m, c.metrics.get(metric)) else {
            continue;
        };
        let key = CellKey {
            m: None,
            ..c.cell.clone()
        };
        match best.iter_mut().find(|b| b.0 == key) {
            Some(b) if v.value < b.2 => {
                b.1 = m;
                b.2 = v.value;
            }
            Some(_) => {}
            None => best.push((key, m, v.value)),
        }
    }
    best.into_iter().map(|(k, m, _)| (k, m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(kind: StudyKind) -> StudySpec {
        let mut s = StudySpec::defaults(kind);
        s.replications = 40;
        s.mc = McSettings::default().with_replications(40);
        s.alphas = vec![-0.2];
        s.ns = vec![300];
        s.ps = vec![2.0];
        s.models = vec![ModelKind::Fbm];
        s
    }

    #[test]
    fn every_study_runs_and_is_deterministic() {
        for kind in StudyKind::ALL {
            let mut spec = tiny(kind);
            if kind == StudyKind::SizePowerNoise || kind == StudyKind::SizePowerRobust {
                spec.ms = vec![3];
                spec.kappas = vec![4];
            }
            let a = run_study(&spec, None).unwrap();
            let b = run_study(&spec, None).unwrap();
            assert!(!a.cells.is_empty(), "{kind:?}");
            assert_eq!(a.cells, b.cells, "{kind:?}");
            for c in &a.cells {
                assert!(!c.metrics.is_empty());
            }
            assert!(a.to_csv().starts_with("# schema_version: 1"));
        }
    }

    #[test]
    fn resume_skips_finished_groups() {
        let dir = tempfile::tempdir().unwrap();
        let progress = dir.path().join("cells.jsonl");
        let mut spec = tiny(StudyKind::BandwidthBiasMse);
        spec.ms = vec![2, 3];
        spec.alphas = vec![-0.2, 0.1];
        let first = run_study(&spec, Some(&progress)).unwrap();
        let lines = fs::read_to_string(&progress).unwrap().lines().count();
        assert_eq!(lines, 2);
        let second = run_study(&spec, Some(&progress)).unwrap();
        assert_eq!(first.cells, second.cells);
        assert_eq!(fs::read_to_string(&progress).unwrap().lines().count(), 2);
        spec.master_seed = 99;
        run_study(&spec, Some(&progress)).unwrap();
        assert_eq!(fs::read_to_string(&progress).unwrap().lines().count(), 4);
    }

    #[test]
    fn validation() {
        let mut s = tiny(StudyKind::SizePowerClt);
        s.alphas.clear();
        assert!(s.validate().is_err());
        let mut s = tiny(StudyKind::SizePowerClt);
        s.replications = 1;
        assert!(s.validate().is_err());
        assert_eq!(
            "robust-kappa".parse::<StudyKind>().unwrap(),
            StudyKind::RobustKappa
        );
    }

    #[test]
    fn measured_helpers() {
        let r = Measured::rate(5, 100);
        assert!((r.value - 0.05).abs() < 1e-15);
        assert!((r.std_error - (0.05f64 * 0.95 / 100.0).sqrt()).abs() < 1e-15);
        let m = Measured::mean_of(&[1.0, 2.0, 3.0]);
        assert_eq!(m.value, 2.0);
        assert!((m.std_error - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}

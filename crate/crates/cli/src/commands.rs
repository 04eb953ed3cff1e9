use std::fs::{self, File};
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};

use fracindex::estimate::CLT_ALPHA_LIMIT;
use fracindex::infer::interval_from_variance;
use fracindex::io::{ingest, read_series, render_path, IngestOptions, Series};
use fracindex::sim::{
    add_noise, simulate_fbm, simulate_gamma_bss, simulate_stationary_gaussian, GaussianModel,
    ModelKind, NoiseSpec,
};
use fracindex::study::{run_study, StudySpec, SCHEMA_VERSION};
use fracindex::{
    estimate_alpha, estimate_alpha_robust, noise_test, test_alpha, test_alpha_robust,
    EstimatorConfig, FractalError, McSettings, Path, VarianceEngine,
};
use serde_json::{json, Value};

use crate::args::{
    Command, EstimateArgs, IngestArgs, InputArgs, McArgs, SimulateArgs, StudyArgs, TestArgs,
    TuningArgs,
};
use crate::error::CliError;

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Test(a) => test(a),
        Command::Study(a) => study(a),
        Command::Ingest(a) => ingest_cmd(a),
    }
}

fn emit(out: Option<&FsPath>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Write {
            path: p.to_path_buf(),
            source,
        }),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Write {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn emit_json(out: Option<&FsPath>, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    emit(out, &text)
}

fn read_input(input: &InputArgs) -> Result<Series, CliError> {
    read_series(&input.input, &input.column).map_err(|e| match e {
        FractalError::Io(source) => CliError::Read {
            path: input.input.clone(),
            source,
        },
        other => other.into(),
    })
}

fn load_path(input: &InputArgs) -> Result<Path, CliError> {
    Ok(Path::new(read_input(input)?.values)?)
}

fn check_level(level: f64) -> Result<(), CliError> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--level {level} must lie in (0, 1)")))
    }
}

fn config_of(t: &TuningArgs) -> Result<EstimatorConfig, CliError> {
    Ok(EstimatorConfig::new(t.p, t.m, t.kappa)?)
}

fn engine_of(mc: &McArgs) -> VarianceEngine {
    let mut s = McSettings::default()
        .with_replications(mc.mc_replications)
        .with_seed(mc.mc_seed);
    if let Some(n) = mc.mc_n_inner {
        s = s.with_n_inner(n);
    }
    if let Some(dir) = &mc.cache_dir {
        s = s.with_cache_dir(dir);
    }
    VarianceEngine::new(s)
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let path = match a.model.gaussian_kind() {
        Some(ModelKind::Fbm) => simulate_fbm(a.n, a.alpha, a.seed)?,
        Some(kind) => {
            let tau = match a.tau {
                Some(t) => t,
                None => GaussianModel::study_default(kind, a.alpha)?.tau,
            };
            let model = GaussianModel::new(kind, a.alpha, a.beta, tau)?;
            simulate_stationary_gaussian(&model, a.n, a.seed)?
        }
        None => simulate_gamma_bss(a.alpha, a.lambda, a.volatility, a.n, a.seed)?
            .annotate(
                "volatility",
                serde_json::to_string(&a.volatility).expect("volatility serializes"),
            ),
    };
    let path = if a.noise_variance != 0.0 || a.noise_mu != 0.0 {
        add_noise(&path, &NoiseSpec::new(a.noise_mu, a.noise_variance)?, a.seed)?
    } else {
        path
    };
    let header = [("schema_version".to_string(), SCHEMA_VERSION.to_string())];
    emit(a.out.as_deref(), &render_path(&path, &header))
}

fn estimate(a: EstimateArgs) -> Result<(), CliError> {
    check_level(a.level)?;
    let path = load_path(&a.input)?;
    let cfg = config_of(&a.tuning)?;
    let est = if a.robust {
        estimate_alpha_robust(&path, &cfg)?
    } else {
        estimate_alpha(&path, &cfg)?
    };
    let mut notes = Vec::new();
    let (mut std_error, mut ci, mut variance) = (Value::Null, Value::Null, Value::Null);
    let in_regime = est.alpha_hat > -0.5 && est.clt_valid();
    if a.no_inference {
        notes.push("inference skipped on request".to_string());
    } else if !in_regime {
        notes.push(format!(
            "alpha_hat = {} lies outside (-1/2, {CLT_ALPHA_LIMIT}); no sqrt(n) standard error is available",
            est.alpha_hat
        ));
    } else {
        let engine = engine_of(&a.mc);
        let var = if a.robust {
            engine.sigma2_star(est.alpha_hat, &cfg, est.n)?
        } else {
            engine.sigma2(est.alpha_hat, &cfg, est.n)?
        };
        let interval = interval_from_variance(&est, var.value, a.level);
        std_error = json!(interval.std_error);
        ci = json!({
            "lower": interval.lower,
            "upper": interval.upper,
            "coverage": 1.0 - a.level,
        });
        variance = json!(var);
    }
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "estimate",
        "input": a.input.input.display().to_string(),
        "n": est.n,
        "alpha_hat": est.alpha_hat,
        "slope": est.slope,
        "s_p_hat": est.s_p_hat,
        "robust": est.robust,
        "config": est.config,
        "clt_valid": in_regime,
        "std_error": std_error,
        "ci": ci,
        "variance": variance,
        "notes": notes,
    });
    emit_json(a.out.as_deref(), &report)
}

fn test(a: TestArgs) -> Result<(), CliError> {
    check_level(a.level)?;
    let path = load_path(&a.input)?;
    let cfg = config_of(&a.tuning)?;
    let engine = engine_of(&a.mc);
    let result = match (a.noise, a.null) {
        (true, None) => noise_test(&path, &cfg, &engine, a.level)?,
        (false, Some(alpha0)) if a.robust => {
            test_alpha_robust(&path, alpha0, &cfg, &engine, a.level)?
        }
        (false, Some(alpha0)) => test_alpha(&path, alpha0, &cfg, &engine, a.level)?,
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --null ALPHA0 and --noise".into(),
            ))
        }
    };
    let mut report = serde_json::to_value(&result).expect("test result serializes");
    let obj = report.as_object_mut().expect("test result is an object");
    obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
    obj.insert("command".into(), json!("test"));
    obj.insert("input".into(), json!(a.input.input.display().to_string()));
    obj.insert("config".into(), json!(cfg));
    obj.insert("robust".into(), json!(a.noise || a.robust));
    emit_json(a.out.as_deref(), &report)
}

fn open_output(path: &FsPath) -> Result<File, CliError> {
    File::create(path).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn write_to(mut file: File, path: &FsPath, text: &str) -> Result<(), CliError> {
    file.write_all(text.as_bytes())
        .map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        })
}

pub fn study_spec(a: &StudyArgs) -> StudySpec {
    let mut spec = StudySpec::defaults(a.study);
    if a.full_scale {
        spec = spec.full_scale();
    }
    if let Some(v) = &a.models {
        spec.models = v.clone();
    }
    if let Some(v) = &a.alphas {
        spec.alphas = v.clone();
    }
    if let Some(v) = &a.ns {
        spec.ns = v.clone();
    }
    if let Some(v) = &a.ps {
        spec.ps = v.clone();
    }
    if let Some(v) = &a.ms {
        spec.ms = v.clone();
    }
    if let Some(v) = &a.kappas {
        spec.kappas = v.clone();
    }
    if let Some(v) = &a.noise_variances {
        spec.noise_variances = v.clone();
    }
    if let Some(v) = a.noise_mu {
        spec.noise_mu = v;
    }
    if let Some(v) = a.replications {
        spec.replications = v;
    }
    if let Some(v) = a.seed {
        spec.master_seed = v;
    }
    if let Some(v) = a.level {
        spec.level = v;
    }
    if let Some(v) = a.mc_replications {
        spec.mc.replications = v;
    }
    if let Some(v) = a.mc_n_inner {
        spec.mc.n_inner = Some(v);
    }
    if let Some(v) = a.mc_seed {
        spec.mc.master_seed = v;
    }
    spec.mc.cache_dir = a.cache_dir.clone();
    spec
}

fn study(a: StudyArgs) -> Result<(), CliError> {
    let spec = study_spec(&a);
    spec.validate()?;
    let json_file = a.out.as_deref().map(|p| open_output(p).map(|f| (f, p))).transpose()?;
    let csv_file = a.csv.as_deref().map(|p| open_output(p).map(|f| (f, p))).transpose()?;
    let report = run_study(&spec, a.progress.as_deref())?;
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    match json_file {
        Some((f, p)) => write_to(f, p, &text)?,
        None => emit(None, &text)?,
    }
    if let Some((f, p)) = csv_file {
        write_to(f, p, &report.to_csv())?;
    }
    Ok(())
}

fn ingest_cmd(a: IngestArgs) -> Result<(), CliError> {
    let series = read_input(&a.input)?;
    let opts = IngestOptions {
        demean: a.demean,
        standardize: a.standardize,
        subsample: a.subsample,
    };
    let path = ingest(series.values, &opts)?;
    let column = match &a.input.column {
        fracindex::io::ColumnSelector::Index(i) => i.to_string(),
        fracindex::io::ColumnSelector::Name(s) => s.clone(),
    };
    let header = [
        ("schema_version".to_string(), SCHEMA_VERSION.to_string()),
        ("source".to_string(), a.input.input.display().to_string()),
        ("column".to_string(), column),
    ];
    emit(a.out.as_deref(), &render_path(&path, &header))
}

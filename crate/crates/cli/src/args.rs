use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracindex::io::ColumnSelector;
use fracindex::sim::{ModelKind, VolatilityModel};
use fracindex::study::StudyKind;

/// Estimate, test and simulate the fractal index of time series.
#[derive(Debug, Parser)]
#[command(name = "fracindex", version, args_override_self = true)]
pub struct Cli {
    /// File of `key = value` lines supplying defaults for any flag of the
    /// chosen subcommand. Flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a path and write it as CSV.
    Simulate(SimulateArgs),
    /// Estimate the fractal index of a series.
    Estimate(EstimateArgs),
    /// Test a null value of the fractal index, or the absence of noise.
    Test(TestArgs),
    /// Run a simulation study over a parameter grid.
    Study(StudyArgs),
    /// Demean, standardize and subsample an external CSV series.
    Ingest(IngestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimModel {
    Fbm,
    Matern,
    #[value(alias = "powexp")]
    PoweredExponential,
    Cauchy,
    Dagum,
    GammaBss,
}

impl SimModel {
    pub fn gaussian_kind(self) -> Option<ModelKind> {
        match self {
            SimModel::Fbm => Some(ModelKind::Fbm),
            SimModel::Matern => Some(ModelKind::Matern),
            SimModel::PoweredExponential => Some(ModelKind::PoweredExponential),
            SimModel::Cauchy => Some(ModelKind::Cauchy),
            SimModel::Dagum => Some(ModelKind::Dagum),
            SimModel::GammaBss => None,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: SimModel,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Number of observations, on the grid 1/n, ..., 1.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scale parameter of the stationary models.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Tail parameter of the Cauchy and Dagum models; defaults to the values
    /// used by the studies.
    #[arg(long, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    /// Decay rate of the gamma kernel.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Volatility of the gamma-kernel process: `constant:LEVEL`,
    /// `two-regime:FIRST,SECOND,SWITCH` or `smooth-ou:MEAN,RATE,VOL,WINDOW`.
    #[arg(long, default_value = "constant:1", value_parser = parse_volatility, allow_hyphen_values = true)]
    pub volatility: VolatilityModel,
    /// Variance of additive Gaussian measurement noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise_variance: f64,
    /// Level shift added together with the noise.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub noise_mu: f64,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV file holding the series.
    #[arg(long)]
    pub input: PathBuf,
    /// Column number (from 1) or header name.
    #[arg(long, default_value = "1")]
    pub column: ColumnSelector,
}

#[derive(Debug, Args)]
pub struct TuningArgs {
    /// Power of the variogram.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Bandwidth: number of lags in the regression.
    #[arg(long, default_value_t = 5)]
    pub m: usize,
    /// Lag multiplier of the noise-robust estimator.
    #[arg(long, default_value_t = 10)]
    pub kappa: usize,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Replications of the Monte Carlo variance computation.
    #[arg(long, default_value_t = 10_000)]
    pub mc_replications: usize,
    /// Length of the simulated paths; defaults to the length of the data.
    #[arg(long)]
    pub mc_n_inner: Option<usize>,
    #[arg(long, default_value_t = 2024)]
    pub mc_seed: u64,
    /// Directory in which Monte Carlo matrices are cached between runs.
    #[arg(long, env = "FRACINDEX_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Use the noise-robust estimator.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false, action = clap::ArgAction::Set)]
    pub robust: bool,
    /// Skip the standard error and confidence interval.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false, action = clap::ArgAction::Set)]
    pub no_inference: bool,
    /// One minus the coverage of the confidence interval.
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
    #[command(flatten)]
    pub mc: McArgs,
    /// Output JSON; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Null value of the fractal index.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "noise", required_unless_present = "noise")]
    pub null: Option<f64>,
    /// Test the absence of additive measurement noise instead.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false, action = clap::ArgAction::Set)]
    pub noise: bool,
    /// Test the null with the noise-robust estimator.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false, action = clap::ArgAction::Set)]
    pub robust: bool,
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
    #[command(flatten)]
    pub mc: McArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long)]
    pub study: StudyKind,
    /// Full-scale replication counts instead of desk scale.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false, action = clap::ArgAction::Set)]
    pub full_scale: bool,
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<ModelKind>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub ps: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub ms: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub kappas: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub noise_variances: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub noise_mu: Option<f64>,
    /// Outer replications per cell.
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long)]
    pub mc_replications: Option<usize>,
    #[arg(long)]
    pub mc_n_inner: Option<usize>,
    #[arg(long)]
    pub mc_seed: Option<u64>,
    #[arg(long, env = "FRACINDEX_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Report JSON; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Plot-ready CSV grid of the cell results.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Progress file from which an interrupted run resumes.
    #[arg(long)]
    pub progress: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false, action = clap::ArgAction::Set)]
    pub demean: bool,
    /// Demean and scale to unit sample variance.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false, action = clap::ArgAction::Set)]
    pub standardize: bool,
    /// Keep every S-th observation, after demeaning and standardizing.
    #[arg(long, value_name = "S")]
    pub subsample: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn parse_volatility(s: &str) -> Result<VolatilityModel, String> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let nums: Vec<f64> = rest
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}")))
        .collect::<Result<_, _>>()?;
    let want = |k: usize| -> Result<(), String> {
        if nums.len() == k {
            Ok(())
        } else {
            Err(format!("volatility '{kind}' takes {k} numbers, got {}", nums.len()))
        }
    };
    let model = match kind {
        "constant" => {
            want(1)?;
            VolatilityModel::Constant { level: nums[0] }
        }
        "two-regime" => {
            want(3)?;
            VolatilityModel::TwoRegime {
                first: nums[0],
                second: nums[1],
                switch_time: nums[2],
            }
        }
        "smooth-ou" => {
            want(4)?;
            VolatilityModel::SmoothOu {
                mean: nums[0],
                rate: nums[1],
                vol: nums[2],
                window: nums[3],
            }
        }
        other => return Err(format!("unknown volatility model '{other}'")),
    };
    model.validate().map_err(|e| e.to_string())?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn volatility_specs() {
        assert_eq!(
            parse_volatility("constant:2").unwrap(),
            VolatilityModel::Constant { level: 2.0 }
        );
        assert_eq!(
            parse_volatility("two-regime:1,2,0.5").unwrap(),
            VolatilityModel::TwoRegime {
                first: 1.0,
                second: 2.0,
                switch_time: 0.5
            }
        );
        assert!(parse_volatility("smooth-ou:0,1,0.5").is_err());
        assert!(parse_volatility("constant:-1").is_err());
        assert!(parse_volatility("garch:1").is_err());
    }
}

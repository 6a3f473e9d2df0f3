use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use linhsic::kernel::{KernelSpec, DEFAULT_PREDICTOR_BANDWIDTH, DEFAULT_RESIDUAL_BANDWIDTH};
use linhsic::simulate::{ErrorLaw, ModelId, ModelSpec};

use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "linhsic",
    version,
    about = "Kernel independence test for linear regression errors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test a fitted linear model for error independence.
    Test(TestArgs),
    /// Draw a dataset from a built-in simulation model.
    Simulate(SimulateArgs),
    /// Monte Carlo rejection rates over a grid of simulation settings.
    Power(PowerArgs),
    /// Null distribution of the statistic from residuals versus true errors.
    Contrast(ContrastArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelChoice {
    /// Gaussian kernel with the bandwidth given by the matching --bandwidth flag.
    Fixed,
    /// Gaussian kernel, bandwidth = median pairwise distance.
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ErrorLawArg {
    Variance,
    Sd,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores). Never changes the output.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value_t = KernelChoice::Fixed)]
    pub kernel_x: KernelChoice,
    #[arg(long)]
    pub bandwidth_x: Option<f64>,
    #[arg(long, value_enum, default_value_t = KernelChoice::Fixed)]
    pub kernel_e: KernelChoice,
    #[arg(long)]
    pub bandwidth_e: Option<f64>,
}

impl KernelArgs {
    pub fn kernels(&self) -> Result<(KernelSpec, KernelSpec)> {
        Ok((
            kernel(self.kernel_x, self.bandwidth_x, DEFAULT_PREDICTOR_BANDWIDTH, "x")?,
            kernel(self.kernel_e, self.bandwidth_e, DEFAULT_RESIDUAL_BANDWIDTH, "e")?,
        ))
    }
}

fn kernel(choice: KernelChoice, bandwidth: Option<f64>, default: f64, which: &str) -> Result<KernelSpec> {
    let spec = match (choice, bandwidth) {
        (KernelChoice::Fixed, b) => KernelSpec::gaussian(b.unwrap_or(default)),
        (KernelChoice::Median, None) => KernelSpec::median_heuristic(),
        (KernelChoice::Median, Some(_)) => {
            return Err(CliError::Config(format!(
                "--bandwidth-{which} conflicts with --kernel-{which} median"
            )))
        }
    };
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone, Args)]
pub struct TestingArgs {
    /// Bootstrap replicates [default: 1000 for test, 500 for power].
    #[arg(long = "B")]
    pub replicates: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Fit and test on the raw scale instead of standardized variables.
    #[arg(long)]
    pub no_standardize: bool,
}

impl TestingArgs {
    pub fn replicates_or(&self, default: usize) -> usize {
        self.replicates.unwrap_or(default)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Config(format!(
                "--alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.replicates == Some(0) {
            return Err(CliError::Config("--B must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// model1, model2 or custom.
    #[arg(long)]
    pub model: Option<ModelId>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Misspecification strength.
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    /// Heteroscedasticity strength.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Number of predictors (custom model only).
    #[arg(long)]
    pub d0: Option<usize>,
    /// Error scale (custom model only).
    #[arg(long)]
    pub noise_sd: Option<f64>,
    /// Whether lambda scales the error variance or its standard deviation.
    #[arg(long, value_enum, default_value_t = ErrorLawArg::Variance)]
    pub error_law: ErrorLawArg,
}

impl ModelArgs {
    pub fn spec(&self, id: ModelId, seed: u64) -> Result<ModelSpec> {
        let mut spec = ModelSpec::new(id, self.n)
            .with_a(self.a)
            .with_lambda(self.lambda)
            .with_error_law(error_law(self.error_law))
            .with_seed(seed);
        if self.d0.is_some() || self.noise_sd.is_some() {
            if id != ModelId::Custom {
                return Err(CliError::Config(
                    "--d0 and --noise-sd apply to the custom model only".into(),
                ));
            }
            spec.d0 = self.d0.unwrap_or(spec.d0);
            spec.noise_sd = self.noise_sd.unwrap_or(spec.noise_sd);
        }
        spec.validate()?;
        Ok(spec)
    }
}

pub fn error_law(arg: ErrorLawArg) -> ErrorLaw {
    match arg {
        ErrorLawArg::Variance => ErrorLaw::Variance,
        ErrorLawArg::Sd => ErrorLaw::StdDev,
    }
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "model"])))]
pub struct TestArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "y", requires = "input")]
    pub response: String,
    /// Comma-separated predictor columns; default is every other column.
    #[arg(long, value_delimiter = ',', requires = "input")]
    pub predictors: Option<Vec<String>>,
    /// Terms joined by '+': columns, products `a*b`, squares `a^2`.
    #[arg(long)]
    pub design: Option<String>,
    #[arg(long)]
    pub no_intercept: bool,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub testing: TestingArgs,
    #[command(flatten)]
    pub kernels: KernelArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PowerArgs {
    /// Published grid: 1 and 2 vary lambda at n = 100, 200 for models 1 and
    /// 2; 3 and 4 vary a at n = 100.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4), conflicts_with_all = ["model", "n_grid", "a_grid", "lambda_grid"])]
    pub table: Option<u8>,
    #[arg(long)]
    pub model: Option<ModelId>,
    #[arg(long = "n", value_delimiter = ',', default_value = "100")]
    pub n_grid: Vec<usize>,
    #[arg(long = "a", value_delimiter = ',', default_value = "0")]
    pub a_grid: Vec<f64>,
    #[arg(long = "lambda", value_delimiter = ',', default_value = "0")]
    pub lambda_grid: Vec<f64>,
    #[arg(long, value_enum, default_value_t = ErrorLawArg::Variance)]
    pub error_law: ErrorLawArg,
    /// Monte Carlo trials per cell.
    #[arg(long, default_value_t = 300)]
    pub reps: usize,
    #[command(flatten)]
    pub testing: TestingArgs,
    #[command(flatten)]
    pub kernels: KernelArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ContrastArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    /// Histogram bins shared by both samples.
    #[arg(long, default_value_t = 30)]
    pub bins: usize,
    #[command(flatten)]
    pub kernels: KernelArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

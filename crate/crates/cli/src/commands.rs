//! Subcommand bodies. Each returns the rendered output bytes; writing them
//! out is left to the caller.

use std::path::Path;

use linhsic::bootstrap::{null_distribution_contrast, run_test, BootstrapConfig, TestResult};
use linhsic::kernel::KernelSpec;
use linhsic::linreg::Dataset;
use linhsic::simulate::{power_study_with, reference, ModelId, ModelSpec, PowerRow, StudySettings};
use linhsic::stats;
use serde::Serialize;

use crate::args::{error_law, ContrastArgs, Format, PowerArgs, SimulateArgs, TestArgs};
use crate::data::{default_names, load_csv, write_dataset};
use crate::design::{design_labels, parse_design};
use crate::error::{CliError, Result};

/// Bumped whenever a JSON field is renamed, removed or changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

fn log(message: &str) {
    eprintln!("linhsic: {message}");
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| CliError::Io {
        path: "<output>".into(),
        source: e.into_error(),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Source {
    Csv { path: String },
    Model { spec: ModelSpec },
}

#[derive(Debug, Serialize)]
struct TestOutput<'a> {
    schema_version: u32,
    command: &'static str,
    source: Source,
    response: String,
    predictors: Vec<String>,
    design: Vec<String>,
    standardized: bool,
    result: &'a TestResult,
}

pub fn cmd_test(args: &TestArgs) -> Result<Vec<u8>> {
    args.testing.validate()?;
    let (kx, ke) = args.kernels.kernels()?;
    let (data, source, response, names) = match (&args.input, args.model.model) {
        (Some(path), _) => {
            let loaded = load_csv(path, &args.response, args.predictors.as_deref())?;
            log(&format!(
                "read {} rows from {}; response '{}', predictors {}",
                loaded.dataset.n(),
                path.display(),
                loaded.response,
                loaded.predictors.join(",")
            ));
            let source = Source::Csv {
                path: path.display().to_string(),
            };
            (loaded.dataset, source, loaded.response, loaded.predictors)
        }
        (None, Some(id)) => {
            let spec = args.model.spec(id, args.run.seed)?;
            let data = spec.sample().data;
            let names = default_names(data.dim());
            (data, Source::Model { spec }, "y".to_string(), names)
        }
        (None, None) => return Err(CliError::Config("either --input or --model is required".into())),
    };
    let design = parse_design(args.design.as_deref(), &names, !args.no_intercept)?;
    design.validate(data.dim())?;
    let standardize = !args.testing.no_standardize;
    let data = if standardize { data.standardized()?.0 } else { data };
    let cfg = BootstrapConfig {
        replicates: args.testing.replicates_or(1000),
        seed: args.run.seed,
        parallel_workers: args.run.workers,
    };
    let result = run_test(&data, &design, &kx, &ke, &cfg, args.testing.alpha)?;
    let labels = design_labels(&design, &names);
    match args.output.format {
        Format::Json => json(&TestOutput {
            schema_version: SCHEMA_VERSION,
            command: "test",
            source,
            response,
            predictors: names,
            design: labels,
            standardized: standardize,
            result: &result,
        }),
        Format::Csv => {
            let mut header: Vec<String> = [
                "statistic",
                "t_n",
                "p_value",
                "reject",
                "alpha",
                "n",
                "replicates",
                "seed",
                "bandwidth_x",
                "bandwidth_e",
                "gram_condition",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            header.extend(labels.iter().map(|l| format!("beta[{l}]")));
            let mut row = vec![
                result.statistic.to_string(),
                result.t_n.to_string(),
                result.p_value.to_string(),
                result.reject.to_string(),
                result.alpha.to_string(),
                result.n.to_string(),
                result.replicates.to_string(),
                result.seed.to_string(),
                opt(result.kernel_x.fixed_bandwidth()),
                opt(result.kernel_e.fixed_bandwidth()),
                result.gram_condition.to_string(),
            ];
            row.extend(result.beta_hat.iter().map(f64::to_string));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            csv_bytes(&header, [row])
        }
    }
}

#[derive(Debug, Serialize)]
struct SimulateOutput {
    schema_version: u32,
    command: &'static str,
    spec: ModelSpec,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Vec<u8>> {
    let id = args
        .model
        .model
        .ok_or_else(|| CliError::Config("--model is required".into()))?;
    let spec = args.model.spec(id, args.run.seed)?;
    let data = spec.sample().data;
    let names = default_names(data.dim());
    match args.output.format {
        Format::Csv => {
            let mut out = Vec::new();
            write_dataset(&mut out, &data, &names)?;
            Ok(out)
        }
        Format::Json => {
            let mut columns = vec!["y".to_string()];
            columns.extend(names);
            json(&SimulateOutput {
                schema_version: SCHEMA_VERSION,
                command: "simulate",
                spec,
                columns,
                rows: dataset_rows(&data),
            })
        }
    }
}

fn dataset_rows(data: &Dataset) -> Vec<Vec<f64>> {
    data.predictors()
        .outer_iter()
        .zip(data.response())
        .map(|(x, &y)| std::iter::once(y).chain(x.iter().copied()).collect())
        .collect()
}

/// A grid cell and, for the published grids, the reported rejection
/// percentage of the test.
struct Cell {
    spec: ModelSpec,
    published: Option<u32>,
}

fn power_grid(args: &PowerArgs) -> Result<Vec<Cell>> {
    let law = error_law(args.error_law);
    let seed = args.run.seed;
    let cell = |id, n, a, lambda, published| Cell {
        spec: ModelSpec::new(id, n)
            .with_a(a)
            .with_lambda(lambda)
            .with_error_law(law)
            .with_seed(seed),
        published,
    };
    let lambda_table = |id, table: &[[u32; 7]; 2]| {
        let mut cells = Vec::new();
        for (row, n) in [100, 200].into_iter().enumerate() {
            for (k, &lambda) in reference::LAMBDA_GRID.iter().enumerate() {
                cells.push(cell(id, n, 0.0, lambda, Some(table[row][k])));
            }
        }
        cells
    };
    let a_table = |id, grid: &[f64], published: &[u32]| {
        grid.iter()
            .zip(published)
            .map(|(&a, &p)| cell(id, 100, a, 0.0, Some(p)))
            .collect::<Vec<_>>()
    };
    let cells = match args.table {
        Some(1) => lambda_table(ModelId::Model1, &reference::MODEL1_LAMBDA),
        Some(2) => lambda_table(ModelId::Model2, &reference::MODEL2_LAMBDA),
        Some(3) => a_table(ModelId::Model1, &reference::MODEL1_A_GRID, &reference::MODEL1_A[0]),
        Some(4) => a_table(ModelId::Model2, &reference::MODEL2_A_GRID, &reference::MODEL2_A[0]),
        Some(t) => return Err(CliError::Config(format!("no published table {t}"))),
        None => {
            let id = args
                .model
                .ok_or_else(|| CliError::Config("--model or --table is required".into()))?;
            let mut cells = Vec::new();
            for &n in &args.n_grid {
                for &a in &args.a_grid {
                    for &lambda in &args.lambda_grid {
                        cells.push(cell(id, n, a, lambda, None));
                    }
                }
            }
            cells
        }
    };
    for c in &cells {
        c.spec.validate()?;
    }
    Ok(cells)
}

#[derive(Debug, Serialize)]
struct PowerOutputRow<'a> {
    #[serde(flatten)]
    row: &'a PowerRow,
    published_percent: Option<u32>,
}

#[derive(Debug, Serialize)]
struct PowerOutput<'a> {
    schema_version: u32,
    command: &'static str,
    alpha: f64,
    bootstrap_replicates: usize,
    seed: u64,
    kernel_x: KernelSpec,
    kernel_e: KernelSpec,
    standardized: bool,
    rows: Vec<PowerOutputRow<'a>>,
}

pub const POWER_CSV_HEADER: [&str; 10] = [
    "model",
    "n",
    "a",
    "lambda",
    "reps",
    "rejections",
    "rejection_rate",
    "monte_carlo_se",
    "aborted",
    "published_percent",
];

pub fn cmd_power(args: &PowerArgs) -> Result<Vec<u8>> {
    args.testing.validate()?;
    if args.reps == 0 {
        return Err(CliError::Config("--reps must be positive".into()));
    }
    let (kx, ke) = args.kernels.kernels()?;
    let cells = power_grid(args)?;
    let mut settings = StudySettings::new(
        args.testing.alpha,
        args.reps,
        BootstrapConfig {
            replicates: args.testing.replicates_or(500),
            seed: args.run.seed,
            parallel_workers: args.run.workers,
        },
    );
    settings.kernel_x = kx;
    settings.kernel_e = ke;
    settings.standardize = !args.testing.no_standardize;
    log(&format!(
        "{} cells x {} trials, B = {}",
        cells.len(),
        args.reps,
        settings.bootstrap.replicates
    ));
    let specs: Vec<ModelSpec> = cells.iter().map(|c| c.spec).collect();
    let table = power_study_with(&specs, &settings)?;
    let rows: Vec<PowerOutputRow> = table
        .rows
        .iter()
        .zip(&cells)
        .map(|(row, c)| PowerOutputRow {
            row,
            published_percent: c.published,
        })
        .collect();
    match args.output.format {
        Format::Json => json(&PowerOutput {
            schema_version: SCHEMA_VERSION,
            command: "power",
            alpha: table.alpha,
            bootstrap_replicates: table.bootstrap_replicates,
            seed: args.run.seed,
            kernel_x: kx,
            kernel_e: ke,
            standardized: settings.standardize,
            rows,
        }),
        Format::Csv => csv_bytes(
            &POWER_CSV_HEADER,
            rows.iter().map(|r| {
                vec![
                    r.row.model_id.name().to_string(),
                    r.row.n.to_string(),
                    r.row.a.to_string(),
                    r.row.lambda.to_string(),
                    r.row.reps.to_string(),
                    r.row.rejections.to_string(),
                    r.row.rejection_rate.to_string(),
                    r.row.monte_carlo_se.to_string(),
                    r.row.aborted.to_string(),
                    r.published_percent.map(|p| p.to_string()).unwrap_or_default(),
                ]
            }),
        ),
    }
}

/// Equal-width bins spanning both samples; the last bin is closed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub residual_based: Vec<usize>,
    pub true_error_based: Vec<usize>,
}

pub fn shared_histogram(a: &[f64], b: &[f64], bins: usize) -> Histogram {
    let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * width).collect();
    let count = |s: &[f64]| {
        let mut counts = vec![0usize; bins];
        for &v in s {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        counts
    };
    Histogram {
        edges,
        residual_based: count(a),
        true_error_based: count(b),
    }
}

#[derive(Debug, Serialize)]
struct ContrastOutput<'a> {
    schema_version: u32,
    command: &'static str,
    spec: ModelSpec,
    reps: usize,
    seed: u64,
    kernel_x: KernelSpec,
    kernel_e: KernelSpec,
    ks_distance: f64,
    ks_critical_01: f64,
    under_sampled: bool,
    mean_residual_based: f64,
    mean_true_error_based: f64,
    histogram: Histogram,
    residual_based: &'a [f64],
    true_error_based: &'a [f64],
}

pub const CONTRAST_CSV_HEADER: [&str; 5] = ["series", "index", "lower", "upper", "value"];

pub fn cmd_contrast(args: &ContrastArgs) -> Result<Vec<u8>> {
    if args.bins == 0 {
        return Err(CliError::Config("--bins must be positive".into()));
    }
    let (kx, ke) = args.kernels.kernels()?;
    let spec = ModelSpec::contrast_model(args.n).with_seed(args.run.seed);
    spec.validate()?;
    let contrast = null_distribution_contrast(
        |rng, n| ModelSpec { n, ..spec }.sample_with(rng),
        args.n,
        args.reps,
        &spec.working_design(),
        &kx,
        &ke,
        args.run.seed,
        args.run.workers,
    )?;
    if contrast.under_sampled {
        log("fewer than 30 replications; the KS comparison is not meaningful");
    }
    let hist = shared_histogram(&contrast.residual_based, &contrast.true_error_based, args.bins);
    match args.output.format {
        Format::Json => json(&ContrastOutput {
            schema_version: SCHEMA_VERSION,
            command: "contrast",
            spec,
            reps: args.reps,
            seed: args.run.seed,
            kernel_x: kx,
            kernel_e: ke,
            ks_distance: contrast.ks_distance,
            ks_critical_01: contrast.ks_critical_01,
            under_sampled: contrast.under_sampled,
            mean_residual_based: stats::mean(&contrast.residual_based),
            mean_true_error_based: stats::mean(&contrast.true_error_based),
            histogram: hist,
            residual_based: &contrast.residual_based,
            true_error_based: &contrast.true_error_based,
        }),
        Format::Csv => {
            let mut rows = Vec::new();
            let sample = |name: &str, values: &[f64], rows: &mut Vec<Vec<String>>| {
                for (i, v) in values.iter().enumerate() {
                    rows.push(vec![
                        name.into(),
                        i.to_string(),
                        String::new(),
                        String::new(),
                        v.to_string(),
                    ]);
                }
            };
            sample("residual_based", &contrast.residual_based, &mut rows);
            sample("true_error_based", &contrast.true_error_based, &mut rows);
            for (name, counts) in [
                ("hist_residual_based", &hist.residual_based),
                ("hist_true_error_based", &hist.true_error_based),
            ] {
                for (k, c) in counts.iter().enumerate() {
                    rows.push(vec![
                        name.into(),
                        k.to_string(),
                        hist.edges[k].to_string(),
                        hist.edges[k + 1].to_string(),
                        c.to_string(),
                    ]);
                }
            }
            for (name, v) in [
                ("ks_distance", contrast.ks_distance),
                ("ks_critical_01", contrast.ks_critical_01),
            ] {
                rows.push(vec![
                    name.into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    v.to_string(),
                ]);
            }
            csv_bytes(&CONTRAST_CSV_HEADER, rows)
        }
    }
}

/// Writes `bytes` to `path`, or stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

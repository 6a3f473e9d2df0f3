//! Simulation designs and Monte Carlo size/power studies.
//!
//! * Model 1: `Y = 2 + 5 X1 - X2 + a X1 X2 + eta`, `X ~ U(0,1)^4`.
//! * Model 2: `Y = X1 + a X2^2 + 2 X4 + eta`, `(X1, X2, X3)` standard normal
//!   with pairwise correlation 0.5, `X4 ~ Bernoulli(0.4)` independent.
//! * Custom: `Y = 1 + sum_j Xj + a X1^2 + eta`, `X ~ N(0, I)`; with one
//!   predictor and error variance 0.1 this is the residual-vs-true-error
//!   contrast model.
//!
//! Errors follow `eta | X1 ~ N(0, noise_sd^2 (10 + lambda |X1|) / 10)`, so
//! `lambda = 0` is homoscedastic. The working model is always intercept plus
//! main effects, which is misspecified exactly when `a != 0`.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bootstrap::{run_test, BootstrapConfig};
use crate::error::{Error, Result};
use crate::exec::indexed_map;
use crate::hsic::residual_hsic_stat;
use crate::kernel::KernelSpec;
use crate::linreg::{Dataset, DesignSpec};
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelId {
    Model1,
    Model2,
    Custom,
}

impl ModelId {
    pub fn name(&self) -> &'static str {
        match self {
            ModelId::Model1 => "model1",
            ModelId::Model2 => "model2",
            ModelId::Custom => "custom",
        }
    }
}

impl std::str::FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "model1" | "1" => Ok(ModelId::Model1),
            "model2" | "2" => Ok(ModelId::Model2),
            "custom" | "linear" => Ok(ModelId::Custom),
            other => Err(Error::Config(format!("unknown model '{other}'"))),
        }
    }
}

/// How `(10 + lambda |X1|) / 10` scales the error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorLaw {
    /// Conditional variance `noise_sd^2 (10 + lambda |X1|) / 10`.
    #[default]
    Variance,
    /// Conditional standard deviation `noise_sd (10 + lambda |X1|) / 10`.
    StdDev,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model_id: ModelId,
    pub n: usize,
    pub a: f64,
    pub lambda: f64,
    pub d0: usize,
    pub noise_sd: f64,
    pub error_law: ErrorLaw,
    pub seed: u64,
}

/// A simulated regression sample with its true errors.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSample {
    pub data: Dataset,
    pub errors: Vec<f64>,
}

impl ModelSpec {
    pub fn new(model_id: ModelId, n: usize) -> Self {
        let d0 = match model_id {
            ModelId::Model1 | ModelId::Model2 => 4,
            ModelId::Custom => 1,
        };
        Self {
            model_id,
            n,
            a: 0.0,
            lambda: 0.0,
            d0,
            noise_sd: 1.0,
            error_law: ErrorLaw::Variance,
            seed: 0,
        }
    }

    /// `Y = 1 + X + eta`, `X ~ N(0,1)`, `eta ~ N(0, 0.1)`.
    pub fn contrast_model(n: usize) -> Self {
        Self {
            noise_sd: 0.1f64.sqrt(),
            ..Self::new(ModelId::Custom, n)
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_a(self, a: f64) -> Self {
        Self { a, ..self }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn with_error_law(self, error_law: ErrorLaw) -> Self {
        Self { error_law, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("sample size must be at least 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "lambda must be a finite nonnegative number, got {}",
                self.lambda
            )));
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::Config(format!(
                "noise sd must be positive, got {}",
                self.noise_sd
            )));
        }
        if !self.a.is_finite() {
            return Err(Error::Config("coefficient a must be finite".into()));
        }
        let min_d0 = match self.model_id {
            ModelId::Model1 => 2,
            ModelId::Model2 => 4,
            ModelId::Custom => 1,
        };
        if self.d0 < min_d0 || (self.model_id == ModelId::Model2 && self.d0 != 4) {
            return Err(Error::Config(format!(
                "{} does not support d0 = {}",
                self.model_id.name(),
                self.d0
            )));
        }
        Ok(())
    }

    /// Intercept plus every raw predictor (omits the `a` term).
    pub fn working_design(&self) -> DesignSpec {
        DesignSpec::main_effects(self.d0)
    }

    /// Draws the sample from the spec's own seed.
    pub fn sample(&self) -> SimulatedSample {
        self.sample_with(&mut rng::stream(self.seed, &[rng::SIMULATION]))
    }

    pub fn sample_with(&self, rng: &mut StreamRng) -> SimulatedSample {
        match self.model_id {
            ModelId::Model1 => simulate_model1(self, rng),
            ModelId::Model2 => simulate_model2(self, rng),
            ModelId::Custom => simulate_custom(self, rng),
        }
    }

    fn error_sd(&self, x1: f64) -> f64 {
        let factor = (10.0 + self.lambda * x1.abs()) / 10.0;
        match self.error_law {
            ErrorLaw::Variance => self.noise_sd * factor.sqrt(),
            ErrorLaw::StdDev => self.noise_sd * factor,
        }
    }
}

fn normal(rng: &mut StreamRng) -> f64 {
    StandardNormal.sample(rng)
}

fn finish(x: Array2<f64>, y: Vec<f64>, errors: Vec<f64>) -> SimulatedSample {
    SimulatedSample {
        data: Dataset::new(x, y).expect("simulated data are finite"),
        errors,
    }
}

pub fn simulate_model1(spec: &ModelSpec, rng: &mut StreamRng) -> SimulatedSample {
    let (n, d0) = (spec.n, spec.d0);
    let mut x = Array2::<f64>::zeros((n, d0));
    let mut y = Vec::with_capacity(n);
    let mut errors = Vec::with_capacity(n);
    for i in 0..n {
        for j in 0..d0 {
            x[[i, j]] = rng.random::<f64>();
        }
        let (x1, x2) = (x[[i, 0]], x[[i, 1]]);
        let eta = spec.error_sd(x1) * normal(rng);
        y.push(2.0 + 5.0 * x1 - x2 + spec.a * x1 * x2 + eta);
        errors.push(eta);
    }
    finish(x, y, errors)
}

/// Lower Cholesky factor of the 3x3 equicorrelation matrix with
/// off-diagonal `rho`.
fn equicorrelation_factor(rho: f64) -> [[f64; 3]; 3] {
    let c = [[1.0, rho, rho], [rho, 1.0, rho], [rho, rho, 1.0]];
    let mut l = [[0.0; 3]; 3];
    for j in 0..3 {
        let s: f64 = (0..j).map(|k| l[j][k] * l[j][k]).sum();
        l[j][j] = (c[j][j] - s).sqrt();
        for i in (j + 1)..3 {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            l[i][j] = (c[i][j] - s) / l[j][j];
        }
    }
    l
}

pub fn simulate_model2(spec: &ModelSpec, rng: &mut StreamRng) -> SimulatedSample {
    let n = spec.n;
    let l = equicorrelation_factor(0.5);
    let mut x = Array2::<f64>::zeros((n, 4));
    let mut y = Vec::with_capacity(n);
    let mut errors = Vec::with_capacity(n);
    for i in 0..n {
        let z = [normal(rng), normal(rng), normal(rng)];
        for r in 0..3 {
            x[[i, r]] = (0..=r).map(|c| l[r][c] * z[c]).sum();
        }
        x[[i, 3]] = if rng.random::<f64>() < 0.4 { 1.0 } else { 0.0 };
        let (x1, x2, x4) = (x[[i, 0]], x[[i, 1]], x[[i, 3]]);
        let eta = spec.error_sd(x1) * normal(rng);
        y.push(x1 + spec.a * x2 * x2 + 2.0 * x4 + eta);
        errors.push(eta);
    }
    finish(x, y, errors)
}

pub fn simulate_custom(spec: &ModelSpec, rng: &mut StreamRng) -> SimulatedSample {
    let (n, d0) = (spec.n, spec.d0);
    let mut x = Array2::<f64>::zeros((n, d0));
    let mut y = Vec::with_capacity(n);
    let mut errors = Vec::with_capacity(n);
    for i in 0..n {
        for j in 0..d0 {
            x[[i, j]] = normal(rng);
        }
        let x1 = x[[i, 0]];
        let eta = spec.error_sd(x1) * normal(rng);
        let row_sum: f64 = x.row(i).sum();
        y.push(1.0 + row_sum + spec.a * x1 * x1 + eta);
        errors.push(eta);
    }
    finish(x, y, errors)
}

/// How each Monte Carlo trial is tested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudySettings {
    pub alpha: f64,
    pub reps: usize,
    pub bootstrap: BootstrapConfig,
    pub kernel_x: KernelSpec,
    pub kernel_e: KernelSpec,
    /// Standardize predictors and response before fitting.
    pub standardize: bool,
}

impl StudySettings {
    pub fn new(alpha: f64, reps: usize, bootstrap: BootstrapConfig) -> Self {
        Self {
            alpha,
            reps,
            bootstrap,
            kernel_x: KernelSpec::predictor_default(),
            kernel_e: KernelSpec::residual_default(),
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub model_id: ModelId,
    pub n: usize,
    pub a: f64,
    pub lambda: f64,
    /// Completed trials.
    pub reps: usize,
    pub rejections: usize,
    pub rejection_rate: f64,
    pub monte_carlo_se: f64,
    /// Trials that ended in a numerical failure and are excluded from `reps`.
    pub aborted: usize,
}

impl PowerRow {
    pub fn from_counts(spec: &ModelSpec, reps: usize, rejections: usize, aborted: usize) -> Self {
        let rate = if reps == 0 {
            f64::NAN
        } else {
            rejections as f64 / reps as f64
        };
        Self {
            model_id: spec.model_id,
            n: spec.n,
            a: spec.a,
            lambda: spec.lambda,
            reps,
            rejections,
            rejection_rate: rate,
            monte_carlo_se: (rate * (1.0 - rate) / reps as f64).sqrt(),
            aborted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTable {
    pub rows: Vec<PowerRow>,
    pub alpha: f64,
    pub bootstrap_replicates: usize,
}

fn trial_sample(cell: &ModelSpec, trial: usize) -> SimulatedSample {
    cell.with_seed(rng::derive_seed(cell.seed, &[rng::TRIAL, trial as u64]))
        .sample()
}

fn prepare(sample: SimulatedSample, standardize: bool) -> Result<Dataset> {
    if standardize {
        Ok(sample.data.standardized()?.0)
    } else {
        Ok(sample.data)
    }
}

/// One simulate-then-test trial; `Ok(None)` for a numerical abort.
fn run_trial(cell: &ModelSpec, trial: usize, settings: &StudySettings) -> Result<Option<bool>> {
    let data = match prepare(trial_sample(cell, trial), settings.standardize) {
        Ok(d) => d,
        Err(e) if e.is_numerical() => return Ok(None),
        Err(e) => return Err(e),
    };
    let cfg = BootstrapConfig {
        replicates: settings.bootstrap.replicates,
        seed: rng::derive_seed(settings.bootstrap.seed, &[rng::TRIAL, cell.seed, trial as u64]),
        parallel_workers: 1,
    };
    match run_test(
        &data,
        &cell.working_design(),
        &settings.kernel_x,
        &settings.kernel_e,
        &cfg,
        settings.alpha,
    ) {
        Ok(r) => Ok(Some(r.reject)),
        Err(e) if e.is_numerical() => Ok(None),
        Err(e) => Err(e),
    }
}

/// Rejection frequencies over a grid of simulation cells, testing each trial
/// against the main-effects working model.
pub fn power_study(grid: &[ModelSpec], alpha: f64, cfg: &BootstrapConfig, reps: usize) -> Result<PowerTable> {
    power_study_with(grid, &StudySettings::new(alpha, reps, *cfg))
}

pub fn power_study_with(grid: &[ModelSpec], settings: &StudySettings) -> Result<PowerTable> {
    if settings.reps == 0 {
        return Err(Error::Config("power study needs at least one replication".into()));
    }
    if !(settings.alpha > 0.0 && settings.alpha < 1.0) {
        return Err(Error::Config(format!(
            "alpha must lie in (0, 1), got {}",
            settings.alpha
        )));
    }
    settings.bootstrap.validate()?;
    for cell in grid {
        cell.validate()?;
    }
    let reps = settings.reps;
    let outcomes = indexed_map(settings.bootstrap.parallel_workers, grid.len() * reps, |k| {
        run_trial(&grid[k / reps], k % reps, settings)
    });
    let mut rows = Vec::with_capacity(grid.len());
    for (c, cell) in grid.iter().enumerate() {
        let (mut done, mut rejected, mut aborted) = (0, 0, 0);
        for outcome in &outcomes[c * reps..(c + 1) * reps] {
            match outcome {
                Ok(Some(r)) => {
                    done += 1;
                    rejected += usize::from(*r);
                }
                Ok(None) => aborted += 1,
                Err(e) => return Err(e.clone()),
            }
        }
        rows.push(PowerRow::from_counts(cell, done, rejected, aborted));
    }
    Ok(PowerTable {
        rows,
        alpha: settings.alpha,
        bootstrap_replicates: settings.bootstrap.replicates,
    })
}

/// `n * T_n` over `reps` independent draws of `spec` (no bootstrap).
pub fn statistic_samples(
    spec: &ModelSpec,
    reps: usize,
    kx: &KernelSpec,
    kl: &KernelSpec,
    standardize: bool,
    workers: usize,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let design = spec.working_design();
    indexed_map(workers, reps, |t| {
        let data = prepare(trial_sample(spec, t), standardize)?;
        Ok(residual_hsic_stat(&data, &design, kx, kl)?.0.scaled)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    pub model_id: ModelId,
    /// Parameter that increases between the two cells: "lambda", "a" or "n".
    pub axis: String,
    pub from: usize,
    pub to: usize,
    /// Drop in estimated power, in standard errors of the difference.
    pub drop_in_se: f64,
}

/// Flags adjacent cells along the `lambda`, `a` and `n` axes (others held
/// fixed) where estimated power drops by more than two standard errors.
pub fn monotonicity_report(table: &PowerTable) -> Vec<MonotonicityViolation> {
    type Key = (ModelId, u64, u64, u64);
    let rows = &table.rows;
    type Axis = (&'static str, fn(&PowerRow) -> Key, fn(&PowerRow) -> f64);
    let axes: [Axis; 3] = [
        ("lambda", |r| (r.model_id, r.n as u64, r.a.to_bits(), 0), |r| r.lambda),
        ("a", |r| (r.model_id, r.n as u64, r.lambda.to_bits(), 0), |r| r.a),
        (
            "n",
            |r| (r.model_id, r.a.to_bits(), r.lambda.to_bits(), 0),
            |r| r.n as f64,
        ),
    ];
    let mut out = Vec::new();
    for (axis, key, coord) in axes {
        let mut groups: Vec<(Key, Vec<usize>)> = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            let k = key(r);
            match groups.iter_mut().find(|(g, _)| *g == k) {
                Some((_, members)) => members.push(i),
                None => groups.push((k, vec![i])),
            }
        }
        for (_, mut members) in groups {
            members.sort_by(|&i, &j| coord(&rows[i]).total_cmp(&coord(&rows[j])));
            for w in members.windows(2) {
                let (lo, hi) = (&rows[w[0]], &rows[w[1]]);
                if coord(lo) == coord(hi) {
                    continue;
                }
                let drop = lo.rejection_rate - hi.rejection_rate;
                if drop <= 0.0 {
                    continue;
                }
                let se = (lo.monte_carlo_se.powi(2) + hi.monte_carlo_se.powi(2)).sqrt();
                if drop > 2.0 * se {
                    out.push(MonotonicityViolation {
                        model_id: lo.model_id,
                        axis: axis.to_string(),
                        from: w[0],
                        to: w[1],
                        drop_in_se: if se > 0.0 { drop / se } else { f64::INFINITY },
                    });
                }
            }
        }
    }
    out
}

/// Published rejection percentages at `alpha = 0.05`, kept for comparison
/// output. Competitor rows are documentation only; those tests are not
/// implemented here.
pub mod reference {
    pub const LAMBDA_GRID: [f64; 7] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 50.0];
    /// Model 1, heteroscedastic errors; rows n = 100, 200.
    pub const MODEL1_LAMBDA: [[u32; 7]; 2] = [[5, 15, 26, 31, 32, 36, 44], [5, 40, 68, 74, 78, 81, 88]];
    /// Model 2, heteroscedastic errors; rows n = 100, 200.
    pub const MODEL2_LAMBDA: [[u32; 7]; 2] = [[6, 27, 30, 34, 34, 34, 37], [5, 49, 63, 69, 71, 71, 75]];

    pub const MODEL1_A_GRID: [f64; 8] = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 7.0, 10.0];
    /// Model 1 misspecification, n = 100: rows T_n, S1, S2, F.
    pub const MODEL1_A: [[u32; 8]; 4] = [
        [4, 6, 11, 20, 34, 57, 89, 100],
        [5, 5, 7, 8, 11, 16, 28, 48],
        [3, 5, 7, 10, 14, 21, 37, 60],
        [7, 7, 7, 10, 16, 22, 46, 89],
    ];

    pub const MODEL2_A_GRID: [f64; 11] = [0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.50, 0.60];
    /// Model 2 misspecification, n = 100: rows T_n, S1, S2, F.
    pub const MODEL2_A: [[u32; 11]; 4] = [
        [6, 7, 10, 14, 22, 31, 43, 57, 69, 81, 92],
        [5, 5, 6, 8, 13, 15, 25, 31, 41, 51, 69],
        [5, 5, 8, 10, 16, 20, 31, 38, 49, 55, 68],
        [8, 10, 8, 9, 10, 16, 23, 31, 42, 64, 84],
    ];
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    fn column(s: &SimulatedSample, j: usize) -> Vec<f64> {
        s.data.predictors().column(j).to_vec()
    }

    #[test]
    fn model1_formula_inverts() {
        let s = ModelSpec::new(ModelId::Model1, 200).with_seed(4).sample();
        for (i, x) in s.data.predictors().rows().into_iter().enumerate() {
            let m = 2.0 + 5.0 * x[0] - x[1];
            assert!((s.data.response()[i] - m - s.errors[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn model1_unit_error_variance() {
        let s = ModelSpec::new(ModelId::Model1, 100_000).with_seed(1).sample();
        let v = stats::sample_sd(&s.errors).powi(2);
        assert!((v - 1.0).abs() < 0.02, "{v}");
    }

    #[test]
    fn model1_uniform_marginals() {
        let s = ModelSpec::new(ModelId::Model1, 100_000).with_seed(2).sample();
        let crit = stats::ks_one_sample_critical(100_000, 0.01);
        for j in 0..4 {
            let d = stats::ks_one_sample(&column(&s, j), |x| x.clamp(0.0, 1.0));
            assert!(d < crit, "column {j}: {d} >= {crit}");
        }
    }

    #[test]
    fn model1_heteroscedastic_variance_ratio() {
        let s = ModelSpec::new(ModelId::Model1, 100_000)
            .with_lambda(50.0)
            .with_seed(3)
            .sample();
        let x1 = column(&s, 0);
        let pick = |lo: f64, hi: f64| -> Vec<f64> {
            x1.iter()
                .zip(&s.errors)
                .filter(|(x, _)| **x >= lo && **x <= hi)
                .map(|(_, e)| *e)
                .collect()
        };
        let hi = stats::sample_sd(&pick(0.9, 1.0)).powi(2);
        let lo = stats::sample_sd(&pick(0.0, 0.1)).powi(2);
        let expected = (10.0 + 50.0 * 0.95) / (10.0 + 50.0 * 0.05);
        assert!((hi / lo / expected - 1.0).abs() < 0.15, "{} vs {expected}", hi / lo);
    }

    #[test]
    fn model2_correlation_and_bernoulli() {
        let s = ModelSpec::new(ModelId::Model2, 100_000).with_seed(5).sample();
        let cols: Vec<Vec<f64>> = (0..4).map(|j| column(&s, j)).collect();
        let corr = |a: &[f64], b: &[f64]| {
            let (ma, mb) = (stats::mean(a), stats::mean(b));
            let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() - 1) as f64;
            cov / (stats::sample_sd(a) * stats::sample_sd(b))
        };
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let r = corr(&cols[i], &cols[j]);
            assert!((r - 0.5).abs() < 0.02, "corr({i},{j}) = {r}");
        }
        assert!(cols[3].iter().all(|&v| v == 0.0 || v == 1.0));
        assert!((stats::mean(&cols[3]) - 0.4).abs() < 0.01);
        for i in 0..3 {
            assert!((stats::sample_sd(&cols[i]) - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn model2_formula_inverts() {
        let s = ModelSpec::new(ModelId::Model2, 100).with_seed(6).sample();
        for (i, x) in s.data.predictors().rows().into_iter().enumerate() {
            assert!((s.data.response()[i] - (x[0] + 2.0 * x[3]) - s.errors[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn equicorrelation_factor_reconstructs() {
        let l = equicorrelation_factor(0.5);
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| l[i][k] * l[j][k]).sum();
                let target = if i == j { 1.0 } else { 0.5 };
                assert!((v - target).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn seeded_reproducibility() {
        let spec = ModelSpec::new(ModelId::Model2, 50)
            .with_seed(17)
            .with_a(0.3)
            .with_lambda(5.0);
        assert_eq!(spec.sample(), spec.sample());
        assert_ne!(spec.sample(), spec.with_seed(18).sample());
    }

    #[test]
    fn contrast_model_definition() {
        let s = ModelSpec::contrast_model(50_000).with_seed(2).sample();
        assert!((stats::sample_sd(&s.errors).powi(2) - 0.1).abs() < 0.003);
        for (i, x) in s.data.predictors().rows().into_iter().enumerate() {
            assert!((s.data.response()[i] - (1.0 + x[0]) - s.errors[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(ModelSpec::new(ModelId::Model1, 0).validate().is_err());
        assert!(ModelSpec::new(ModelId::Model1, 10)
            .with_lambda(-1.0)
            .validate()
            .is_err());
        assert!(ModelSpec {
            d0: 3,
            ..ModelSpec::new(ModelId::Model2, 10)
        }
        .validate()
        .is_err());
        assert!(ModelSpec::new(ModelId::Custom, 10).validate().is_ok());
        assert_eq!("Model2".parse::<ModelId>().unwrap(), ModelId::Model2);
        assert!("model3".parse::<ModelId>().is_err());
    }

    fn row(lambda: f64, rate: f64, reps: usize) -> PowerRow {
        let spec = ModelSpec::new(ModelId::Model1, 100).with_lambda(lambda);
        PowerRow::from_counts(&spec, reps, (rate * reps as f64).round() as usize, 0)
    }

    #[test]
    fn power_row_invariants() {
        let r = row(0.0, 0.25, 200);
        assert_eq!(r.rejection_rate, 50.0 / 200.0);
        assert!((r.monte_carlo_se - (0.25f64 * 0.75 / 200.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn monotonicity_on_published_table() {
        let mut rows = Vec::new();
        for (k, n) in [100usize, 200].into_iter().enumerate() {
            for (j, &lambda) in reference::LAMBDA_GRID.iter().enumerate() {
                let spec = ModelSpec::new(ModelId::Model1, n).with_lambda(lambda);
                let rej = reference::MODEL1_LAMBDA[k][j] as usize * 3;
                rows.push(PowerRow::from_counts(&spec, 300, rej, 0));
            }
        }
        let table = PowerTable {
            rows,
            alpha: 0.05,
            bootstrap_replicates: 1000,
        };
        assert!(monotonicity_report(&table).is_empty());
    }

    #[test]
    fn monotonicity_constant_and_injected_dip() {
        let flat: Vec<PowerRow> = reference::LAMBDA_GRID.iter().map(|&l| row(l, 0.4, 300)).collect();
        let table = PowerTable {
            rows: flat,
            alpha: 0.05,
            bootstrap_replicates: 10,
        };
        assert!(monotonicity_report(&table).is_empty());

        let mut rows: Vec<PowerRow> = reference::LAMBDA_GRID
            .iter()
            .enumerate()
            .map(|(i, &l)| row(l, 0.2 + 0.1 * i as f64, 1000))
            .collect();
        // 10 SE dip at lambda = 15
        let se = (2.0f64).sqrt() * rows[3].monte_carlo_se;
        let dipped = rows[2].rejection_rate - 10.0 * se;
        rows[3] = row(15.0, dipped, 1000);
        let table = PowerTable {
            rows,
            alpha: 0.05,
            bootstrap_replicates: 10,
        };
        let v = monotonicity_report(&table);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!((v[0].from, v[0].to, v[0].axis.as_str()), (2, 3, "lambda"));
    }

    #[test]
    fn power_study_is_worker_invariant() {
        let grid = [
            ModelSpec::new(ModelId::Model1, 30).with_seed(1),
            ModelSpec::new(ModelId::Model1, 30).with_seed(1).with_a(10.0),
        ];
        let one = BootstrapConfig {
            replicates: 19,
            seed: 3,
            parallel_workers: 1,
        };
        let many = BootstrapConfig {
            parallel_workers: 8,
            ..one
        };
        let a = power_study(&grid, 0.05, &one, 6).unwrap();
        let b = power_study(&grid, 0.05, &many, 6).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 2);
        assert!(a.rows.iter().all(|r| r.reps + r.aborted == 6));
        assert!(power_study(&grid, 0.05, &one, 0).is_err());
        assert!(power_study(&grid, 1.5, &one, 2).is_err());
    }
}

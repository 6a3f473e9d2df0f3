//! Residual-bootstrap calibration of `n * T_n`, the permutation baseline for
//! i.i.d. pairs, and the residual-vs-true-error null contrast.
//!
//! Residuals are not exchangeable with the predictors even under the null, so
//! permuting them does not reproduce the null law of `n * T_n`. Instead every
//! replicate draws predictor rows and centered residuals independently from
//! their empirical marginals, regenerates responses from the original fit,
//! refits, and recomputes the statistic on the refitted residuals.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::indexed_map;
use crate::hsic::{hsic_vstat, residual_gram, HsicValue};
use crate::kernel::{gram_matrix, GramMatrix, KernelSpec};
use crate::linreg::{build_design, fit_ols, Dataset, DesignSpec, FittedModel};
use crate::rng::{self, StreamRng};
use crate::simulate::SimulatedSample;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    /// Worker threads; 0 picks the rayon default. Never changes the output.
    pub parallel_workers: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 1000,
            seed: 0,
            parallel_workers: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("bootstrap needs at least one replicate".into()));
        }
        Ok(())
    }
}

/// Outcome of the bootstrap test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// Observed `n * T_n`.
    pub statistic: f64,
    pub t_n: f64,
    pub n: usize,
    /// Bootstrap draws of `n * T_n^*`, indexed by replicate.
    pub null_draws: Vec<f64>,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub beta_hat: Vec<f64>,
    pub gram_condition: f64,
    /// Kernels with bandwidths as actually used.
    pub kernel_x: KernelSpec,
    pub kernel_e: KernelSpec,
    pub replicates: usize,
    pub seed: u64,
}

/// `(1 + #{draws >= statistic}) / (B + 1)`.
pub fn bootstrap_p_value(statistic: f64, draws: &[f64]) -> f64 {
    let exceed = draws.iter().filter(|&&d| d >= statistic).count();
    (1 + exceed) as f64 / (draws.len() + 1) as f64
}

/// Everything a replicate reads; shared immutably across workers.
struct NullModel {
    design: Array2<f64>,
    k: GramMatrix,
    beta_hat: Array1<f64>,
    centered_residuals: Vec<f64>,
    kernel_e: KernelSpec,
}

impl NullModel {
    fn new(data: &Dataset, spec: &DesignSpec, kx: &KernelSpec, kl: &KernelSpec, fit: &FittedModel) -> Result<Self> {
        let design = build_design(data, spec)?;
        let kx = kx.resolved(data.predictors())?;
        let kernel_e = kl.resolved(residual_column(&fit.residuals).view())?;
        Ok(Self {
            k: gram_matrix(data.predictors(), &kx)?,
            design,
            beta_hat: Array1::from(fit.beta_hat.clone()),
            centered_residuals: fit.centered_residuals.clone(),
            kernel_e,
        })
    }

    fn n(&self) -> usize {
        self.design.nrows()
    }

    /// One bootstrap draw of `n * T_n^*`; a singular refit is redrawn once.
    fn replicate(&self, seed: u64, b: usize) -> Result<f64> {
        let n = self.n();
        let mut x_rng = rng::stream(seed, &[rng::BOOTSTRAP, b as u64, rng::X_INDICES]);
        let mut e_rng = rng::stream(seed, &[rng::BOOTSTRAP, b as u64, rng::ERROR_INDICES]);
        for _attempt in 0..2 {
            let x_idx = draw_indices(&mut x_rng, n);
            let e_idx = draw_indices(&mut e_rng, n);
            match self.statistic_for(&x_idx, &e_idx) {
                Err(Error::SingularDesign { .. }) => continue,
                other => return other,
            }
        }
        Err(Error::BootstrapAborted { replicate: b })
    }

    fn statistic_for(&self, x_idx: &[usize], e_idx: &[usize]) -> Result<f64> {
        let design = self.design.select(Axis(0), x_idx);
        let mut y = design.dot(&self.beta_hat);
        for (yi, &j) in y.iter_mut().zip(e_idx) {
            *yi += self.centered_residuals[j];
        }
        let y = y.into_raw_vec_and_offset().0;
        let fit = fit_ols(design.view(), &y)?;
        let k = self.k.gather(x_idx);
        let l = residual_gram(&fit.residuals, &self.kernel_e)?;
        Ok(hsic_vstat(&k, &l)?.scaled)
    }
}

fn residual_column(residuals: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec((residuals.len(), 1), residuals.to_vec()).expect("column shape")
}

fn draw_indices(rng: &mut StreamRng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Predictor-row and residual indices used by replicate `b` on its first
/// attempt. The two come from separate keyed streams, so the bootstrap sample
/// is drawn from the product of the two empirical marginals.
pub fn replicate_indices(seed: u64, b: usize, n: usize) -> (Vec<usize>, Vec<usize>) {
    let mut x_rng = rng::stream(seed, &[rng::BOOTSTRAP, b as u64, rng::X_INDICES]);
    let mut e_rng = rng::stream(seed, &[rng::BOOTSTRAP, b as u64, rng::ERROR_INDICES]);
    (draw_indices(&mut x_rng, n), draw_indices(&mut e_rng, n))
}

fn collect_draws(results: Vec<Result<f64>>) -> Result<Vec<f64>> {
    results.into_iter().collect()
}

/// `B` bootstrap draws of `n * T_n^*` under the fitted null model.
pub fn bootstrap_null_draws(
    data: &Dataset,
    spec: &DesignSpec,
    kx: &KernelSpec,
    kl: &KernelSpec,
    cfg: &BootstrapConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let design = build_design(data, spec)?;
    let fit = fit_ols(design.view(), data.response())?;
    let null = NullModel::new(data, spec, kx, kl, &fit)?;
    collect_draws(indexed_map(cfg.parallel_workers, cfg.replicates, |b| {
        null.replicate(cfg.seed, b)
    }))
}

/// Full test: observed `n * T_n`, bootstrap null draws, p-value and decision.
pub fn run_test(
    data: &Dataset,
    spec: &DesignSpec,
    kx: &KernelSpec,
    kl: &KernelSpec,
    cfg: &BootstrapConfig,
    alpha: f64,
) -> Result<TestResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    cfg.validate()?;
    kx.validate()?;
    kl.validate()?;
    let design = build_design(data, spec)?;
    let fit = fit_ols(design.view(), data.response())?;
    let null = NullModel::new(data, spec, kx, kl, &fit)?;
    let l = residual_gram(&fit.residuals, &null.kernel_e)?;
    let observed: HsicValue = hsic_vstat(&null.k, &l)?;
    let draws = collect_draws(indexed_map(cfg.parallel_workers, cfg.replicates, |b| {
        null.replicate(cfg.seed, b)
    }))?;
    let p_value = bootstrap_p_value(observed.scaled, &draws);
    Ok(TestResult {
        statistic: observed.scaled,
        t_n: observed.t_n,
        n: observed.n,
        null_draws: draws,
        p_value,
        alpha,
        reject: p_value <= alpha,
        beta_hat: fit.beta_hat,
        gram_condition: fit.gram_condition,
        kernel_x: kx.resolved(data.predictors())?,
        kernel_e: null.kernel_e,
        replicates: cfg.replicates,
        seed: cfg.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub statistic: HsicValue,
    pub null_draws: Vec<f64>,
    pub p_value: f64,
}

/// Permutation test of independence for i.i.d. pairs `(u_i, v_i)`: `v` is
/// relabelled by `B` uniform permutations. Valid for raw pairs only, not for
/// regression residuals.
pub fn permutation_pvalue(
    u_points: ArrayView2<'_, f64>,
    v_points: ArrayView2<'_, f64>,
    ku: &KernelSpec,
    kv: &KernelSpec,
    cfg: &BootstrapConfig,
) -> Result<PermutationResult> {
    cfg.validate()?;
    if u_points.nrows() != v_points.nrows() {
        return Err(Error::DimensionMismatch {
            expected: u_points.nrows(),
            found: v_points.nrows(),
        });
    }
    let n = u_points.nrows();
    let k = gram_matrix(u_points, ku)?;
    let l = gram_matrix(v_points, kv)?;
    let observed = hsic_vstat(&k, &l)?;
    let draws = collect_draws(indexed_map(cfg.parallel_workers, cfg.replicates, |b| {
        let mut rng = rng::stream(cfg.seed, &[rng::PERMUTATION, b as u64]);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        Ok(hsic_vstat(&k, &l.gather(&perm))?.scaled)
    }))?;
    Ok(PermutationResult {
        p_value: bootstrap_p_value(observed.scaled, &draws),
        statistic: observed,
        null_draws: draws,
    })
}

/// Paired samples of `n * T_n(X, e)` and `n * theta_n(X, eta)` over
/// independent simulated datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullContrast {
    pub residual_based: Vec<f64>,
    pub true_error_based: Vec<f64>,
    pub ks_distance: f64,
    /// Two-sample KS critical value at level 0.01 for these sample sizes.
    pub ks_critical_01: f64,
    /// Fewer than 30 replications: the KS comparison is not meaningful.
    pub under_sampled: bool,
}

/// Simulates `reps` datasets of size `n` and evaluates the statistic once on
/// the fitted residuals and once on the true errors, with the same kernels.
/// Data are used as drawn (no standardization), so both arms share scale.
#[allow(clippy::too_many_arguments)]
pub fn null_distribution_contrast<S>(
    sampler: S,
    n: usize,
    reps: usize,
    spec: &DesignSpec,
    kx: &KernelSpec,
    kl: &KernelSpec,
    seed: u64,
    workers: usize,
) -> Result<NullContrast>
where
    S: Fn(&mut StreamRng, usize) -> SimulatedSample + Sync + Send,
{
    if reps == 0 {
        return Err(Error::Config("contrast needs at least one replication".into()));
    }
    let pairs = indexed_map(workers, reps, |r| -> Result<(f64, f64)> {
        let mut rng = rng::stream(seed, &[rng::CONTRAST, r as u64]);
        let sample = sampler(&mut rng, n);
        let design = build_design(&sample.data, spec)?;
        let fit = fit_ols(design.view(), sample.data.response())?;
        let kx = kx.resolved(sample.data.predictors())?;
        let k = gram_matrix(sample.data.predictors(), &kx)?;
        let kl_e = kl.resolved(residual_column(&fit.residuals).view())?;
        let l_res = residual_gram(&fit.residuals, &kl_e)?;
        let kl_eta = kl.resolved(residual_column(&sample.errors).view())?;
        let l_eta = residual_gram(&sample.errors, &kl_eta)?;
        Ok((hsic_vstat(&k, &l_res)?.scaled, hsic_vstat(&k, &l_eta)?.scaled))
    });
    let pairs: Vec<(f64, f64)> = pairs.into_iter().collect::<Result<_>>()?;
    let (residual_based, true_error_based): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(NullContrast {
        ks_distance: stats::ks_two_sample(&residual_based, &true_error_based),
        ks_critical_01: stats::ks_two_sample_critical(reps, reps, 0.01),
        under_sampled: reps < 30,
        residual_based,
        true_error_based,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{ModelId, ModelSpec};
    use ndarray::array;

    fn model1(n: usize, seed: u64) -> Dataset {
        ModelSpec::new(ModelId::Model1, n)
            .with_seed(seed)
            .sample()
            .data
            .standardized()
            .unwrap()
            .0
    }

    #[test]
    fn p_value_convention() {
        let draws = [0.5, 1.0, 2.0, 3.0];
        assert_eq!(bootstrap_p_value(0.1, &draws), 1.0);
        assert_eq!(bootstrap_p_value(10.0, &draws), 0.2);
        assert_eq!(bootstrap_p_value(2.0, &draws), 3.0 / 5.0);
        // non-increasing in the statistic
        let mut last = 1.0;
        for s in [0.0, 0.5, 0.7, 1.0, 2.5, 3.0, 4.0] {
            let p = bootstrap_p_value(s, &draws);
            assert!(p <= last);
            last = p;
        }
    }

    #[test]
    fn exact_linear_response_gives_degenerate_null() {
        let x = array![[0.1], [0.4], [1.3], [2.2], [0.9], [1.7], [0.5], [2.9]];
        let y: Vec<f64> = x.column(0).iter().map(|v| 3.0 - v).collect();
        let data = Dataset::new(x, y).unwrap();
        let cfg = BootstrapConfig {
            replicates: 20,
            seed: 1,
            parallel_workers: 1,
        };
        let draws = bootstrap_null_draws(
            &data,
            &DesignSpec::main_effects(1),
            &KernelSpec::gaussian(1.0),
            &KernelSpec::gaussian(1.0),
            &cfg,
        )
        .unwrap();
        assert_eq!(draws.len(), 20);
        assert!(draws.iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn draws_do_not_depend_on_workers() {
        let data = model1(40, 3);
        let spec = DesignSpec::main_effects(4);
        let k = KernelSpec::gaussian(1.0);
        let one = BootstrapConfig {
            replicates: 64,
            seed: 99,
            parallel_workers: 1,
        };
        let eight = BootstrapConfig {
            parallel_workers: 8,
            ..one
        };
        let a = bootstrap_null_draws(&data, &spec, &k, &k, &one).unwrap();
        let b = bootstrap_null_draws(&data, &spec, &k, &k, &eight).unwrap();
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let other_seed = BootstrapConfig { seed: 100, ..one };
        assert_ne!(a, bootstrap_null_draws(&data, &spec, &k, &k, &other_seed).unwrap());
    }

    #[test]
    fn replicate_matches_manual_recomputation() {
        // Rebuild replicate 5 by hand from its index streams.
        let data = model1(30, 8);
        let spec = DesignSpec::main_effects(4);
        let k = KernelSpec::gaussian(1.0);
        let cfg = BootstrapConfig {
            replicates: 6,
            seed: 12,
            parallel_workers: 1,
        };
        let draws = bootstrap_null_draws(&data, &spec, &k, &k, &cfg).unwrap();

        let g = build_design(&data, &spec).unwrap();
        let fit = fit_ols(g.view(), data.response()).unwrap();
        let (xi, ei) = replicate_indices(12, 5, 30);
        let x_star = data.predictors().select(Axis(0), &xi);
        let g_star = g.select(Axis(0), &xi);
        let y_star: Vec<f64> = (0..30)
            .map(|i| (0..5).map(|j| g_star[[i, j]] * fit.beta_hat[j]).sum::<f64>() + fit.centered_residuals[ei[i]])
            .collect();
        let boot = Dataset::new(x_star, y_star).unwrap();
        let (t, _) = crate::hsic::residual_hsic_stat(&boot, &spec, &k, &k).unwrap();
        assert!((t.scaled - draws[5]).abs() <= 1e-12 * t.scaled.abs().max(1e-12));
    }

    #[test]
    fn index_streams_are_independent_product_draws() {
        let n = 50;
        let (xi, ei) = replicate_indices(4, 0, n);
        assert_ne!(xi, ei);
        // each stream depends only on its own key
        let (xi2, _) = replicate_indices(4, 0, n);
        assert_eq!(xi, xi2);
        let (xi3, ei3) = replicate_indices(4, 1, n);
        assert_ne!(xi, xi3);
        assert_ne!(ei, ei3);
        // pooled over replicates, the pair (x_idx, e_idx) is not concentrated
        // on the diagonal as paired resampling would be
        let mut diagonal = 0usize;
        let mut total = 0usize;
        for b in 0..200 {
            let (x, e) = replicate_indices(4, b, n);
            diagonal += x.iter().zip(&e).filter(|(a, b)| a == b).count();
            total += n;
        }
        let rate = diagonal as f64 / total as f64;
        assert!((rate - 1.0 / n as f64).abs() < 0.01, "diagonal rate {rate}");
    }

    #[test]
    fn run_test_errors() {
        let data = model1(20, 1);
        let spec = DesignSpec::main_effects(4);
        let k = KernelSpec::gaussian(1.0);
        let cfg = BootstrapConfig {
            replicates: 10,
            seed: 1,
            parallel_workers: 1,
        };
        assert!(matches!(
            run_test(&data, &spec, &k, &k, &cfg, 1.0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            run_test(&data, &spec, &k, &k, &cfg, 0.0),
            Err(Error::Config(_))
        ));
        let zero = BootstrapConfig { replicates: 0, ..cfg };
        assert!(matches!(
            run_test(&data, &spec, &k, &k, &zero, 0.05),
            Err(Error::Config(_))
        ));
        let bad = KernelSpec::gaussian(-1.0);
        assert!(matches!(
            run_test(&data, &spec, &bad, &k, &cfg, 0.05),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn run_test_result_is_consistent() {
        let data = model1(40, 21);
        let spec = DesignSpec::main_effects(4);
        let k = KernelSpec::gaussian(1.0);
        let cfg = BootstrapConfig {
            replicates: 99,
            seed: 5,
            parallel_workers: 1,
        };
        let r = run_test(&data, &spec, &k, &k, &cfg, 0.05).unwrap();
        assert_eq!(r.null_draws.len(), 99);
        assert_eq!(r.p_value, bootstrap_p_value(r.statistic, &r.null_draws));
        assert!(r.p_value >= 1.0 / 100.0 && r.p_value <= 1.0);
        assert_eq!(r.reject, r.p_value <= 0.05);
        assert!((r.statistic - 40.0 * r.t_n).abs() < 1e-15);
        assert_eq!(r.kernel_x.fixed_bandwidth(), Some(1.0));
    }

    #[test]
    fn median_rule_is_pinned_once() {
        let data = model1(30, 2);
        let spec = DesignSpec::main_effects(4);
        let cfg = BootstrapConfig {
            replicates: 10,
            seed: 5,
            parallel_workers: 1,
        };
        let m = KernelSpec::median_heuristic();
        let r = run_test(&data, &spec, &m, &m, &cfg, 0.05).unwrap();
        let bx = r.kernel_x.fixed_bandwidth().unwrap();
        assert_eq!(bx, crate::kernel::median_heuristic(data.predictors()).unwrap());
        assert!(r.kernel_e.fixed_bandwidth().unwrap() > 0.0);
    }

    #[test]
    fn permutation_constant_v() {
        let u = array![[0.0], [1.0], [2.0], [3.0]];
        let v = array![[5.0], [5.0], [5.0], [5.0]];
        let cfg = BootstrapConfig {
            replicates: 30,
            seed: 1,
            parallel_workers: 1,
        };
        let r = permutation_pvalue(
            u.view(),
            v.view(),
            &KernelSpec::gaussian(1.0),
            &KernelSpec::gaussian(1.0),
            &cfg,
        )
        .unwrap();
        assert_eq!(r.p_value, 1.0);
        assert!(permutation_pvalue(
            u.view(),
            v.slice(ndarray::s![..3, ..]),
            &KernelSpec::gaussian(1.0),
            &KernelSpec::gaussian(1.0),
            &cfg
        )
        .is_err());
    }

    #[test]
    fn permutation_detects_identity_dependence() {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rng::stream(3, &[0]);
        let u = Array2::from_shape_fn((100, 1), |_| StandardNormal.sample(&mut rng));
        let cfg = BootstrapConfig {
            replicates: 199,
            seed: 1,
            parallel_workers: 1,
        };
        let r = permutation_pvalue(
            u.view(),
            u.view(),
            &KernelSpec::gaussian(1.0),
            &KernelSpec::gaussian(1.0),
            &cfg,
        )
        .unwrap();
        assert_eq!(r.p_value, 1.0 / 200.0);
    }

    #[test]
    fn contrast_flags_under_sampling() {
        let spec = ModelSpec::contrast_model(20);
        let c = null_distribution_contrast(
            |rng, n| ModelSpec { n, ..spec }.sample_with(rng),
            20,
            1,
            &DesignSpec::main_effects(1),
            &KernelSpec::gaussian(1.0),
            &KernelSpec::gaussian(1.0),
            1,
            1,
        )
        .unwrap();
        assert!(c.under_sampled);
        assert!(c.ks_distance == 0.0 || c.ks_distance == 1.0);
    }
}

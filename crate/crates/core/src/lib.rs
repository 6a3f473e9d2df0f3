//! Omnibus test of error/predictor independence and goodness-of-fit for
//! linear regression models.
//!
//! The statistic is the V-statistic Hilbert-Schmidt independence criterion
//! between the predictor rows `X_i` and the observed least-squares residuals
//! `e_i`. Because residuals are not i.i.d., a permutation test is not valid;
//! the null distribution of `n * T_n` is instead approximated by a residual
//! bootstrap that resamples predictors and centered residuals from their
//! independent empirical marginals and refits the model on every replicate.
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`kernel`] | Gaussian kernel, bandwidth rules, Gram matrices, centering |
//! | [`linreg`] | Datasets, design bases, least squares via Householder QR, standardization |
//! | [`hsic`] | HSIC estimators and the residual statistic `T_n` |
//! | [`bootstrap`] | Residual bootstrap calibration, permutation baseline, null contrast |
//! | [`simulate`] | Simulation models and Monte Carlo size/power studies |
//! | [`stats`] | Small statistical helpers (KS distances, binomial bands, summation) |
//!
//! ```
//! use linhsic::bootstrap::{run_test, BootstrapConfig};
//! use linhsic::kernel::KernelSpec;
//! use linhsic::linreg::{Dataset, DesignSpec};
//! use ndarray::array;
//!
//! let x = array![[0.1], [0.5], [0.9], [1.3], [1.6], [2.0], [2.2], [2.9]];
//! let y = vec![1.1, 1.4, 2.1, 2.2, 2.8, 3.1, 3.0, 3.9];
//! let data = Dataset::new(x, y).unwrap();
//! let design = DesignSpec::main_effects(1);
//! let cfg = BootstrapConfig { replicates: 99, seed: 7, parallel_workers: 1 };
//! let (kx, ke) = (KernelSpec::predictor_default(), KernelSpec::residual_default());
//! let result = run_test(&data, &design, &kx, &ke, &cfg, 0.05).unwrap();
//! assert!(result.p_value > 0.0 && result.p_value <= 1.0);
//! ```

pub mod bootstrap;
pub mod error;
mod exec;
pub mod hsic;
pub mod kernel;
pub mod linreg;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};

//! V-statistic estimators of the Hilbert-Schmidt independence criterion.
//!
//! For a joint law `P_uv` with kernels `k`, `l` the population criterion is
//!
//! ```text
//! theta = E[k(U,U') l(V,V')] + E[k(U,U')] E[l(V,V')] - 2 E[k(U,U') l(V,V'')]
//! ```
//!
//! with `(U',V')`, `(U'',V'')` independent copies of `(U,V)`; it vanishes iff
//! `U` and `V` are independent when both kernels are characteristic. Its
//! plug-in V-statistic is
//!
//! ```text
//! theta_n = n^-2 sum_ij k_ij l_ij + n^-4 sum_ijqr k_ij l_qr - 2 n^-3 sum_ijq k_ij l_iq
//!         = n^-2 trace(K H L H),   H = I - 11^T / n.
//! ```
//!
//! [`hsic_vstat`] evaluates the trace form through the double-centered Gram
//! matrix, [`hsic_sums`] evaluates the three sums through marginal row sums.
//! The two are independent routes to the same number.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{gram_matrix, gram_matrix_1d, marginal_means, GramMatrix, KernelSpec};
use crate::linreg::{build_design, fit_ols, Dataset, DesignSpec, FittedModel};
use crate::stats::CompensatedSum;

/// An HSIC V-statistic together with its `n`-scaled version.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsicValue {
    pub t_n: f64,
    pub n: usize,
    /// `n * t_n`, the scale on which the null distribution is tight.
    pub scaled: f64,
}

impl HsicValue {
    pub fn new(t_n: f64, n: usize) -> Self {
        Self {
            t_n,
            n,
            scaled: n as f64 * t_n,
        }
    }
}

fn check_same_size(k: &GramMatrix, l: &GramMatrix) -> Result<usize> {
    if k.n() != l.n() {
        return Err(Error::DimensionMismatch {
            expected: k.n(),
            found: l.n(),
        });
    }
    if k.n() == 0 {
        return Err(Error::Input("HSIC needs at least one observation".into()));
    }
    Ok(k.n())
}

/// `n^-2 trace(K H L H)`, evaluated as `n^-2 sum_ij (HKH)_ij L_ij` with the
/// centering done by mean subtraction.
pub fn hsic_vstat(k: &GramMatrix, l: &GramMatrix) -> Result<HsicValue> {
    let n = check_same_size(k, l)?;
    Ok(HsicValue::new(
        centered_inner(k.entries(), l.entries()) / (n * n) as f64,
        n,
    ))
}

fn centered_inner(k: &Array2<f64>, l: &Array2<f64>) -> f64 {
    let (row_means, col_means, grand) = marginal_means(k);
    let mut acc = CompensatedSum::new();
    for (i, (k_row, l_row)) in k.rows().into_iter().zip(l.rows()).enumerate() {
        let shift = grand - row_means[i];
        let mut row = CompensatedSum::new();
        for ((kij, lij), cm) in k_row.iter().zip(l_row.iter()).zip(&col_means) {
            row.add((kij - cm + shift) * lij);
        }
        acc.add(row.value());
    }
    acc.value()
}

/// The three V-statistic sums, with the quadruple and triple sums factored
/// through row sums: `sum_ijqr k_ij l_qr = (sum K)(sum L)` and
/// `sum_ijq k_ij l_iq = sum_i (sum_j k_ij)(sum_q l_iq)`.
///
/// The sums are O(1) per entry and cancel down to `theta_n`, so products are
/// formed exactly and row sums are carried as `hi + lo` pairs until the final
/// division by `n^4`.
pub fn hsic_sums(k: &GramMatrix, l: &GramMatrix) -> Result<HsicValue> {
    let n = check_same_size(k, l)?;
    let nf = n as f64;
    let (k, l) = (k.entries(), l.entries());
    let mut paired = CompensatedSum::new();
    for (a, b) in k.iter().zip(l.iter()) {
        paired.add_product(*a, *b);
    }
    let row_parts = |m: &Array2<f64>| -> Vec<(f64, f64)> {
        m.rows()
            .into_iter()
            .map(|r| r.iter().copied().collect::<CompensatedSum>().parts())
            .collect()
    };
    let (k_rows, l_rows) = (row_parts(k), row_parts(l));
    let total = |rows: &[(f64, f64)]| {
        rows.iter()
            .flat_map(|&(h, lo)| [h, lo])
            .collect::<CompensatedSum>()
            .parts()
    };
    let (k_total, l_total) = (total(&k_rows), total(&l_rows));

    // n^4 theta_n = n^2 sum(K.L) + sum(K) sum(L) - 2 n sum_i rowK_i rowL_i
    let mut t = CompensatedSum::new();
    let (ph, pl) = paired.parts();
    t.add_product(nf * nf, ph);
    t.add_product(nf * nf, pl);
    add_pair_product(&mut t, k_total, l_total, 1.0);
    for (&a, &b) in k_rows.iter().zip(&l_rows) {
        add_pair_product(&mut t, a, b, -2.0 * nf);
    }
    Ok(HsicValue::new(t.value() / (nf * nf * nf * nf), n))
}

/// Adds `scale * (ah + al) * (bh + bl)`, dropping only `al * bl`-sized error.
fn add_pair_product(t: &mut CompensatedSum, (ah, al): (f64, f64), (bh, bl): (f64, f64), scale: f64) {
    let (p, e) = crate::stats::two_prod(ah, bh);
    t.add_product(scale, p);
    t.add_product(scale, e);
    t.add_product(scale, ah * bl + al * bh);
}

/// Residual statistic `T_n`: HSIC between the predictor rows and the observed
/// least-squares residuals of the working model.
///
/// Bandwidths given by the median rule are resolved on the predictor rows and
/// on the residuals respectively.
pub fn residual_hsic_stat(
    data: &Dataset,
    spec: &DesignSpec,
    kx: &KernelSpec,
    kl: &KernelSpec,
) -> Result<(HsicValue, FittedModel)> {
    let design = build_design(data, spec)?;
    let fit = fit_ols(design.view(), data.response())?;
    let k = gram_matrix(data.predictors(), kx)?;
    let l = residual_gram(&fit.residuals, kl)?;
    Ok((hsic_vstat(&k, &l)?, fit))
}

pub(crate) fn residual_gram(residuals: &[f64], kl: &KernelSpec) -> Result<GramMatrix> {
    let bw = match kl.fixed_bandwidth() {
        Some(b) => b,
        None => {
            let col = ndarray::ArrayView2::from_shape((residuals.len(), 1), residuals).expect("column view of a slice");
            kl.resolve_bandwidth(col)?
        }
    };
    gram_matrix_1d(residuals, bw)
}

/// Plain `theta_n` between paired samples `(u_i, v_i)`, rows being points.
pub fn hsic_pairs_stat(
    u_points: ArrayView2<'_, f64>,
    v_points: ArrayView2<'_, f64>,
    ku: &KernelSpec,
    kv: &KernelSpec,
) -> Result<HsicValue> {
    if u_points.nrows() != v_points.nrows() {
        return Err(Error::DimensionMismatch {
            expected: u_points.nrows(),
            found: v_points.nrows(),
        });
    }
    let k = gram_matrix(u_points, ku)?;
    let l = gram_matrix(v_points, kv)?;
    hsic_vstat(&k, &l)
}

//! Working linear model: datasets, design bases, least squares and
//! standardization.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Condition estimates of `A_n = G^T G / n` above this are treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// Regression sample: predictor rows `X_i` and responses `Y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    predictors: Array2<f64>,
    response: Vec<f64>,
}

impl Dataset {
    pub fn new(predictors: Array2<f64>, response: Vec<f64>) -> Result<Self> {
        if predictors.nrows() != response.len() {
            return Err(Error::DimensionMismatch {
                expected: predictors.nrows(),
                found: response.len(),
            });
        }
        for ((row, column), v) in predictors.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row, column });
            }
        }
        let d0 = predictors.ncols();
        if let Some(row) = response.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row, column: d0 });
        }
        Ok(Self { predictors, response })
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }

    /// Predictor dimension `d0`.
    pub fn dim(&self) -> usize {
        self.predictors.ncols()
    }

    pub fn predictors(&self) -> ArrayView2<'_, f64> {
        self.predictors.view()
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    /// Standardizes every predictor column and the response (sample mean 0,
    /// sample sd 1). Fails on constant columns.
    pub fn standardized(&self) -> Result<(Dataset, Standardization)> {
        let x = standardize(self.predictors.view(), &[])?;
        let y_col = Array2::from_shape_vec((self.n(), 1), self.response.clone()).expect("shape matches length");
        let y = standardize(y_col.view(), &[]).map_err(|e| match e {
            Error::DegenerateColumn { .. } => Error::DegenerateColumn { column: self.dim() },
            other => other,
        })?;
        let info = Standardization {
            predictor_means: x.means,
            predictor_sds: x.sds,
            response_mean: y.means[0],
            response_sd: y.sds[0],
        };
        let data = Dataset {
            predictors: x.matrix,
            response: y.matrix.column(0).to_vec(),
        };
        Ok((data, info))
    }
}

/// Transform parameters reported after standardizing a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub predictor_means: Vec<f64>,
    pub predictor_sds: Vec<f64>,
    pub response_mean: f64,
    pub response_sd: f64,
}

/// One predictor function `g_j : R^{d0} -> R`. Coordinates are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "args")]
pub enum BasisFn {
    Intercept,
    Coordinate(usize),
    Product(usize, usize),
    Square(usize),
}

impl BasisFn {
    #[inline]
    pub fn eval(&self, x: ArrayView1<'_, f64>) -> f64 {
        match *self {
            BasisFn::Intercept => 1.0,
            BasisFn::Coordinate(j) => x[j],
            BasisFn::Product(i, j) => x[i] * x[j],
            BasisFn::Square(j) => x[j] * x[j],
        }
    }

    fn max_coordinate(&self) -> Option<usize> {
        match *self {
            BasisFn::Intercept => None,
            BasisFn::Coordinate(j) | BasisFn::Square(j) => Some(j),
            BasisFn::Product(i, j) => Some(i.max(j)),
        }
    }

    /// Label using one-based coordinate names `x1, x2, ...`.
    pub fn label(&self) -> String {
        match *self {
            BasisFn::Intercept => "1".to_string(),
            BasisFn::Coordinate(j) => format!("x{}", j + 1),
            BasisFn::Product(i, j) => format!("x{}*x{}", i + 1, j + 1),
            BasisFn::Square(j) => format!("x{}^2", j + 1),
        }
    }
}

/// The basis `g = (g_1, ..., g_d)` defining the model class `g(x)^T beta`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub basis: Vec<BasisFn>,
}

impl DesignSpec {
    pub fn new(basis: Vec<BasisFn>) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::Config("design needs at least one basis function".into()));
        }
        Ok(Self { basis })
    }

    /// Intercept plus every raw coordinate.
    pub fn main_effects(d0: usize) -> Self {
        let mut basis = vec![BasisFn::Intercept];
        basis.extend((0..d0).map(BasisFn::Coordinate));
        Self { basis }
    }

    pub fn intercept_only() -> Self {
        Self {
            basis: vec![BasisFn::Intercept],
        }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn validate(&self, d0: usize) -> Result<()> {
        if self.basis.is_empty() {
            return Err(Error::Config("design needs at least one basis function".into()));
        }
        for f in &self.basis {
            if let Some(j) = f.max_coordinate() {
                if j >= d0 {
                    return Err(Error::Config(format!(
                        "basis function {} refers to coordinate {} but data has {d0} predictors",
                        f.label(),
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<String> {
        self.basis.iter().map(BasisFn::label).collect()
    }
}

/// Evaluates the basis on every row: entry `(i, j) = g_j(X_i)`.
pub fn build_design(data: &Dataset, spec: &DesignSpec) -> Result<Array2<f64>> {
    design_from_rows(data.predictors(), spec)
}

pub fn design_from_rows(rows: ArrayView2<'_, f64>, spec: &DesignSpec) -> Result<Array2<f64>> {
    spec.validate(rows.ncols())?;
    let n = rows.nrows();
    let mut g = Array2::<f64>::zeros((n, spec.len()));
    for (i, x) in rows.outer_iter().enumerate() {
        for (j, f) in spec.basis.iter().enumerate() {
            let v = f.eval(x);
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, column: j });
            }
            g[[i, j]] = v;
        }
    }
    Ok(g)
}

/// Least-squares fit `beta_hat`, residuals `e`, centered residuals `e - mean(e)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub beta_hat: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub centered_residuals: Vec<f64>,
    pub residual_mean: f64,
    /// 1-norm condition estimate of `A_n = G^T G / n`.
    pub gram_condition: f64,
}

/// Householder QR of an `n x d` matrix (`n >= d`). `qr` holds `R` in its upper
/// triangle and the reflector tails below; `v0`/`beta` complete the reflectors.
struct Householder {
    qr: Array2<f64>,
    heads: Vec<f64>,
    betas: Vec<f64>,
}

impl Householder {
    fn factor(mut a: Array2<f64>) -> Self {
        let (n, d) = a.dim();
        let mut heads = vec![0.0; d];
        let mut betas = vec![0.0; d];
        for k in 0..d {
            let x0 = a[[k, k]];
            let tail_sq: f64 = ((k + 1)..n).map(|i| a[[i, k]] * a[[i, k]]).sum();
            let norm = (x0 * x0 + tail_sq).sqrt();
            if norm == 0.0 {
                continue;
            }
            let alpha = if x0 >= 0.0 { -norm } else { norm };
            let v0 = x0 - alpha;
            // v = (v0, a[k+1.., k]); beta = 2 / (v^T v)
            let vtv = v0 * v0 + tail_sq;
            if vtv == 0.0 {
                continue;
            }
            let beta = 2.0 / vtv;
            heads[k] = v0;
            betas[k] = beta;
            for j in (k + 1)..d {
                let mut s = v0 * a[[k, j]];
                for i in (k + 1)..n {
                    s += a[[i, k]] * a[[i, j]];
                }
                let s = s * beta;
                a[[k, j]] -= s * v0;
                for i in (k + 1)..n {
                    let vi = a[[i, k]];
                    a[[i, j]] -= s * vi;
                }
            }
            a[[k, k]] = alpha;
        }
        Self { qr: a, heads, betas }
    }

    /// `Q^T y` in place.
    fn apply_qt(&self, y: &mut [f64]) {
        let (n, d) = self.qr.dim();
        for k in 0..d {
            let beta = self.betas[k];
            if beta == 0.0 {
                continue;
            }
            let v0 = self.heads[k];
            let mut s = v0 * y[k];
            for i in (k + 1)..n {
                s += self.qr[[i, k]] * y[i];
            }
            let s = s * beta;
            y[k] -= s * v0;
            for i in (k + 1)..n {
                y[i] -= s * self.qr[[i, k]];
            }
        }
    }

    fn r(&self) -> Array2<f64> {
        let d = self.qr.ncols();
        Array2::from_shape_fn((d, d), |(i, j)| if j >= i { self.qr[[i, j]] } else { 0.0 })
    }
}

/// Inverse of an upper-triangular matrix, or `None` if a pivot vanishes.
fn upper_triangular_inverse(r: &Array2<f64>) -> Option<Array2<f64>> {
    let d = r.nrows();
    let mut inv = Array2::<f64>::zeros((d, d));
    for j in 0..d {
        for i in (0..=j).rev() {
            let rhs = if i == j { 1.0 } else { 0.0 };
            let s: f64 = ((i + 1)..=j).map(|k| r[[i, k]] * inv[[k, j]]).sum();
            if r[[i, i]] == 0.0 {
                return None;
            }
            inv[[i, j]] = (rhs - s) / r[[i, i]];
        }
    }
    Some(inv)
}

fn norm_1(m: &Array2<f64>) -> f64 {
    m.columns()
        .into_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `kappa_1(R)^2`, which tracks the condition of `R^T R` (and of `A_n`).
fn condition_estimate(r: &Array2<f64>) -> f64 {
    match upper_triangular_inverse(r) {
        Some(inv) => {
            let k = norm_1(r) * norm_1(&inv);
            if k.is_finite() {
                k * k
            } else {
                f64::INFINITY
            }
        }
        None => f64::INFINITY,
    }
}

/// Columns that are (numerically) in the span of the columns before them.
fn dependent_columns(design: ArrayView2<'_, f64>) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    let mut offending = Vec::new();
    for j in 0..design.ncols() {
        let col = design.column(j);
        let col_norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if col_norm == 0.0 {
            offending.push(j);
            continue;
        }
        if kept.is_empty() {
            kept.push(j);
            continue;
        }
        let sub = design.select(Axis(1), &kept);
        let qr = Householder::factor(sub);
        let mut y = col.to_vec();
        qr.apply_qt(&mut y);
        let resid = y[kept.len()..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if resid <= 1e-7 * col_norm {
            offending.push(j);
        } else {
            kept.push(j);
        }
    }
    offending
}

/// Ordinary least squares via Householder QR of the design.
pub fn fit_ols(design: ArrayView2<'_, f64>, response: &[f64]) -> Result<FittedModel> {
    let (n, d) = design.dim();
    if response.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: response.len(),
        });
    }
    if d == 0 {
        return Err(Error::Config("design has no columns".into()));
    }
    if n < d {
        return Err(Error::Input(format!(
            "least squares needs at least as many rows ({n}) as design columns ({d})"
        )));
    }
    let qr = Householder::factor(design.to_owned());
    let r = qr.r();
    let condition = condition_estimate(&r);
    if !(condition <= SINGULAR_CONDITION) {
        return Err(Error::SingularDesign {
            condition,
            columns: dependent_columns(design),
        });
    }
    let mut qty = response.to_vec();
    qr.apply_qt(&mut qty);
    let mut beta = vec![0.0; d];
    for i in (0..d).rev() {
        let s: f64 = ((i + 1)..d).map(|k| r[[i, k]] * beta[k]).sum();
        beta[i] = (qty[i] - s) / r[[i, i]];
    }
    let beta_view = Array1::from(beta.clone());
    let fitted: Vec<f64> = design.dot(&beta_view).to_vec();
    let residuals: Vec<f64> = response.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let residual_mean = stats::mean(&residuals);
    let centered_residuals = residuals.iter().map(|e| e - residual_mean).collect();
    Ok(FittedModel {
        beta_hat: beta,
        fitted,
        residuals,
        centered_residuals,
        residual_mean,
        gram_condition: condition,
    })
}

/// Column-standardized matrix with the transform that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub matrix: Array2<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

/// Rescales each column to sample mean 0 and sample sd 1 (divisor `n - 1`).
/// Columns listed in `exempt` pass through untouched (reported mean 0, sd 1).
pub fn standardize(matrix: ArrayView2<'_, f64>, exempt: &[usize]) -> Result<Standardized> {
    let (n, p) = matrix.dim();
    if n < 2 {
        return Err(Error::Input("standardization needs at least two rows".into()));
    }
    let mut out = matrix.to_owned();
    let mut means = vec![0.0; p];
    let mut sds = vec![1.0; p];
    for j in 0..p {
        if exempt.contains(&j) {
            continue;
        }
        let col = matrix.column(j).to_vec();
        let m = stats::mean(&col);
        let s = stats::sample_sd(&col);
        if !(s > 0.0) || s <= 1e-12 * m.abs() {
            return Err(Error::DegenerateColumn { column: j });
        }
        out.column_mut(j).mapv_inplace(|v| (v - m) / s);
        means[j] = m;
        sds[j] = s;
    }
    Ok(Standardized {
        matrix: out,
        means,
        sds,
    })
}

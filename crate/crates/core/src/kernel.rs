//! Gaussian kernels, bandwidth selection, Gram matrices and double centering.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{self, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    /// `k(u, v) = exp(-||u - v||^2 / bandwidth^2)`, characteristic on every `R^p`.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum BandwidthRule {
    Fixed(f64),
    /// Median of the pairwise Euclidean distances of the sample the kernel is
    /// first applied to.
    MedianHeuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub bandwidth_rule: BandwidthRule,
}

/// Default predictor-kernel bandwidth, on standardized predictors.
pub const DEFAULT_PREDICTOR_BANDWIDTH: f64 = 5.0;
/// Default residual-kernel bandwidth, on residuals of the standardized response.
pub const DEFAULT_RESIDUAL_BANDWIDTH: f64 = 2.0;

impl KernelSpec {
    /// `Fixed(DEFAULT_PREDICTOR_BANDWIDTH)`.
    pub fn predictor_default() -> Self {
        Self::gaussian(DEFAULT_PREDICTOR_BANDWIDTH)
    }

    /// `Fixed(DEFAULT_RESIDUAL_BANDWIDTH)`.
    pub fn residual_default() -> Self {
        Self::gaussian(DEFAULT_RESIDUAL_BANDWIDTH)
    }

    pub fn gaussian(bandwidth: f64) -> Self {
        Self {
            family: KernelFamily::Gaussian,
            bandwidth_rule: BandwidthRule::Fixed(bandwidth),
        }
    }

    pub fn median_heuristic() -> Self {
        Self {
            family: KernelFamily::Gaussian,
            bandwidth_rule: BandwidthRule::MedianHeuristic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.bandwidth_rule {
            BandwidthRule::Fixed(b) if !(b > 0.0 && b.is_finite()) => Err(Error::Config(format!(
                "kernel bandwidth must be positive and finite, got {b}"
            ))),
            _ => Ok(()),
        }
    }

    /// Turns the rule into a concrete bandwidth for the given sample
    /// (rows are points).
    pub fn resolve_bandwidth(&self, points: ArrayView2<'_, f64>) -> Result<f64> {
        self.validate()?;
        match self.bandwidth_rule {
            BandwidthRule::Fixed(b) => Ok(b),
            BandwidthRule::MedianHeuristic => median_heuristic(points),
        }
    }

    /// The same kernel with its bandwidth pinned, so it is not re-derived on
    /// resampled data.
    pub fn resolved(&self, points: ArrayView2<'_, f64>) -> Result<KernelSpec> {
        Ok(KernelSpec {
            family: self.family,
            bandwidth_rule: BandwidthRule::Fixed(self.resolve_bandwidth(points)?),
        })
    }

    /// Bandwidth if the rule is already fixed.
    pub fn fixed_bandwidth(&self) -> Option<f64> {
        match self.bandwidth_rule {
            BandwidthRule::Fixed(b) => Some(b),
            BandwidthRule::MedianHeuristic => None,
        }
    }
}

#[inline]
fn squared_distance(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn gaussian_kernel(u: &[f64], v: &[f64], bandwidth: f64) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::Config(format!(
            "kernel bandwidth must be positive and finite, got {bandwidth}"
        )));
    }
    Ok((-squared_distance(u, v) / (bandwidth * bandwidth)).exp())
}

/// Median of the Euclidean distances over all unordered pairs of distinct
/// indices. Fails when every pair is at distance zero.
pub fn median_heuristic(points: ArrayView2<'_, f64>) -> Result<f64> {
    let n = points.nrows();
    if n < 2 {
        return Err(Error::DegenerateSample(
            "median heuristic needs at least two points".into(),
        ));
    }
    let rows: Vec<ArrayView1<'_, f64>> = points.outer_iter().collect();
    let mut distances = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d2: f64 = rows[i].iter().zip(rows[j].iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            distances.push(d2.sqrt());
        }
    }
    if distances.iter().all(|&d| d == 0.0) {
        return Err(Error::DegenerateSample(
            "all points are identical; median distance is zero".into(),
        ));
    }
    Ok(stats::median(&distances))
}

/// Dense `n x n` kernel matrix.
///
/// Invariants for Gaussian kernels: symmetric, unit diagonal, entries in
/// `(0, 1]` (up to underflow for very distant points), positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: Array2<f64>,
}

impl GramMatrix {
    /// Wraps a precomputed square matrix. Only shape is checked.
    pub fn from_entries(entries: Array2<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        Ok(Self { entries })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<f64> {
        self.entries
    }

    /// Gram matrix of the resampled points `points[idx[0]], points[idx[1]], ...`,
    /// read off this matrix without re-evaluating the kernel.
    pub fn gather(&self, idx: &[usize]) -> GramMatrix {
        let m = idx.len();
        let src = &self.entries;
        let mut out = Array2::<f64>::zeros((m, m));
        for (a, &i) in idx.iter().enumerate() {
            let src_row = src.row(i);
            let mut dst_row = out.row_mut(a);
            for (b, &j) in idx.iter().enumerate() {
                dst_row[b] = src_row[j];
            }
        }
        GramMatrix { entries: out }
    }
}

/// Gram matrix of the rows of `points` under `spec`.
///
/// A median-heuristic spec is resolved against `points` itself.
pub fn gram_matrix(points: ArrayView2<'_, f64>, spec: &KernelSpec) -> Result<GramMatrix> {
    let bandwidth = spec.resolve_bandwidth(points)?;
    let n = points.nrows();
    if n == 0 {
        return Err(Error::Input("gram matrix needs at least one point".into()));
    }
    let rows: Vec<Vec<f64>> = points.outer_iter().map(|r| r.to_vec()).collect();
    let scale = 1.0 / (bandwidth * bandwidth);
    let mut k = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        k[[i, i]] = 1.0;
        for j in (i + 1)..n {
            let v = (-squared_distance(&rows[i], &rows[j]) * scale).exp();
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    Ok(GramMatrix { entries: k })
}

/// Gram matrix of scalar observations (the residual kernel).
pub fn gram_matrix_1d(values: &[f64], bandwidth: f64) -> Result<GramMatrix> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::Config(format!(
            "kernel bandwidth must be positive and finite, got {bandwidth}"
        )));
    }
    let n = values.len();
    if n == 0 {
        return Err(Error::Input("gram matrix needs at least one point".into()));
    }
    let scale = 1.0 / (bandwidth * bandwidth);
    let mut k = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        k[[i, i]] = 1.0;
        let vi = values[i];
        for j in (i + 1)..n {
            let d = vi - values[j];
            let v = (-d * d * scale).exp();
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    Ok(GramMatrix { entries: k })
}

/// Row means, column means and grand mean of a square matrix, accumulated
/// with compensated summation.
pub(crate) fn marginal_means(m: &Array2<f64>) -> (Vec<f64>, Vec<f64>, f64) {
    let n = m.nrows();
    let nf = n as f64;
    let row_means: Vec<f64> = m
        .axis_iter(Axis(0))
        .map(|r| r.iter().copied().collect::<CompensatedSum>().value() / nf)
        .collect();
    let col_means: Vec<f64> = m
        .axis_iter(Axis(1))
        .map(|c| c.iter().copied().collect::<CompensatedSum>().value() / nf)
        .collect();
    let grand = row_means.iter().copied().collect::<CompensatedSum>().value() / nf;
    (row_means, col_means, grand)
}

/// `H K H` with `H = I - 11^T / n`, computed by subtracting row, column and
/// grand means (O(n^2), `H` is never formed).
pub fn center_gram(k: &GramMatrix) -> Array2<f64> {
    center_matrix(k.entries())
}

pub(crate) fn center_matrix(m: &Array2<f64>) -> Array2<f64> {
    let (row_means, col_means, grand) = marginal_means(m);
    let mut out = m.clone();
    for ((i, j), v) in out.indexed_iter_mut() {
        *v = *v - row_means[i] - col_means[j] + grand;
    }
    out
}

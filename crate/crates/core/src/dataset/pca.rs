use nalgebra::{DMatrix, SymmetricEigen};

use super::MultivariateSeries;
use crate::error::{Error, Result};

/// Principal axes of a training sample, strongest first.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaState {
    pub mean: Vec<f64>,
    /// `[k × T]`, one orthonormal axis per row.
    pub components: Vec<f64>,
    pub variance_ratio: Vec<f64>,
    num_vars: usize,
}

impl PcaState {
    pub fn from_parts(
        mean: Vec<f64>,
        components: Vec<f64>,
        variance_ratio: Vec<f64>,
    ) -> Result<Self> {
        let t = mean.len();
        let k = variance_ratio.len();
        if t == 0 || components.len() != k * t {
            return Err(Error::shape("PcaState components", k * t, components.len()));
        }
        Ok(PcaState {
            mean,
            components,
            variance_ratio,
            num_vars: t,
        })
    }

    pub fn num_components(&self) -> usize {
        self.variance_ratio.len()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i * self.num_vars..(i + 1) * self.num_vars]
    }

    /// Explained-variance ratio of every axis of the sample covariance,
    /// not only the retained ones.
    pub fn spectrum(series: &MultivariateSeries) -> Result<Vec<f64>> {
        let (_, _, ratios) = eigen(series)?;
        Ok(ratios)
    }

    /// `(values − mean)·componentsᵀ`.
    pub fn project(&self, series: &MultivariateSeries) -> Result<MultivariateSeries> {
        if series.num_vars() != self.num_vars {
            return Err(Error::shape(
                "pca project",
                self.num_vars,
                series.num_vars(),
            ));
        }
        let k = self.num_components();
        let mut out = Vec::with_capacity(series.len() * k);
        for row in series.rows() {
            for i in 0..k {
                out.push(
                    self.component(i)
                        .iter()
                        .zip(row)
                        .zip(&self.mean)
                        .map(|((c, x), m)| c * (x - m))
                        .sum(),
                );
            }
        }
        series.with_values(out, k)
    }

    /// `projected·components + mean`.
    pub fn reconstruct(&self, projected: &MultivariateSeries) -> Result<MultivariateSeries> {
        let k = self.num_components();
        if projected.num_vars() != k {
            return Err(Error::shape("pca reconstruct", k, projected.num_vars()));
        }
        let mut out = Vec::with_capacity(projected.len() * self.num_vars);
        for row in projected.rows() {
            for j in 0..self.num_vars {
                out.push(self.mean[j] + (0..k).map(|i| row[i] * self.component(i)[j]).sum::<f64>());
            }
        }
        projected.with_values(out, self.num_vars)
    }
}

/// Mean-centred principal axes of the sample covariance, sorted by
/// descending eigenvalue. Each axis is sign-normalised so its largest-magnitude
/// entry is positive.
pub fn fit_pca(series: &MultivariateSeries, k: usize) -> Result<PcaState> {
    let t = series.num_vars();
    if k == 0 || k > t {
        return Err(Error::invalid(format!("PCA needs 1 ≤ k ≤ {t}, got {k}")));
    }
    let (mean, axes, ratios) = eigen(series)?;
    Ok(PcaState {
        mean,
        components: axes[..k * t].to_vec(),
        variance_ratio: ratios[..k].to_vec(),
        num_vars: t,
    })
}

/// Smallest `k` whose cumulative explained-variance ratio reaches `target`.
pub fn components_for_variance(ratios: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    for (i, r) in ratios.iter().enumerate() {
        acc += r;
        if acc >= target - 1e-12 {
            return i + 1;
        }
    }
    ratios.len().max(1)
}

fn eigen(series: &MultivariateSeries) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let m = series.len();
    let t = series.num_vars();
    if m < 2 {
        return Err(Error::invalid(format!(
            "PCA needs at least 2 rows, got {m}"
        )));
    }
    let mut mean = vec![0.0; t];
    for row in series.rows() {
        for j in 0..t {
            mean[j] += row[j];
        }
    }
    mean.iter_mut().for_each(|v| *v /= m as f64);
    let mut cov = DMatrix::<f64>::zeros(t, t);
    for row in series.rows() {
        for a in 0..t {
            let da = row[a] - mean[a];
            for b in a..t {
                cov[(a, b)] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..t {
        for b in a..t {
            let v = cov[(a, b)] / (m - 1) as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..t).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = values.iter().sum();
    let ratios = values
        .iter()
        .map(|v| if total > 0.0 { v / total } else { 0.0 })
        .collect();
    let mut axes = Vec::with_capacity(t * t);
    for &i in &order {
        let col = eig.eigenvectors.column(i);
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        axes.extend(col.iter().map(|v| sign * v));
    }
    Ok((mean, axes, ratios))
}

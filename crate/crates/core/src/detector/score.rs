//! Per-window losses and their remapping onto timesteps.

use crate::error::{Error, Result};
use crate::gan::EPS;

/// Per-step sum over variables of `|x − x̂|`; both windows are `[steps × dim]`.
pub fn residual(x: &[f64], x_hat: &[f64], dim: usize) -> Result<Vec<f64>> {
    if x.len() != x_hat.len() || dim == 0 || !x.len().is_multiple_of(dim) {
        return Err(Error::shape("residual", x.len(), (x_hat.len(), dim)));
    }
    Ok(x.chunks_exact(dim)
        .zip(x_hat.chunks_exact(dim))
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q).abs()).sum())
        .collect())
}

/// Cross-entropy of a discriminator probability against the "real" label,
/// `−ln D(x)`: high when the discriminator finds the step implausible.
pub fn discrimination_term(prob: f64) -> f64 {
    -prob.clamp(EPS, 1.0 - EPS).ln()
}

/// Min–max range for mapping a score component onto `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreRange {
    pub min: f64,
    pub max: f64,
}

impl ScoreRange {
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("cannot fit a score range on no values"));
        }
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        Ok(ScoreRange { min, max })
    }

    /// `(v − min)/(max − min)`, or 0 for a degenerate range. Values outside
    /// the fitted range map outside `[0, 1]`.
    pub fn apply(&self, v: f64) -> f64 {
        let span = self.max - self.min;
        if span > 0.0 {
            (v - self.min) / span
        } else {
            0.0
        }
    }

    pub fn apply_all(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.apply(v)).collect()
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    Ok(())
}

/// `L = λ·residual + (1 − λ)·discrimination`, both already normalised.
pub fn combined_loss(
    residual_norm: &[f64],
    discrimination_norm: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    if residual_norm.len() != discrimination_norm.len() {
        return Err(Error::shape(
            "combined_loss",
            residual_norm.len(),
            discrimination_norm.len(),
        ));
    }
    Ok(residual_norm
        .iter()
        .zip(discrimination_norm)
        .map(|(&r, &d)| lambda * r + (1.0 - lambda) * d)
        .collect())
}

/// Normalised loss components for `n` windows, each `[n × window]` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowLosses {
    pub window: usize,
    pub residual: Vec<f64>,
    pub discrimination: Vec<f64>,
    pub lambda: f64,
}

impl WindowLosses {
    pub fn num_windows(&self) -> usize {
        self.residual.len() / self.window.max(1)
    }

    pub fn combined(&self) -> Result<Vec<f64>> {
        combined_loss(&self.residual, &self.discrimination, self.lambda)
    }
}

/// Mean of `values[j·window + s]` over all `(j, s)` with `starts[j] + s = t`,
/// and that count, for every `t < len`. Uncovered timesteps get mean 0 and
/// count 0.
pub fn remap(
    values: &[f64],
    starts: &[usize],
    window: usize,
    len: usize,
) -> Result<(Vec<f64>, Vec<usize>)> {
    if window == 0 || values.len() != starts.len() * window {
        return Err(Error::shape(
            "remap values",
            starts.len() * window,
            values.len(),
        ));
    }
    if starts.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::invalid("window starts must be strictly increasing"));
    }
    if let Some(&last) = starts.last() {
        if last + window > len {
            return Err(Error::invalid(format!(
                "window at {last} of length {window} exceeds series length {len}"
            )));
        }
    }
    let mut sum = vec![0.0; len];
    let mut count = vec![0usize; len];
    for (j, &start) in starts.iter().enumerate() {
        for s in 0..window {
            sum[start + s] += values[j * window + s];
            count[start + s] += 1;
        }
    }
    for (v, &c) in sum.iter_mut().zip(&count) {
        if c > 0 {
            *v /= c as f64;
        }
    }
    Ok((sum, count))
}

/// Per-timestep anomaly scores.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreSeries {
    pub drs: Vec<f64>,
    pub coverage: Vec<usize>,
    pub residual_part: Vec<f64>,
    pub discrimination_part: Vec<f64>,
    pub lambda: f64,
}

impl ScoreSeries {
    pub fn len(&self) -> usize {
        self.drs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.drs.is_empty()
    }

    pub fn covered(&self) -> Vec<bool> {
        self.coverage.iter().map(|&c| c > 0).collect()
    }

    /// Scores at covered timesteps only.
    pub fn covered_scores(&self) -> Vec<f64> {
        self.drs
            .iter()
            .zip(&self.coverage)
            .filter(|(_, &c)| c > 0)
            .map(|(&d, _)| d)
            .collect()
    }
}

/// Averages each window's combined loss onto the timesteps it covers:
/// timestep `t` receives the mean of `L[j][s]` over `starts[j] + s = t`.
pub fn drs_remap(losses: &WindowLosses, starts: &[usize], len: usize) -> Result<ScoreSeries> {
    let combined = losses.combined()?;
    let (drs, coverage) = remap(&combined, starts, losses.window, len)?;
    let (residual_part, _) = remap(&losses.residual, starts, losses.window, len)?;
    let (discrimination_part, _) = remap(&losses.discrimination, starts, losses.window, len)?;
    Ok(ScoreSeries {
        drs,
        coverage,
        residual_part,
        discrimination_part,
        lambda: losses.lambda,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelVector {
    pub labels: Vec<u8>,
    pub tau: f64,
    /// `false` where no window covered the timestep; those are labelled 0.
    pub covered: Vec<bool>,
}

impl LabelVector {
    pub fn anomaly_rate(&self) -> f64 {
        let n = self.covered.iter().filter(|&&c| c).count();
        if n == 0 {
            0.0
        } else {
            self.labels.iter().map(|&l| l as usize).sum::<usize>() as f64 / n as f64
        }
    }

    pub fn uncovered(&self) -> Vec<usize> {
        self.covered
            .iter()
            .enumerate()
            .filter(|(_, &c)| !c)
            .map(|(t, _)| t)
            .collect()
    }
}

/// `A_t = 1` iff timestep `t` is covered and `DRS_t > τ`.
pub fn threshold_labels(scores: &ScoreSeries, tau: f64) -> Result<LabelVector> {
    if tau.is_nan() {
        return Err(Error::invalid("threshold is NaN"));
    }
    let covered = scores.covered();
    let labels = scores
        .drs
        .iter()
        .zip(&covered)
        .map(|(&d, &c)| u8::from(c && d > tau))
        .collect();
    Ok(LabelVector {
        labels,
        tau,
        covered,
    })
}

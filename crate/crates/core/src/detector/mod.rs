//! Scoring new data with a trained model.
//!
//! Each test window is inverted into the latent space to get a
//! reconstruction; the per-step reconstruction residual and the
//! discriminator's per-step cross-entropy against "real" are each min–max
//! normalised, mixed with weight `λ`, and averaged back onto timesteps. The
//! resulting score is high where the data is anomalous.

mod invert;
mod score;

pub use invert::{
    inversion_error, invert_window, Inversion, InversionConfig, RestartTrace, Similarity,
};
pub use score::{
    combined_loss, discrimination_term, drs_remap, remap, residual, threshold_labels, LabelVector,
    ScoreRange, ScoreSeries, WindowLosses,
};

use crate::dataset::{make_windows, MultivariateSeries};
use crate::error::{Error, Result};
use crate::gan::GanModel;
use crate::metrics::{quantile_grid, quantile_sorted, sweep_tau, SweepResult};
use crate::numerics::SeededRng;

/// How the labelling threshold is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TauPolicy {
    Fixed(f64),
    /// Quantile of the scores the model produced on its calibration data.
    /// Scores are then normalised with the calibration ranges, so they are
    /// on the same scale as the threshold.
    Quantile(f64),
    /// Threshold maximising F1 against the series' own labels. For
    /// evaluation only.
    BestF1,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectConfig {
    pub lambda: f64,
    pub tau: TauPolicy,
    pub inversion: InversionConfig,
    /// Window `i` is inverted with sub-stream `i + 1` of this seed.
    pub seed: u64,
    /// Number of quantile steps in a best-F1 sweep.
    pub sweep_points: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            lambda: 0.5,
            tau: TauPolicy::Quantile(0.99),
            inversion: InversionConfig::default(),
            seed: 0,
            sweep_points: 1000,
        }
    }
}

/// Score normalisation and threshold table computed on normal data.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub residual_range: ScoreRange,
    pub discrimination_range: ScoreRange,
    pub lambda: f64,
    /// Score quantiles at `0, 0.001, …, 1`.
    pub drs_quantiles: Vec<f64>,
}

impl Calibration {
    pub const QUANTILE_STEPS: usize = 1000;

    pub fn threshold(&self, q: f64) -> f64 {
        quantile_sorted(&self.drs_quantiles, q)
    }
}

/// Raw per-window, per-step score components before normalisation.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowScores {
    pub window: usize,
    pub starts: Vec<usize>,
    pub series_len: usize,
    /// `[n × window]` reconstruction residuals.
    pub residual: Vec<f64>,
    /// `[n × window]` values of `−ln D(x)`.
    pub discrimination: Vec<f64>,
    /// Final inversion error per window.
    pub inversion_error: Vec<f64>,
}

impl WindowScores {
    fn normalise(
        &self,
        residual: ScoreRange,
        discrimination: ScoreRange,
        lambda: f64,
    ) -> Result<ScoreSeries> {
        let losses = WindowLosses {
            window: self.window,
            residual: residual.apply_all(&self.residual),
            discrimination: discrimination.apply_all(&self.discrimination),
            lambda,
        };
        drs_remap(&losses, &self.starts, self.series_len)
    }
}

/// Preprocesses `series` with the model's transforms, windows it, inverts
/// every window and evaluates the discriminator on it.
pub fn score_windows(
    model: &GanModel,
    series: &MultivariateSeries,
    inversion: &InversionConfig,
    seed: u64,
) -> Result<WindowScores> {
    model.validate()?;
    if series.num_vars() != model.preprocessor.input_vars() {
        return Err(Error::shape(
            "test series variable count",
            model.preprocessor.input_vars(),
            series.num_vars(),
        ));
    }
    let processed = model.preprocessor.apply(series)?;
    let windows = make_windows(&processed, model.window, model.step)?;
    let d = windows.dim();
    let probs = model.discriminate(&windows.windows)?;

    let n = windows.len();
    let mut residuals = Vec::with_capacity(n * model.window);
    let mut inversion_error = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = SeededRng::with_stream(seed, i as u64 + 1);
        let inv = invert_window(model, windows.get(i), inversion, &mut rng)?;
        residuals.extend(residual(windows.get(i), &inv.reconstruction, d)?);
        inversion_error.push(inv.error);
    }
    Ok(WindowScores {
        window: model.window,
        starts: windows.starts,
        series_len: series.len(),
        residual: residuals,
        discrimination: probs
            .data()
            .iter()
            .map(|&p| discrimination_term(p))
            .collect(),
        inversion_error,
    })
}

/// Scores normal data and records normalisation ranges plus the score
/// quantile table for [`TauPolicy::Quantile`].
pub fn calibrate(
    model: &GanModel,
    normal: &MultivariateSeries,
    config: &DetectConfig,
) -> Result<Calibration> {
    let raw = score_windows(model, normal, &config.inversion, config.seed)?;
    let residual_range = ScoreRange::fit(&raw.residual)?;
    let discrimination_range = ScoreRange::fit(&raw.discrimination)?;
    let scores = raw.normalise(residual_range, discrimination_range, config.lambda)?;
    let mut sorted = scores.covered_scores();
    sorted.sort_by(f64::total_cmp);
    Ok(Calibration {
        residual_range,
        discrimination_range,
        lambda: config.lambda,
        drs_quantiles: quantile_grid(Calibration::QUANTILE_STEPS)
            .iter()
            .map(|&q| quantile_sorted(&sorted, q))
            .collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub scores: ScoreSeries,
    pub labels: LabelVector,
    pub sweep: Option<SweepResult>,
    pub inversion_error: Vec<f64>,
}

/// Full pipeline: preprocess, window, invert, score, remap, threshold.
pub fn detect(
    model: &GanModel,
    series: &MultivariateSeries,
    config: &DetectConfig,
) -> Result<Detection> {
    if let TauPolicy::Quantile(q) = config.tau {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::invalid(format!(
                "quantile must lie in [0, 1], got {q}"
            )));
        }
    }
    let raw = score_windows(model, series, &config.inversion, config.seed)?;
    let scores = match config.tau {
        TauPolicy::Quantile(_) => {
            let cal = model.calibration.as_ref().ok_or_else(|| {
                Error::invalid(
                    "quantile threshold needs a calibrated model; use a fixed tau or sweep",
                )
            })?;
            if (cal.lambda - config.lambda).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "model was calibrated with lambda {} but detection uses {}",
                    cal.lambda, config.lambda
                )));
            }
            raw.normalise(cal.residual_range, cal.discrimination_range, config.lambda)?
        }
        _ => raw.normalise(
            ScoreRange::fit(&raw.residual)?,
            ScoreRange::fit(&raw.discrimination)?,
            config.lambda,
        )?,
    };
    let (tau, sweep) = match config.tau {
        TauPolicy::Fixed(t) => (t, None),
        TauPolicy::Quantile(q) => (
            model
                .calibration
                .as_ref()
                .expect("checked above")
                .threshold(q),
            None,
        ),
        TauPolicy::BestF1 => {
            let truth = series
                .labels()
                .ok_or_else(|| Error::invalid("best-F1 threshold needs a labelled series"))?;
            let sweep = sweep_tau(
                &scores.drs,
                &scores.covered(),
                truth,
                &quantile_grid(config.sweep_points),
            )?;
            (sweep.best_f1_row().tau, Some(sweep))
        }
    };
    let labels = threshold_labels(&scores, tau)?;
    Ok(Detection {
        scores,
        labels,
        sweep,
        inversion_error: raw.inversion_error,
    })
}

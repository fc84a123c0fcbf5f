//! End-to-end helpers shared by the command line, the browser demo and the
//! integration tests, plus the CSV layouts they emit.

use std::io::Write;

use crate::config::RunConfig;
use crate::dataset::{make_windows, MultivariateSeries, Preprocessor};
use crate::detector::{calibrate, Detection};
use crate::error::Result;
use crate::gan::{train, EpochLog, GanModel};
use crate::numerics::SeededRng;

/// Fits the preprocessing on `train_series`, trains the GAN and calibrates
/// the score threshold table on the same data.
pub fn fit(train_series: &MultivariateSeries, config: &RunConfig) -> Result<GanModel> {
    config.validate()?;
    let pre = Preprocessor::fit(train_series, config.pcs)?;
    let windows = make_windows(&pre.apply(train_series)?, config.window, config.step)?;
    let mut model = train(&windows, pre, &config.train, SeededRng::new(config.seed))?;
    model.calibration = Some(calibrate(&model, train_series, &config.detect)?);
    Ok(model)
}

pub const SCORES_HEADER: &str =
    "timestep,drs,residual_part,discrimination_part,lc,label,ground_truth";

/// One row per timestep. `ground_truth` is empty when `truth` is `None`.
pub fn write_scores(
    det: &Detection,
    truth: Option<&[u8]>,
    mut out: impl Write,
) -> std::io::Result<()> {
    writeln!(out, "{SCORES_HEADER}")?;
    let s = &det.scores;
    for t in 0..s.len() {
        let gt = truth.map(|l| l[t].to_string()).unwrap_or_default();
        writeln!(
            out,
            "{t},{},{},{},{},{},{gt}",
            s.drs[t],
            s.residual_part[t],
            s.discrimination_part[t],
            s.coverage[t],
            det.labels.labels[t]
        )?;
    }
    Ok(())
}

pub const LABELS_HEADER: &str = "timestep,label";

pub fn write_labels(det: &Detection, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{LABELS_HEADER}")?;
    for (t, l) in det.labels.labels.iter().enumerate() {
        writeln!(out, "{t},{l}")?;
    }
    Ok(())
}

pub const TRAINING_LOG_HEADER: &str = "epoch,d_loss,g_loss,mmd";

pub fn write_training_log(log: &[EpochLog], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{TRAINING_LOG_HEADER}")?;
    for e in log {
        writeln!(out, "{},{},{},{}", e.epoch, e.d_loss, e.g_loss, e.mmd)?;
    }
    Ok(())
}

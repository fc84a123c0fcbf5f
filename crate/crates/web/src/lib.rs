//! Browser bindings over the synthetic scenario: baseline scoring, stepwise
//! GAN training with its MMD curve, and detection with adjustable `λ` and
//! threshold. The page in `www/` drives these.

use tsgan::baselines::{knn_detector, pca_detector};
use tsgan::dataset::{make_windows, NormalizationState, PcSelection, Preprocessor, WindowSet};
use tsgan::detector::{
    drs_remap, score_windows, threshold_labels, InversionConfig, ScoreRange, ScoreSeries,
    WindowLosses, WindowScores,
};
use tsgan::gan::{TrainConfig, Trainer, Verdict};
use tsgan::metrics::confusion;
use tsgan::numerics::SeededRng;
use tsgan::synth::{scenario, Scenario};
use wasm_bindgen::prelude::*;

const WINDOW: usize = 30;
const STEP: usize = 10;

fn js(e: tsgan::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    seed: u64,
    data: Scenario,
    pre: Preprocessor,
    windows: WindowSet,
    trainer: Option<Trainer>,
    raw: Option<WindowScores>,
    scores: Option<ScoreSeries>,
}

#[wasm_bindgen]
impl Demo {
    /// Generates the scenario for `seed` and prepares training windows.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u64) -> Result<Demo, JsError> {
        let data = scenario(seed).map_err(js)?;
        let pre = Preprocessor::fit(&data.train, PcSelection::Off).map_err(js)?;
        let windows =
            make_windows(&pre.apply(&data.train).map_err(js)?, WINDOW, STEP).map_err(js)?;
        Ok(Demo {
            seed,
            data,
            pre,
            windows,
            trainer: None,
            raw: None,
            scores: None,
        })
    }

    pub fn variables(&self) -> usize {
        self.data.test.num_vars()
    }

    /// Row-major test values.
    pub fn test_values(&self) -> Vec<f64> {
        self.data.test.values().to_vec()
    }

    pub fn truth(&self) -> Vec<u8> {
        self.data
            .test
            .labels()
            .map(<[u8]>::to_vec)
            .unwrap_or_default()
    }

    /// PCA (`k` components) or KNN (`k` neighbours) scores for the test
    /// series, after min–max scaling fitted on the training series.
    pub fn baseline(&self, method: &str, k: usize) -> Result<Vec<f64>, JsError> {
        let norm = NormalizationState::fit(&self.data.train).map_err(js)?;
        let train = norm.normalize(&self.data.train).map_err(js)?;
        let test = norm.normalize(&self.data.test).map_err(js)?;
        let result = match method {
            "pca" => pca_detector(&train, &test, k),
            "knn" => knn_detector(&train, &test, k),
            other => return Err(JsError::new(&format!("unknown baseline {other:?}"))),
        };
        Ok(result.map_err(js)?.scores)
    }

    /// Starts a fresh training run with small single-layer networks.
    pub fn reset_training(&mut self, hidden: usize, latent_dim: usize) -> Result<(), JsError> {
        let config = TrainConfig {
            gen_hidden: hidden,
            gen_depth: 1,
            disc_hidden: hidden,
            disc_depth: 1,
            latent_dim,
            verdict: Verdict::EveryStep,
            ..TrainConfig::default()
        };
        self.trainer = Some(
            Trainer::new(self.windows.clone(), config, SeededRng::new(self.seed)).map_err(js)?,
        );
        self.raw = None;
        self.scores = None;
        Ok(())
    }

    /// Runs one epoch and returns `[epoch, d_loss, g_loss, mmd]`.
    pub fn train_epoch(&mut self) -> Result<Vec<f64>, JsError> {
        let trainer = self
            .trainer
            .as_mut()
            .ok_or_else(|| JsError::new("call reset_training first"))?;
        let e = trainer.run_epoch().map_err(js)?;
        Ok(vec![e.epoch as f64, e.d_loss, e.g_loss, e.mmd])
    }

    /// MMD after every epoch so far.
    pub fn mmd_curve(&self) -> Vec<f64> {
        self.trainer
            .as_ref()
            .map(|t| t.log().iter().map(|e| e.mmd).collect())
            .unwrap_or_default()
    }

    /// Inverts every test window with the current generator. Scores are
    /// then available through [`Demo::scores`].
    pub fn score(&mut self, iterations: usize, restarts: usize) -> Result<(), JsError> {
        let trainer = self
            .trainer
            .as_ref()
            .ok_or_else(|| JsError::new("train a model first"))?;
        let model = trainer.snapshot(self.pre.clone());
        let inversion = InversionConfig {
            iterations,
            restarts,
            ..InversionConfig::default()
        };
        self.raw = Some(score_windows(&model, &self.data.test, &inversion, self.seed).map_err(js)?);
        self.scores = None;
        Ok(())
    }

    /// Per-timestep anomaly scores mixing the residual with weight `lambda`.
    pub fn scores(&mut self, lambda: f64) -> Result<Vec<f64>, JsError> {
        let raw = self
            .raw
            .as_ref()
            .ok_or_else(|| JsError::new("run score first"))?;
        let losses = WindowLosses {
            window: raw.window,
            residual: ScoreRange::fit(&raw.residual)
                .map_err(js)?
                .apply_all(&raw.residual),
            discrimination: ScoreRange::fit(&raw.discrimination)
                .map_err(js)?
                .apply_all(&raw.discrimination),
            lambda,
        };
        let scores = drs_remap(&losses, &raw.starts, raw.series_len).map_err(js)?;
        let drs = scores.drs.clone();
        self.scores = Some(scores);
        Ok(drs)
    }

    /// `[precision, recall, f1, flagged]` at threshold `tau` on the latest
    /// scores.
    pub fn evaluate(&self, tau: f64) -> Result<Vec<f64>, JsError> {
        let scores = self
            .scores
            .as_ref()
            .ok_or_else(|| JsError::new("compute scores first"))?;
        let labels = threshold_labels(scores, tau).map_err(js)?;
        let c = confusion(&labels.labels, &self.truth(), None).map_err(js)?;
        Ok(vec![
            c.precision().value,
            c.recall().value,
            c.f1().value,
            (c.tp + c.fp) as f64,
        ])
    }
}

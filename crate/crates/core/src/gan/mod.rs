//! Adversarial training of an LSTM generator against an LSTM discriminator.
//!
//! The generator maps one latent vector per timestep to one data vector per
//! timestep through a `tanh` head. The discriminator emits a sigmoid
//! probability at every timestep. By default the losses see only the last
//! one, the verdict on the whole window; [`Verdict::EveryStep`] trains all of
//! them.

mod loss;
mod mmd;
mod train;

pub use loss::{d_loss, g_loss, EPS};
pub use mmd::{median_bandwidth, mmd2, Bandwidth};
pub use train::{train, Trainer};

use crate::dataset::Preprocessor;
use crate::detector::Calibration;
use crate::error::{Error, Result};
use crate::lstm::{HeadActivation, LstmStackParams, SequenceBatch};
use crate::numerics::{sample_latent, AdamConfig, OptimizerConfig, SeededRng};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Discriminator updates per batch.
    pub d_steps: usize,
    /// Generator updates per batch, after the discriminator's.
    pub g_steps: usize,
    pub latent_dim: usize,
    pub gen_hidden: usize,
    pub gen_depth: usize,
    pub disc_hidden: usize,
    pub disc_depth: usize,
    pub g_optimizer: OptimizerConfig,
    pub d_optimizer: OptimizerConfig,
    /// Global L2 norm cap applied to each network's gradient.
    pub clip_norm: f64,
    /// Size of the fixed real/generated samples used for the MMD monitor.
    pub mmd_samples: usize,
    pub verdict: Verdict,
}

/// Which discriminator outputs the adversarial losses average over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// One probability per window, read at its last step.
    LastStep,
    /// Every per-step probability, each labelled like its window.
    EveryStep,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 32,
            d_steps: 1,
            g_steps: 1,
            latent_dim: 15,
            gen_hidden: 100,
            gen_depth: 3,
            disc_hidden: 100,
            disc_depth: 1,
            g_optimizer: OptimizerConfig::Adam(AdamConfig::default()),
            d_optimizer: OptimizerConfig::Sgd { learning_rate: 0.1 },
            clip_norm: 5.0,
            mmd_samples: 64,
            verdict: Verdict::LastStep,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("d_steps", self.d_steps),
            ("g_steps", self.g_steps),
            ("latent_dim", self.latent_dim),
            ("gen_hidden", self.gen_hidden),
            ("gen_depth", self.gen_depth),
            ("disc_hidden", self.disc_hidden),
            ("disc_depth", self.disc_depth),
            ("mmd_samples", self.mmd_samples),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::invalid(format!("{name} must be positive")));
        }
        let lrs = [
            self.g_optimizer.learning_rate(),
            self.d_optimizer.learning_rate(),
            self.clip_norm,
        ];
        if lrs.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid(
                "learning rates and clip_norm must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub d_loss: f64,
    pub g_loss: f64,
    pub mmd: f64,
}

/// Everything needed to score new data.
#[derive(Clone, Debug, PartialEq)]
pub struct GanModel {
    pub generator: LstmStackParams,
    pub discriminator: LstmStackParams,
    pub latent_dim: usize,
    pub window: usize,
    pub step: usize,
    pub preprocessor: Preprocessor,
    pub training_log: Vec<EpochLog>,
    pub calibration: Option<Calibration>,
}

impl GanModel {
    /// Data dimension after preprocessing.
    pub fn data_dim(&self) -> usize {
        self.generator.dims().output_dim
    }

    pub fn validate(&self) -> Result<()> {
        let (g, d) = (self.generator.dims(), self.discriminator.dims());
        if g.input_dim != self.latent_dim {
            return Err(Error::shape(
                "generator input vs latent_dim",
                self.latent_dim,
                g.input_dim,
            ));
        }
        if g.output_dim != d.input_dim || d.output_dim != 1 {
            return Err(Error::shape(
                "generator output vs discriminator input",
                g.output_dim,
                (d.input_dim, d.output_dim),
            ));
        }
        if self.preprocessor.output_dim() != g.output_dim {
            return Err(Error::shape(
                "preprocessor output vs generator output",
                self.preprocessor.output_dim(),
                g.output_dim,
            ));
        }
        if self.window == 0 || self.step == 0 {
            return Err(Error::invalid("window and step must be positive"));
        }
        Ok(())
    }

    /// Generator output for the given latent sequences.
    pub fn generate_from(&self, latent: &SequenceBatch) -> Result<SequenceBatch> {
        self.generator.predict(latent, HeadActivation::Tanh)
    }

    /// Per-timestep discriminator probabilities.
    pub fn discriminate(&self, windows: &SequenceBatch) -> Result<SequenceBatch> {
        self.discriminator.predict(windows, HeadActivation::Sigmoid)
    }
}

/// `count` fresh windows `[count × window × d]` from random latent input.
pub fn generate(model: &GanModel, rng: &mut SeededRng, count: usize) -> Result<SequenceBatch> {
    let z = SequenceBatch::from_tensor(sample_latent(rng, count, model.window, model.latent_dim))?;
    model.generate_from(&z)
}

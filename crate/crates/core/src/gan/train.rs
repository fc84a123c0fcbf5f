use super::loss::{d_loss, d_loss_fake_grad, d_loss_real_grad, g_loss, g_loss_grad};
use super::mmd::{mmd2, Bandwidth};
use super::{EpochLog, GanModel, TrainConfig, Verdict};
use crate::dataset::{Preprocessor, WindowSet};
use crate::error::{Error, Result};
use crate::lstm::{HeadActivation, LstmDims, LstmStackParams, SequenceBatch};
use crate::numerics::{clip_global_norm, sample_latent, Optimizer, SeededRng};

/// Epoch-by-epoch adversarial training over a fixed window set.
pub struct Trainer {
    windows: WindowSet,
    config: TrainConfig,
    rng: SeededRng,
    generator: LstmStackParams,
    discriminator: LstmStackParams,
    g_opt: Optimizer,
    d_opt: Optimizer,
    monitor_real: SequenceBatch,
    monitor_latent: SequenceBatch,
    log: Vec<EpochLog>,
}

/// Per-window discriminator score: the sigmoid output at the last step.
fn window_scores(outputs: &SequenceBatch) -> Vec<f64> {
    let steps = outputs.steps();
    (0..outputs.batch())
        .map(|i| outputs.sample(i)[steps - 1])
        .collect()
}

/// The probabilities a loss sees under `verdict`.
fn verdict_scores(outputs: &SequenceBatch, verdict: Verdict) -> Vec<f64> {
    match verdict {
        Verdict::LastStep => window_scores(outputs),
        Verdict::EveryStep => outputs.data().to_vec(),
    }
}

/// Output gradient for a loss that is a mean over the verdict scores, where
/// `g(p, n)` is the derivative of one term including the `1/n` factor.
fn verdict_grads(
    outputs: &SequenceBatch,
    verdict: Verdict,
    g: impl Fn(f64, usize) -> f64,
) -> SequenceBatch {
    let (b, steps) = (outputs.batch(), outputs.steps());
    let mut grads = SequenceBatch::zeros(b, steps, 1);
    match verdict {
        Verdict::LastStep => {
            for i in 0..b {
                grads.data_mut()[i * steps + steps - 1] = g(outputs.sample(i)[steps - 1], b);
            }
        }
        Verdict::EveryStep => {
            for (d, &p) in grads.data_mut().iter_mut().zip(outputs.data()) {
                *d = g(p, b * steps);
            }
        }
    }
    grads
}

impl Trainer {
    pub fn new(windows: WindowSet, config: TrainConfig, mut rng: SeededRng) -> Result<Self> {
        config.validate()?;
        if windows.is_empty() {
            return Err(Error::invalid("no training windows"));
        }
        let d = windows.dim();
        let generator = LstmStackParams::init(
            &mut rng,
            LstmDims {
                input_dim: config.latent_dim,
                hidden: config.gen_hidden,
                depth: config.gen_depth,
                output_dim: d,
            },
        )?;
        let discriminator = LstmStackParams::init(
            &mut rng,
            LstmDims {
                input_dim: d,
                hidden: config.disc_hidden,
                depth: config.disc_depth,
                output_dim: 1,
            },
        )?;
        let g_opt = config.g_optimizer.build(generator.as_slice().len());
        let d_opt = config.d_optimizer.build(discriminator.as_slice().len());

        // Fixed monitoring sample so the MMD curve is not dominated by
        // resampling noise between epochs.
        let n = config.mmd_samples.min(windows.len()).max(2);
        let mut idx: Vec<usize> = (0..windows.len()).collect();
        rng.shuffle(&mut idx);
        idx.truncate(n);
        idx.sort_unstable();
        let monitor_real = if windows.len() >= 2 {
            windows.select(&idx)
        } else {
            windows.select(&[0, 0])
        };
        let monitor_latent = SequenceBatch::from_tensor(sample_latent(
            &mut rng,
            n,
            windows.window,
            config.latent_dim,
        ))?;

        Ok(Trainer {
            windows,
            config,
            rng,
            generator,
            discriminator,
            g_opt,
            d_opt,
            monitor_real,
            monitor_latent,
            log: Vec::new(),
        })
    }

    pub fn epochs_done(&self) -> usize {
        self.log.len()
    }

    pub fn log(&self) -> &[EpochLog] {
        &self.log
    }

    pub fn generator(&self) -> &LstmStackParams {
        &self.generator
    }

    pub fn discriminator(&self) -> &LstmStackParams {
        &self.discriminator
    }

    /// One pass over all windows in shuffled mini-batches.
    pub fn run_epoch(&mut self) -> Result<EpochLog> {
        let epoch = self.log.len() + 1;
        let mut order: Vec<usize> = (0..self.windows.len()).collect();
        self.rng.shuffle(&mut order);
        let (mut d_sum, mut g_sum, mut batches) = (0.0, 0.0, 0usize);
        for (b, chunk) in order.chunks(self.config.batch_size).enumerate() {
            let real = self.windows.select(chunk);
            let mut dl = 0.0;
            for _ in 0..self.config.d_steps {
                dl = self.discriminator_step(&real)?;
            }
            let mut gl = 0.0;
            for _ in 0..self.config.g_steps {
                gl = self.generator_step(chunk.len())?;
            }
            if !dl.is_finite() || !gl.is_finite() {
                return Err(Error::NonFinite(format!(
                    "training diverged at epoch {epoch}, batch {}: d_loss {dl}, g_loss {gl}",
                    b + 1
                )));
            }
            d_sum += dl;
            g_sum += gl;
            batches += 1;
        }
        let mmd = self.monitor_mmd()?;
        let entry = EpochLog {
            epoch,
            d_loss: d_sum / batches as f64,
            g_loss: g_sum / batches as f64,
            mmd,
        };
        if !entry.mmd.is_finite() {
            return Err(Error::NonFinite(format!("MMD at epoch {epoch}")));
        }
        self.log.push(entry);
        Ok(entry)
    }

    /// MMD² between generated windows (from a fixed latent sample) and the
    /// fixed real monitoring sample.
    pub fn monitor_mmd(&self) -> Result<f64> {
        let fake = self
            .generator
            .predict(&self.monitor_latent, HeadActivation::Tanh)?;
        mmd2(&fake, &self.monitor_real, Bandwidth::Median)
    }

    fn discriminator_step(&mut self, real: &SequenceBatch) -> Result<f64> {
        let z = SequenceBatch::from_tensor(sample_latent(
            &mut self.rng,
            real.batch(),
            real.steps(),
            self.config.latent_dim,
        ))?;
        let fake = self.generator.predict(&z, HeadActivation::Tanh)?;
        let (real_out, real_cache) = self.discriminator.forward(real, HeadActivation::Sigmoid)?;
        let (fake_out, fake_cache) = self.discriminator.forward(&fake, HeadActivation::Sigmoid)?;
        let v = self.config.verdict;
        let loss = d_loss(&verdict_scores(&real_out, v), &verdict_scores(&fake_out, v));

        let (mut grads, _) = self
            .discriminator
            .backward(&real_cache, &verdict_grads(&real_out, v, d_loss_real_grad))?;
        let (fake_grads, _) = self
            .discriminator
            .backward(&fake_cache, &verdict_grads(&fake_out, v, d_loss_fake_grad))?;
        for (g, f) in grads.as_mut_slice().iter_mut().zip(fake_grads.as_slice()) {
            *g += f;
        }
        clip_global_norm(grads.as_mut_slice(), self.config.clip_norm);
        self.d_opt
            .step(self.discriminator.as_mut_slice(), grads.as_slice())?;
        Ok(loss)
    }

    /// Generator update; gradients pass through the discriminator, whose
    /// parameters are only read.
    fn generator_step(&mut self, n: usize) -> Result<f64> {
        let z = SequenceBatch::from_tensor(sample_latent(
            &mut self.rng,
            n,
            self.windows.window,
            self.config.latent_dim,
        ))?;
        let (fake, g_cache) = self.generator.forward(&z, HeadActivation::Tanh)?;
        let (out, d_cache) = self.discriminator.forward(&fake, HeadActivation::Sigmoid)?;
        let v = self.config.verdict;
        let loss = g_loss(&verdict_scores(&out, v));
        let (_, d_fake) = self
            .discriminator
            .backward(&d_cache, &verdict_grads(&out, v, g_loss_grad))?;
        let (mut grads, _) = self.generator.backward(&g_cache, &d_fake)?;
        clip_global_norm(grads.as_mut_slice(), self.config.clip_norm);
        self.g_opt
            .step(self.generator.as_mut_slice(), grads.as_slice())?;
        Ok(loss)
    }

    /// A model from the current parameters; training can continue.
    pub fn snapshot(&self, preprocessor: Preprocessor) -> GanModel {
        GanModel {
            generator: self.generator.clone(),
            discriminator: self.discriminator.clone(),
            latent_dim: self.config.latent_dim,
            window: self.windows.window,
            step: self.windows.step,
            preprocessor,
            training_log: self.log.clone(),
            calibration: None,
        }
    }

    pub fn finish(self, preprocessor: Preprocessor) -> GanModel {
        GanModel {
            generator: self.generator,
            discriminator: self.discriminator,
            latent_dim: self.config.latent_dim,
            window: self.windows.window,
            step: self.windows.step,
            preprocessor,
            training_log: self.log,
            calibration: None,
        }
    }
}

/// Trains for `config.epochs` epochs. `preprocessor` is the transform that
/// produced `windows`; it is stored with the model for detection.
pub fn train(
    windows: &WindowSet,
    preprocessor: Preprocessor,
    config: &TrainConfig,
    rng: SeededRng,
) -> Result<GanModel> {
    if preprocessor.output_dim() != windows.dim() {
        return Err(Error::shape(
            "train: preprocessor output vs window dim",
            preprocessor.output_dim(),
            windows.dim(),
        ));
    }
    let mut trainer = Trainer::new(windows.clone(), config.clone(), rng)?;
    for _ in 0..config.epochs {
        trainer.run_epoch()?;
    }
    Ok(trainer.finish(preprocessor))
}

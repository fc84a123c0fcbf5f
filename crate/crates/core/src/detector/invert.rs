//! Latent inversion: gradient search for the generator input whose output
//! best matches a given window.

use crate::error::{Error, Result};
use crate::gan::GanModel;
use crate::lstm::{HeadActivation, SequenceBatch};
use crate::numerics::SeededRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Similarity {
    /// Cosine similarity of the flattened windows.
    Cosine,
    /// Negative mean squared error.
    NegMse,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InversionConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub restarts: usize,
    pub similarity: Similarity,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            iterations: 50,
            learning_rate: 0.01,
            restarts: 3,
            similarity: Similarity::Cosine,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.restarts == 0 {
            return Err(Error::invalid(
                "inversion iterations and restarts must be at least 1",
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("inversion learning rate must be positive"));
        }
        Ok(())
    }
}

/// Start and end error of one restart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RestartTrace {
    pub initial_error: f64,
    pub final_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Inversion {
    /// `[window × latent_dim]`.
    pub latent: Vec<f64>,
    /// Generator output at `latent`, `[window × d]`.
    pub reconstruction: Vec<f64>,
    pub error: f64,
    /// Initial error of the restart that produced the result.
    pub initial_error: f64,
    pub restarts: Vec<RestartTrace>,
}

/// `1 − Simi(x, y)`.
pub fn inversion_error(x: &[f64], y: &[f64], similarity: Similarity) -> f64 {
    error_and_grad(x, y, similarity, None)
}

/// Error and, if `grad` is given, dError/dy written into it.
fn error_and_grad(x: &[f64], y: &[f64], similarity: Similarity, grad: Option<&mut [f64]>) -> f64 {
    match similarity {
        Similarity::Cosine => {
            let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
            let xx: f64 = x.iter().map(|a| a * a).sum::<f64>();
            let yy: f64 = y.iter().map(|b| b * b).sum::<f64>();
            let (nx, ny) = (xx.sqrt(), yy.sqrt());
            if nx == 0.0 || ny == 0.0 {
                // Cosine is undefined against a zero vector; treat it as orthogonal.
                if let Some(g) = grad {
                    g.fill(0.0);
                }
                return 1.0;
            }
            let cos = xy / (nx * ny);
            if let Some(g) = grad {
                for ((gi, &xi), &yi) in g.iter_mut().zip(x).zip(y) {
                    *gi = -(xi / (nx * ny) - cos * yi / yy);
                }
            }
            1.0 - cos
        }
        Similarity::NegMse => {
            let n = x.len() as f64;
            let mse = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
            if let Some(g) = grad {
                for ((gi, &xi), &yi) in g.iter_mut().zip(x).zip(y) {
                    *gi = 2.0 * (yi - xi) / n;
                }
            }
            1.0 + mse
        }
    }
}

struct Eval {
    error: f64,
    reconstruction: Vec<f64>,
    grad: Vec<f64>,
}

fn evaluate(model: &GanModel, x: &[f64], z: &[f64], similarity: Similarity) -> Result<Eval> {
    let (w, k, d) = (model.window, model.latent_dim, model.data_dim());
    let zb = SequenceBatch::new(1, w, k, z.to_vec())?;
    let (y, cache) = model.generator.forward(&zb, HeadActivation::Tanh)?;
    let mut dy = SequenceBatch::zeros(1, w, d);
    let error = error_and_grad(x, y.data(), similarity, Some(dy.data_mut()));
    let (_, dz) = model.generator.backward(&cache, &dy)?;
    Ok(Eval {
        error,
        reconstruction: y.data().to_vec(),
        grad: dz.data().to_vec(),
    })
}

/// Step halvings tried before an iteration gives up on finding descent.
const MAX_HALVINGS: usize = 30;
/// Step growth after an accepted step.
const STEP_GROWTH: f64 = 1.5;

/// Minimises `1 − Simi(x, G(z))` over `z` from `config.restarts` random
/// starts and returns the best result. A step is accepted only if it does
/// not increase the error (halving otherwise), so every restart ends at or
/// below its starting error.
pub fn invert_window(
    model: &GanModel,
    x: &[f64],
    config: &InversionConfig,
    rng: &mut SeededRng,
) -> Result<Inversion> {
    config.validate()?;
    let (w, k, d) = (model.window, model.latent_dim, model.data_dim());
    if x.len() != w * d {
        return Err(Error::shape("invert_window", w * d, x.len()));
    }
    let mut best: Option<Inversion> = None;
    let mut traces = Vec::with_capacity(config.restarts);
    for _ in 0..config.restarts {
        let mut z = vec![0.0; w * k];
        rng.fill_normal(&mut z);
        let mut cur = evaluate(model, x, &z, config.similarity)?;
        if !cur.error.is_finite() {
            continue;
        }
        let initial_error = cur.error;
        let mut step = config.learning_rate;
        let mut diverged = false;
        'descent: for _ in 0..config.iterations {
            let mut candidate = vec![0.0; z.len()];
            for _ in 0..MAX_HALVINGS {
                for ((c, zi), gi) in candidate.iter_mut().zip(&z).zip(&cur.grad) {
                    *c = zi - step * gi;
                }
                let next = evaluate(model, x, &candidate, config.similarity)?;
                if !next.error.is_finite() {
                    diverged = true;
                    break 'descent;
                }
                if next.error <= cur.error {
                    z.copy_from_slice(&candidate);
                    cur = next;
                    step *= STEP_GROWTH;
                    continue 'descent;
                }
                step *= 0.5;
            }
            // No descent direction at any tried step: converged.
            break;
        }
        if diverged {
            continue;
        }
        traces.push(RestartTrace {
            initial_error,
            final_error: cur.error,
        });
        if best.as_ref().is_none_or(|b| cur.error < b.error) {
            best = Some(Inversion {
                latent: z,
                reconstruction: cur.reconstruction,
                error: cur.error,
                initial_error,
                restarts: Vec::new(),
            });
        }
    }
    let mut best = best.ok_or_else(|| {
        Error::NonFinite("every inversion restart produced a non-finite error".into())
    })?;
    best.restarts = traces;
    Ok(best)
}

//! First-order optimizers over flat parameter vectors.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
}

impl AdamState {
    pub fn new(config: AdamConfig, num_params: usize) -> Self {
        AdamState {
            config,
            step: 0,
            first_moment: vec![0.0; num_params],
            second_moment: vec![0.0; num_params],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

fn check(params: &[f64], grads: &[f64], context: &'static str) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::shape(context, params.len(), grads.len()));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!(
            "{context}: gradient entry {i} is {}",
            grads[i]
        )));
    }
    Ok(())
}

/// One bias-corrected Adam update. A non-finite gradient is reported and the
/// step is skipped, leaving both parameters and moments untouched.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<()> {
    check(params, grads, "adam_step")?;
    if state.first_moment.len() != params.len() {
        return Err(Error::shape(
            "adam_step state",
            state.first_moment.len(),
            params.len(),
        ));
    }
    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(&mut state.first_moment)
        .zip(&mut state.second_moment)
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
    }
    Ok(())
}

/// Plain gradient descent: `p ← p − lr·g`.
pub fn sgd_step(params: &mut [f64], grads: &[f64], learning_rate: f64) -> Result<()> {
    check(params, grads, "sgd_step")?;
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= learning_rate * g;
    }
    Ok(())
}

/// Rescales `grads` in place so their L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= scale);
    }
    norm
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OptimizerConfig {
    Sgd { learning_rate: f64 },
    Adam(AdamConfig),
}

impl OptimizerConfig {
    pub fn learning_rate(&self) -> f64 {
        match self {
            OptimizerConfig::Sgd { learning_rate } => *learning_rate,
            OptimizerConfig::Adam(c) => c.learning_rate,
        }
    }

    pub fn build(self, num_params: usize) -> Optimizer {
        match self {
            OptimizerConfig::Sgd { learning_rate } => Optimizer::Sgd { learning_rate },
            OptimizerConfig::Adam(c) => Optimizer::Adam(AdamState::new(c, num_params)),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Optimizer {
    Sgd { learning_rate: f64 },
    Adam(AdamState),
}

impl Optimizer {
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        match self {
            Optimizer::Sgd { learning_rate } => sgd_step(params, grads, *learning_rate),
            Optimizer::Adam(state) => adam_step(params, grads, state),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_zero_gradient_is_noop() {
        let mut p = vec![1.0, -2.0, 3.5];
        let mut s = AdamState::new(AdamConfig::default(), 3);
        adam_step(&mut p, &[0.0; 3], &mut s).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.5]);
        assert_eq!(s.step_count(), 1);
    }

    #[test]
    fn adam_first_step_matches_hand_formula() {
        // m = 0.1, v = 0.001; m̂ = 1, v̂ = 1; Δ = 0.1 · 1 / (1 + 1e-8).
        let expected = 1.0 - 0.1 / (1.0 + 1e-8);
        let mut p = vec![1.0];
        let mut s = AdamState::new(
            AdamConfig {
                learning_rate: 0.1,
                ..Default::default()
            },
            1,
        );
        adam_step(&mut p, &[1.0], &mut s).unwrap();
        assert!((p[0] - expected).abs() < 1e-15);
        assert!((p[0] - 0.9).abs() < 1e-6);
    }

    #[test]
    fn adam_minimizes_square() {
        let mut x = vec![5.0];
        let mut s = AdamState::new(
            AdamConfig {
                learning_rate: 0.05,
                ..Default::default()
            },
            1,
        );
        for _ in 0..500 {
            let g = [2.0 * x[0]];
            adam_step(&mut x, &g, &mut s).unwrap();
        }
        assert!(x[0].abs() < 0.1, "x = {}", x[0]);
    }

    #[test]
    fn adam_rejects_non_finite_and_skips() {
        let mut p = vec![1.0, 1.0];
        let mut s = AdamState::new(AdamConfig::default(), 2);
        assert!(matches!(
            adam_step(&mut p, &[f64::NAN, 1.0], &mut s),
            Err(Error::NonFinite(_))
        ));
        assert_eq!(p, vec![1.0, 1.0]);
        assert_eq!(s.step_count(), 0);
        assert!(adam_step(&mut p, &[1.0], &mut s).is_err());
    }

    #[test]
    fn sgd_examples() {
        let mut p = vec![1.0];
        sgd_step(&mut p, &[2.0], 0.1).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15);
        sgd_step(&mut p, &[0.0], 0.1).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15);
        sgd_step(&mut p, &[2.0], 0.1).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-12);
        assert!(sgd_step(&mut p, &[1.0, 2.0], 0.1).is_err());
    }

    #[test]
    fn both_optimizers_strictly_decrease_square() {
        // Adam moves ~lr per step, so stay well clear of the minimum.
        for &x0 in &[-7.0, -0.3, 0.05, 2.0, 40.0] {
            let mut sgd = vec![x0];
            let mut adam = vec![x0];
            let mut s = AdamState::new(
                AdamConfig {
                    learning_rate: 1e-3,
                    ..Default::default()
                },
                1,
            );
            for _ in 0..20 {
                let (fs, fa) = (sgd[0] * sgd[0], adam[0] * adam[0]);
                let gs = [2.0 * sgd[0]];
                sgd_step(&mut sgd, &gs, 0.01).unwrap();
                let g = [2.0 * adam[0]];
                adam_step(&mut adam, &g, &mut s).unwrap();
                assert!(sgd[0] * sgd[0] < fs);
                assert!(adam[0] * adam[0] < fa);
            }
        }
    }

    #[test]
    fn clipping() {
        let mut g = vec![3.0, 4.0];
        assert_eq!(clip_global_norm(&mut g, 1.0), 5.0);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
        let mut h = vec![0.3, 0.4];
        clip_global_norm(&mut h, 1.0);
        assert_eq!(h, vec![0.3, 0.4]);
    }
}

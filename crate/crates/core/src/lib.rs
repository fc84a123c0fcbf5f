//! Multivariate time-series anomaly detection with an LSTM generative
//! adversarial network.
//!
//! Training ([`gan`]) fits a generator and a discriminator to sliding windows
//! of normal data. Detection ([`detector`]) inverts each test window into
//! the generator's latent space, mixes the reconstruction residual with the
//! discriminator's verdict, and maps the result back onto timesteps as an
//! anomaly score. [`pipeline::fit`] and [`detector::detect`] wrap the whole
//! flow; [`synth`] produces labelled data to try it on.
//!
//! ```no_run
//! use tsgan::{config::RunConfig, detector::detect, pipeline::fit, synth::scenario};
//!
//! let data = scenario(7)?;
//! let config = RunConfig::default();
//! let model = fit(&data.train, &config)?;
//! let found = detect(&model, &data.test, &config.detect)?;
//! println!("anomaly rate {:.3}", found.labels.anomaly_rate());
//! # Ok::<(), tsgan::Error>(())
//! ```

pub mod baselines;
pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod detector;
pub mod error;
pub mod gan;
pub mod lstm;
pub mod metrics;
pub mod numerics;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};

//! Flat `key = value` run configuration covering every tunable.
//!
//! ```text
//! # comments start with '#'
//! window = 30
//! tau = quantile:0.99
//! ```
//!
//! Keys that are absent keep their defaults; unknown or repeated keys are
//! errors. [`RunConfig::to_text`] writes every key and parses back to an
//! identical configuration.

use crate::dataset::PcSelection;
use crate::detector::{DetectConfig, Similarity, TauPolicy};
use crate::error::{Error, Result};
use crate::gan::{TrainConfig, Verdict};
use crate::numerics::{AdamConfig, OptimizerConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub window: usize,
    pub step: usize,
    pub pcs: PcSelection,
    pub train: TrainConfig,
    pub detect: DetectConfig,
    /// Seeds training; detection uses it too.
    pub seed: u64,
    /// CSV column holding 0/1 labels, if present.
    pub label_column: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            window: 30,
            step: 10,
            pcs: PcSelection::Variance(0.995),
            train: TrainConfig::default(),
            detect: DetectConfig::default(),
            seed: 0,
            label_column: "label".into(),
        }
    }
}

/// Every accepted key with a one-line description, in [`RunConfig::to_text`] order.
pub const KEYS: &[(&str, &str)] = &[
    ("window", "sliding window length"),
    ("step", "sliding window shift"),
    (
        "pcs",
        "principal components: off, a count, or variance:<fraction>",
    ),
    ("latent_dim", "latent vector size per timestep"),
    ("gen_hidden", "generator LSTM units per layer"),
    ("gen_depth", "generator LSTM layers"),
    ("disc_hidden", "discriminator LSTM units per layer"),
    ("disc_depth", "discriminator LSTM layers"),
    ("epochs", "training epochs"),
    ("batch_size", "windows per mini-batch"),
    ("d_steps", "discriminator updates per mini-batch"),
    ("g_steps", "generator updates per mini-batch"),
    ("g_optimizer", "adam or sgd"),
    ("g_learning_rate", "generator learning rate"),
    ("d_optimizer", "adam or sgd"),
    ("d_learning_rate", "discriminator learning rate"),
    ("clip_norm", "global gradient norm cap"),
    ("mmd_samples", "windows in the MMD monitoring sample"),
    (
        "verdict",
        "discriminator outputs seen by the losses: last or every",
    ),
    (
        "lambda",
        "weight of the residual term in the combined score",
    ),
    ("tau", "threshold: quantile:<q>, fixed:<value> or best_f1"),
    (
        "inversion_iterations",
        "gradient steps per inversion restart",
    ),
    ("inversion_learning_rate", "initial inversion step size"),
    ("inversion_restarts", "random restarts per window"),
    ("similarity", "inversion similarity: cosine or neg_mse"),
    ("sweep_points", "quantile steps in a threshold sweep"),
    ("seed", "random seed"),
    ("label_column", "name of the CSV label column"),
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("{key}: cannot parse {value:?}"))
}

fn optimizer(kind: &str, learning_rate: f64) -> std::result::Result<OptimizerConfig, String> {
    match kind {
        "adam" => Ok(OptimizerConfig::Adam(AdamConfig {
            learning_rate,
            ..AdamConfig::default()
        })),
        "sgd" => Ok(OptimizerConfig::Sgd { learning_rate }),
        other => Err(format!("unknown optimizer {other:?}; expected adam or sgd")),
    }
}

fn with_learning_rate(opt: OptimizerConfig, learning_rate: f64) -> OptimizerConfig {
    match opt {
        OptimizerConfig::Adam(a) => OptimizerConfig::Adam(AdamConfig { learning_rate, ..a }),
        OptimizerConfig::Sgd { .. } => OptimizerConfig::Sgd { learning_rate },
    }
}

fn optimizer_name(opt: &OptimizerConfig) -> &'static str {
    match opt {
        OptimizerConfig::Adam(_) => "adam",
        OptimizerConfig::Sgd { .. } => "sgd",
    }
}

pub fn parse_pcs(value: &str) -> std::result::Result<PcSelection, String> {
    if value == "off" {
        return Ok(PcSelection::Off);
    }
    if let Some(f) = value.strip_prefix("variance:") {
        return Ok(PcSelection::Variance(parse_num("pcs", f)?));
    }
    Ok(PcSelection::Count(parse_num("pcs", value)?))
}

pub fn format_pcs(pcs: PcSelection) -> String {
    match pcs {
        PcSelection::Off => "off".into(),
        PcSelection::Count(k) => k.to_string(),
        PcSelection::Variance(f) => format!("variance:{f}"),
    }
}

pub fn parse_tau(value: &str) -> std::result::Result<TauPolicy, String> {
    if value == "best_f1" {
        return Ok(TauPolicy::BestF1);
    }
    if let Some(q) = value.strip_prefix("quantile:") {
        return Ok(TauPolicy::Quantile(parse_num("tau", q)?));
    }
    if let Some(t) = value.strip_prefix("fixed:") {
        return Ok(TauPolicy::Fixed(parse_num("tau", t)?));
    }
    Err(format!(
        "tau: expected quantile:<q>, fixed:<value> or best_f1, got {value:?}"
    ))
}

pub fn format_tau(tau: TauPolicy) -> String {
    match tau {
        TauPolicy::Quantile(q) => format!("quantile:{q}"),
        TauPolicy::Fixed(t) => format!("fixed:{t}"),
        TauPolicy::BestF1 => "best_f1".into(),
    }
}

impl RunConfig {
    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let t = &mut self.train;
        let d = &mut self.detect;
        match key {
            "window" => self.window = parse_num(key, value)?,
            "step" => self.step = parse_num(key, value)?,
            "pcs" => self.pcs = parse_pcs(value)?,
            "latent_dim" => t.latent_dim = parse_num(key, value)?,
            "gen_hidden" => t.gen_hidden = parse_num(key, value)?,
            "gen_depth" => t.gen_depth = parse_num(key, value)?,
            "disc_hidden" => t.disc_hidden = parse_num(key, value)?,
            "disc_depth" => t.disc_depth = parse_num(key, value)?,
            "epochs" => t.epochs = parse_num(key, value)?,
            "batch_size" => t.batch_size = parse_num(key, value)?,
            "d_steps" => t.d_steps = parse_num(key, value)?,
            "g_steps" => t.g_steps = parse_num(key, value)?,
            "g_optimizer" => t.g_optimizer = optimizer(value, t.g_optimizer.learning_rate())?,
            "g_learning_rate" => {
                t.g_optimizer = with_learning_rate(t.g_optimizer, parse_num(key, value)?)
            }
            "d_optimizer" => t.d_optimizer = optimizer(value, t.d_optimizer.learning_rate())?,
            "d_learning_rate" => {
                t.d_optimizer = with_learning_rate(t.d_optimizer, parse_num(key, value)?)
            }
            "clip_norm" => t.clip_norm = parse_num(key, value)?,
            "mmd_samples" => t.mmd_samples = parse_num(key, value)?,
            "verdict" => {
                t.verdict = match value {
                    "last" => Verdict::LastStep,
                    "every" => Verdict::EveryStep,
                    other => return Err(format!("verdict: expected last or every, got {other:?}")),
                }
            }
            "lambda" => d.lambda = parse_num(key, value)?,
            "tau" => d.tau = parse_tau(value)?,
            "inversion_iterations" => d.inversion.iterations = parse_num(key, value)?,
            "inversion_learning_rate" => d.inversion.learning_rate = parse_num(key, value)?,
            "inversion_restarts" => d.inversion.restarts = parse_num(key, value)?,
            "similarity" => {
                d.inversion.similarity = match value {
                    "cosine" => Similarity::Cosine,
                    "neg_mse" => Similarity::NegMse,
                    other => {
                        return Err(format!(
                            "similarity: expected cosine or neg_mse, got {other:?}"
                        ))
                    }
                }
            }
            "sweep_points" => d.sweep_points = parse_num(key, value)?,
            "seed" => {
                self.seed = parse_num(key, value)?;
                d.seed = self.seed;
            }
            "label_column" => self.label_column = value.to_string(),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Current value of `key` in the form [`RunConfig::set`] accepts.
    pub fn get(&self, key: &str) -> Option<String> {
        let (t, d) = (&self.train, &self.detect);
        Some(match key {
            "window" => self.window.to_string(),
            "step" => self.step.to_string(),
            "pcs" => format_pcs(self.pcs),
            "latent_dim" => t.latent_dim.to_string(),
            "gen_hidden" => t.gen_hidden.to_string(),
            "gen_depth" => t.gen_depth.to_string(),
            "disc_hidden" => t.disc_hidden.to_string(),
            "disc_depth" => t.disc_depth.to_string(),
            "epochs" => t.epochs.to_string(),
            "batch_size" => t.batch_size.to_string(),
            "d_steps" => t.d_steps.to_string(),
            "g_steps" => t.g_steps.to_string(),
            "g_optimizer" => optimizer_name(&t.g_optimizer).into(),
            "g_learning_rate" => t.g_optimizer.learning_rate().to_string(),
            "d_optimizer" => optimizer_name(&t.d_optimizer).into(),
            "d_learning_rate" => t.d_optimizer.learning_rate().to_string(),
            "clip_norm" => t.clip_norm.to_string(),
            "mmd_samples" => t.mmd_samples.to_string(),
            "verdict" => match t.verdict {
                Verdict::LastStep => "last".into(),
                Verdict::EveryStep => "every".into(),
            },
            "lambda" => d.lambda.to_string(),
            "tau" => format_tau(d.tau),
            "inversion_iterations" => d.inversion.iterations.to_string(),
            "inversion_learning_rate" => d.inversion.learning_rate.to_string(),
            "inversion_restarts" => d.inversion.restarts.to_string(),
            "similarity" => match d.inversion.similarity {
                Similarity::Cosine => "cosine".into(),
                Similarity::NegMse => "neg_mse".into(),
            },
            "sweep_points" => d.sweep_points.to_string(),
            "seed" => self.seed.to_string(),
            "label_column" => self.label_column.clone(),
            _ => return None,
        })
    }

    /// Parses configuration text on top of the defaults and validates it.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        let mut seen: Vec<(String, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config {
                line: Some(line_no),
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some((_, first)) = seen.iter().find(|(k, _)| k == key) {
                return Err(err(format!("{key} already set on line {first}")));
            }
            config.set(key, value).map_err(err)?;
            seen.push((key.to_string(), line_no));
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Every key with its current value, one per line.
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .map(|(k, _)| format!("{k} = {}\n", self.get(k).expect("listed key")))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| Error::Config {
            line: None,
            message,
        };
        if self.window == 0 || self.step == 0 {
            return Err(bad("window and step must be positive".into()));
        }
        match self.pcs {
            PcSelection::Count(0) => return Err(bad("pcs count must be positive".into())),
            PcSelection::Variance(f) if !(f > 0.0 && f <= 1.0) => {
                return Err(bad(format!(
                    "pcs variance target must lie in (0, 1], got {f}"
                )))
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.detect.lambda) {
            return Err(bad(format!(
                "lambda must lie in [0, 1], got {}",
                self.detect.lambda
            )));
        }
        if let TauPolicy::Quantile(q) = self.detect.tau {
            if !(0.0..=1.0).contains(&q) {
                return Err(bad(format!("tau quantile must lie in [0, 1], got {q}")));
            }
        }
        if self.detect.sweep_points == 0 {
            return Err(bad("sweep_points must be positive".into()));
        }
        self.train.validate().map_err(|e| bad(e.to_string()))?;
        self.detect
            .inversion
            .validate()
            .map_err(|e| bad(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = RunConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!((c.window, c.step, c.train.latent_dim), (30, 10, 15));
        assert_eq!((c.train.gen_depth, c.train.gen_hidden), (3, 100));
        assert_eq!(
            (c.train.disc_depth, c.train.disc_hidden, c.train.epochs),
            (1, 100, 100)
        );
    }

    #[test]
    fn keys_override_defaults() {
        let c = RunConfig::parse(
            "window = 60\ntau = fixed:0.3  # inline comment\npcs = 5\nd_optimizer = adam\nseed = 9",
        )
        .unwrap();
        assert_eq!(c.window, 60);
        assert_eq!(c.detect.tau, TauPolicy::Fixed(0.3));
        assert_eq!(c.pcs, PcSelection::Count(5));
        assert!(matches!(c.train.d_optimizer, OptimizerConfig::Adam(a) if a.learning_rate == 0.1));
        assert_eq!((c.seed, c.detect.seed), (9, 9));
        assert_eq!(c.step, 10);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = RunConfig::parse("window = 30\n\nbogus = 1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: Some(3), .. }), "{e}");
        let e = RunConfig::parse("window = x").unwrap_err();
        assert!(matches!(e, Error::Config { line: Some(1), .. }));
        let e = RunConfig::parse("epochs = 2\nepochs = 3").unwrap_err();
        assert!(matches!(e, Error::Config { line: Some(2), .. }));
        assert!(RunConfig::parse("no equals sign").is_err());
        assert!(RunConfig::parse("lambda = 1.5").is_err());
        assert!(RunConfig::parse("epochs = 0").is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::default();
        c.set("tau", "best_f1").unwrap();
        c.set("g_learning_rate", "0.000123456789").unwrap();
        c.set("pcs", "variance:0.9").unwrap();
        c.set("similarity", "neg_mse").unwrap();
        c.set("verdict", "every").unwrap();
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
        assert_eq!(
            RunConfig::parse(&RunConfig::default().to_text()).unwrap(),
            RunConfig::default()
        );
        assert_eq!(KEYS.len(), c.to_text().lines().count());
    }
}

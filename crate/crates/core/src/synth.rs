//! Labelled synthetic sensor data: coupled sinusoids plus noise, with
//! injectable spike, stuck-at and drift attacks.

use std::f64::consts::TAU;

use crate::dataset::MultivariateSeries;
use crate::error::{Error, Result};
use crate::numerics::SeededRng;

/// `amplitude · sin(2π t / period + phase)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sinusoid {
    pub period: f64,
    pub phase: f64,
    pub amplitude: f64,
}

impl Sinusoid {
    pub fn at(&self, t: f64) -> f64 {
        self.amplitude * (TAU * t / self.period + self.phase).sin()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub length: usize,
    /// One base signal per variable.
    pub bases: Vec<Sinusoid>,
    /// `[T × T]` row-major; variable `i` is `Σ_j coupling[i][j] · base_j`.
    pub coupling: Vec<f64>,
    pub noise_std: f64,
    pub seed: u64,
    pub attacks: Vec<AttackSpec>,
}

impl SynthConfig {
    /// Uncoupled variables (identity coupling), no attacks.
    pub fn independent(length: usize, bases: Vec<Sinusoid>, noise_std: f64, seed: u64) -> Self {
        let n = bases.len();
        let mut coupling = vec![0.0; n * n];
        for i in 0..n {
            coupling[i * n + i] = 1.0;
        }
        SynthConfig {
            length,
            bases,
            coupling,
            noise_std,
            seed,
            attacks: Vec::new(),
        }
    }

    pub fn num_variables(&self) -> usize {
        self.bases.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_variables();
        if self.length == 0 || n == 0 {
            return Err(Error::invalid(
                "synthetic series needs at least one step and one variable",
            ));
        }
        if self.coupling.len() != n * n {
            return Err(Error::shape("coupling matrix", n * n, self.coupling.len()));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::invalid("noise std must be finite and non-negative"));
        }
        if self.bases.iter().any(|b| {
            b.period.is_nan() || b.period <= 0.0 || !b.amplitude.is_finite() || !b.phase.is_finite()
        }) {
            return Err(Error::invalid("sinusoid periods must be positive"));
        }
        Ok(())
    }

    /// Clean series from `seed`, then the configured attacks.
    pub fn generate(&self) -> Result<MultivariateSeries> {
        let clean = generate_normal(self, &mut SeededRng::new(self.seed))?;
        inject_attacks(&clean, &self.attacks)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttackKind {
    /// Adds the magnitude at every step of the interval.
    Spike,
    /// Holds the value seen at the first step of the interval.
    Stuck,
    /// Adds a linear ramp reaching the magnitude at the last step.
    Drift,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub variable: usize,
    pub start: usize,
    pub duration: usize,
    /// `None` means three times the clean standard deviation of the target
    /// variable.
    pub magnitude: Option<f64>,
}

impl AttackSpec {
    pub fn end(&self) -> usize {
        self.start + self.duration
    }
}

/// Multiple of the clean standard deviation used when an attack has no
/// explicit magnitude.
pub const DEFAULT_MAGNITUDE_SIGMAS: f64 = 3.0;

/// `x_t = coupling · base(t) + noise`, all labels 0.
pub fn generate_normal(config: &SynthConfig, rng: &mut SeededRng) -> Result<MultivariateSeries> {
    config.validate()?;
    let n = config.num_variables();
    let mut values = Vec::with_capacity(config.length * n);
    let mut base = vec![0.0; n];
    for t in 0..config.length {
        for (b, s) in base.iter_mut().zip(&config.bases) {
            *b = s.at(t as f64);
        }
        for i in 0..n {
            let row = &config.coupling[i * n..(i + 1) * n];
            let mixed: f64 = row.iter().zip(&base).map(|(c, b)| c * b).sum();
            values.push(mixed + config.noise_std * rng.normal());
        }
    }
    MultivariateSeries::from_values(values, n)?.with_labels(Some(vec![0; config.length]))
}

fn std_dev(xs: &[f64]) -> f64 {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Applies `attacks` to a copy of `series` and labels the attacked steps.
/// Existing labels are kept. Attacks on the same variable may not overlap.
pub fn inject_attacks(
    series: &MultivariateSeries,
    attacks: &[AttackSpec],
) -> Result<MultivariateSeries> {
    let (len, n) = (series.len(), series.num_vars());
    for (i, a) in attacks.iter().enumerate() {
        if a.variable >= n {
            return Err(Error::invalid(format!(
                "attack {i} targets variable {} of {n}",
                a.variable
            )));
        }
        if a.duration == 0 || a.end() > len {
            return Err(Error::invalid(format!(
                "attack {i} interval [{}, {}) is empty or past the series end {len}",
                a.start,
                a.end()
            )));
        }
        if let Some(m) = a.magnitude {
            if !m.is_finite() {
                return Err(Error::invalid(format!(
                    "attack {i} magnitude is not finite"
                )));
            }
        }
        for (j, b) in attacks[..i].iter().enumerate() {
            if a.variable == b.variable && a.start < b.end() && b.start < a.end() {
                return Err(Error::invalid(format!(
                    "attacks {j} and {i} overlap on variable {}",
                    a.variable
                )));
            }
        }
    }

    let mut values = series.values().to_vec();
    let mut labels = series.labels().map_or_else(|| vec![0; len], <[u8]>::to_vec);
    for a in attacks {
        let magnitude = a
            .magnitude
            .unwrap_or_else(|| DEFAULT_MAGNITUDE_SIGMAS * std_dev(&series.column(a.variable)));
        let held = values[a.start * n + a.variable];
        for k in 0..a.duration {
            let v = &mut values[(a.start + k) * n + a.variable];
            match a.kind {
                AttackKind::Spike => *v += magnitude,
                AttackKind::Stuck => *v = held,
                AttackKind::Drift => *v += magnitude * (k + 1) as f64 / a.duration as f64,
            }
        }
        labels[a.start..a.end()].fill(1);
    }
    MultivariateSeries::new(values, n, Some(labels), series.variable_names().to_vec())
}

/// Train/test pair for end-to-end checks: two coupled sinusoids with
/// incommensurate periods, a clean training segment and a test segment
/// carrying two spikes, two stuck-at intervals and one drift at the default
/// magnitude.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub train: MultivariateSeries,
    pub test: MultivariateSeries,
    pub attacks: Vec<AttackSpec>,
}

pub const SCENARIO_TRAIN_LEN: usize = 2000;
pub const SCENARIO_TEST_LEN: usize = 1000;

pub fn scenario_config(seed: u64) -> SynthConfig {
    SynthConfig {
        length: SCENARIO_TRAIN_LEN + SCENARIO_TEST_LEN,
        bases: vec![
            Sinusoid {
                period: 50.0,
                phase: 0.0,
                amplitude: 1.0,
            },
            Sinusoid {
                period: 50.0 * std::f64::consts::SQRT_2,
                phase: 1.0,
                amplitude: 1.0,
            },
        ],
        coupling: vec![1.0, 0.0, 0.6, 0.8],
        noise_std: 0.05,
        seed,
        attacks: Vec::new(),
    }
}

pub fn scenario_attacks() -> Vec<AttackSpec> {
    let at = |kind, variable, start, duration| AttackSpec {
        kind,
        variable,
        start,
        duration,
        magnitude: None,
    };
    vec![
        at(AttackKind::Spike, 0, 100, 30),
        at(AttackKind::Stuck, 1, 250, 60),
        at(AttackKind::Drift, 0, 420, 80),
        at(AttackKind::Spike, 1, 600, 30),
        at(AttackKind::Stuck, 0, 780, 60),
    ]
}

/// Builds the scenario. The test segment continues the training segment in
/// time; attack magnitudes come from the clean test segment's statistics.
pub fn scenario(seed: u64) -> Result<Scenario> {
    let config = scenario_config(seed);
    let full = generate_normal(&config, &mut SeededRng::new(seed))?;
    let train = full.slice(0, SCENARIO_TRAIN_LEN)?;
    let clean_test = full.slice(SCENARIO_TRAIN_LEN, config.length)?;
    let attacks = scenario_attacks();
    let test = inject_attacks(&clean_test, &attacks)?;
    Ok(Scenario {
        train,
        test,
        attacks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_var(noise: f64) -> SynthConfig {
        SynthConfig::independent(
            200,
            vec![
                Sinusoid {
                    period: 20.0,
                    phase: 0.3,
                    amplitude: 2.0,
                },
                Sinusoid {
                    period: 33.0,
                    phase: 0.0,
                    amplitude: 1.0,
                },
            ],
            noise,
            4,
        )
    }

    #[test]
    fn noiseless_identity_gives_exact_sinusoids() {
        let c = two_var(0.0);
        let s = c.generate().unwrap();
        for t in 0..c.length {
            assert_eq!(s.row(t)[0], 2.0 * (TAU * t as f64 / 20.0 + 0.3).sin());
            assert_eq!(s.row(t)[1], (TAU * t as f64 / 33.0).sin());
        }
        assert!(s.labels().unwrap().iter().all(|&l| l == 0));
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let c = two_var(0.1);
        assert_eq!(c.generate().unwrap(), c.generate().unwrap());
        let mut other = c.clone();
        other.seed = 5;
        assert_ne!(c.generate().unwrap(), other.generate().unwrap());
    }

    #[test]
    fn coupled_variable_is_exact_linear_mix() {
        let mut c = two_var(0.0);
        c.coupling = vec![1.0, 0.0, 0.7, -0.4];
        let s = c.generate().unwrap();
        let b0: Vec<f64> = (0..c.length).map(|t| c.bases[0].at(t as f64)).collect();
        let b1: Vec<f64> = (0..c.length).map(|t| c.bases[1].at(t as f64)).collect();
        // Least-squares fit of variable 1 on the two bases.
        let (a00, a01, a11) = (
            b0.iter().map(|x| x * x).sum::<f64>(),
            b0.iter().zip(&b1).map(|(x, y)| x * y).sum::<f64>(),
            b1.iter().map(|y| y * y).sum::<f64>(),
        );
        let y = s.column(1);
        let (r0, r1) = (
            b0.iter().zip(&y).map(|(x, v)| x * v).sum::<f64>(),
            b1.iter().zip(&y).map(|(x, v)| x * v).sum::<f64>(),
        );
        let det = a00 * a11 - a01 * a01;
        let (c0, c1) = ((r0 * a11 - r1 * a01) / det, (a00 * r1 - a01 * r0) / det);
        let resid: f64 = (0..c.length)
            .map(|t| (y[t] - c0 * b0[t] - c1 * b1[t]).powi(2))
            .sum();
        assert!(resid < 1e-10, "{resid}");
        assert!((c0 - 0.7).abs() < 1e-10 && (c1 + 0.4).abs() < 1e-10);
    }

    #[test]
    fn attacks_follow_their_definitions() {
        let clean = two_var(0.1).generate().unwrap();
        let attacks = [
            AttackSpec {
                kind: AttackKind::Spike,
                variable: 0,
                start: 10,
                duration: 5,
                magnitude: Some(5.0),
            },
            AttackSpec {
                kind: AttackKind::Stuck,
                variable: 1,
                start: 40,
                duration: 20,
                magnitude: None,
            },
            AttackSpec {
                kind: AttackKind::Drift,
                variable: 0,
                start: 100,
                duration: 4,
                magnitude: Some(2.0),
            },
        ];
        let hit = inject_attacks(&clean, &attacks).unwrap();
        let labels = hit.labels().unwrap();
        for t in 0..clean.len() {
            let in_spike = (10..15).contains(&t);
            let in_stuck = (40..60).contains(&t);
            let in_drift = (100..104).contains(&t);
            assert_eq!(
                labels[t] == 1,
                in_spike || in_stuck || in_drift,
                "label at {t}"
            );
            let d0 = hit.row(t)[0] - clean.row(t)[0];
            if in_spike {
                assert!((d0 - 5.0).abs() < 1e-12);
            } else if in_drift {
                assert!((d0 - 0.5 * (t - 99) as f64).abs() < 1e-12);
            } else {
                assert_eq!(hit.row(t)[0].to_bits(), clean.row(t)[0].to_bits());
            }
            if in_stuck {
                assert_eq!(hit.row(t)[1], clean.row(40)[1]);
            } else {
                assert_eq!(hit.row(t)[1].to_bits(), clean.row(t)[1].to_bits());
            }
        }
        let count = labels.iter().filter(|&&l| l == 1).count();
        assert_eq!(count, attacks.iter().map(|a| a.duration).sum::<usize>());
    }

    #[test]
    fn default_magnitude_is_three_sigma() {
        let clean = two_var(0.0).generate().unwrap();
        let spike = AttackSpec {
            kind: AttackKind::Spike,
            variable: 1,
            start: 0,
            duration: 1,
            magnitude: None,
        };
        let hit = inject_attacks(&clean, &[spike]).unwrap();
        let sigma = std_dev(&clean.column(1));
        assert!((hit.row(0)[1] - clean.row(0)[1] - 3.0 * sigma).abs() < 1e-12);
    }

    #[test]
    fn invalid_attacks_are_rejected() {
        let clean = two_var(0.0).generate().unwrap();
        let a = AttackSpec {
            kind: AttackKind::Spike,
            variable: 0,
            start: 10,
            duration: 10,
            magnitude: Some(1.0),
        };
        let overlapping = AttackSpec { start: 15, ..a };
        assert!(inject_attacks(&clean, &[a, overlapping]).is_err());
        // Same interval on another variable is fine.
        assert!(inject_attacks(&clean, &[a, AttackSpec { variable: 1, ..a }]).is_ok());
        assert!(inject_attacks(&clean, &[AttackSpec { duration: 0, ..a }]).is_err());
        assert!(inject_attacks(&clean, &[AttackSpec { start: 195, ..a }]).is_err());
        assert!(inject_attacks(&clean, &[AttackSpec { variable: 2, ..a }]).is_err());
    }

    #[test]
    fn scenario_shape() {
        let s = scenario(1).unwrap();
        assert_eq!(
            (s.train.len(), s.test.len()),
            (SCENARIO_TRAIN_LEN, SCENARIO_TEST_LEN)
        );
        assert!(s.train.labels().unwrap().iter().all(|&l| l == 0));
        let anomalous = s.test.labels().unwrap().iter().filter(|&&l| l == 1).count();
        assert_eq!(
            anomalous,
            s.attacks.iter().map(|a| a.duration).sum::<usize>()
        );
    }
}

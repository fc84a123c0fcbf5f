//! MMD training curve on a noisy one-variable sine wave.
//!
//! Usage: `sine [epochs] [hidden] [seed]`

use tsgan::dataset::{make_windows, MultivariateSeries, PcSelection, Preprocessor};
use tsgan::gan::{TrainConfig, Trainer};
use tsgan::numerics::SeededRng;

fn main() -> tsgan::Result<()> {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("integer argument"))
        .collect();
    let arg = |i: usize, default: u64| args.get(i).copied().unwrap_or(default);
    let mut rng = SeededRng::new(arg(2, 1));
    let values: Vec<f64> = (0..2000)
        .map(|t| (std::f64::consts::TAU * t as f64 / 40.0).sin() + 0.05 * rng.normal())
        .collect();
    let series = MultivariateSeries::from_values(values, 1)?;
    let pre = Preprocessor::fit(&series, PcSelection::Off)?;
    let windows = make_windows(&pre.apply(&series)?, 30, 10)?;
    let hidden = arg(1, 32) as usize;
    let config = TrainConfig {
        epochs: arg(0, 100) as usize,
        gen_hidden: hidden,
        gen_depth: 1,
        disc_hidden: hidden,
        ..TrainConfig::default()
    };
    let epochs = config.epochs;
    let mut trainer = Trainer::new(windows, config, rng)?;
    for _ in 0..epochs {
        let e = trainer.run_epoch()?;
        if e.epoch == 1 || e.epoch % 10 == 0 {
            println!(
                "epoch {:3}  d {:.4}  g {:.4}  mmd {:.5}",
                e.epoch, e.d_loss, e.g_loss, e.mmd
            );
        }
    }
    Ok(())
}

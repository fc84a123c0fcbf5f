use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::ArgMatches;
use tsgan::baselines::{knn_detector, pca_detector};
use tsgan::checkpoint::Checkpoint;
use tsgan::config::{RunConfig, KEYS};
use tsgan::dataset::{load_csv, write_csv, NormalizationState, PcSelection};
use tsgan::detector::{detect as run_detect, TauPolicy};
use tsgan::metrics::{confusion, quantile_grid, sweep_tau, ConfusionCounts, SweepRow};
use tsgan::pipeline::{fit, write_labels, write_scores, write_training_log};
use tsgan::synth::scenario;

fn arg<'a>(m: &'a ArgMatches, name: &str) -> Option<&'a String> {
    m.get_one::<String>(name)
}

fn required<'a>(m: &'a ArgMatches, name: &str) -> &'a str {
    arg(m, name).expect("clap enforces required arguments")
}

fn create(path: impl AsRef<Path>) -> Result<BufWriter<File>> {
    let path = path.as_ref();
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

/// Applies `--key value` flags on top of `base`.
fn apply_flags(mut config: RunConfig, m: &ArgMatches) -> Result<RunConfig> {
    for (key, _) in KEYS {
        if let Some(value) = arg(m, key) {
            config
                .set(key, value)
                .map_err(|e| anyhow!("--{key}: {e}"))?;
        }
    }
    config.validate()?;
    Ok(config)
}

fn run_config(m: &ArgMatches) -> Result<RunConfig> {
    let base = match arg(m, "config") {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    apply_flags(base, m)
}

pub fn show_config(m: &ArgMatches) -> Result<()> {
    print!("{}", run_config(m)?.to_text());
    Ok(())
}

pub fn train(m: &ArgMatches) -> Result<()> {
    let config = run_config(m)?;
    let data = load_csv(required(m, "train"), Some(&config.label_column))?;
    let model = fit(&data, &config)?;
    let out = PathBuf::from(required(m, "out"));
    let log_path = arg(m, "log").map(PathBuf::from).unwrap_or_else(|| {
        let mut p = out.clone().into_os_string();
        p.push(".log.csv");
        p.into()
    });
    let mut log = create(&log_path)?;
    write_training_log(&model.training_log, &mut log)?;
    log.flush()?;
    let last = model.training_log.last().expect("at least one epoch");
    println!(
        "epoch {}: d_loss {:.6} g_loss {:.6} mmd {:.6}",
        last.epoch, last.d_loss, last.g_loss, last.mmd
    );
    Checkpoint {
        config_text: config.to_text(),
        model,
    }
    .save(&out)?;
    println!("wrote {} and {}", out.display(), log_path.display());
    Ok(())
}

pub fn detect(m: &ArgMatches) -> Result<()> {
    let ckpt = Checkpoint::load(required(m, "model"))?;
    let stored = RunConfig::parse(&ckpt.config_text).context("checkpoint configuration")?;
    let config = apply_flags(stored, m)?;
    let test_path = required(m, "test");
    let series = load_csv(test_path, Some(&config.label_column))?;
    let det = run_detect(&ckpt.model, &series, &config.detect)
        .with_context(|| format!("scoring {test_path}"))?;

    let mut scores = create(required(m, "scores"))?;
    write_scores(&det, series.labels(), &mut scores)?;
    scores.flush()?;
    if let Some(p) = arg(m, "labels") {
        let mut labels = create(p)?;
        write_labels(&det, &mut labels)?;
        labels.flush()?;
    }
    let flagged: usize = det.labels.labels.iter().map(|&l| l as usize).sum();
    println!(
        "anomaly rate {:.4} ({flagged} of {} timesteps) at tau {:.6}",
        det.labels.anomaly_rate(),
        series.len(),
        det.labels.tau
    );
    if let Some(sweep) = &det.sweep {
        print_row("best_f1", sweep.best_f1_row());
    }
    Ok(())
}

struct ScoreFile {
    drs: Vec<f64>,
    covered: Vec<bool>,
    labels: Vec<u8>,
    truth: Option<Vec<u8>>,
}

fn read_scores(path: &str) -> Result<ScoreFile> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("cannot read {path}"))?;
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("{path}: missing column {name:?}"))
    };
    let (drs_i, lc_i, label_i, truth_i) =
        (col("drs")?, col("lc")?, col("label")?, col("ground_truth")?);
    let mut file = ScoreFile {
        drs: Vec::new(),
        covered: Vec::new(),
        labels: Vec::new(),
        truth: Some(Vec::new()),
    };
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let parse_err = |name: &str| anyhow!("{path} row {}: bad {name} value", r + 1);
        file.drs
            .push(field(drs_i).parse().map_err(|_| parse_err("drs"))?);
        file.covered
            .push(field(lc_i).parse::<usize>().map_err(|_| parse_err("lc"))? > 0);
        file.labels
            .push(field(label_i).parse().map_err(|_| parse_err("label"))?);
        let gt = field(truth_i);
        if gt.is_empty() {
            file.truth = None;
        } else if let Some(t) = file.truth.as_mut() {
            t.push(gt.parse().map_err(|_| parse_err("ground_truth"))?);
        }
    }
    Ok(file)
}

fn print_counts(c: &ConfusionCounts) {
    println!(
        "precision {:.4} recall {:.4} f1 {:.4} (tp {} fp {} tn {} fn {})",
        c.precision().value,
        c.recall().value,
        c.f1().value,
        c.tp,
        c.fp,
        c.tn,
        c.fn_
    );
}

fn print_row(name: &str, row: &SweepRow) {
    println!(
        "{name}: quantile {:.4} tau {:.6} precision {:.4} recall {:.4} f1 {:.4}",
        row.quantile, row.tau, row.precision, row.recall, row.f1
    );
}

pub fn eval(m: &ArgMatches) -> Result<()> {
    let scores_path = required(m, "scores");
    let file = read_scores(scores_path)?;
    let truth = match arg(m, "truth") {
        Some(p) => load_csv(p, Some(required(m, "label_column")))?
            .labels()
            .map(<[u8]>::to_vec)
            .ok_or_else(|| anyhow!("{p}: no {:?} column", required(m, "label_column")))?,
        None => file
            .truth
            .clone()
            .ok_or_else(|| anyhow!("{scores_path} has no ground truth; pass --truth"))?,
    };
    if truth.len() != file.drs.len() {
        bail!(
            "truth has {} rows but the scores have {}",
            truth.len(),
            file.drs.len()
        );
    }
    match required(m, "mode") {
        "fixed" => {
            let predicted: Vec<u8> = match m.get_one::<f64>("tau") {
                Some(&tau) => file
                    .drs
                    .iter()
                    .zip(&file.covered)
                    .map(|(&d, &c)| u8::from(c && d > tau))
                    .collect(),
                None => file.labels.clone(),
            };
            print_counts(&confusion(&predicted, &truth, None)?);
        }
        _ => {
            let points = *m.get_one::<usize>("points").expect("has default");
            let sweep = sweep_tau(&file.drs, &file.covered, &truth, &quantile_grid(points))?;
            print_row("best_f1", sweep.best_f1_row());
            print_row("best_precision", &sweep.rows[sweep.best_precision]);
            print_row("best_recall", &sweep.rows[sweep.best_recall]);
        }
    }
    Ok(())
}

pub fn synth(m: &ArgMatches) -> Result<()> {
    let seed = *m.get_one::<u64>("seed").expect("has default");
    let s = scenario(seed)?;
    for (series, name) in [(&s.train, "train"), (&s.test, "test")] {
        let path = required(m, name);
        let mut out = create(path)?;
        write_csv(series, &mut out, "label")?;
        out.flush()?;
        println!("wrote {path} ({} timesteps)", series.len());
    }
    Ok(())
}

pub fn sweep(m: &ArgMatches) -> Result<()> {
    let base = run_config(m)?;
    let train_data = load_csv(required(m, "train"), Some(&base.label_column))?;
    let test_data = load_csv(required(m, "test"), Some(&base.label_column))?;
    if test_data.labels().is_none() {
        bail!(
            "sweep needs a labelled test series (column {:?})",
            base.label_column
        );
    }
    let axis = required(m, "axis");
    let values: Vec<usize> = match m.get_many::<usize>("values") {
        Some(v) => v.copied().collect(),
        None => (1..=10).collect(),
    };
    let mut out: Box<dyn Write> = match arg(m, "out") {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    writeln!(out, "axis,value,precision,recall,f1")?;
    for v in values {
        let mut config = base.clone();
        let value = match axis {
            "window" => {
                config.window = 30 * v;
                config.window
            }
            _ => {
                config.pcs = PcSelection::Count(v);
                v
            }
        };
        config.detect.tau = TauPolicy::BestF1;
        let model =
            fit(&train_data, &config).with_context(|| format!("training with {axis} {value}"))?;
        let det = run_detect(&model, &test_data, &config.detect)?;
        let row = det
            .sweep
            .as_ref()
            .expect("best-F1 detection sweeps")
            .best_f1_row();
        writeln!(
            out,
            "{axis},{value},{},{},{}",
            row.precision, row.recall, row.f1
        )?;
        out.flush()?;
    }
    Ok(())
}

pub fn baseline(m: &ArgMatches) -> Result<()> {
    let label_column = required(m, "label_column");
    let train_data = load_csv(required(m, "train"), Some(label_column))?;
    let test_data = load_csv(required(m, "test"), Some(label_column))?;
    let norm = NormalizationState::fit(&train_data)?;
    let (tr, te) = (norm.normalize(&train_data)?, norm.normalize(&test_data)?);
    let k = m.get_one::<usize>("k").copied();
    let result = match required(m, "method") {
        "pca" => pca_detector(&tr, &te, k.unwrap_or(1))?,
        _ => knn_detector(&tr, &te, k.unwrap_or(5))?,
    };
    if let Some(p) = arg(m, "scores") {
        let mut out = create(p)?;
        writeln!(out, "timestep,score")?;
        for (t, s) in result.scores.iter().enumerate() {
            writeln!(out, "{t},{s}")?;
        }
        out.flush()?;
    }
    match test_data.labels() {
        Some(truth) => {
            let covered = vec![true; truth.len()];
            let sweep = sweep_tau(&result.scores, &covered, truth, &quantile_grid(1000))?;
            print_row(&format!("{:?} best_f1", result.method), sweep.best_f1_row());
        }
        None => println!(
            "{:?}: scored {} timesteps",
            result.method,
            result.scores.len()
        ),
    }
    Ok(())
}

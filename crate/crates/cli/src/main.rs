use std::process::ExitCode;

use clap::{Arg, ArgMatches, Command};

mod commands;

/// Adds one `--key value` flag per run-configuration key.
fn with_config_flags(cmd: Command) -> Command {
    tsgan::config::KEYS.iter().fold(cmd, |cmd, (key, help)| {
        cmd.arg(
            Arg::new(*key)
                .long(*key)
                .value_name("VALUE")
                .help(*help)
                .help_heading("Run configuration"),
        )
    })
}

fn path(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name).long(name).value_name("PATH").help(help)
}

fn cli() -> Command {
    let train = Command::new("train")
        .about("Train a model and write a checkpoint plus a training-log CSV")
        .arg(path("config", "key = value configuration file"))
        .arg(path("train", "training CSV").required(true))
        .arg(path("out", "checkpoint to write").required(true))
        .arg(path("log", "training-log CSV [default: <out>.log.csv]"));
    let detect = Command::new("detect")
        .about("Score a series with a trained checkpoint")
        .arg(path("model", "checkpoint file").required(true))
        .arg(path("test", "series to score").required(true))
        .arg(path("scores", "per-timestep score CSV to write").required(true))
        .arg(path("labels", "per-timestep label CSV to write"));
    let eval = Command::new("eval")
        .about("Compute precision, recall and F1 from a score CSV")
        .arg(path("scores", "score CSV written by detect").required(true))
        .arg(path(
            "truth",
            "labelled series CSV; defaults to the ground_truth column",
        ))
        .arg(
            Arg::new("mode")
                .long("mode")
                .value_parser(["fixed", "sweep"])
                .default_value("sweep")
                .help("evaluate one threshold or sweep quantiles"),
        )
        .arg(
            Arg::new("tau")
                .long("tau")
                .value_name("VALUE")
                .value_parser(clap::value_parser!(f64))
                .help("threshold for fixed mode; without it the label column is used"),
        )
        .arg(
            Arg::new("points")
                .long("points")
                .value_name("N")
                .value_parser(clap::value_parser!(usize))
                .default_value("1000")
                .help("quantile steps in sweep mode"),
        )
        .arg(path("label_column", "label column name in --truth").default_value("label"));
    let synth = Command::new("synth")
        .about("Write the synthetic two-variable scenario (clean train, attacked test)")
        .arg(path("train", "training CSV to write").required(true))
        .arg(path("test", "labelled test CSV to write").required(true))
        .arg(
            Arg::new("seed")
                .long("seed")
                .value_parser(clap::value_parser!(u64))
                .default_value("0"),
        );
    let sweep = Command::new("sweep")
        .about("Retrain and detect across window lengths or principal-component counts")
        .arg(path("config", "key = value configuration file"))
        .arg(path("train", "training CSV").required(true))
        .arg(path("test", "labelled test CSV").required(true))
        .arg(
            Arg::new("axis")
                .long("axis")
                .value_parser(["window", "pc"])
                .required(true),
        )
        .arg(
            Arg::new("values")
                .long("values")
                .value_name("LIST")
                .value_delimiter(',')
                .value_parser(clap::value_parser!(usize))
                .help("window multipliers i (length 30·i) or PC counts [default: 1..10]"),
        )
        .arg(path("out", "results CSV [default: stdout]"));
    let baseline = Command::new("baseline")
        .about("Score a series with the PCA or KNN per-timestep baseline")
        .arg(path("train", "training CSV").required(true))
        .arg(path("test", "series to score").required(true))
        .arg(
            Arg::new("method")
                .long("method")
                .value_parser(["pca", "knn"])
                .required(true),
        )
        .arg(
            Arg::new("k")
                .long("k")
                .value_parser(clap::value_parser!(usize))
                .help("components (pca) or neighbours (knn) [default: 1 / 5]"),
        )
        .arg(path("scores", "timestep,score CSV to write"))
        .arg(path("label_column", "label column name").default_value("label"));

    let config = Command::new("config")
        .about("Print the effective configuration (defaults, then --config, then flags)")
        .arg(path("config", "key = value configuration file"));

    Command::new("tsgan")
        .about("GAN-based anomaly detection for multivariate time series")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(with_config_flags(train))
        .subcommand(with_config_flags(detect))
        .subcommand(eval)
        .subcommand(synth)
        .subcommand(with_config_flags(sweep))
        .subcommand(baseline)
        .subcommand(with_config_flags(config))
}

fn dispatch(m: &ArgMatches) -> anyhow::Result<()> {
    match m.subcommand() {
        Some(("train", m)) => commands::train(m),
        Some(("detect", m)) => commands::detect(m),
        Some(("eval", m)) => commands::eval(m),
        Some(("synth", m)) => commands::synth(m),
        Some(("sweep", m)) => commands::sweep(m),
        Some(("baseline", m)) => commands::baseline(m),
        Some(("config", m)) => commands::show_config(m),
        _ => unreachable!("subcommand is required"),
    }
}

/// The error chain joined with ": ", skipping causes their parent message
/// already spells out.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain().map(|c| c.to_string()) {
        if !out.ends_with(&cause) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&cause);
        }
    }
    out
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    match dispatch(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}

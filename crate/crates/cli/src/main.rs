//! `hfnet`: train, recall, run scripted experiments and parameter sweeps.
//!
//! Exit codes: 0 success, 1 usage, 2 config, 3 data, 4 internal invariant.

mod settings;
mod sweep;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hfnet::experiments::{run_experiment, Experiment, ExperimentReport};
use hfnet::patterns::{load_image, save_image, save_pgm_scaled};
use hfnet::{Error, Model, Pattern};

use settings::{keys_help, Settings};

#[derive(Debug, Parser)]
#[command(name = "hfnet", version, about = "Associative memory with self-organizing lateral weights")]
#[command(after_help = keys_help())]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` config file (`#` comments).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; every file is written below it.
    #[arg(long, global = true, value_name = "DIR", default_value = "hfnet-out")]
    out: PathBuf,
    /// Master seed, overriding config and seed lists.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Parallel workers for sweep.
    #[arg(long, global = true, value_name = "INT", default_value_t = 1)]
    jobs: usize,
    /// Override a config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train on every .pgm/.csv pattern in a directory and save the model.
    #[command(after_help = keys_help())]
    Train {
        /// Directory of training patterns, presented in file-name order.
        #[arg(long, value_name = "DIR")]
        patterns: PathBuf,
    },
    /// Recall a cue pattern through a saved model.
    #[command(after_help = keys_help())]
    Recall {
        /// Model directory written by `train`.
        #[arg(long, value_name = "DIR")]
        model: PathBuf,
        /// Cue pattern file (.pgm or .csv).
        #[arg(long, value_name = "PATH")]
        cue: PathBuf,
    },
    /// Run a scripted experiment: evolve1d, recall2d, denoise, complete, fused, digits.
    #[command(after_help = keys_help())]
    Experiment {
        /// Experiment name; defaults to the config's `experiment` key.
        #[arg(value_name = "NAME")]
        name: Option<String>,
    },
    /// Run an experiment over the cross product of ranges and seeds.
    #[command(after_help = keys_help())]
    Sweep {
        /// Experiment name; defaults to the config's `experiment` key.
        #[arg(value_name = "NAME")]
        name: Option<String>,
    },
}

/// Failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) | Error::Parameter(_) | Error::UnstableStep(_) => 2,
            e if e.is_data_error() => 3,
            _ => 4,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let c = &cli.common;
    let resolve = |experiment| Settings::resolve(experiment, c.config.as_deref(), &c.sets, c.seed);
    match &cli.command {
        Command::Train { patterns } => cmd_train(&resolve(None)?, patterns, &c.out),
        Command::Recall { model, cue } => cmd_recall(model, cue, &c.out),
        Command::Experiment { name } => {
            let settings = resolve(parse_name(name.as_deref())?)?;
            cmd_experiment(&settings, named(&settings)?, &c.out)
        }
        Command::Sweep { name } => {
            if c.jobs == 0 {
                return Err(Error::Config("--jobs must be at least 1".into()).into());
            }
            let settings = resolve(parse_name(name.as_deref())?)?;
            let rows = sweep::run(&settings, named(&settings)?, &c.out, c.jobs)?;
            println!("sweep: {rows} runs, table in {}", c.out.join(sweep::TABLE).display());
            Ok(())
        }
    }
}

fn parse_name(name: Option<&str>) -> CliResult<Option<Experiment>> {
    Ok(name.map(str::parse).transpose()?)
}

fn named(settings: &Settings) -> CliResult<Experiment> {
    settings.experiment.ok_or_else(|| Failure {
        code: 1,
        message: "no experiment named on the command line or in the config".into(),
    })
}

fn warn_row_sum(max_row_sum: f64) {
    if max_row_sum >= 1.0 {
        eprintln!(
            "warning: max row sum {max_row_sum:.4} >= 1; the third-order resolvent is outside its convergent regime"
        );
    }
}

fn create_dir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| Failure {
        code: 3,
        message: format!("{}: {e}", dir.display()),
    })
}

fn write(path: &Path, body: &str) -> CliResult {
    fs::write(path, body).map_err(|e| Failure {
        code: 3,
        message: format!("{}: {e}", path.display()),
    })
}

/// Pattern files in `dir` sorted by name.
fn load_pattern_dir(dir: &Path) -> CliResult<Vec<Pattern>> {
    let entries = fs::read_dir(dir).map_err(|e| Failure {
        code: 3,
        message: format!("{}: {e}", dir.display()),
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|x| x.to_str()), Some("pgm" | "csv")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Failure {
            code: 3,
            message: format!("{}: no .pgm or .csv patterns", dir.display()),
        });
    }
    paths
        .iter()
        .map(|p| load_image(p).map_err(|e| with_path(e, p)))
        .collect()
}

/// Names the file in errors that do not already carry a path.
fn with_path(e: Error, path: &Path) -> Failure {
    let mut f = Failure::from(e);
    if !f.message.contains(&path.display().to_string()) {
        f.message = format!("{}: {}", path.display(), f.message);
    }
    f
}

fn cmd_train(settings: &Settings, patterns_dir: &Path, out: &Path) -> CliResult {
    settings.require_single()?;
    let patterns = load_pattern_dir(patterns_dir)?;
    let mut config = settings.single();
    let shape = patterns[0].shape();
    if let Some(p) = patterns.iter().find(|p| p.shape() != shape) {
        return Err(Error::Shape(format!(
            "pattern {} is {}, {} is {shape}",
            p.label().unwrap_or("?"),
            p.shape(),
            patterns[0].label().unwrap_or("?")
        ))
        .into());
    }
    if !settings.is_explicit("grid") {
        config.shape = shape;
    }
    if config.pattern_count != patterns.len() && !settings.is_explicit("pattern_count") {
        config.pattern_count = patterns.len();
    }
    let mut model = Model::new(config)?;
    model.train(&patterns)?;
    create_dir(out)?;
    model.save(out)?;

    let mut report = String::new();
    let _ = writeln!(report, "patterns = {}", patterns.len());
    let _ = writeln!(report, "presentations = {}", model.history().len());
    let converged = model.history().iter().filter(|r| r.converged).count();
    let _ = writeln!(report, "converged_presentations = {converged}");
    let max_row_sum = model.weights().row_sums().into_iter().fold(f64::NEG_INFINITY, f64::max);
    let _ = writeln!(report, "max_row_sum = {max_row_sum:?}");
    write(&out.join("report.txt"), &report)?;
    warn_row_sum(max_row_sum);
    println!(
        "trained on {} patterns ({converged}/{} presentations converged); model in {}",
        patterns.len(),
        model.history().len(),
        out.display()
    );
    Ok(())
}

fn cmd_recall(model_dir: &Path, cue_path: &Path, out: &Path) -> CliResult {
    let model = Model::load(model_dir)?;
    let cue = load_image(cue_path).map_err(|e| with_path(e, cue_path))?;
    let recall = model.recall(&cue).map_err(|e| with_path(e, cue_path))?;
    create_dir(out)?;
    save_image(&recall.output, out.join("output.csv"))?;
    save_pgm_scaled(&recall.output, out.join("output.pgm"))?;
    let m = &recall.metrics;
    let mut text = String::new();
    let _ = writeln!(text, "cosine = {:?}", m.cosine);
    let _ = writeln!(text, "mse = {:?}", m.mse);
    let _ = writeln!(text, "pearson = {:?}", m.pearson);
    let _ = writeln!(text, "best_match = {}", m.best_match_label.as_deref().unwrap_or(""));
    for (k, (label, cos)) in m.template_cosines.iter().enumerate() {
        let name = label.clone().unwrap_or_else(|| k.to_string());
        let _ = writeln!(text, "template_cosine.{name} = {cos:?}");
    }
    write(&out.join("metrics.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn row_sum_metric(report: &ExperimentReport) -> Option<f64> {
    report
        .metrics
        .iter()
        .filter(|(k, _)| k.starts_with("max_row_sum"))
        .map(|(_, v)| *v)
        .reduce(f64::max)
}

fn cmd_experiment(settings: &Settings, experiment: Experiment, out: &Path) -> CliResult {
    settings.require_single()?;
    let report = run_experiment(&settings.single(), experiment, out)?;
    if let Some(m) = row_sum_metric(&report) {
        warn_row_sum(m);
    }
    print!("{}", report.to_kv());
    Ok(())
}

//! Cross-product sweeps: every combination of range values and seeds runs
//! in its own subdirectory; metrics are merged into one table afterwards.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hfnet::experiments::{run_experiment, Experiment, ExperimentReport};
use hfnet::{Error, TrainerConfig};
use rayon::prelude::*;

use crate::settings::Settings;
use crate::{CliResult, Failure};

pub const TABLE: &str = "sweep.csv";

struct Run {
    index: usize,
    seed: u64,
    assignment: Vec<String>,
    config: TrainerConfig,
}

fn plan(settings: &Settings) -> Result<Vec<Run>, Error> {
    let mut combos: Vec<Vec<String>> = vec![Vec::new()];
    for (_, values) in &settings.ranges {
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push(v.clone());
                    next
                })
            })
            .collect();
    }
    let mut runs = Vec::new();
    for assignment in combos {
        for &seed in &settings.seeds {
            let mut config = settings.trainer.clone();
            for ((key, _), value) in settings.ranges.iter().zip(&assignment) {
                config.set(key, value)?;
            }
            config.master_seed = seed;
            config.validate()?;
            runs.push(Run {
                index: runs.len(),
                seed,
                assignment: assignment.clone(),
                config,
            });
        }
    }
    Ok(runs)
}

/// Runs the sweep with at most `jobs` workers and writes `sweep.csv`.
/// Returns the number of rows.
pub fn run(settings: &Settings, experiment: Experiment, out: &Path, jobs: usize) -> CliResult<usize> {
    let runs = plan(settings)?;
    fs::create_dir_all(out).map_err(|e| Failure {
        code: 3,
        message: format!("{}: {e}", out.display()),
    })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure {
            code: 4,
            message: format!("worker pool: {e}"),
        })?;
    let reports: Vec<Result<ExperimentReport, Error>> = pool.install(|| {
        runs.par_iter()
            .map(|r| run_experiment(&r.config, experiment, out.join(format!("run_{:04}", r.index))))
            .collect()
    });
    let reports = reports.into_iter().collect::<Result<Vec<_>, _>>()?;

    let metric_keys: Vec<&str> = reports
        .first()
        .map(|r| r.metrics.iter().map(|(k, _)| k.as_str()).collect())
        .unwrap_or_default();
    let mut table = String::from("run,seed");
    for (key, _) in &settings.ranges {
        table.push(',');
        table.push_str(key);
    }
    for key in &metric_keys {
        table.push(',');
        table.push_str(key);
    }
    table.push('\n');
    for (r, report) in runs.iter().zip(&reports) {
        let _ = write!(table, "{},{}", r.index, r.seed);
        for value in &r.assignment {
            let _ = write!(table, ",{value}");
        }
        for key in &metric_keys {
            match report.get(key) {
                Some(v) => {
                    let _ = write!(table, ",{v:?}");
                }
                None => table.push(','),
            }
        }
        table.push('\n');
    }
    let path = out.join(TABLE);
    fs::write(&path, table).map_err(|e| Failure {
        code: 3,
        message: format!("{}: {e}", path.display()),
    })?;
    Ok(runs.len())
}

//! Resolution of config file lines and `--set` overrides into a trainer
//! config, a seed list and sweep ranges.

use std::fs;
use std::path::Path;

use hfnet::config::KEYS;
use hfnet::experiments::Experiment;
use hfnet::{Error, Result, TrainerConfig};

/// Keys owned by the CLI rather than the trainer.
pub const CLI_KEYS: &[(&str, &str)] = &[
    ("experiment", "scenario preset applied before every other key"),
    ("seeds", "comma list of master seeds for sweep"),
];

#[derive(Debug, Clone)]
pub struct Settings {
    pub trainer: TrainerConfig,
    pub experiment: Option<Experiment>,
    pub seeds: Vec<u64>,
    /// Sweep ranges in declaration order: key and candidate values.
    pub ranges: Vec<(String, Vec<String>)>,
    /// Keys given explicitly, in order.
    pub explicit: Vec<String>,
}

/// Every recognized key, one per line, for `--help`.
pub fn keys_help() -> String {
    let mut out = String::from("Config keys (file lines `key = value`, or --set key=value; comma lists are sweep ranges):\n");
    for (key, doc) in CLI_KEYS.iter().chain(KEYS) {
        out.push_str(&format!("  {key:<24} {doc}\n"));
    }
    out
}

fn parse_pairs(text: &str, origin: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("{origin} line {}: expected `key = value`", k + 1))
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("invalid seed `{}`", s.trim())))
        })
        .collect()
}

impl Settings {
    /// Applies, in order: the experiment preset (if any), the config file,
    /// the `--set` overrides, then `--seed`.
    pub fn resolve(
        experiment: Option<Experiment>,
        config_file: Option<&Path>,
        sets: &[String],
        seed: Option<u64>,
    ) -> Result<Self> {
        let mut pairs = Vec::new();
        if let Some(path) = config_file {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            pairs.extend(parse_pairs(&text, &path.display().to_string())?);
        }
        for s in sets {
            let (key, value) = s
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set `{s}`: expected key=value")))?;
            pairs.push((key.trim().to_string(), value.trim().to_string()));
        }

        let mut experiment = experiment;
        for (key, value) in &pairs {
            if key == "experiment" {
                let named: Experiment = value.parse()?;
                if experiment.is_some_and(|e| e != named) {
                    return Err(Error::Config(format!(
                        "config names experiment `{named}` but `{}` was requested",
                        experiment.unwrap()
                    )));
                }
                experiment = Some(named);
            }
        }

        let mut trainer = experiment.map_or_else(TrainerConfig::default, Experiment::preset);
        let mut seeds = Vec::new();
        let mut ranges: Vec<(String, Vec<String>)> = Vec::new();
        let mut explicit = Vec::new();
        for (key, value) in pairs {
            match key.as_str() {
                "experiment" => {}
                "seeds" => seeds = parse_seeds(&value)?,
                _ if value.contains(',') => {
                    let values: Vec<String> = value.split(',').map(|v| v.trim().to_string()).collect();
                    for v in &values {
                        // Reject bad range members before any run starts.
                        trainer.clone().set(&key, v)?;
                    }
                    ranges.retain(|(k, _)| *k != key);
                    ranges.push((key.clone(), values));
                }
                _ => {
                    trainer.set(&key, &value)?;
                    ranges.retain(|(k, _)| *k != key);
                }
            }
            explicit.push(key);
        }
        if let Some(seed) = seed {
            trainer.master_seed = seed;
            seeds = vec![seed];
        }
        if seeds.is_empty() {
            seeds.push(trainer.master_seed);
        }
        trainer.validate()?;
        Ok(Settings {
            trainer,
            experiment,
            seeds,
            ranges,
            explicit,
        })
    }

    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.iter().any(|k| k == key)
    }

    /// Errors unless the settings describe exactly one run.
    pub fn require_single(&self) -> Result<()> {
        if let Some((key, _)) = self.ranges.first() {
            return Err(Error::Config(format!(
                "`{key}` has a list of values; ranges are only valid for `sweep`"
            )));
        }
        if self.seeds.len() > 1 {
            return Err(Error::Config(
                "several seeds given; seed lists are only valid for `sweep`".into(),
            ));
        }
        Ok(())
    }

    /// The trainer config for the single run described.
    pub fn single(&self) -> TrainerConfig {
        TrainerConfig {
            master_seed: self.seeds[0],
            ..self.trainer.clone()
        }
    }
}

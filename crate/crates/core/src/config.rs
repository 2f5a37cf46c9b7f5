//! Trainer configuration and its flat `key = value` representation.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::firefly::{SwarmParams, SynthesisParams};
use crate::patterns::{Boundary, Shape};
use crate::plasticity::PlasticityParams;

/// When plasticity sees a newly presented pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LearnSchedule {
    /// Correlations are seeded by the input itself as soon as it arrives.
    #[default]
    AtOnset,
    /// Correlations are seeded by the network's equilibrium response to the
    /// input.
    AfterConvergence,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitScheme {
    /// Gaussian kernel of grid distance times uniform jitter.
    Random { sigma: f64 },
    /// Equal weights `1/(2k)` to the `k` nearest neighbors on each side
    /// (for grids: every cell within distance `k`, equally weighted).
    Handwired { neighbors: usize },
}

/// Knobs of the scripted experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    /// Width of the stored Gaussian templates, in cells.
    pub pattern_sigma: f64,
    /// Standard deviation of cue noise.
    pub noise: f64,
    /// Fraction of the active set hidden in completion cues.
    pub mask_fraction: f64,
    /// Directory of digit templates (PGM or CSV); built-ins when unset.
    pub digits_dir: Option<PathBuf>,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            pattern_sigma: 1.0,
            noise: 0.2,
            mask_fraction: 0.3,
            digits_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub shape: Shape,
    pub boundary: Boundary,
    pub use_firefly: bool,
    pub learn_schedule: LearnSchedule,
    pub init: InitScheme,
    pub plasticity: PlasticityParams,
    /// Swarm settings with lengths in grid pitches: `gamma` per squared
    /// pitch, `eta` and `d_min` in pitches.
    pub swarm: SwarmParams,
    pub synthesis: SynthesisParams,
    /// Active-set threshold relative to the pattern peak.
    pub theta_act: f64,
    /// Number of stored patterns M.
    pub pattern_count: usize,
    /// Passes over the pattern set.
    pub epochs: usize,
    /// Flies per neuron.
    pub population_factor: usize,
    /// Share of the synthesized excitatory topology blended into W.
    pub prior_weight: f64,
    /// Cap on each row's total inhibitory weight.
    pub inhibition_budget: f64,
    /// Redraw fly positions before each pattern instead of continuing.
    pub reset_per_pattern: bool,
    /// Extra normalize-clamp-propagate passes during recall.
    pub recall_iterations: usize,
    pub master_seed: u64,
    pub scenario: ScenarioParams,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            shape: Shape::Grid { rows: 5, cols: 5 },
            boundary: Boundary::Open,
            use_firefly: true,
            learn_schedule: LearnSchedule::AtOnset,
            init: InitScheme::Random { sigma: 1.0 },
            plasticity: PlasticityParams {
                dt: 0.05,
                ..PlasticityParams::default()
            },
            swarm: SwarmParams {
                b: 0.5,
                gamma: 0.5,
                eta: 0.1,
                d_min: 0.1,
                steps: 10,
                seed: 0,
                excit_fraction: 0.7,
            },
            synthesis: SynthesisParams::default(),
            theta_act: 0.1,
            pattern_count: 3,
            epochs: 5,
            population_factor: 4,
            prior_weight: 0.5,
            inhibition_budget: 1.0,
            reset_per_pattern: false,
            recall_iterations: 0,
            master_seed: 1,
            scenario: ScenarioParams::default(),
        }
    }
}

/// Every recognized key with a short description.
pub const KEYS: &[(&str, &str)] = &[
    ("grid", "network shape: ROWSxCOLS or line:N"),
    ("boundary", "open | periodic"),
    ("use_firefly", "synthesize topology with the firefly swarm (true | false)"),
    ("learn_schedule", "at_onset | after_convergence"),
    ("init", "random | handwired"),
    ("init_sigma", "kernel width of the random initial weights, in cells"),
    ("neighbors", "neighbors per side for the handwired preset"),
    ("theta_act", "active-set threshold relative to the pattern peak"),
    ("pattern_count", "number of stored patterns M"),
    ("epochs", "passes over the pattern set"),
    ("population_factor", "flies per neuron"),
    ("prior_weight", "blend of synthesized excitatory topology into W, in [0,1]"),
    ("inhibition_budget", "cap on each row's total inhibitory weight"),
    ("reset_per_pattern", "redraw fly positions before each pattern (true | false)"),
    ("recall_iterations", "extra propagate passes during recall"),
    ("master_seed", "seed for every random stream"),
    ("plasticity.alpha", "unspecific growth rate"),
    ("plasticity.beta", "cooperation gain"),
    ("plasticity.v", "saturation ceiling"),
    ("plasticity.dt", "Euler step"),
    ("plasticity.max_steps", "step cap per presentation"),
    ("plasticity.tol", "convergence threshold on max |dw/dt|"),
    ("swarm.b", "base attractiveness"),
    ("swarm.gamma", "attractiveness decay rate, per squared grid pitch"),
    ("swarm.eta", "jitter amplitude, in grid pitches"),
    ("swarm.d_min", "minimum fly separation, in grid pitches"),
    ("swarm.steps", "swarm steps per presented pattern"),
    ("swarm.excit_fraction", "share of excitatory flies"),
    ("synth.sigma_w", "excitatory kernel width in grid pitches"),
    ("synth.sigma_inh", "inhibitory kernel width in grid pitches"),
    ("synth.w_inh_max", "largest inhibitory weight magnitude"),
    ("scenario.pattern_sigma", "width of generated templates, in cells"),
    ("scenario.noise", "cue noise standard deviation"),
    ("scenario.mask_fraction", "share of the active set hidden in completion cues"),
    ("scenario.digits_dir", "directory of digit templates (empty for built-ins)"),
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("invalid value `{value}` for `{key}`"))),
    }
}

pub fn parse_shape(value: &str) -> Result<Shape> {
    let v = value.trim();
    let bad = || Error::Config(format!("invalid grid `{value}`"));
    let shape = if let Some(n) = v.strip_prefix("line:") {
        Shape::Line(n.trim().parse().map_err(|_| bad())?)
    } else if let Some((r, c)) = v.split_once('x') {
        Shape::Grid {
            rows: r.trim().parse().map_err(|_| bad())?,
            cols: c.trim().parse().map_err(|_| bad())?,
        }
    } else {
        return Err(bad());
    };
    if shape.is_empty() {
        return Err(bad());
    }
    Ok(shape)
}

fn format_shape(shape: Shape) -> String {
    match shape {
        Shape::Line(n) => format!("line:{n}"),
        Shape::Grid { rows, cols } => format!("{rows}x{cols}"),
    }
}

impl TrainerConfig {
    pub fn n(&self) -> usize {
        self.shape.len()
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |cond: bool, msg: &str| {
            if cond {
                Ok(())
            } else {
                Err(Error::Config(msg.into()))
            }
        };
        cfg(self.n() > 1, "network needs at least 2 neurons")?;
        cfg(self.pattern_count >= 1, "pattern_count must be >= 1")?;
        cfg(self.population_factor >= 1, "population_factor must be >= 1")?;
        cfg(
            (0.0..=1.0).contains(&self.prior_weight),
            "prior_weight must lie in [0, 1]",
        )?;
        cfg(
            self.inhibition_budget.is_finite() && self.inhibition_budget >= 0.0,
            "inhibition_budget must be >= 0",
        )?;
        cfg(
            self.theta_act.is_finite() && self.theta_act >= 0.0,
            "theta_act must be >= 0",
        )?;
        match self.init {
            InitScheme::Random { sigma } => cfg(sigma > 0.0, "init_sigma must be > 0")?,
            InitScheme::Handwired { neighbors } => cfg(neighbors >= 1, "neighbors must be >= 1")?,
        }
        let s = &self.scenario;
        cfg(s.pattern_sigma > 0.0, "scenario.pattern_sigma must be > 0")?;
        cfg(s.noise >= 0.0, "scenario.noise must be >= 0")?;
        cfg(
            (0.0..1.0).contains(&s.mask_fraction),
            "scenario.mask_fraction must lie in [0, 1)",
        )?;
        self.plasticity
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.swarm
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match key {
            "grid" => self.shape = parse_shape(value)?,
            "boundary" => {
                self.boundary = match value.trim() {
                    "open" => Boundary::Open,
                    "periodic" => Boundary::Periodic,
                    _ => return Err(Error::Config(format!("invalid boundary `{value}`"))),
                }
            }
            "use_firefly" => self.use_firefly = parse_bool(key, value)?,
            "learn_schedule" => {
                self.learn_schedule = match value.trim() {
                    "at_onset" => LearnSchedule::AtOnset,
                    "after_convergence" => LearnSchedule::AfterConvergence,
                    _ => return Err(Error::Config(format!("invalid learn_schedule `{value}`"))),
                }
            }
            "init" => {
                self.init = match (value.trim(), self.init) {
                    ("random", InitScheme::Random { sigma }) => InitScheme::Random { sigma },
                    ("random", _) => InitScheme::Random { sigma: 1.0 },
                    ("handwired", InitScheme::Handwired { neighbors }) => {
                        InitScheme::Handwired { neighbors }
                    }
                    ("handwired", _) => InitScheme::Handwired { neighbors: 3 },
                    _ => return Err(Error::Config(format!("invalid init `{value}`"))),
                }
            }
            "init_sigma" => {
                let sigma = parse(key, value)?;
                if let InitScheme::Random { sigma: s } = &mut self.init {
                    *s = sigma;
                } else {
                    self.init = InitScheme::Random { sigma };
                }
            }
            "neighbors" => {
                let neighbors = parse(key, value)?;
                if let InitScheme::Handwired { neighbors: k } = &mut self.init {
                    *k = neighbors;
                } else {
                    self.init = InitScheme::Handwired { neighbors };
                }
            }
            "theta_act" => self.theta_act = parse(key, value)?,
            "pattern_count" => self.pattern_count = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "population_factor" => self.population_factor = parse(key, value)?,
            "prior_weight" => self.prior_weight = parse(key, value)?,
            "inhibition_budget" => self.inhibition_budget = parse(key, value)?,
            "reset_per_pattern" => self.reset_per_pattern = parse_bool(key, value)?,
            "recall_iterations" => self.recall_iterations = parse(key, value)?,
            "master_seed" => self.master_seed = parse(key, value)?,
            "plasticity.alpha" => self.plasticity.alpha = parse(key, value)?,
            "plasticity.beta" => self.plasticity.beta = parse(key, value)?,
            "plasticity.v" => self.plasticity.v = parse(key, value)?,
            "plasticity.dt" => self.plasticity.dt = parse(key, value)?,
            "plasticity.max_steps" => self.plasticity.max_steps = parse(key, value)?,
            "plasticity.tol" => self.plasticity.tol = parse(key, value)?,
            "swarm.b" => self.swarm.b = parse(key, value)?,
            "swarm.gamma" => self.swarm.gamma = parse(key, value)?,
            "swarm.eta" => self.swarm.eta = parse(key, value)?,
            "swarm.d_min" => self.swarm.d_min = parse(key, value)?,
            "swarm.steps" => self.swarm.steps = parse(key, value)?,
            "swarm.excit_fraction" => self.swarm.excit_fraction = parse(key, value)?,
            "synth.sigma_w" => self.synthesis.sigma_w = parse(key, value)?,
            "synth.sigma_inh" => self.synthesis.sigma_inh = parse(key, value)?,
            "synth.w_inh_max" => self.synthesis.w_inh_max = parse(key, value)?,
            "scenario.pattern_sigma" => self.scenario.pattern_sigma = parse(key, value)?,
            "scenario.noise" => self.scenario.noise = parse(key, value)?,
            "scenario.mask_fraction" => self.scenario.mask_fraction = parse(key, value)?,
            "scenario.digits_dir" => {
                let v = value.trim();
                self.scenario.digits_dir = (!v.is_empty()).then(|| PathBuf::from(v));
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses a flat config file: `key = value` lines, `#` comments.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", k + 1)))?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", k + 1)))?;
        }
        Ok(())
    }

    /// Echo of every key, re-parseable by [`TrainerConfig::apply_text`].
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("grid", format_shape(self.shape));
        kv(
            "boundary",
            match self.boundary {
                Boundary::Open => "open",
                Boundary::Periodic => "periodic",
            }
            .into(),
        );
        kv("use_firefly", self.use_firefly.to_string());
        kv(
            "learn_schedule",
            match self.learn_schedule {
                LearnSchedule::AtOnset => "at_onset",
                LearnSchedule::AfterConvergence => "after_convergence",
            }
            .into(),
        );
        match self.init {
            InitScheme::Random { sigma } => {
                kv("init", "random".into());
                kv("init_sigma", format!("{sigma:?}"));
            }
            InitScheme::Handwired { neighbors } => {
                kv("init", "handwired".into());
                kv("neighbors", neighbors.to_string());
            }
        }
        kv("theta_act", format!("{:?}", self.theta_act));
        kv("pattern_count", self.pattern_count.to_string());
        kv("epochs", self.epochs.to_string());
        kv("population_factor", self.population_factor.to_string());
        kv("prior_weight", format!("{:?}", self.prior_weight));
        kv("inhibition_budget", format!("{:?}", self.inhibition_budget));
        kv("reset_per_pattern", self.reset_per_pattern.to_string());
        kv("recall_iterations", self.recall_iterations.to_string());
        kv("master_seed", self.master_seed.to_string());
        let p = &self.plasticity;
        kv("plasticity.alpha", format!("{:?}", p.alpha));
        kv("plasticity.beta", format!("{:?}", p.beta));
        kv("plasticity.v", format!("{:?}", p.v));
        kv("plasticity.dt", format!("{:?}", p.dt));
        kv("plasticity.max_steps", p.max_steps.to_string());
        kv("plasticity.tol", format!("{:?}", p.tol));
        let s = &self.swarm;
        kv("swarm.b", format!("{:?}", s.b));
        kv("swarm.gamma", format!("{:?}", s.gamma));
        kv("swarm.eta", format!("{:?}", s.eta));
        kv("swarm.d_min", format!("{:?}", s.d_min));
        kv("swarm.steps", s.steps.to_string());
        kv("swarm.excit_fraction", format!("{:?}", s.excit_fraction));
        kv("synth.sigma_w", format!("{:?}", self.synthesis.sigma_w));
        kv("synth.sigma_inh", format!("{:?}", self.synthesis.sigma_inh));
        kv("synth.w_inh_max", format!("{:?}", self.synthesis.w_inh_max));
        let sc = &self.scenario;
        kv("scenario.pattern_sigma", format!("{:?}", sc.pattern_sigma));
        kv("scenario.noise", format!("{:?}", sc.noise));
        kv("scenario.mask_fraction", format!("{:?}", sc.mask_fraction));
        kv(
            "scenario.digits_dir",
            sc.digits_dir
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trips() {
        let mut cfg = TrainerConfig::default();
        cfg.set("grid", "line:25").unwrap();
        cfg.set("boundary", "periodic").unwrap();
        cfg.set("neighbors", "3").unwrap();
        cfg.set("plasticity.alpha", "0.02").unwrap();
        cfg.set("scenario.digits_dir", "/tmp/digits").unwrap();
        let mut back = TrainerConfig::default();
        back.apply_text(&cfg.to_kv()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn every_key_is_settable_and_echoed() {
        let echo = TrainerConfig::default().to_kv();
        for (key, _) in KEYS {
            if *key == "neighbors" {
                continue;
            }
            assert!(echo.contains(&format!("{key} =")), "{key} missing from echo");
        }
        let mut cfg = TrainerConfig::default();
        assert!(cfg.set("neighbors", "2").is_ok());
        assert!(cfg.to_kv().contains("neighbors = 2"));
    }

    #[test]
    fn unknown_keys_and_bad_values_fail() {
        let mut cfg = TrainerConfig::default();
        assert!(matches!(cfg.set("alpha", "0.1"), Err(Error::Config(_))));
        assert!(matches!(cfg.set("grid", "5by5"), Err(Error::Config(_))));
        assert!(matches!(cfg.set("use_firefly", "maybe"), Err(Error::Config(_))));
        assert!(cfg.apply_text("epochs 3").is_err());
        assert!(cfg.apply_text("# comment only\n\nepochs = 3 # trailing\n").is_ok());
        assert_eq!(cfg.epochs, 3);
    }

    #[test]
    fn validation() {
        assert!(TrainerConfig::default().validate().is_ok());
        let mut cfg = TrainerConfig::default();
        cfg.pattern_count = 0;
        assert!(cfg.validate().is_err());
    }
}

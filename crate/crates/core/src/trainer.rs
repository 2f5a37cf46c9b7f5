//! Associative-memory lifecycle: initialization, pattern presentation
//! (optional swarm topology, correlations, plasticity), recall and
//! completion.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;

pub use crate::config::{InitScheme, LearnSchedule, ScenarioParams, TrainerConfig};
use crate::dynamics::{
    correlation_tensor, load_matrix_csv, save_matrix_csv, truncated_resolvent_of, Resolvent,
    WeightMatrix,
};
use crate::error::{Error, Result};
use crate::firefly::{synthesize_weights, FireflyPopulation, Layout, SwarmParams, SynthesisParams};
use crate::metrics;
use crate::patterns::{self, active_set_relative, Pattern};
use crate::plasticity::{evolve_weights_masked, EvolveReport, PlasticMask};
use crate::seed;

const STREAM_INIT: u64 = 1;
const STREAM_SWARM: u64 = 2;

/// Stiffness ceiling used when the configured step is too coarse for the
/// correlations at hand.
const STIFFNESS_LIMIT: f64 = 0.5;

/// Synthesized entries below this share of the row's positive mass are not
/// plastic.
const MASK_FLOOR: f64 = 1e-3;

const CONFIG_FILE: &str = "config.txt";
const WEIGHTS_FILE: &str = "w_matrix.csv";
const INHIBITION_FILE: &str = "inhibition.csv";
const POPULATION_FILE: &str = "population.csv";
const TEMPLATE_DIR: &str = "templates";
const TEMPLATE_INDEX: &str = "templates.txt";

fn write_text(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct Model {
    weights: WeightMatrix,
    /// Inhibitory magnitudes from the swarm, subtracted from `weights` in
    /// the recurrent coupling.
    inhibition: Option<DMatrix<f64>>,
    population: Option<FireflyPopulation>,
    layout: Layout,
    history: Vec<EvolveReport>,
    templates: Vec<Pattern>,
    config: TrainerConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecallMetrics {
    pub cosine: f64,
    pub mse: f64,
    pub pearson: f64,
    pub best_match_label: Option<String>,
    /// Cosine of the output against each stored template, in storage order.
    pub template_cosines: Vec<(Option<String>, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recall {
    pub output: Pattern,
    pub metrics: RecallMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub cue: Pattern,
    pub output: Pattern,
    pub metrics: RecallMetrics,
    /// The mask hid the pattern's whole active set.
    pub low_confidence: bool,
}

fn init_weights(config: &TrainerConfig) -> Result<WeightMatrix> {
    let n = config.n();
    let shape = config.shape;
    let mut rng = seed::stream(config.master_seed, STREAM_INIT);
    let mut w = DMatrix::zeros(n, n);
    match config.init {
        InitScheme::Random { sigma } => {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let d = shape.distance(i, j, config.boundary);
                        let jitter: f64 = rng.random();
                        w[(i, j)] = (-d * d / (2.0 * sigma * sigma)).exp() * jitter;
                    }
                }
            }
        }
        InitScheme::Handwired { neighbors } => {
            let reach = neighbors as f64 + 1e-9;
            for i in 0..n {
                for j in 0..n {
                    if i != j && shape.distance(i, j, config.boundary) <= reach {
                        w[(i, j)] = 1.0;
                    }
                }
            }
        }
    }
    for mut row in w.row_iter_mut() {
        let s = row.sum();
        if s > 0.0 {
            row /= s;
        }
        for v in row.iter_mut() {
            *v = v.min(config.plasticity.v);
        }
    }
    WeightMatrix::new(w)
}

/// Converts the configured pitch-relative swarm lengths to unit-square
/// coordinates.
fn swarm_params(config: &TrainerConfig, layout: &Layout) -> SwarmParams {
    let pitch = layout.pitch();
    SwarmParams {
        gamma: config.swarm.gamma / (pitch * pitch),
        eta: config.swarm.eta * pitch,
        d_min: config.swarm.d_min * pitch,
        seed: seed::derive(config.master_seed, STREAM_SWARM),
        ..config.swarm
    }
}

pub fn init_model(config: &TrainerConfig) -> Result<Model> {
    Model::new(config.clone())
}

impl Model {
    pub fn new(config: TrainerConfig) -> Result<Self> {
        config.validate()?;
        let weights = init_weights(&config)?;
        let layout = Layout::from_shape(config.shape);
        let population = if config.use_firefly {
            let count = config.population_factor * config.n();
            Some(FireflyPopulation::random(count, swarm_params(&config, &layout))?)
        } else {
            None
        };
        Ok(Model {
            weights,
            inhibition: None,
            population,
            layout,
            history: Vec::new(),
            templates: Vec::new(),
            config,
        })
    }

    /// Replaces the plastic weights, e.g. with a loaded matrix.
    pub fn with_weights(mut self, weights: WeightMatrix) -> Result<Self> {
        if weights.n() != self.config.n() {
            return Err(Error::Shape(format!(
                "{} weights for {} neurons",
                weights.n(),
                self.config.n()
            )));
        }
        self.weights = weights;
        Ok(self)
    }

    pub fn with_inhibition(mut self, inhibition: Option<DMatrix<f64>>) -> Result<Self> {
        if let Some(h) = &inhibition {
            let n = self.config.n();
            if h.nrows() != n || h.ncols() != n {
                return Err(Error::Shape("inhibition size differs from W".into()));
            }
        }
        self.inhibition = inhibition;
        Ok(self)
    }

    pub fn with_templates(mut self, templates: Vec<Pattern>) -> Self {
        self.templates = templates;
        self
    }

    pub fn with_population(mut self, population: Option<FireflyPopulation>) -> Self {
        self.population = population;
        self
    }

    /// Writes the model into `dir`: `config.txt`, `w_matrix.csv`,
    /// `inhibition.csv` and `population.csv` when present, and the stored
    /// templates under `templates/` indexed by `templates.txt`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let tdir = dir.join(TEMPLATE_DIR);
        fs::create_dir_all(&tdir).map_err(|e| Error::io(&tdir, e))?;
        write_text(&dir.join(CONFIG_FILE), &self.config.to_kv())?;
        self.weights.save_csv(dir.join(WEIGHTS_FILE))?;
        if let Some(h) = &self.inhibition {
            save_matrix_csv(h, dir.join(INHIBITION_FILE))?;
        }
        if let Some(pop) = &self.population {
            pop.write_csv(dir.join(POPULATION_FILE))?;
        }
        let mut index = String::new();
        for (k, t) in self.templates.iter().enumerate() {
            let name = format!("{k}.csv");
            patterns::save_image(t, tdir.join(&name))?;
            let _ = writeln!(index, "{name},{}", t.label().unwrap_or(""));
        }
        write_text(&dir.join(TEMPLATE_INDEX), &index)
    }

    /// Reads a model written by [`Model::save`]. Presentation history is
    /// not persisted.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let config_path = dir.join(CONFIG_FILE);
        let text = fs::read_to_string(&config_path).map_err(|e| Error::io(&config_path, e))?;
        let mut config = TrainerConfig::default();
        config.apply_text(&text)?;
        let model = Model::new(config)?;
        let weights = WeightMatrix::new(load_matrix_csv(dir.join(WEIGHTS_FILE))?)?;
        let inhibition_path = dir.join(INHIBITION_FILE);
        let inhibition = if inhibition_path.exists() {
            Some(load_matrix_csv(&inhibition_path)?)
        } else {
            None
        };
        let population_path = dir.join(POPULATION_FILE);
        let population = if population_path.exists() {
            let params = swarm_params(&model.config, &model.layout);
            Some(FireflyPopulation::load_csv(&population_path, params)?)
        } else {
            None
        };
        let index_path = dir.join(TEMPLATE_INDEX);
        let index = fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
        let mut templates = Vec::new();
        for line in index.lines().filter(|l| !l.trim().is_empty()) {
            let (name, label) = line.split_once(',').unwrap_or((line, ""));
            let bare = patterns::load_image_raw(dir.join(TEMPLATE_DIR).join(name.trim()))?;
            templates.push(if label.is_empty() { bare } else { bare.with_label(label) });
        }
        Ok(model
            .with_weights(weights)?
            .with_inhibition(inhibition)?
            .with_population(population)
            .with_templates(templates))
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn inhibition(&self) -> Option<&DMatrix<f64>> {
        self.inhibition.as_ref()
    }

    pub fn population(&self) -> Option<&FireflyPopulation> {
        self.population.as_ref()
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn history(&self) -> &[EvolveReport] {
        &self.history
    }

    pub fn templates(&self) -> &[Pattern] {
        &self.templates
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.config
    }

    /// Signed recurrent coupling `W - H`.
    pub fn coupling(&self) -> DMatrix<f64> {
        match &self.inhibition {
            Some(h) => self.weights.matrix() - h,
            None => self.weights.matrix().clone(),
        }
    }

    pub fn resolvent(&self) -> Resolvent {
        truncated_resolvent_of(&self.coupling())
    }

    fn check_pattern(&self, p: &Pattern) -> Result<()> {
        if p.len() != self.config.n() {
            return Err(Error::Shape(format!(
                "pattern of {} entries for {} neurons",
                p.len(),
                self.config.n()
            )));
        }
        Ok(())
    }

    /// Runs the swarm on `p` and folds the synthesized topology into the
    /// model: within the excitatory support the weights are blended toward
    /// the synthesized ones, and inhibition keeps the strongest surround
    /// seen so far. Returns the support as this presentation's plastic mask.
    fn apply_swarm(&mut self, p: &Pattern) -> Result<Option<PlasticMask>> {
        let Some(pop) = self.population.as_mut() else {
            return Ok(None);
        };
        if self.config.reset_per_pattern {
            pop.scatter();
        }
        pop.run(p, &self.layout, self.config.swarm.steps)?;
        let n = self.config.n();
        let synth = SynthesisParams {
            v: self.config.plasticity.v,
            ..self.config.synthesis
        };
        let s = synthesize_weights(pop, &self.layout, n, &synth)?.into_matrix();

        let support = s.map(|v| v > MASK_FLOOR);
        let lambda = self.config.prior_weight;
        let v = self.config.plasticity.v;
        let mut w = self.weights.matrix().clone();
        for (wij, (&sij, &on)) in w.iter_mut().zip(s.iter().zip(support.iter())) {
            if on {
                *wij = ((1.0 - lambda) * *wij + lambda * sij).clamp(0.0, v);
            }
        }
        self.weights = WeightMatrix::new(w)?;
        let inhib = s.map(|v| (-v).max(0.0));
        let mut h = match self.inhibition.take() {
            Some(h) => h.zip_map(&inhib, f64::max),
            None => inhib,
        };
        let budget = self.config.inhibition_budget;
        for mut row in h.row_iter_mut() {
            let total = row.sum();
            if total > budget {
                row *= budget / total;
            }
        }
        self.inhibition = Some(h);
        Ok(Some(support))
    }

    /// One presentation: swarm topology (if enabled), active set,
    /// correlations, plasticity.
    pub fn present_pattern(&mut self, p: &Pattern) -> Result<&EvolveReport> {
        self.check_pattern(p)?;
        let mask = self.apply_swarm(p)?;

        let source = match self.config.learn_schedule {
            LearnSchedule::AtOnset => p.clone(),
            LearnSchedule::AfterConvergence => {
                let resp = self.resolvent().apply(p.values())?;
                Pattern::from_activity(&resp, p.shape()).unwrap_or_else(|_| p.clone())
            }
        };
        let active = active_set_relative(&source, self.config.theta_act);
        let t = correlation_tensor(&self.resolvent(), &active)?;
        let params = self
            .config
            .plasticity
            .stabilized(self.config.n(), t.max_abs(), STIFFNESS_LIMIT);
        let (w, report) = evolve_weights_masked(&self.weights, &t, &params, mask.as_ref())?;
        self.weights = w;
        if !self.templates.iter().any(|q| q == p) {
            self.templates.push(p.clone());
        }
        self.history.push(report);
        Ok(self.history.last().expect("just pushed"))
    }

    /// Presents the pattern set `epochs` times in order.
    pub fn train(&mut self, patterns: &[Pattern]) -> Result<()> {
        for _ in 0..self.config.epochs.max(1) {
            for p in patterns {
                self.present_pattern(p)?;
            }
        }
        Ok(())
    }

    /// Equilibrium response to `cue`, clamped and normalized.
    pub fn respond(&self, cue: &Pattern) -> Result<Vec<f64>> {
        self.check_pattern(cue)?;
        let d = self.resolvent();
        let mut x: Vec<f64> = d.apply(cue.values())?.iter().map(|v| v.max(0.0)).collect();
        for _ in 0..self.config.recall_iterations {
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            x.iter_mut().for_each(|v| *v /= norm);
            x = d.apply(&x)?.iter().map(|v| v.max(0.0)).collect();
        }
        Ok(x)
    }

    fn output_pattern(&self, raw: &[f64], cue: &Pattern) -> Result<Pattern> {
        match Pattern::from_activity(raw, cue.shape()) {
            Ok(p) => Ok(p),
            Err(Error::Annihilated) => Ok(Pattern::zeros(cue.shape())),
            Err(e) => Err(e),
        }
    }

    fn score(&self, output: &Pattern, reference: &Pattern) -> RecallMetrics {
        recall_metrics(output, reference, &self.templates)
    }

    /// Single equilibrium pass through the trained network.
    pub fn recall(&self, cue: &Pattern) -> Result<Recall> {
        self.check_pattern(cue)?;
        if cue.norm() == 0.0 {
            return Err(Error::Annihilated);
        }
        let output = self.output_pattern(&self.respond(cue)?, cue)?;
        let metrics = self.score(&output, cue);
        Ok(Recall { output, metrics })
    }

    /// Recall from `original` with the `masked` entries hidden; scored
    /// against `original`.
    pub fn complete(&self, original: &Pattern, masked: &BTreeSet<usize>) -> Result<Completion> {
        self.check_pattern(original)?;
        let active = active_set_relative(original, self.config.theta_act);
        let low_confidence = !active.is_empty() && active.iter().all(|i| masked.contains(&i));
        let cue = match patterns::mask(original, masked) {
            Ok(c) => c,
            Err(Error::Annihilated) => Pattern::zeros(original.shape()),
            Err(e) => return Err(e),
        };
        let output = if cue.norm() == 0.0 {
            cue.clone()
        } else {
            self.output_pattern(&self.respond(&cue)?, &cue)?
        };
        let metrics = self.score(&output, original);
        Ok(Completion {
            cue,
            output,
            metrics,
            low_confidence,
        })
    }
}

/// Scores `output` against `reference` and every template.
pub fn recall_metrics(output: &Pattern, reference: &Pattern, templates: &[Pattern]) -> RecallMetrics {
    let template_cosines = templates
        .iter()
        .map(|t| (t.label().map(str::to_string), output.cosine(t)))
        .collect::<Vec<_>>();
    let best_match_label = template_cosines
        .iter()
        .filter(|(label, _)| label.is_some())
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .and_then(|(label, _)| label.clone());
    RecallMetrics {
        cosine: output.cosine(reference),
        mse: metrics::mse(output.values(), reference.values()),
        pearson: metrics::pearson(output.values(), reference.values()),
        best_match_label,
        template_cosines,
    }
}

//! Scripted scenarios: each trains a model on a generated pattern set,
//! probes it, and writes matrices, patterns, populations, PGM renderings
//! and a `report.txt` of `key = value` metrics into an output directory.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;

use crate::config::{InitScheme, TrainerConfig};
use crate::dynamics::save_matrix_csv;
use crate::error::{Error, Result};
use crate::patterns::{
    self, active_set_relative, gaussian_2d_with, Boundary, Pattern, Shape,
};
use crate::seed;
use crate::trainer::Model;

const STREAM_TEMPLATES: u64 = 10;
const STREAM_NOISE: u64 = 11;
const STREAM_MASK: u64 = 12;

/// Row whose weight profile is written by [`Experiment::Evolve1D`].
pub const PROFILE_ROW: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    /// Plasticity on a periodic line from a hand-wired start.
    Evolve1D,
    /// Noisy recall trained with and without the swarm, paired.
    Recall2D,
    Denoise,
    Complete,
    /// Recall of an equal-weight blend of two stored patterns.
    Fused,
    /// Label retrieval on 11x11 digit templates.
    Digits,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Evolve1D,
        Experiment::Recall2D,
        Experiment::Denoise,
        Experiment::Complete,
        Experiment::Fused,
        Experiment::Digits,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Evolve1D => "evolve1d",
            Experiment::Recall2D => "recall2d",
            Experiment::Denoise => "denoise",
            Experiment::Complete => "complete",
            Experiment::Fused => "fused",
            Experiment::Digits => "digits",
        }
    }

    /// Scenario defaults; config files and overrides apply on top.
    pub fn preset(self) -> TrainerConfig {
        let mut c = TrainerConfig::default();
        match self {
            Experiment::Evolve1D => {
                c.shape = Shape::Line(25);
                c.boundary = Boundary::Periodic;
                c.init = InitScheme::Handwired { neighbors: 3 };
                c.use_firefly = false;
                c.pattern_count = 1;
                c.epochs = 1;
            }
            Experiment::Fused | Experiment::Digits => {
                c.shape = Shape::Grid { rows: 11, cols: 11 };
                c.pattern_count = 2;
                // Two flies per cell keep the 121-cell swarm at desk scale;
                // the wider spacing stops them piling onto a single bump.
                c.population_factor = 2;
                c.swarm.d_min = 0.3;
            }
            Experiment::Recall2D | Experiment::Denoise | Experiment::Complete => {}
        }
        c
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
                Error::Config(format!("unknown experiment `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    /// Metrics in emission order.
    pub metrics: Vec<(String, f64)>,
    /// Every file written, relative to the output directory.
    pub files: Vec<PathBuf>,
}

impl ExperimentReport {
    fn new(experiment: Experiment) -> Self {
        ExperimentReport {
            experiment,
            metrics: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    fn put(&mut self, key: &str, value: f64) {
        self.metrics.push((key.to_string(), value));
    }

    pub fn to_kv(&self) -> String {
        let mut out = format!("experiment = {}\n", self.experiment);
        for (k, v) in &self.metrics {
            let _ = writeln!(out, "{k} = {v:?}");
        }
        out
    }
}

/// Collects artifacts under one directory and remembers what was written.
struct Sink<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl<'a> Sink<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Sink {
            dir,
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(PathBuf::from(name));
        self.dir.join(name)
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))
    }

    fn matrix(&mut self, name: &str, m: &DMatrix<f64>) -> Result<()> {
        let path = self.path(name);
        save_matrix_csv(m, path)
    }

    /// Pattern as CSV plus a peak-stretched PGM.
    fn pattern(&mut self, stem: &str, p: &Pattern) -> Result<()> {
        let csv = self.path(&format!("{stem}.csv"));
        patterns::save_image(p, csv)?;
        let pgm = self.path(&format!("{stem}.pgm"));
        patterns::save_pgm_scaled(p, pgm)
    }

    /// Nonnegative square matrix rendered as an image.
    fn matrix_image(&mut self, name: &str, m: &DMatrix<f64>) -> Result<()> {
        let n = m.nrows();
        let values: Vec<f64> = (0..n * n).map(|k| m[(k / n, k % n)].max(0.0)).collect();
        let p = Pattern::new(values, Shape::Grid { rows: n, cols: n })?;
        let path = self.path(name);
        patterns::save_pgm_scaled(&p, path)
    }
}

/// Runs `experiment` with `config` and writes its artifacts into `out_dir`.
pub fn run_experiment(
    config: &TrainerConfig,
    experiment: Experiment,
    out_dir: impl AsRef<Path>,
) -> Result<ExperimentReport> {
    config.validate()?;
    let mut sink = Sink::new(out_dir.as_ref())?;
    let mut report = ExperimentReport::new(experiment);
    match experiment {
        Experiment::Evolve1D => evolve_1d(config, &mut sink, &mut report)?,
        Experiment::Recall2D => recall_2d(config, &mut sink, &mut report)?,
        Experiment::Denoise => denoise(config, &mut sink, &mut report)?,
        Experiment::Complete => complete(config, &mut sink, &mut report)?,
        Experiment::Fused => fused(config, &mut sink, &mut report)?,
        Experiment::Digits => digits(config, &mut sink, &mut report)?,
    }
    sink.text("config.txt", &config.to_kv())?;
    let report_path = sink.path("report.txt");
    report.files = sink.files;
    fs::write(&report_path, report.to_kv()).map_err(|e| Error::io(&report_path, e))?;
    Ok(report)
}

/// `pattern_count` Gaussian templates with centers drawn from the master
/// seed, labelled `g0`, `g1`, ...
pub fn gaussian_templates(config: &TrainerConfig) -> Result<Vec<Pattern>> {
    let (rows, cols) = config.shape.dims();
    let sigma = config.scenario.pattern_sigma;
    let mut rng = seed::stream(config.master_seed, STREAM_TEMPLATES);
    let mut span = |len: usize| {
        if len > 1 {
            rng.random_range(0.0..(len - 1) as f64)
        } else {
            0.0
        }
    };
    (0..config.pattern_count)
        .map(|k| {
            let cx = span(cols);
            let cy = span(rows);
            let sy = if rows > 1 { sigma } else { 1.0 };
            Ok(gaussian_2d_with(rows, cols, cx, cy, sigma, sy, config.boundary)?
                .with_label(format!("g{k}")))
        })
        .collect()
}

/// Index of the template probed in single-cue scenarios.
pub fn probe_index(config: &TrainerConfig, count: usize) -> usize {
    (config.master_seed % count.max(1) as u64) as usize
}

/// Noisy copy of `p` with noise drawn from the master seed.
pub fn noisy_cue(config: &TrainerConfig, p: &Pattern) -> Result<Pattern> {
    patterns::add_noise(
        p,
        config.scenario.noise,
        seed::derive(config.master_seed, STREAM_NOISE),
    )
}

/// Random `mask_fraction` share of the active set of `p`.
pub fn completion_mask(config: &TrainerConfig, p: &Pattern) -> BTreeSet<usize> {
    let mut pool: Vec<usize> = active_set_relative(p, config.theta_act).iter().collect();
    let k = (pool.len() as f64 * config.scenario.mask_fraction).round() as usize;
    let mut rng = seed::stream(config.master_seed, STREAM_MASK);
    (0..k.min(pool.len()))
        .map(|_| {
            let j = rng.random_range(0..pool.len());
            pool.swap_remove(j)
        })
        .collect()
}

const DIGIT_ART: [(&str, [&str; 11]); 2] = [
    (
        "0",
        [
            "...........",
            "...#####...",
            "..##...##..",
            "..#.....#..",
            "..#.....#..",
            "..#.....#..",
            "..#.....#..",
            "..#.....#..",
            "..##...##..",
            "...#####...",
            "...........",
        ],
    ),
    (
        "1",
        [
            "...........",
            ".....##....",
            "....###....",
            "...#.##....",
            ".....##....",
            ".....##....",
            ".....##....",
            ".....##....",
            ".....##....",
            "...######..",
            "...........",
        ],
    ),
];

/// The built-in 11x11 digit templates, labelled by digit.
pub fn builtin_digits() -> Vec<Pattern> {
    DIGIT_ART
        .iter()
        .map(|(label, art)| {
            let values: Vec<f64> = art
                .iter()
                .flat_map(|row| row.chars().map(|c| if c == '#' { 1.0 } else { 0.0 }))
                .collect();
            Pattern::new(values, Shape::Grid { rows: 11, cols: 11 })
                .and_then(Pattern::normalize)
                .expect("built-in digit art is a nonzero 11x11 image")
                .with_label(*label)
        })
        .collect()
}

/// Digit templates from `digits_dir` (every `.pgm`/`.csv`, sorted by name)
/// or the built-ins; the first `pattern_count` are used.
pub fn digit_templates(config: &TrainerConfig) -> Result<Vec<Pattern>> {
    let all = match &config.scenario.digits_dir {
        Some(dir) => {
            let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
            let mut paths: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    matches!(
                        p.extension().and_then(|x| x.to_str()),
                        Some("pgm" | "csv")
                    )
                })
                .collect();
            paths.sort();
            paths.iter().map(patterns::load_image).collect::<Result<Vec<_>>>()?
        }
        None => builtin_digits(),
    };
    if all.len() < config.pattern_count {
        return Err(Error::Config(format!(
            "{} digit templates available, {} requested",
            all.len(),
            config.pattern_count
        )));
    }
    let templates: Vec<Pattern> = all.into_iter().take(config.pattern_count).collect();
    if let Some(t) = templates.iter().find(|t| t.shape() != config.shape) {
        return Err(Error::Shape(format!(
            "digit template {} is {}, network is {}",
            t.label().unwrap_or("?"),
            t.shape(),
            config.shape
        )));
    }
    Ok(templates)
}

fn write_model(sink: &mut Sink, model: &Model, suffix: &str) -> Result<()> {
    sink.matrix(&format!("w_matrix_final{suffix}.csv"), model.weights().matrix())?;
    sink.matrix_image(&format!("w_matrix_final{suffix}.pgm"), model.weights().matrix())?;
    if let Some(h) = model.inhibition() {
        sink.matrix(&format!("inhibition{suffix}.csv"), h)?;
    }
    if let Some(pop) = model.population() {
        let path = sink.path(&format!("population{suffix}.csv"));
        pop.write_csv(path)?;
    }
    let mut summary = String::from("presentation,steps,converged,final_max_rate\n");
    for (k, r) in model.history().iter().enumerate() {
        let _ = writeln!(summary, "{k},{},{},{:?}", r.steps, r.converged, r.final_max_rate);
    }
    sink.text(&format!("presentations{suffix}.csv"), &summary)?;
    if let Some(last) = model.history().last() {
        sink.text(&format!("trace{suffix}.csv"), &last.trace_csv())?;
    }
    Ok(())
}

fn train(config: &TrainerConfig, templates: &[Pattern], sink: &mut Sink, suffix: &str) -> Result<Model> {
    let mut model = Model::new(config.clone())?;
    sink.matrix(&format!("w_matrix_initial{suffix}.csv"), model.weights().matrix())?;
    model.train(templates)?;
    write_model(sink, &model, suffix)?;
    Ok(model)
}

fn put_training(report: &mut ExperimentReport, model: &Model, suffix: &str) {
    let h = model.history();
    let converged = h.iter().filter(|r| r.converged).count();
    let steps: usize = h.iter().map(|r| r.steps).sum();
    report.put(&format!("presentations{suffix}"), h.len() as f64);
    report.put(&format!("converged_presentations{suffix}"), converged as f64);
    report.put(&format!("total_steps{suffix}"), steps as f64);
    let sums = model.weights().row_sums();
    report.put(
        &format!("max_row_sum{suffix}"),
        sums.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
}

fn write_templates(sink: &mut Sink, templates: &[Pattern]) -> Result<()> {
    for (k, t) in templates.iter().enumerate() {
        let stem = match t.label() {
            Some(l) => format!("template_{k}_{l}"),
            None => format!("template_{k}"),
        };
        sink.pattern(&stem, t)?;
    }
    Ok(())
}

fn evolve_1d(config: &TrainerConfig, sink: &mut Sink, report: &mut ExperimentReport) -> Result<()> {
    let n = config.n();
    let input = Pattern::new(vec![1.0; n], config.shape)?.normalize()?;
    let mut model = Model::new(config.clone())?;
    let initial = model.weights().clone();
    sink.matrix("w_matrix_initial.csv", initial.matrix())?;
    sink.matrix_image("w_matrix_initial.pgm", initial.matrix())?;
    for _ in 0..config.epochs.max(1) {
        model.present_pattern(&input)?;
    }
    write_model(sink, &model, "")?;

    let w = model.weights().matrix();
    let row = PROFILE_ROW.min(n - 1);
    let mut profile = String::from("j,weight\n");
    for j in 0..n {
        let _ = writeln!(profile, "{j},{:?}", w[(row, j)]);
    }
    sink.text(&format!("weight_row_{row}.csv"), &profile)?;

    let reach = match config.init {
        InitScheme::Handwired { neighbors } => neighbors.max(1) as f64,
        InitScheme::Random { .. } => 3.0,
    };
    let (mut near, mut far) = (Vec::new(), Vec::new());
    let mut violations = 0usize;
    for i in 0..n {
        let mut first = Vec::new();
        let mut third = Vec::new();
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = config.shape.distance(i, j, config.boundary);
            if (d - 1.0).abs() < 1e-9 {
                near.push(w[(i, j)]);
                first.push(w[(i, j)]);
            } else if d > reach + 1e-9 {
                far.push(w[(i, j)]);
            }
            if (d - 3.0).abs() < 1e-9 {
                third.push(w[(i, j)]);
            }
        }
        let weakest_first = first.iter().copied().fold(f64::INFINITY, f64::min);
        let strongest_third = third.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !first.is_empty() && !third.is_empty() && weakest_first <= strongest_third {
            violations += 1;
        }
    }
    let mean = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let (near_mean, far_mean) = (mean(&near), mean(&far));
    let sums = model.weights().row_sums();
    let last = model.history().last().expect("one presentation");
    report.put("steps", last.steps as f64);
    report.put("converged", f64::from(u8::from(last.converged)));
    report.put("neighbor_mean", near_mean);
    report.put("distant_mean", far_mean);
    report.put(
        "neighbor_ratio",
        if far_mean > 0.0 { near_mean / far_mean } else { f64::INFINITY },
    );
    report.put("ordering_violations", violations as f64);
    report.put("min_row_sum", sums.iter().copied().fold(f64::INFINITY, f64::min));
    report.put("max_row_sum", sums.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    report.put("initial_final_max_diff", initial.max_abs_diff(model.weights()));
    Ok(())
}

fn recall_2d(config: &TrainerConfig, sink: &mut Sink, report: &mut ExperimentReport) -> Result<()> {
    let templates = gaussian_templates(config)?;
    write_templates(sink, &templates)?;
    let clean = &templates[probe_index(config, templates.len())];
    let cue = noisy_cue(config, clean)?;
    sink.pattern("cue", &cue)?;
    report.put("cue_cosine", cue.cosine(clean));
    for (use_firefly, suffix) in [(true, "_with"), (false, "_without")] {
        let cfg = TrainerConfig {
            use_firefly,
            ..config.clone()
        };
        let model = train(&cfg, &templates, sink, suffix)?;
        put_training(report, &model, suffix);
        let out = model.recall(&cue)?.output;
        sink.pattern(&format!("output{suffix}"), &out)?;
        report.put(&format!("cosine{suffix}"), out.cosine(clean));
    }
    let diff = report.get("cosine_with").unwrap_or(0.0) - report.get("cosine_without").unwrap_or(0.0);
    report.put("cosine_diff", diff);
    Ok(())
}

fn denoise(config: &TrainerConfig, sink: &mut Sink, report: &mut ExperimentReport) -> Result<()> {
    let templates = gaussian_templates(config)?;
    write_templates(sink, &templates)?;
    let model = train(config, &templates, sink, "")?;
    put_training(report, &model, "");
    let target = probe_index(config, templates.len());
    let clean = &templates[target];
    let cue = noisy_cue(config, clean)?;
    let recall = model.recall(&cue)?;
    sink.pattern("cue", &cue)?;
    sink.pattern("output", &recall.output)?;
    let (before, after) = (cue.cosine(clean), recall.output.cosine(clean));
    report.put("target", target as f64);
    report.put("cue_cosine", before);
    report.put("output_cosine", after);
    report.put("improvement", after - before);
    report.put("output_mse", recall.metrics.mse);
    report.put(
        "correct",
        f64::from(u8::from(recall.metrics.best_match_label.as_deref() == clean.label())),
    );
    Ok(())
}

fn complete(config: &TrainerConfig, sink: &mut Sink, report: &mut ExperimentReport) -> Result<()> {
    let templates = gaussian_templates(config)?;
    write_templates(sink, &templates)?;
    let model = train(config, &templates, sink, "")?;
    put_training(report, &model, "");
    let target = probe_index(config, templates.len());
    let original = &templates[target];
    let masked = completion_mask(config, original);
    let c = model.complete(original, &masked)?;
    sink.pattern("cue", &c.cue)?;
    sink.pattern("output", &c.output)?;
    let (before, after) = (c.cue.cosine(original), c.output.cosine(original));
    report.put("target", target as f64);
    report.put("masked_cells", masked.len() as f64);
    report.put("cue_cosine", before);
    report.put("output_cosine", after);
    report.put("improvement", after - before);
    report.put("low_confidence", f64::from(u8::from(c.low_confidence)));
    Ok(())
}

fn fused(config: &TrainerConfig, sink: &mut Sink, report: &mut ExperimentReport) -> Result<()> {
    let cfg = TrainerConfig {
        pattern_count: config.pattern_count.max(2),
        ..config.clone()
    };
    let templates = gaussian_templates(&cfg)?;
    write_templates(sink, &templates)?;
    let model = train(&cfg, &templates, sink, "")?;
    put_training(report, &model, "");
    let (a, b) = (&templates[0], &templates[1]);
    let cue = patterns::fuse(a, b, 1.0, 1.0)?;
    let out = model.recall(&cue)?.output;
    sink.pattern("cue", &cue)?;
    sink.pattern("output", &out)?;
    let (ca, cb) = (out.cosine(a), out.cosine(b));
    report.put("component_overlap", a.cosine(b));
    report.put("cosine_first", ca);
    report.put("cosine_second", cb);
    report.put("asymmetry", (ca - cb).abs());
    Ok(())
}

fn digits(config: &TrainerConfig, sink: &mut Sink, report: &mut ExperimentReport) -> Result<()> {
    let templates = digit_templates(config)?;
    write_templates(sink, &templates)?;
    let model = train(config, &templates, sink, "")?;
    put_training(report, &model, "");
    let target = probe_index(config, templates.len());
    let clean = &templates[target];
    let cue = noisy_cue(config, clean)?;
    let recall = model.recall(&cue)?;
    sink.pattern("cue", &cue)?;
    sink.pattern("output", &recall.output)?;
    report.put("target", target as f64);
    report.put("cue_cosine", cue.cosine(clean));
    report.put("output_cosine", recall.output.cosine(clean));
    let best = recall
        .metrics
        .template_cosines
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map_or(-1.0, |(k, _)| k as f64);
    report.put("best_match", best);
    report.put(
        "correct",
        f64::from(u8::from(recall.metrics.best_match_label.as_deref() == clean.label())),
    );
    Ok(())
}

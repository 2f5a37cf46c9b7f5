//! Firefly swarm that settles over the input grid and synthesizes a signed
//! excitatory/inhibitory topology.
//!
//! Flies live in the unit square. Each step, a fly's brightness is the
//! activity of its nearest grid cell; every fly then moves toward each
//! strictly brighter fly with attractiveness `b exp(-gamma r^2)` plus uniform
//! jitter of amplitude `eta`, and finally pairs closer than `d_min` are
//! pushed apart. Both polarities are drawn to active cells.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;

use crate::dynamics::WeightMatrix;
use crate::error::{Error, Result};
use crate::patterns::{Pattern, Shape};
use crate::seed::{self, SimRng};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Excitatory,
    Inhibitory,
}

impl Polarity {
    pub fn code(self) -> char {
        match self {
            Polarity::Excitatory => 'E',
            Polarity::Inhibitory => 'I',
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Polarity::Excitatory => 1.0,
            Polarity::Inhibitory => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Firefly {
    pub position: Point,
    pub polarity: Polarity,
    pub brightness: f64,
}

impl Firefly {
    pub fn new(position: Point, polarity: Polarity) -> Self {
        Firefly {
            position,
            polarity,
            brightness: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwarmParams {
    /// Base attractiveness.
    pub b: f64,
    /// Attractiveness decay rate, per squared unit-square distance.
    pub gamma: f64,
    /// Jitter amplitude.
    pub eta: f64,
    /// Minimum separation between flies.
    pub d_min: f64,
    /// Swarm steps per presented pattern.
    pub steps: usize,
    pub seed: u64,
    pub excit_fraction: f64,
}

impl Default for SwarmParams {
    fn default() -> Self {
        SwarmParams {
            b: 0.5,
            gamma: 1.0,
            eta: 0.02,
            d_min: 0.02,
            steps: 10,
            seed: 0,
            excit_fraction: 0.7,
        }
    }
}

impl SwarmParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |cond: bool, msg: &str| if cond { Ok(()) } else { Err(Error::param(msg)) };
        ok(self.b.is_finite() && self.b > 0.0, "swarm b must be > 0")?;
        ok(self.gamma.is_finite() && self.gamma > 0.0, "swarm gamma must be > 0")?;
        ok(self.eta.is_finite() && self.eta >= 0.0, "swarm eta must be >= 0")?;
        ok(self.d_min.is_finite() && self.d_min >= 0.0, "swarm d_min must be >= 0")?;
        ok(
            self.excit_fraction > 0.0 && self.excit_fraction < 1.0,
            "excit_fraction must lie in (0, 1)",
        )
    }
}

/// Kernels used to turn a settled population into weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisParams {
    /// Excitatory kernel width in grid pitches.
    pub sigma_w: f64,
    /// Inhibitory kernel width in grid pitches.
    pub sigma_inh: f64,
    /// Largest inhibitory magnitude.
    pub w_inh_max: f64,
    /// Largest excitatory weight.
    pub v: f64,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        SynthesisParams {
            sigma_w: 1.5,
            sigma_inh: 4.0,
            w_inh_max: 0.5,
            v: 1.0,
        }
    }
}

/// Positions of the grid cells inside the unit square, with equal pitch on
/// both axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    points: Vec<Point>,
    pitch: f64,
}

impl Layout {
    pub fn from_shape(shape: Shape) -> Self {
        let (rows, cols) = shape.dims();
        let pitch = 1.0 / rows.max(cols).max(1) as f64;
        let mut points = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let y = match shape {
                    Shape::Line(_) => 0.5,
                    Shape::Grid { .. } => (r as f64 + 0.5) * pitch,
                };
                points.push([(c as f64 + 0.5) * pitch, y]);
            }
        }
        Layout { points, pitch }
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn point(&self, i: usize) -> Point {
        self.points[i]
    }

    /// Index of the closest cell; lowest index on ties.
    pub fn nearest(&self, p: Point) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, q) in self.points.iter().enumerate() {
            let d = dist2(p, *q);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }
}

fn dist2(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn clip(p: Point) -> Point {
    [p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0)]
}

/// Attractiveness of a fly seen from distance `r`.
pub fn brightness(b: f64, gamma: f64, r: f64) -> f64 {
    b * (-gamma * r * r).exp()
}

/// Moves `xi` toward `xj` with distance-decaying attraction plus jitter.
pub fn move_toward(xi: Point, xj: Point, params: &SwarmParams, rng: &mut SimRng) -> Point {
    let attract = brightness(params.b, params.gamma, dist2(xi, xj).sqrt());
    let mut out = [0.0; 2];
    for c in 0..2 {
        let jitter = if params.eta > 0.0 {
            params.eta * (rng.random::<f64>() - 0.5)
        } else {
            0.0
        };
        out[c] = xi[c] + attract * (xj[c] - xi[c]) + jitter;
    }
    clip(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SettleReport {
    pub sweeps: usize,
    pub converged: bool,
}

const MAX_SWEEPS: usize = 100;

/// A swarm with its own random stream; cloning forks the stream.
#[derive(Debug, Clone)]
pub struct FireflyPopulation {
    flies: Vec<Firefly>,
    params: SwarmParams,
    rng: SimRng,
}

impl FireflyPopulation {
    /// `count` flies uniform in the unit square; the first
    /// `round(count * excit_fraction)` are excitatory.
    pub fn random(count: usize, params: SwarmParams) -> Result<Self> {
        params.validate()?;
        if count == 0 {
            return Err(Error::EmptyPopulation);
        }
        let mut rng = seed::rng(params.seed);
        let n_exc = ((count as f64 * params.excit_fraction).round() as usize).clamp(0, count);
        let flies = (0..count)
            .map(|k| {
                let polarity = if k < n_exc {
                    Polarity::Excitatory
                } else {
                    Polarity::Inhibitory
                };
                Firefly::new([rng.random(), rng.random()], polarity)
            })
            .collect();
        Ok(FireflyPopulation { flies, params, rng })
    }

    pub fn from_flies(flies: Vec<Firefly>, params: SwarmParams) -> Result<Self> {
        params.validate()?;
        if flies.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        let flies = flies
            .into_iter()
            .map(|f| Firefly {
                position: clip(f.position),
                ..f
            })
            .collect();
        Ok(FireflyPopulation {
            flies,
            params,
            rng: seed::rng(params.seed),
        })
    }

    pub fn flies(&self) -> &[Firefly] {
        &self.flies
    }

    pub fn params(&self) -> &SwarmParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.flies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flies.is_empty()
    }

    /// `(excitatory, inhibitory)` counts.
    pub fn counts(&self) -> (usize, usize) {
        let e = self
            .flies
            .iter()
            .filter(|f| f.polarity == Polarity::Excitatory)
            .count();
        (e, self.flies.len() - e)
    }

    /// Redraws every position uniformly, keeping polarities.
    pub fn scatter(&mut self) {
        for f in &mut self.flies {
            f.position = [self.rng.random(), self.rng.random()];
            f.brightness = 0.0;
        }
    }

    /// Sets each fly's brightness to the activity of its nearest cell.
    pub fn illuminate(&mut self, activity: &Pattern, layout: &Layout) -> Result<()> {
        if activity.len() != layout.n() {
            return Err(Error::Shape(format!(
                "activity of length {} on a layout of {} cells",
                activity.len(),
                layout.n()
            )));
        }
        for f in &mut self.flies {
            f.brightness = activity.values()[layout.nearest(f.position)];
        }
        Ok(())
    }

    /// One swarm step: brightness, attraction moves, then settling.
    pub fn step(&mut self, activity: &Pattern, layout: &Layout) -> Result<SettleReport> {
        if self.flies.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        self.illuminate(activity, layout)?;
        let n = self.flies.len();
        for i in 0..n {
            for j in 0..n {
                if self.flies[j].brightness > self.flies[i].brightness {
                    let target = self.flies[j].position;
                    let moved =
                        move_toward(self.flies[i].position, target, &self.params, &mut self.rng);
                    self.flies[i].position = moved;
                }
            }
        }
        Ok(self.enforce_min_distance())
    }

    pub fn run(&mut self, activity: &Pattern, layout: &Layout, steps: usize) -> Result<SettleReport> {
        let mut last = SettleReport {
            sweeps: 0,
            converged: true,
        };
        for _ in 0..steps {
            last = self.step(activity, layout)?;
        }
        Ok(last)
    }

    /// Pushes apart every pair closer than `d_min`, splitting the correction
    /// evenly, for at most 100 sweeps. Coincident pairs separate along a
    /// random direction.
    pub fn enforce_min_distance(&mut self) -> SettleReport {
        let d_min = self.params.d_min;
        if d_min <= 0.0 {
            return SettleReport {
                sweeps: 0,
                converged: true,
            };
        }
        let limit = d_min * (1.0 - 1e-12);
        let half = 0.5 * d_min;
        let mut order: Vec<usize> = (0..self.flies.len()).collect();
        for sweep in 1..=MAX_SWEEPS {
            // Pairs are visited in x order so that the scan for partners can
            // stop at the first fly more than `d_min` to the right. Moves
            // within a sweep can stale the order; a sweep without moves is
            // exact, so convergence is only declared on a complete check.
            order.sort_by(|&a, &b| {
                self.flies[a].position[0]
                    .total_cmp(&self.flies[b].position[0])
                    .then(a.cmp(&b))
            });
            let mut moved = false;
            for (k, &i) in order.iter().enumerate() {
                for &j in &order[k + 1..] {
                    let a = self.flies[i].position;
                    let b = self.flies[j].position;
                    if b[0] - a[0] >= limit {
                        break;
                    }
                    let d = dist2(a, b).sqrt();
                    if d >= limit {
                        continue;
                    }
                    moved = true;
                    let u = if d > 1e-12 {
                        [(b[0] - a[0]) / d, (b[1] - a[1]) / d]
                    } else {
                        let theta = self.rng.random::<f64>() * std::f64::consts::TAU;
                        [theta.cos(), theta.sin()]
                    };
                    let mut mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                    for c in 0..2 {
                        // Keep both endpoints inside the square.
                        let reach = (u[c] * half).abs();
                        mid[c] = if reach >= 0.5 { 0.5 } else { mid[c].clamp(reach, 1.0 - reach) };
                    }
                    self.flies[i].position =
                        clip([mid[0] - u[0] * half, mid[1] - u[1] * half]);
                    self.flies[j].position =
                        clip([mid[0] + u[0] * half, mid[1] + u[1] * half]);
                }
            }
            if !moved {
                return SettleReport {
                    sweeps: sweep,
                    converged: true,
                };
            }
        }
        SettleReport {
            sweeps: MAX_SWEEPS,
            converged: self.min_pair_distance() >= limit,
        }
    }

    pub fn min_pair_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.flies.iter().enumerate() {
            for b in &self.flies[i + 1..] {
                best = best.min(dist2(a.position, b.position));
            }
        }
        best.sqrt()
    }

    /// One row per fly: `x,y,polarity,brightness`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,polarity,brightness\n");
        for f in &self.flies {
            let _ = writeln!(
                out,
                "{:?},{:?},{},{:?}",
                f.position[0],
                f.position[1],
                f.polarity.code(),
                f.brightness
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Parses [`FireflyPopulation::to_csv`] output.
    pub fn load_csv(path: impl AsRef<Path>, params: SwarmParams) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let bad = |reason: String| Error::DimensionMismatch {
            path: path.into(),
            reason,
        };
        let mut flies = Vec::new();
        for (k, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 4 {
                return Err(bad(format!("line {}: expected 4 fields", k + 1)));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number `{s}`")));
            let polarity = match parts[2] {
                "E" => Polarity::Excitatory,
                "I" => Polarity::Inhibitory,
                other => return Err(bad(format!("bad polarity `{other}`"))),
            };
            flies.push(Firefly {
                position: [num(parts[0])?, num(parts[1])?],
                polarity,
                brightness: num(parts[3])?,
            });
        }
        Self::from_flies(flies, params)
    }
}

/// Functional form of [`FireflyPopulation::step`].
pub fn swarm_step(
    pop: &FireflyPopulation,
    activity: &Pattern,
    layout: &Layout,
) -> Result<(FireflyPopulation, SettleReport)> {
    let mut next = pop.clone();
    let report = next.step(activity, layout)?;
    Ok((next, report))
}

pub fn enforce_min_distance(pop: &FireflyPopulation) -> (FireflyPopulation, SettleReport) {
    let mut next = pop.clone();
    let report = next.enforce_min_distance();
    (next, report)
}

/// Signed weights from a settled population.
///
/// Every fly is assigned to its nearest cell `j` and adds
/// `±b exp(-|x_i - x_f|^2 / (2 sigma^2))` to `w_ij` for each cell `i`,
/// positive with width `sigma_w` for excitatory flies, negative with width
/// `sigma_inh` for inhibitory ones. A column hosting both kinds is therefore
/// center-surround when `sigma_inh > sigma_w`. Each row is then scaled so its positive
/// part sums to 1 and clamped to `[-w_inh_max, v]`; the diagonal is zero.
pub fn synthesize_weights(
    pop: &FireflyPopulation,
    layout: &Layout,
    n: usize,
    synth: &SynthesisParams,
) -> Result<WeightMatrix> {
    if pop.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    if pop.counts().0 == 0 {
        return Err(Error::MissingPolarity("excitatory"));
    }
    if layout.n() != n {
        return Err(Error::Shape(format!(
            "layout has {} cells, expected {n}",
            layout.n()
        )));
    }
    if !(synth.sigma_w > 0.0 && synth.sigma_inh > 0.0 && synth.v > 0.0 && synth.w_inh_max >= 0.0)
    {
        return Err(Error::param("invalid synthesis parameters"));
    }
    let denom = |sigma_pitches: f64| 2.0 * (sigma_pitches * layout.pitch()).powi(2);
    let (denom_e, denom_i) = (denom(synth.sigma_w), denom(synth.sigma_inh));
    let b = pop.params.b;
    let mut w = DMatrix::zeros(n, n);
    for f in &pop.flies {
        let j = layout.nearest(f.position);
        let (s, d) = match f.polarity {
            Polarity::Excitatory => (b, denom_e),
            Polarity::Inhibitory => (-b, denom_i),
        };
        for i in 0..n {
            w[(i, j)] += s * (-dist2(layout.point(i), f.position) / d).exp();
        }
    }
    w.fill_diagonal(0.0);
    for mut row in w.row_iter_mut() {
        let positive: f64 = row.iter().filter(|v| **v > 0.0).sum();
        if positive > 0.0 {
            row /= positive;
        }
        for v in row.iter_mut() {
            *v = v.clamp(-synth.w_inh_max, synth.v);
        }
    }
    WeightMatrix::new(w)
}

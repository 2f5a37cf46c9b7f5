//! Input patterns: Gaussian bumps on a line or grid, noise, fusion, masking,
//! and the active-set threshold used to pick correlation sources.
//!
//! Grids are flattened row-major: entry `(row, col)` lives at
//! `row * cols + col`. The x coordinate of a 2D Gaussian runs along columns
//! and y along rows.

mod io;

use std::collections::BTreeSet;
use std::fmt;

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::seed;

pub use io::{load_image, load_image_raw, save_image, save_pgm, save_pgm_scaled, PgmEncoding};

/// Spatial arrangement of the neurons a pattern addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Line(usize),
    Grid { rows: usize, cols: usize },
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Line(n) => n,
            Shape::Grid { rows, cols } => rows * cols,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(rows, cols)`; a line is a single row.
    pub fn dims(&self) -> (usize, usize) {
        match *self {
            Shape::Line(n) => (1, n),
            Shape::Grid { rows, cols } => (rows, cols),
        }
    }

    /// Coordinates of neuron `i` as `(x, y)` in cell units.
    pub fn coords(&self, i: usize) -> (f64, f64) {
        let (_, cols) = self.dims();
        ((i % cols) as f64, (i / cols) as f64)
    }

    /// Euclidean distance between neurons in cell units, wrapping around each
    /// axis when `boundary` is periodic.
    pub fn distance(&self, i: usize, j: usize, boundary: Boundary) -> f64 {
        let (rows, cols) = self.dims();
        let (xi, yi) = self.coords(i);
        let (xj, yj) = self.coords(j);
        let dx = axis_delta(xi, xj, cols, boundary);
        let dy = axis_delta(yi, yj, rows, boundary);
        (dx * dx + dy * dy).sqrt()
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Line(n) => write!(f, "line({n})"),
            Shape::Grid { rows, cols } => write!(f, "{rows}x{cols}"),
        }
    }
}

/// Edge treatment for distances and generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

fn axis_delta(a: f64, b: f64, extent: usize, boundary: Boundary) -> f64 {
    let d = (a - b).abs();
    match boundary {
        Boundary::Open => d,
        Boundary::Periodic => d.min(extent as f64 - d),
    }
}

/// Non-negative activity vector over the network's neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    values: Vec<f64>,
    shape: Shape,
    label: Option<String>,
}

impl Pattern {
    /// Wraps raw activities without normalizing.
    pub fn new(values: Vec<f64>, shape: Shape) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::Shape(format!(
                "{} values for shape {shape}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::param(format!(
                "pattern entries must be finite and non-negative, found {bad}"
            )));
        }
        Ok(Pattern {
            values,
            shape,
            label: None,
        })
    }

    pub fn zeros(shape: Shape) -> Self {
        Pattern {
            values: vec![0.0; shape.len()],
            shape,
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Scales to unit Euclidean norm.
    pub fn normalize(mut self) -> Result<Self> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(Error::Annihilated);
        }
        self.values.iter_mut().for_each(|v| *v /= norm);
        Ok(self)
    }

    /// Builds a normalized pattern from arbitrary reals, clamping negatives.
    pub fn from_activity(values: &[f64], shape: Shape) -> Result<Self> {
        let clamped = values.iter().map(|v| v.max(0.0)).collect();
        Pattern::new(clamped, shape)?.normalize()
    }

    pub fn cosine(&self, other: &Pattern) -> f64 {
        crate::metrics::cosine(&self.values, &other.values)
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("sigma must be positive, got {sigma}")))
    }
}

fn bump(x: f64, center: f64, sigma: f64, extent: usize, boundary: Boundary) -> f64 {
    let d = axis_delta(x, center, extent, boundary) / sigma;
    (-0.5 * d * d).exp()
}

/// Unnormalized 1D bump `exp(-((x - center) / sigma)^2 / 2)`.
pub fn gaussian_1d_raw(n: usize, center: f64, sigma: f64, boundary: Boundary) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::param("neuron count must be at least 1"));
    }
    check_sigma(sigma)?;
    Ok((0..n)
        .map(|x| bump(x as f64, center, sigma, n, boundary))
        .collect())
}

/// Normalized Gaussian bump on a line of `n` neurons.
pub fn gaussian_1d(n: usize, center: f64, sigma: f64) -> Result<Pattern> {
    gaussian_1d_with(n, center, sigma, Boundary::Open)
}

/// As [`gaussian_1d`]; with [`Boundary::Periodic`] the bump wraps around.
pub fn gaussian_1d_with(n: usize, center: f64, sigma: f64, boundary: Boundary) -> Result<Pattern> {
    let values = gaussian_1d_raw(n, center, sigma, boundary)?;
    Pattern::new(values, Shape::Line(n))?.normalize()
}

/// Unnormalized separable 2D bump, row-major.
pub fn gaussian_2d_raw(
    rows: usize,
    cols: usize,
    center_x: f64,
    center_y: f64,
    sigma_x: f64,
    sigma_y: f64,
    boundary: Boundary,
) -> Result<Vec<f64>> {
    if rows == 0 || cols == 0 {
        return Err(Error::param("grid dimensions must be at least 1"));
    }
    check_sigma(sigma_x)?;
    check_sigma(sigma_y)?;
    let mut values = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let gy = bump(r as f64, center_y, sigma_y, rows, boundary);
        for c in 0..cols {
            values.push(gy * bump(c as f64, center_x, sigma_x, cols, boundary));
        }
    }
    Ok(values)
}

pub fn gaussian_2d(
    rows: usize,
    cols: usize,
    center_x: f64,
    center_y: f64,
    sigma_x: f64,
    sigma_y: f64,
) -> Result<Pattern> {
    gaussian_2d_with(rows, cols, center_x, center_y, sigma_x, sigma_y, Boundary::Open)
}

#[allow(clippy::too_many_arguments)]
pub fn gaussian_2d_with(
    rows: usize,
    cols: usize,
    center_x: f64,
    center_y: f64,
    sigma_x: f64,
    sigma_y: f64,
    boundary: Boundary,
) -> Result<Pattern> {
    let values = gaussian_2d_raw(rows, cols, center_x, center_y, sigma_x, sigma_y, boundary)?;
    Pattern::new(values, Shape::Grid { rows, cols })?.normalize()
}

/// The raw i.i.d. perturbation [`add_noise`] applies for a given seed.
pub fn noise_vector(n: usize, level: f64, seed: u64) -> Result<Vec<f64>> {
    if !(level.is_finite() && level >= 0.0) {
        return Err(Error::param(format!("noise level must be >= 0, got {level}")));
    }
    if level == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let normal = Normal::new(0.0, level).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = seed::rng(seed);
    Ok((0..n).map(|_| normal.sample(&mut rng)).collect())
}

/// Adds zero-mean Gaussian noise, clamps at zero and renormalizes.
pub fn add_noise(p: &Pattern, level: f64, seed: u64) -> Result<Pattern> {
    let noise = noise_vector(p.len(), level, seed)?;
    if level == 0.0 {
        return Ok(p.clone());
    }
    let values: Vec<f64> = p
        .values
        .iter()
        .zip(&noise)
        .map(|(v, e)| (v + e).max(0.0))
        .collect();
    let mut out = Pattern::new(values, p.shape)?.normalize()?;
    out.label = p.label.clone();
    Ok(out)
}

/// Weighted superposition of two patterns, normalized.
pub fn fuse(p1: &Pattern, p2: &Pattern, weight1: f64, weight2: f64) -> Result<Pattern> {
    if p1.shape != p2.shape {
        return Err(Error::Shape(format!(
            "cannot fuse {} with {}",
            p1.shape, p2.shape
        )));
    }
    if !(weight1 >= 0.0 && weight2 >= 0.0) || (weight1 == 0.0 && weight2 == 0.0) {
        return Err(Error::param(
            "fusion weights must be non-negative and not both zero",
        ));
    }
    let values = p1
        .values
        .iter()
        .zip(&p2.values)
        .map(|(a, b)| weight1 * a + weight2 * b)
        .collect();
    Pattern::new(values, p1.shape)?.normalize()
}

/// Zeroes the listed entries and renormalizes.
pub fn mask(p: &Pattern, masked: &BTreeSet<usize>) -> Result<Pattern> {
    if let Some(&bad) = masked.iter().find(|&&i| i >= p.len()) {
        return Err(Error::param(format!(
            "mask index {bad} out of range for {} neurons",
            p.len()
        )));
    }
    if masked.is_empty() {
        return Ok(p.clone());
    }
    let mut values = p.values.clone();
    for &i in masked {
        values[i] = 0.0;
    }
    let mut out = Pattern::new(values, p.shape)?.normalize()?;
    out.label = p.label.clone();
    Ok(out)
}

/// Indices of the neurons a pattern drives.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActiveSet(BTreeSet<usize>);

impl ActiveSet {
    pub fn all(n: usize) -> Self {
        ActiveSet((0..n).collect())
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        ActiveSet(indices.into_iter().collect())
    }

    pub fn indices(&self) -> &BTreeSet<usize> {
        &self.0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(&i)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

/// Neurons whose activity is strictly above `threshold`.
pub fn active_set(p: &Pattern, threshold: f64) -> ActiveSet {
    ActiveSet(
        p.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > threshold)
            .map(|(i, _)| i)
            .collect(),
    )
}

/// Active set with a threshold relative to the pattern's peak.
pub fn active_set_relative(p: &Pattern, fraction: f64) -> ActiveSet {
    active_set(p, fraction * p.max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Independent scalar evaluation of the bump formula.
    fn oracle_1d(n: usize, mu: f64, sigma: f64) -> Vec<f64> {
        let mut g = Vec::new();
        for x in 0..n {
            let z = (x as f64 - mu) / sigma;
            g.push(f64::exp(-(z * z) / 2.0));
        }
        let s: f64 = g.iter().map(|v| v * v).sum();
        g.iter().map(|v| v / s.sqrt()).collect()
    }

    #[test]
    fn gaussian_1d_peak_and_symmetry() {
        let raw = gaussian_1d_raw(25, 12.0, 3.7, Boundary::Open).unwrap();
        assert_eq!(raw[12], 1.0);
        let raw = gaussian_1d_raw(25, 12.0, 2.0, Boundary::Open).unwrap();
        assert_eq!(raw[10], raw[14]);
    }

    #[test]
    fn gaussian_1d_matches_oracle() {
        let p = gaussian_1d(25, 12.0, 2.0).unwrap();
        let expected = oracle_1d(25, 12.0, 2.0);
        for (a, b) in p.values().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((p.norm() - 1.0).abs() < 1e-12);
        assert_eq!(p.shape(), Shape::Line(25));
    }

    #[test]
    fn gaussian_rejects_bad_parameters() {
        assert!(matches!(gaussian_1d(0, 0.0, 1.0), Err(Error::Parameter(_))));
        assert!(matches!(gaussian_1d(5, 0.0, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(gaussian_1d(5, 0.0, -1.0), Err(Error::Parameter(_))));
        assert!(matches!(
            gaussian_2d(0, 5, 0.0, 0.0, 1.0, 1.0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            gaussian_2d(5, 5, 0.0, 0.0, 1.0, 0.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn gaussian_2d_peak_and_radial_symmetry() {
        let p = gaussian_2d(5, 5, 2.0, 2.0, 1.3, 1.3).unwrap();
        let argmax = p
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(argmax, 12);
        let at = |r: usize, c: usize| p.values()[r * 5 + c];
        assert_eq!(at(1, 2), at(3, 2));
        assert_eq!(at(1, 2), at(2, 1));
        assert_eq!(at(1, 2), at(2, 3));
    }

    #[test]
    fn gaussian_2d_matches_oracle() {
        let (cx, cy, sx, sy) = (1.0, 3.0, 1.0, 2.0);
        let p = gaussian_2d(5, 5, cx, cy, sx, sy).unwrap();
        let mut g = vec![0.0; 25];
        for y in 0..5 {
            for x in 0..5 {
                let zx = (x as f64 - cx) / sx;
                let zy = (y as f64 - cy) / sy;
                g[y * 5 + x] = f64::exp(-(zx * zx + zy * zy) / 2.0);
            }
        }
        let s = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (a, b) in p.values().iter().zip(&g) {
            assert!((a - b / s).abs() < 1e-12);
        }
        assert_eq!(p.shape(), Shape::Grid { rows: 5, cols: 5 });
    }

    #[test]
    fn periodic_generator_is_translation_covariant() {
        let a = gaussian_1d_with(25, 3.0, 2.0, Boundary::Periodic).unwrap();
        let b = gaussian_1d_with(25, 10.0, 2.0, Boundary::Periodic).unwrap();
        for i in 0..25 {
            assert!((a.values()[i] - b.values()[(i + 7) % 25]).abs() < 1e-12);
        }
        let a = gaussian_2d_with(5, 6, 1.0, 1.0, 1.0, 1.5, Boundary::Periodic).unwrap();
        let b = gaussian_2d_with(5, 6, 3.0, 4.0, 1.0, 1.5, Boundary::Periodic).unwrap();
        for r in 0..5 {
            for c in 0..6 {
                let shifted = ((r + 3) % 5) * 6 + (c + 2) % 6;
                assert!((a.values()[r * 6 + c] - b.values()[shifted]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_noise_is_identity() {
        let p = gaussian_1d(25, 12.0, 2.0).unwrap();
        assert_eq!(add_noise(&p, 0.0, 9).unwrap(), p);
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let p = gaussian_2d(5, 5, 2.0, 2.0, 1.0, 1.0).unwrap();
        let a = add_noise(&p, 0.2, 42).unwrap();
        let b = add_noise(&p, 0.2, 42).unwrap();
        let c = add_noise(&p, 0.2, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert!(a.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn noise_is_zero_mean() {
        // Monte Carlo over seeds: the grand mean of 25 000 draws with
        // sd 0.2 has standard error 0.2 / sqrt(25 000).
        let n = 25;
        let seeds = 1000;
        let mut sum = 0.0;
        for s in 0..seeds {
            sum += noise_vector(n, 0.2, s).unwrap().iter().sum::<f64>();
        }
        let count = (n as u64 * seeds) as f64;
        let mean = sum / count;
        let se = 0.2 / count.sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean} se {se}");
        assert!(noise_vector(3, -0.1, 0).is_err());
    }

    #[test]
    fn fuse_contracts() {
        let p = gaussian_2d(5, 5, 2.0, 2.0, 1.0, 1.0).unwrap();
        let q = gaussian_2d(5, 5, 0.0, 4.0, 1.0, 1.0).unwrap();
        let same = fuse(&p, &p, 1.0, 1.0).unwrap();
        for (a, b) in same.values().iter().zip(p.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        let degenerate = fuse(&p, &q, 1.0, 0.0).unwrap();
        for (a, b) in degenerate.values().iter().zip(p.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(fuse(&p, &q, 0.0, 0.0).is_err());
        let line = gaussian_1d(25, 3.0, 1.0).unwrap();
        assert!(matches!(fuse(&p, &line, 1.0, 1.0), Err(Error::Shape(_))));
    }

    #[test]
    fn fuse_support_is_union() {
        // Compact-support patterns: two disjoint 2x2 blocks on a 5x5 grid.
        let grid = Shape::Grid { rows: 5, cols: 5 };
        let mut a = vec![0.0; 25];
        let mut b = vec![0.0; 25];
        for &i in &[0, 1, 5, 6] {
            a[i] = 1.0;
        }
        for &i in &[18, 19, 23, 24] {
            b[i] = 2.0;
        }
        let pa = Pattern::new(a.clone(), grid).unwrap().normalize().unwrap();
        let pb = Pattern::new(b.clone(), grid).unwrap().normalize().unwrap();
        let f = fuse(&pa, &pb, 1.0, 1.0).unwrap();
        for i in 0..25 {
            let expected = a[i] > 0.0 || b[i] > 0.0;
            assert_eq!(f.values()[i] > 0.0, expected, "index {i}");
        }
    }

    #[test]
    fn mask_contracts() {
        let p = gaussian_2d(5, 5, 2.0, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(mask(&p, &BTreeSet::new()).unwrap(), p);
        let all: BTreeSet<usize> = (0..25).collect();
        assert!(matches!(mask(&p, &all), Err(Error::Annihilated)));
        let out_of_range: BTreeSet<usize> = [25].into();
        assert!(matches!(mask(&p, &out_of_range), Err(Error::Parameter(_))));

        // 30% of 25 entries, chosen around the peak.
        let masked: BTreeSet<usize> = [6, 7, 8, 11, 12, 13, 17, 18].into();
        let m = mask(&p, &masked).unwrap();
        let cos = m.cosine(&p);
        assert!(cos > 0.0 && cos < 1.0, "cos {cos}");
    }

    #[test]
    fn active_set_contracts() {
        let p = gaussian_2d(5, 5, 2.0, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(active_set(&p, 0.0).len(), 25);
        assert!(active_set(&p, p.max()).is_empty());

        let theta = 0.5 * p.max();
        let mut expected = Vec::new();
        for i in 0..p.len() {
            if p.values()[i] > theta {
                expected.push(i);
            }
        }
        let got: Vec<usize> = active_set(&p, theta).iter().collect();
        assert_eq!(got, expected);
        assert_eq!(active_set_relative(&p, 0.5), active_set(&p, theta));
    }

    #[test]
    fn pattern_rejects_negative_entries() {
        assert!(Pattern::new(vec![0.1, -0.2], Shape::Line(2)).is_err());
        assert!(Pattern::new(vec![0.1], Shape::Line(2)).is_err());
        assert!(matches!(
            Pattern::zeros(Shape::Line(3)).normalize(),
            Err(Error::Annihilated)
        ));
    }

    #[test]
    fn periodic_distance_wraps() {
        let s = Shape::Line(25);
        assert_eq!(s.distance(0, 24, Boundary::Periodic), 1.0);
        assert_eq!(s.distance(0, 24, Boundary::Open), 24.0);
        let g = Shape::Grid { rows: 5, cols: 5 };
        assert_eq!(g.distance(0, 24, Boundary::Periodic), 2f64.sqrt());
    }

    fn arb_pattern() -> impl Strategy<Value = Pattern> {
        prop::collection::vec(0.0f64..1.0, 25).prop_filter_map("nonzero", |v| {
            Pattern::new(v, Shape::Grid { rows: 5, cols: 5 })
                .ok()?
                .normalize()
                .ok()
        })
    }

    proptest! {
        #[test]
        fn generators_have_unit_norm(mu in -3.0f64..30.0, sigma in 0.2f64..8.0, cy in -2.0f64..7.0) {
            let p = gaussian_1d(25, mu, sigma).unwrap();
            prop_assert!((p.norm() - 1.0).abs() < 1e-12);
            let q = gaussian_2d(5, 7, mu / 4.0, cy, sigma, sigma * 0.5).unwrap();
            prop_assert!((q.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn masks_compose_as_union(
            p in arb_pattern(),
            a in prop::collection::btree_set(0usize..25, 0..6),
            b in prop::collection::btree_set(0usize..25, 0..6),
        ) {
            let union: BTreeSet<usize> = a.union(&b).copied().collect();
            let direct = mask(&p, &union);
            let twice = mask(&p, &a).and_then(|m| mask(&m, &b));
            match (direct, twice) {
                (Ok(x), Ok(y)) => {
                    for (u, v) in x.values().iter().zip(y.values()) {
                        prop_assert!((u - v).abs() < 1e-12);
                    }
                }
                (Err(Error::Annihilated), Err(Error::Annihilated)) => {}
                (x, y) => prop_assert!(false, "mismatch {:?} vs {:?}", x, y),
            }
        }
    }
}

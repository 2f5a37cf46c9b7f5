//! Equilibrium signal propagation through the lateral weights.
//!
//! Fast signal deviations obey `c = W c + s`, solved by `c = (I - W)^-1 s`.
//! The inverse is replaced by its Neumann series cut after the cubic term,
//! `D = I + W + W^2 + W^3`, and source fluctuations are taken as unit-variance
//! and mutually uncorrelated. The correlation of responses seeded from an
//! active set `S` is then `T_ij = sum_{k in S} D_ik D_jk`.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::patterns::{ActiveSet, Pattern};

/// Lateral connection strengths `w_ij` (input from `j` onto `i`) with no
/// self-connections.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    w: DMatrix<f64>,
}

impl WeightMatrix {
    /// Validates a square, finite matrix and forces the diagonal to zero.
    pub fn new(mut w: DMatrix<f64>) -> Result<Self> {
        if !w.is_square() {
            return Err(Error::Shape(format!(
                "weight matrix must be square, got {}x{}",
                w.nrows(),
                w.ncols()
            )));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("weight matrix has non-finite entries"));
        }
        w.fill_diagonal(0.0);
        Ok(WeightMatrix { w })
    }

    pub fn zeros(n: usize) -> Self {
        WeightMatrix {
            w: DMatrix::zeros(n, n),
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { f(i, j) }))
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.w
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.w.row_iter().map(|r| r.sum()).collect()
    }

    /// Induced infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.w)
    }

    pub fn max_abs_diff(&self, other: &WeightMatrix) -> f64 {
        (&self.w - &other.w).amax()
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        save_matrix_csv(&self.w, path)
    }
}

/// `I + W + W^2 + W^3`.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolvent {
    d: DMatrix<f64>,
}

impl Resolvent {
    pub fn from_matrix(d: DMatrix<f64>) -> Result<Self> {
        if !d.is_square() {
            return Err(Error::Shape("resolvent must be square".into()));
        }
        Ok(Resolvent { d })
    }

    pub fn n(&self) -> usize {
        self.d.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.d
    }

    /// `D x` on raw (possibly signed) vectors.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n() {
            return Err(Error::Shape(format!(
                "vector of length {} against {} neurons",
                x.len(),
                self.n()
            )));
        }
        let y = &self.d * DVector::from_column_slice(x);
        Ok(y.as_slice().to_vec())
    }
}

pub fn truncated_resolvent(w: &WeightMatrix) -> Resolvent {
    truncated_resolvent_of(w.matrix())
}

/// Same as [`truncated_resolvent`] for an arbitrary square matrix, e.g. a
/// signed effective coupling.
pub fn truncated_resolvent_of(w: &DMatrix<f64>) -> Resolvent {
    let n = w.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    // Horner form: I + W (I + W (I + W)).
    let inner = &eye + w;
    let inner = &eye + w * inner;
    Resolvent {
        d: &eye + w * inner,
    }
}

/// Equilibrium response to a source pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    /// `D s`, signed.
    pub raw: Vec<f64>,
    /// `raw` clamped at zero, read as activity.
    pub activity: Vec<f64>,
}

pub fn equilibrium_response(d: &Resolvent, s: &Pattern) -> Result<Response> {
    let raw = d.apply(s.values())?;
    let activity = raw.iter().map(|v| v.max(0.0)).collect();
    Ok(Response { raw, activity })
}

/// Equilibrium correlations seeded from an active set.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTensor {
    t: DMatrix<f64>,
    source_set: ActiveSet,
}

impl CorrelationTensor {
    pub fn zeros(n: usize) -> Self {
        CorrelationTensor {
            t: DMatrix::zeros(n, n),
            source_set: ActiveSet::default(),
        }
    }

    /// Wraps an explicit matrix, e.g. a hand-built cooperation profile.
    pub fn from_matrix(t: DMatrix<f64>, source_set: ActiveSet) -> Result<Self> {
        if !t.is_square() {
            return Err(Error::Shape("correlation tensor must be square".into()));
        }
        Ok(CorrelationTensor { t, source_set })
    }

    pub fn n(&self) -> usize {
        self.t.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.t
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.t[(i, j)]
    }

    pub fn source_set(&self) -> &ActiveSet {
        &self.source_set
    }

    /// Computed from an empty source set; every entry is zero.
    pub fn is_empty(&self) -> bool {
        self.source_set.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.t.amax()
    }
}

/// `T_ij = sum_{k in S} D_ik D_jk`, a Gram matrix of the rows of `D`
/// restricted to the source columns.
pub fn correlation_tensor(d: &Resolvent, sources: &ActiveSet) -> Result<CorrelationTensor> {
    let n = d.n();
    if let Some(bad) = sources.iter().find(|&k| k >= n) {
        return Err(Error::param(format!(
            "source index {bad} out of range for {n} neurons"
        )));
    }
    let mut t = DMatrix::zeros(n, n);
    for k in sources.iter() {
        let col = d.d.column(k);
        t.ger(1.0, &col, &col, 1.0);
    }
    Ok(CorrelationTensor {
        t,
        source_set: sources.clone(),
    })
}

pub fn norm_inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Writes `n` on the first line, then `n` rows of `n` comma-separated reals.
pub fn save_matrix_csv(m: &DMatrix<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("{}\n", m.nrows());
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let head = lines.next().ok_or_else(|| Error::MalformedHeader {
        path: path.into(),
        reason: "empty file".into(),
    })?;
    let n: usize = head.trim().parse().map_err(|_| Error::MalformedHeader {
        path: path.into(),
        reason: format!("expected matrix size, found `{head}`"),
    })?;
    let mismatch = |reason: String| Error::DimensionMismatch {
        path: path.into(),
        reason,
    };
    let mut data = Vec::with_capacity(n * n);
    let mut rows = 0;
    for line in lines {
        rows += 1;
        let row = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| mismatch(format!("bad number `{}`", t.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != n {
            return Err(mismatch(format!("row {rows} has {} values, expected {n}", row.len())));
        }
        data.extend(row);
    }
    if rows != n {
        return Err(mismatch(format!("found {rows} rows, expected {n}")));
    }
    Ok(DMatrix::from_row_slice(n, n, &data))
}

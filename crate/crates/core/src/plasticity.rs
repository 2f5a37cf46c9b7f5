//! Haeussler competitive plasticity.
//!
//! ```text
//! f(w_ij) = alpha (1 - N w_ij) + beta w_ij (T_ij - sum_j' w_ij' T_ij')
//! dw_ij/dt = G(w_ij) f(w_ij),   G(w) = 1 if w <= v else 0
//! ```
//!
//! The first term relaxes every weight toward `1/N`; the second lets weights
//! with above-average cooperation grow at the expense of the rest, driving
//! each row sum toward 1. The sum over `j'` runs over all off-diagonal
//! entries of row `i` (the diagonal is identically zero).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::dynamics::{CorrelationTensor, WeightMatrix};
use crate::error::{Error, Result};

/// Entries marked `true` evolve; `false` entries are held at their current
/// value.
pub type PlasticMask = DMatrix<bool>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlasticityParams {
    /// Unspecific growth rate.
    pub alpha: f64,
    /// Cooperation gain.
    pub beta: f64,
    /// Saturation ceiling.
    pub v: f64,
    /// Euler step.
    pub dt: f64,
    pub max_steps: usize,
    /// Convergence threshold on the largest weight rate.
    pub tol: f64,
}

impl Default for PlasticityParams {
    fn default() -> Self {
        PlasticityParams {
            alpha: 0.01,
            beta: 1.0,
            v: 1.0,
            dt: 0.01,
            max_steps: 20_000,
            tol: 1e-6,
        }
    }
}

impl PlasticityParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |cond: bool, msg: &str| if cond { Ok(()) } else { Err(Error::param(msg)) };
        ok(self.alpha.is_finite() && self.alpha >= 0.0, "alpha must be >= 0")?;
        ok(self.beta.is_finite() && self.beta >= 0.0, "beta must be >= 0")?;
        ok(self.v.is_finite() && self.v > 0.0, "v must be > 0")?;
        ok(self.dt.is_finite() && self.dt > 0.0, "dt must be > 0")?;
        ok(self.tol.is_finite() && self.tol > 0.0, "tol must be > 0")?;
        ok(self.max_steps > 0, "max_steps must be >= 1")
    }

    /// Stiffness bound `dt (alpha N + beta max|T|)`; must stay below 1.
    pub fn stiffness(&self, n: usize, t_max: f64) -> f64 {
        self.dt * (self.alpha * n as f64 + self.beta * t_max)
    }

    pub fn check_stability(&self, n: usize, t_max: f64) -> Result<()> {
        let s = self.stiffness(n, t_max);
        if s < 1.0 {
            Ok(())
        } else {
            Err(Error::UnstableStep(s))
        }
    }

    /// Copy with `dt` reduced, if needed, so the stiffness is at most `limit`.
    pub fn stabilized(&self, n: usize, t_max: f64, limit: f64) -> Self {
        let rate = self.alpha * n as f64 + self.beta * t_max;
        let mut out = *self;
        if rate > 0.0 && self.dt * rate > limit {
            out.dt = limit / rate;
        }
        out
    }
}

/// Saturation gate: 1 up to and including the ceiling, 0 above it.
pub fn saturation_gate(w: f64, v: f64) -> f64 {
    if w <= v {
        1.0
    } else {
        0.0
    }
}

fn check_dims(w: &WeightMatrix, t: &CorrelationTensor) -> Result<()> {
    if w.n() != t.n() {
        return Err(Error::Shape(format!(
            "{} neurons in W but {} in T",
            w.n(),
            t.n()
        )));
    }
    Ok(())
}

/// Evaluates `f(w_ij)` for every entry; the diagonal is zero.
pub fn haeussler_rhs(
    w: &WeightMatrix,
    t: &CorrelationTensor,
    params: &PlasticityParams,
) -> Result<DMatrix<f64>> {
    check_dims(w, t)?;
    let mut f = DMatrix::zeros(w.n(), w.n());
    rhs_into(w.matrix(), t.matrix(), params, &mut f);
    Ok(f)
}

fn rhs_into(w: &DMatrix<f64>, t: &DMatrix<f64>, params: &PlasticityParams, f: &mut DMatrix<f64>) {
    let n = w.nrows();
    let n_f = n as f64;
    for i in 0..n {
        // Cooperation-weighted row average; w_ii = 0 drops the diagonal.
        let mut avg = 0.0;
        for j in 0..n {
            avg += w[(i, j)] * t[(i, j)];
        }
        for j in 0..n {
            f[(i, j)] = if i == j {
                0.0
            } else {
                let wij = w[(i, j)];
                params.alpha * (1.0 - n_f * wij) + params.beta * wij * (t[(i, j)] - avg)
            };
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    /// Largest applied rate `|dw|/dt` in this step.
    pub max_rate: f64,
    pub min_row_sum: f64,
    pub mean_row_sum: f64,
    pub max_row_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveReport {
    pub steps: usize,
    pub converged: bool,
    /// Largest gated `|G f|` at the final state, ignoring clamping.
    pub final_max_rhs: f64,
    /// Largest applied rate in the last step.
    pub final_max_rate: f64,
    pub dt: f64,
    pub trace: Vec<TraceRow>,
}

impl EvolveReport {
    /// Plain `key = value` summary.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "steps = {}", self.steps);
        let _ = writeln!(out, "converged = {}", self.converged);
        let _ = writeln!(out, "dt = {:?}", self.dt);
        let _ = writeln!(out, "final_max_rhs = {:?}", self.final_max_rhs);
        let _ = writeln!(out, "final_max_rate = {:?}", self.final_max_rate);
        if let Some(last) = self.trace.last() {
            let _ = writeln!(out, "final_min_row_sum = {:?}", last.min_row_sum);
            let _ = writeln!(out, "final_mean_row_sum = {:?}", last.mean_row_sum);
            let _ = writeln!(out, "final_max_row_sum = {:?}", last.max_row_sum);
        }
        out
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from("step,max_rhs,min_row_sum,mean_row_sum,max_row_sum\n");
        for r in &self.trace {
            let _ = writeln!(
                out,
                "{},{:?},{:?},{:?},{:?}",
                r.step, r.max_rate, r.min_row_sum, r.mean_row_sum, r.max_row_sum
            );
        }
        out
    }

    pub fn write_trace_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.trace_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Forward-Euler integration of the gated plasticity law with weights kept
/// in `[0, v]` and a zero diagonal.
pub fn evolve_weights(
    w: &WeightMatrix,
    t: &CorrelationTensor,
    params: &PlasticityParams,
) -> Result<(WeightMatrix, EvolveReport)> {
    evolve_weights_masked(w, t, params, None)
}

/// As [`evolve_weights`], evolving only the entries `plastic` marks.
pub fn evolve_weights_masked(
    w: &WeightMatrix,
    t: &CorrelationTensor,
    params: &PlasticityParams,
    plastic: Option<&PlasticMask>,
) -> Result<(WeightMatrix, EvolveReport)> {
    params.validate()?;
    check_dims(w, t)?;
    let n = w.n();
    if let Some(mask) = plastic {
        if mask.nrows() != n || mask.ncols() != n {
            return Err(Error::Shape("plastic mask size differs from W".into()));
        }
    }
    params.check_stability(n, t.max_abs())?;

    let tm = t.matrix();
    let mut cur = w.matrix().clone();
    let mut f = DMatrix::zeros(n, n);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut steps = 0;
    let mut last_rate = f64::INFINITY;
    let is_plastic = |i: usize, j: usize| i != j && plastic.map_or(true, |m| m[(i, j)]);

    while steps < params.max_steps {
        rhs_into(&cur, tm, params, &mut f);
        let mut max_delta: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                if !is_plastic(i, j) {
                    continue;
                }
                let old = cur[(i, j)];
                let rate = saturation_gate(old, params.v) * f[(i, j)];
                let new = (old + params.dt * rate).clamp(0.0, params.v);
                max_delta = max_delta.max((new - old).abs());
                cur[(i, j)] = new;
            }
        }
        steps += 1;
        last_rate = max_delta / params.dt;
        let sums: Vec<f64> = cur.row_iter().map(|r| r.sum()).collect();
        trace.push(TraceRow {
            step: steps,
            max_rate: last_rate,
            min_row_sum: sums.iter().copied().fold(f64::INFINITY, f64::min),
            mean_row_sum: sums.iter().sum::<f64>() / n.max(1) as f64,
            max_row_sum: sums.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        });
        if max_delta < params.tol * params.dt {
            converged = true;
            break;
        }
    }

    rhs_into(&cur, tm, params, &mut f);
    let mut final_max_rhs: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            if is_plastic(i, j) {
                final_max_rhs =
                    final_max_rhs.max((saturation_gate(cur[(i, j)], params.v) * f[(i, j)]).abs());
            }
        }
    }
    let report = EvolveReport {
        steps,
        converged,
        final_max_rhs,
        final_max_rate: last_rate,
        dt: params.dt,
        trace,
    };
    Ok((WeightMatrix::new(cur)?, report))
}

//! Lipschitz regularization in time and relaxed semi-limits of sequences.
//!
//! `u^k(t) = sup_s { u(s) − k|s − t| }` and `v_k(t) = inf_s { v(s) + k|s − t| }`
//! with `s` ranging over the sample grid. Distances are `k·dt·|i − j|` with
//! integer index gaps, so every sample pair is treated identically by the
//! implementation and by any brute-force reference.

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::exec::{self, Execution};
use crate::geometry::GridMesh;
use crate::operators::ScalarField;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegularizeError {
    #[error("time grid needs at least one sample and dt > 0")]
    InvalidGrid,
    #[error("sample {index} has {got} values, expected {expected}")]
    Ragged {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("non-finite sample value")]
    NonFinite,
    #[error("oscillation bound {a} must exceed twice the oscillation {osc}")]
    OscillationBound { a: f64, osc: f64 },
    #[error("penalty k must be positive, got {0}")]
    InvalidPenalty(f64),
    #[error("empty sequence")]
    EmptySequence,
    #[error("sequence fields live on different meshes")]
    MeshMismatch,
}

/// Samples `u(t_i, x)` on a uniform time grid `t_i = t0 + i·dt`, one value
/// vector per time (length 1 for scalar signals).
#[derive(Clone, Debug)]
pub struct TimeSampledFunction {
    t0: f64,
    dt: f64,
    samples: Vec<Vec<f64>>,
    a: f64,
    mesh: Option<Arc<GridMesh>>,
}

impl TimeSampledFunction {
    /// `a = None` picks a bound slightly above `2·osc`.
    pub fn new(
        t0: f64,
        dt: f64,
        samples: Vec<Vec<f64>>,
        a: Option<f64>,
    ) -> Result<Self, RegularizeError> {
        if samples.is_empty() || !(dt > 0.0 && dt.is_finite()) || !t0.is_finite() {
            return Err(RegularizeError::InvalidGrid);
        }
        let width = samples[0].len();
        for (index, s) in samples.iter().enumerate() {
            if s.len() != width {
                return Err(RegularizeError::Ragged {
                    index,
                    expected: width,
                    got: s.len(),
                });
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(RegularizeError::NonFinite);
            }
        }
        let max = samples
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let min = samples
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let osc = if width == 0 { 0.0 } else { max - min };
        let a = match a {
            Some(a) if a > 2.0 * osc => a,
            Some(a) => return Err(RegularizeError::OscillationBound { a, osc }),
            None => 2.0 * osc * (1.0 + 1e-9) + 1e-12,
        };
        Ok(Self {
            t0,
            dt,
            samples,
            a,
            mesh: None,
        })
    }

    /// Scalar signal, one value per time.
    pub fn scalar(t0: f64, dt: f64, values: &[f64]) -> Result<Self, RegularizeError> {
        Self::new(t0, dt, values.iter().map(|v| vec![*v]).collect(), None)
    }

    /// Snapshots of a field on one mesh at uniformly spaced times.
    pub fn from_fields(t0: f64, dt: f64, fields: &[ScalarField]) -> Result<Self, RegularizeError> {
        let first = fields.first().ok_or(RegularizeError::EmptySequence)?;
        if fields.iter().any(|f| !f.same_mesh(first)) {
            return Err(RegularizeError::MeshMismatch);
        }
        let mut out = Self::new(
            t0,
            dt,
            fields.iter().map(|f| f.values().to_vec()).collect(),
            None,
        )?;
        out.mesh = Some(Arc::clone(first.mesh()));
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn nodes(&self) -> usize {
        self.samples[0].len()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Oscillation constant `A`.
    pub fn oscillation_bound(&self) -> f64 {
        self.a
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i]
    }

    pub fn value(&self, i: usize, node: usize) -> f64 {
        self.samples[i][node]
    }

    /// CSV with a leading time-index column; requires mesh-backed samples.
    pub fn to_csv(&self) -> Option<String> {
        let mesh = self.mesh.as_ref()?;
        let mut out = String::new();
        crate::operators::field_csv_header(&mut out, mesh);
        for (i, s) in self.samples.iter().enumerate() {
            for (a, v) in s.iter().enumerate() {
                crate::operators::field_csv_row(&mut out, mesh, a, Some(i));
                let _ = writeln!(out, ",{v:.16e}");
            }
        }
        Some(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Sup,
    Inf,
}

/// Result of a time convolution.
#[derive(Clone, Debug)]
pub struct TimeConvolution {
    pub result: TimeSampledFunction,
    /// `attained[i][x]` is the sample index `j` realizing the extremum at `(t_i, x)`.
    pub attained: Vec<Vec<u32>>,
    pub k: f64,
    /// Times `]t0 + A/k, t_M − A/k[` where the regularization is certified.
    pub validity: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Query {
    pub value: f64,
    pub in_window: bool,
}

impl TimeConvolution {
    /// Value at `(t_i, node)`, flagged when `t_i` is outside the validity window.
    pub fn query(&self, i: usize, node: usize) -> Query {
        let t = self.result.time(i);
        Query {
            value: self.result.value(i, node),
            in_window: t > self.validity.0 && t < self.validity.1,
        }
    }
}

/// `u^k(t_i, x) = max_j { u(t_j, x) − k·dt·|i − j| }`.
pub fn sup_convolution_time(
    u: &TimeSampledFunction,
    k: f64,
) -> Result<TimeConvolution, RegularizeError> {
    convolve(u, k, Side::Sup, Execution::Auto)
}

/// `v_k(t_i, x) = min_j { v(t_j, x) + k·dt·|i − j| }`.
pub fn inf_convolution_time(
    v: &TimeSampledFunction,
    k: f64,
) -> Result<TimeConvolution, RegularizeError> {
    convolve(v, k, Side::Inf, Execution::Auto)
}

pub fn convolve_with(
    u: &TimeSampledFunction,
    k: f64,
    sup: bool,
    exec: Execution,
) -> Result<TimeConvolution, RegularizeError> {
    convolve(u, k, if sup { Side::Sup } else { Side::Inf }, exec)
}

fn convolve(
    u: &TimeSampledFunction,
    k: f64,
    side: Side,
    exec: Execution,
) -> Result<TimeConvolution, RegularizeError> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(RegularizeError::InvalidPenalty(k));
    }
    let m = u.len();
    let nodes = u.nodes();
    let step = k * u.dt;
    // node-major results, transposed below
    let per_node: Vec<(Vec<f64>, Vec<u32>)> = exec::map(exec, nodes, |x| {
        let mut vals = Vec::with_capacity(m);
        let mut arg = Vec::with_capacity(m);
        for i in 0..m {
            let mut best = match side {
                Side::Sup => f64::NEG_INFINITY,
                Side::Inf => f64::INFINITY,
            };
            let mut best_j = 0;
            for j in 0..m {
                let gap = step * i.abs_diff(j) as f64;
                let cand = match side {
                    Side::Sup => u.samples[j][x] - gap,
                    Side::Inf => u.samples[j][x] + gap,
                };
                let better = match side {
                    Side::Sup => cand > best,
                    Side::Inf => cand < best,
                };
                if better {
                    best = cand;
                    best_j = j;
                }
            }
            vals.push(best);
            arg.push(best_j as u32);
        }
        (vals, arg)
    });
    let mut samples = vec![Vec::with_capacity(nodes); m];
    let mut attained = vec![Vec::with_capacity(nodes); m];
    for (vals, arg) in &per_node {
        for i in 0..m {
            samples[i].push(vals[i]);
            attained[i].push(arg[i]);
        }
    }
    let result = TimeSampledFunction {
        t0: u.t0,
        dt: u.dt,
        samples,
        a: u.a,
        mesh: u.mesh.clone(),
    };
    let reach = u.a / k;
    Ok(TimeConvolution {
        validity: (u.time(0) + reach, u.time(m - 1) - reach),
        result,
        attained,
        k,
    })
}

/// Truncation of the relaxed semi-limits to a finite sequence `h_1..h_J`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SemiLimitOptions {
    /// Radii `r_1..r_J`; `None` uses `r_j = 1/j`.
    pub radii: Option<Vec<f64>>,
    /// 1-based index `j*` where the tail starts; `None` uses `⌈J/2⌉`.
    pub tail_start: Option<usize>,
}

/// `max { h_k(z') : j* ≤ k ≤ J, |z' − z| ≤ r_{j*} }` at every valued node.
pub fn limsup_star(
    seq: &[ScalarField],
    opts: &SemiLimitOptions,
) -> Result<ScalarField, RegularizeError> {
    semi_limit(seq, opts, Side::Sup)
}

/// `min { h_k(z') : j* ≤ k ≤ J, |z' − z| ≤ r_{j*} }` at every valued node.
pub fn liminf_star(
    seq: &[ScalarField],
    opts: &SemiLimitOptions,
) -> Result<ScalarField, RegularizeError> {
    semi_limit(seq, opts, Side::Inf)
}

fn semi_limit(
    seq: &[ScalarField],
    opts: &SemiLimitOptions,
    side: Side,
) -> Result<ScalarField, RegularizeError> {
    let first = seq.first().ok_or(RegularizeError::EmptySequence)?;
    if seq.iter().any(|f| !f.same_mesh(first)) {
        return Err(RegularizeError::MeshMismatch);
    }
    let j_len = seq.len();
    let start = opts.tail_start.unwrap_or(j_len.div_ceil(2)).clamp(1, j_len);
    let radius = match &opts.radii {
        Some(r) => r.get(start - 1).copied().unwrap_or(0.0),
        None => 1.0 / start as f64,
    };
    let mesh = first.mesh();
    let pick = |a: f64, b: f64| match side {
        Side::Sup => a.max(b),
        Side::Inf => a.min(b),
    };
    let tail = &seq[start - 1..];
    let pointwise: Vec<f64> = (0..mesh.active_len())
        .map(|a| tail.iter().map(|f| f.value(a)).reduce(pick).unwrap())
        .collect();

    let d = mesh.real_dim();
    let reach = (radius / mesh.h() + 1e-12).floor().max(0.0) as i32;
    let offsets = ball_offsets(d, reach, radius / mesh.h());
    let values = exec::map(Execution::Auto, mesh.active_len(), |a| {
        offsets
            .iter()
            .filter_map(|o| mesh.neighbor(a, o))
            .map(|b| pointwise[b])
            .fold(pointwise[a], pick)
    });
    Ok(ScalarField::from_values(mesh, values).expect("finite inputs give finite envelope"))
}

/// Lattice offsets `o` with `|o| ≤ r` (in units of h).
fn ball_offsets(d: usize, reach: i32, r: f64) -> Vec<Vec<i32>> {
    let mut out = Vec::new();
    let mut cur = vec![-reach; d];
    if reach == 0 {
        return vec![vec![0; d]];
    }
    loop {
        let norm: f64 = cur.iter().map(|c| (*c as f64).powi(2)).sum::<f64>().sqrt();
        if norm <= r * (1.0 + 1e-12) {
            out.push(cur.clone());
        }
        let mut k = 0;
        loop {
            if k == d {
                return out;
            }
            cur[k] += 1;
            if cur[k] > reach {
                cur[k] = -reach;
                k += 1;
            } else {
                break;
            }
        }
    }
}

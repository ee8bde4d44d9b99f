//! Steady Dirichlet problem `MA(ψ) = e^{F(z,ψ)}·μ` by nonlinear Gauss-Seidel
//! (or Jacobi) node solves, the ε-perturbed problems bracketing a flow, and
//! least-squares decay rates of a trajectory toward a steady state.

use std::sync::Arc;

use thiserror::Error;

use crate::exec::{self, Execution};
use crate::flow::{Density, FlowError, Nonlinearity, ProblemSpec, Trajectory};
use crate::geometry::GridMesh;
use crate::operators::{clamp_pow, MaOperator, OperatorError, ScalarField};
use crate::roots::increasing_root;
use crate::tolerances::{NODE_SOLVE_TOL, RATE_WINDOW_HIGH, RATE_WINDOW_LOW};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipticError {
    #[error("no convergence after {sweeps} sweeps (change {change:e}, residual {residual:e})")]
    NoConvergence {
        sweeps: usize,
        change: f64,
        residual: f64,
    },
    #[error("node solve failed to bracket a root at node {node}")]
    NodeSolve { node: usize },
    #[error("boundary data has {got} values, mesh has {expected} band nodes")]
    BoundaryLength { expected: usize, got: usize },
    #[error("rate window holds {points} points, need at least 2")]
    WindowEmpty { points: usize },
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SweepMode {
    #[default]
    GaussSeidel,
    /// All nodes from the previous iterate; node solves run in parallel.
    Jacobi,
}

#[derive(Clone, Debug)]
pub struct EllipticOptions {
    /// Sweeps stop once the sup-change is `≤ tol` and the residual `≤ 10·tol`.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Over-relaxation factor in `(0, 2)`; `1` is plain Gauss-Seidel.
    pub omega: f64,
    pub mode: SweepMode,
    pub exec: Execution,
    /// Starting field; the constant `max g` when absent.
    pub initial: Option<ScalarField>,
}

impl Default for EllipticOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_sweeps: 500_000,
            omega: 1.0,
            mode: SweepMode::GaussSeidel,
            exec: Execution::Auto,
            initial: None,
        }
    }
}

impl EllipticOptions {
    /// SOR factor `2 / (1 + sin(π·h/diam))` for a domain of diameter `diam`.
    pub fn sor_for(h: f64, diam: f64) -> f64 {
        2.0 / (1.0 + (std::f64::consts::PI * h / diam).sin())
    }

    /// `sor_for` on the mesh when `n = 1`; plain Gauss-Seidel otherwise, where
    /// over-relaxing the degenerate node solve can stall.
    pub fn auto_omega(mesh: &GridMesh) -> f64 {
        if mesh.n() == 1 {
            Self::sor_for(mesh.h(), 2.0 * mesh.domain().outer_radius())
        } else {
            1.0
        }
    }
}

#[derive(Clone, Debug)]
pub struct EllipticSolution {
    pub field: ScalarField,
    pub sweeps: usize,
    pub last_change: f64,
    /// `max |MA(ψ) − e^{F(z,ψ)}μ|` over interior nodes.
    pub residual: f64,
    /// Active indices where `μ = 0`; the node solve there returns the largest
    /// center value with `MA = 0`.
    pub degenerate_nodes: Vec<usize>,
}

struct NodeData {
    mu: Vec<f64>,
}

/// Node-local solver for the center value.
struct NodeSolver<'a> {
    op: &'a MaOperator,
    f: &'a Nonlinearity,
    data: &'a NodeData,
}

impl NodeSolver<'_> {
    fn solve(&self, values: &[f64], k: usize, sums: &mut [f64], alphas: &mut [f64]) -> Option<f64> {
        let op = self.op;
        op.frame_alphas(values, k, sums, alphas);
        let betas = op.betas();
        let mu = self.data.mu[k];
        if mu == 0.0 {
            return Some(
                alphas
                    .iter()
                    .zip(betas)
                    .map(|(a, b)| a / b)
                    .fold(f64::INFINITY, f64::min),
            );
        }
        let mesh = op.mesh();
        let a = mesh.interior()[k];
        let z = mesh.coords(a);
        let n = mesh.n();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for l in 0..op.line_count() {
            for &nb in op.neighbors(k, l) {
                let v = values[nb as usize];
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let g = |c: f64| {
            let m = alphas
                .iter()
                .zip(betas)
                .map(|(a, b)| a - b * c)
                .fold(f64::INFINITY, f64::min);
            let rhs = (self.f.eval(0.0, z, c).exp() * mu).powf(1.0 / n as f64);
            rhs - m
        };
        increasing_root(g, lo - 10.0, hi + 10.0, NODE_SOLVE_TOL, 60)
    }
}

/// Solves `MA(ψ) = e^{F(z,ψ)}μ(z)` in the interior with `ψ = boundary` on the
/// band (aligned with `GridMesh::boundary`). `F` and `μ` are read at `t = 0`.
pub fn solve_dirichlet(
    op: &Arc<MaOperator>,
    f: &Nonlinearity,
    mu: &Density,
    boundary: &[f64],
    opts: &EllipticOptions,
) -> Result<EllipticSolution, EllipticError> {
    let mesh = op.mesh();
    if boundary.len() != mesh.boundary().len() {
        return Err(EllipticError::BoundaryLength {
            expected: mesh.boundary().len(),
            got: boundary.len(),
        });
    }
    if !(opts.omega > 0.0 && opts.omega < 2.0) {
        return Err(EllipticError::InvalidOptions(format!(
            "omega must lie in (0, 2), got {}",
            opts.omega
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(EllipticError::InvalidOptions(format!(
            "tol must be positive, got {}",
            opts.tol
        )));
    }
    let interior = mesh.interior();
    let data = NodeData {
        mu: interior
            .iter()
            .map(|&a| mu.eval(0.0, mesh.coords(a)))
            .collect(),
    };
    if let Some((k, v)) = data
        .mu
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= 0.0) || !v.is_finite())
    {
        return Err(FlowError::InvalidDensity {
            node: interior[k],
            t: 0.0,
            value: *v,
        }
        .into());
    }
    let degenerate_nodes: Vec<usize> = interior
        .iter()
        .zip(&data.mu)
        .filter(|(_, &m)| m == 0.0)
        .map(|(&a, _)| a)
        .collect();
    let start = match &opts.initial {
        Some(init) => init.clone(),
        None => {
            let top = boundary.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ScalarField::constant(mesh, if top.is_finite() { top } else { 0.0 })
        }
    };
    let mut field = start.with_boundary(boundary)?;
    let solver = NodeSolver { op, f, data: &data };
    let mut sums = op.scratch();
    let mut alphas = vec![0.0; op.frame_count()];
    let mut change = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let omega = opts.omega;
    for sweep in 1..=opts.max_sweeps {
        change = 0.0;
        match opts.mode {
            SweepMode::GaussSeidel => {
                let values = field.values_mut();
                for (k, &a) in interior.iter().enumerate() {
                    let c = solver
                        .solve(values, k, &mut sums, &mut alphas)
                        .ok_or(EllipticError::NodeSolve { node: a })?;
                    let new = values[a] + omega * (c - values[a]);
                    change = f64::max(change, (new - values[a]).abs());
                    values[a] = new;
                }
            }
            SweepMode::Jacobi => {
                let values = field.values();
                let mut next = vec![0.0; interior.len()];
                exec::fill_with(
                    opts.exec,
                    &mut next,
                    || (op.scratch(), vec![0.0; op.frame_count()]),
                    |(s, al), k| solver.solve(values, k, s, al).unwrap_or(f64::NAN),
                );
                let values = field.values_mut();
                for (k, &a) in interior.iter().enumerate() {
                    if !next[k].is_finite() {
                        return Err(EllipticError::NodeSolve { node: a });
                    }
                    let new = values[a] + omega * (next[k] - values[a]);
                    change = f64::max(change, (new - values[a]).abs());
                    values[a] = new;
                }
            }
        }
        if change <= opts.tol {
            residual = residual_of(op, f, &data, field.values(), opts.exec);
            if residual <= 10.0 * opts.tol {
                return Ok(EllipticSolution {
                    field,
                    sweeps: sweep,
                    last_change: change,
                    residual,
                    degenerate_nodes,
                });
            }
        }
    }
    Err(EllipticError::NoConvergence {
        sweeps: opts.max_sweeps,
        change,
        residual,
    })
}

fn residual_of(
    op: &MaOperator,
    f: &Nonlinearity,
    data: &NodeData,
    values: &[f64],
    exec: Execution,
) -> f64 {
    let mesh = op.mesh();
    let interior = mesh.interior();
    let n = mesh.n();
    let mut r = vec![0.0; interior.len()];
    exec::fill_with(
        exec,
        &mut r,
        || op.scratch(),
        |s, k| {
            let a = interior[k];
            let ma = clamp_pow(op.frame_min_at(values, k, s), n);
            (ma - f.eval(0.0, mesh.coords(a), values[a]).exp() * data.mu[k]).abs()
        },
    );
    r.into_iter().fold(0.0, f64::max)
}

/// `max |MA(ψ) − e^{F(z,ψ)}μ|` over interior nodes, `F` and `μ` at `t = 0`.
pub fn dirichlet_residual(
    op: &MaOperator,
    f: &Nonlinearity,
    mu: &Density,
    field: &ScalarField,
    exec: Execution,
) -> Result<f64, EllipticError> {
    if !field.mesh().same_grid(op.mesh()) {
        return Err(OperatorError::MeshMismatch.into());
    }
    let mesh = op.mesh();
    let data = NodeData {
        mu: mesh
            .interior()
            .iter()
            .map(|&a| mu.eval(0.0, mesh.coords(a)))
            .collect(),
    };
    Ok(residual_of(op, f, &data, field.values(), exec))
}

/// Steady problem of a [`ProblemSpec`]: its `F`, `μ` and boundary band.
pub fn solve_steady(
    problem: &ProblemSpec,
    opts: &EllipticOptions,
) -> Result<EllipticSolution, EllipticError> {
    solve_dirichlet(
        problem.op(),
        problem.nonlinearity(),
        problem.density(),
        &problem.band_values(0.0),
        opts,
    )
}

/// The two problems with `F^ε = F + ε(r − M₀)` and `F_ε = F + ε(r − m₀)`.
#[derive(Clone, Debug)]
pub struct PerturbedBracket {
    pub upper: ProblemSpec,
    pub lower: ProblemSpec,
    /// Upper bound of `φ₀` over the closure.
    pub m0_upper: f64,
    /// Lower bound of the flow from `B·ρ − max(B·ρ − φ₀)₊`.
    pub m0_lower: f64,
    /// `B ≥ 1` with `Bⁿ·min MA(ρ) ≥ max e^{F(z,0)}μ`.
    pub b: f64,
}

/// Builds the ε-perturbed problems. `M₀` is the grid maximum of `φ₀`, raised
/// to the boundary maximum when `φ₀` is known as a function; `m₀` is
/// `min B·ρ − max(B·ρ − φ₀)₊` over the valued nodes.
pub fn perturbed_bracket(
    problem: &ProblemSpec,
    eps: f64,
) -> Result<PerturbedBracket, EllipticError> {
    if !(eps >= 0.0) {
        return Err(EllipticError::InvalidOptions(format!(
            "eps must be nonnegative, got {eps}"
        )));
    }
    let mesh = problem.mesh();
    let domain = mesh.domain();
    let phi0 = problem.phi0();
    let mut m0_upper = phi0.max();
    if let Some(f) = problem.phi0_fn() {
        for &a in mesh.boundary() {
            m0_upper = m0_upper.max(f(&domain.project_to_boundary(mesh.coords(a))));
        }
    }
    let rho = ScalarField::from_fn(mesh, |z| domain.rho(z))?;
    let ma_rho = problem.op().density(&rho, Execution::Auto)?;
    let ma_min = ma_rho.min();
    let f = problem.nonlinearity();
    let mu = problem.density();
    let rhs_max = mesh
        .interior()
        .iter()
        .map(|&a| {
            let z = mesh.coords(a);
            f.eval(0.0, z, 0.0).exp() * mu.eval(0.0, z)
        })
        .fold(0.0, f64::max);
    let b = (rhs_max / ma_min).powf(1.0 / mesh.n() as f64).max(1.0);
    let (mut min_brho, mut max_gap) = (f64::INFINITY, 0.0f64);
    for a in 0..mesh.active_len() {
        let br = b * rho.value(a);
        min_brho = min_brho.min(br);
        max_gap = max_gap.max(br - phi0.value(a));
    }
    let m0_lower = min_brho - max_gap;
    let build = |r0: f64| -> Result<ProblemSpec, EllipticError> {
        let mut p = problem.with_parts(f.perturbed(eps, r0), mu.clone(), phi0.clone())?;
        p.set_phi0_fn(problem.phi0_fn().cloned());
        Ok(p)
    };
    Ok(PerturbedBracket {
        upper: build(m0_upper)?,
        lower: build(m0_lower)?,
        m0_upper,
        m0_lower,
        b,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub t: f64,
    pub distance: f64,
    pub extrapolated: bool,
    pub in_window: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log distance` against `t` over the window.
    pub rate: f64,
    pub intercept: f64,
    pub window_points: usize,
}

/// Distances kept in the rate fit: `low·steady_tol ≤ d ≤ high·d₀`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateWindow {
    pub low: f64,
    pub high: f64,
}

impl Default for RateWindow {
    fn default() -> Self {
        Self {
            low: RATE_WINDOW_LOW,
            high: RATE_WINDOW_HIGH,
        }
    }
}

/// `sup |φₜ − ψ|` at every snapshot, with the fit window marked:
/// `RATE_WINDOW_LOW·steady_tol ≤ d ≤ RATE_WINDOW_HIGH·d₀`, computed snapshots only.
pub fn convergence_table(
    reference: &ScalarField,
    traj: &Trajectory,
    steady_tol: f64,
) -> Result<Vec<ConvergenceRow>, EllipticError> {
    convergence_table_with(reference, traj, steady_tol, RateWindow::default())
}

pub fn convergence_table_with(
    reference: &ScalarField,
    traj: &Trajectory,
    steady_tol: f64,
    window: RateWindow,
) -> Result<Vec<ConvergenceRow>, EllipticError> {
    let mut rows = Vec::with_capacity(traj.len());
    for ((&t, s), &ex) in traj
        .times
        .iter()
        .zip(&traj.snapshots)
        .zip(&traj.extrapolated)
    {
        rows.push(ConvergenceRow {
            t,
            distance: s.sup_distance(reference)?,
            extrapolated: ex,
            in_window: false,
        });
    }
    if let Some(d0) = rows.first().map(|r| r.distance) {
        let (lo, hi) = (window.low * steady_tol, window.high * d0);
        for r in &mut rows {
            r.in_window =
                !r.extrapolated && r.distance >= lo && r.distance <= hi && r.distance > 0.0;
        }
    }
    Ok(rows)
}

pub fn convergence_report(
    reference: &ScalarField,
    traj: &Trajectory,
    steady_tol: f64,
) -> Result<ConvergenceReport, EllipticError> {
    convergence_report_with(reference, traj, steady_tol, RateWindow::default())
}

pub fn convergence_report_with(
    reference: &ScalarField,
    traj: &Trajectory,
    steady_tol: f64,
    window: RateWindow,
) -> Result<ConvergenceReport, EllipticError> {
    let rows = convergence_table_with(reference, traj, steady_tol, window)?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.in_window)
        .map(|r| (r.t, r.distance.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(EllipticError::WindowEmpty { points: pts.len() });
    }
    let k = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(EllipticError::WindowEmpty { points: 1 });
    }
    let rate = sxy / sxx;
    Ok(ConvergenceReport {
        window_points: pts.len(),
        rate,
        intercept: my - rate * mt,
        rows,
    })
}

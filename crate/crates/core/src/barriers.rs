//! Explicit sub/supersolutions, ε-barriers at parabolic boundary points, the
//! admissibility test for `(φ₀, μ)`, and discrete residual certification of
//! space-time samples.
//!
//! A sampled space-time function `W(t_k, ·)` is a discrete subsolution when at
//! every interior node and every step
//! `MA(W_k) ≥ exp((W_{k+1} − W_k)/Δt + F(t_k, z, W_k))·μ(t_k, z)`, and a
//! supersolution when the reverse holds. Certification also checks the
//! ordering against the Cauchy-Dirichlet data on the parabolic boundary.

use std::fmt;

use thiserror::Error;

use crate::elliptic::{solve_dirichlet, EllipticError, EllipticOptions};
use crate::exec::{self, Execution};
use crate::flow::{
    Density, FlowError, FlowState, InitialFn, Nonlinearity, ProblemSpec, Trajectory,
};
use crate::operators::{OperatorError, ScalarField};
use crate::pshtools::{maximality_defect_with, PshError};
use crate::tolerances::{CERT_TOL, MAXIMALITY_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BarrierError {
    #[error("{what} not certified: residual slack {slack:e} (node {node:?}, t = {t}), data slack {data:e}, contact slack {contact:e}")]
    CertificationFailure {
        what: String,
        slack: f64,
        node: Option<usize>,
        t: f64,
        data: f64,
        contact: f64,
    },
    #[error("no admissibility certificate: {0}")]
    NotAdmissible(String),
    #[error("admissibility undecided: density vanishes at {nodes} nodes where the defect of phi0 is only {defect:e}")]
    Undecided { nodes: usize, defect: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("samples do not live on the problem mesh")]
    MeshMismatch,
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error(transparent)]
    Psh(#[from] PshError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BarrierKind {
    GlobalSub,
    GlobalSuper,
    EpsSubbarrier,
    EpsSuperbarrier,
    BoundarySuperbarrier,
}

impl BarrierKind {
    pub fn side(self) -> Side {
        match self {
            BarrierKind::GlobalSub | BarrierKind::EpsSubbarrier => Side::Sub,
            _ => Side::Super,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BarrierKind::GlobalSub => "global-sub",
            BarrierKind::GlobalSuper => "global-super",
            BarrierKind::EpsSubbarrier => "eps-subbarrier",
            BarrierKind::EpsSuperbarrier => "eps-superbarrier",
            BarrierKind::BoundarySuperbarrier => "boundary-superbarrier",
        }
    }
}

impl fmt::Display for BarrierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Sub,
    Super,
}

/// Uniform grid `t_k = k·t_end/steps`, `k = 0..=steps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, steps: usize) -> Result<Self, BarrierError> {
        if !(t_end > 0.0 && t_end.is_finite()) || steps == 0 {
            return Err(BarrierError::InvalidParameter(format!(
                "time grid needs t_end > 0 and steps > 0 (got {t_end}, {steps})"
            )));
        }
        Ok(Self { t_end, steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_end * k as f64 / self.steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }
}

/// Function of time sampled on a [`TimeGrid`], linear between samples and
/// extended linearly beyond the ends.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeProfile {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl TimeProfile {
    pub fn zero(grid: TimeGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.steps + 1],
        }
    }

    /// `∫₀ᵗ max(rate, 0)` by the trapezoid rule; `rates` sampled on the grid.
    pub fn integral_of_positive_part(grid: TimeGrid, rates: &[f64]) -> Self {
        assert_eq!(rates.len(), grid.steps + 1, "one rate per grid time");
        let dt = grid.dt();
        let mut values = Vec::with_capacity(rates.len());
        values.push(0.0);
        for w in rates.windows(2) {
            let last = *values.last().unwrap();
            values.push(last + 0.5 * dt * (w[0].max(0.0) + w[1].max(0.0)));
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> f64 {
        let x = t / self.grid.dt();
        let i = (x.floor().max(0.0) as usize).min(self.grid.steps - 1);
        let w = x - i as f64;
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }

    fn affine(&self, scale: f64, slope: f64, shift: f64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| scale * v + slope * self.grid.time(k) + shift)
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }
}

/// `B(t) = ∫₀ᵗ b₊` with `b(t) = max over interior nodes of F(t, z, φ₀(z))`.
pub fn b_profile(f: &Nonlinearity, phi0: &ScalarField, grid: TimeGrid) -> TimeProfile {
    let rates = sup_rates(f, phi0, grid);
    TimeProfile::integral_of_positive_part(grid, &rates)
}

fn sup_rates(f: &Nonlinearity, field: &ScalarField, grid: TimeGrid) -> Vec<f64> {
    let mesh = field.mesh();
    let vals = field.values();
    exec::map_coarse(Execution::Auto, grid.steps + 1, |k| {
        let t = grid.time(k);
        mesh.interior()
            .iter()
            .map(|&a| f.eval(t, mesh.coords(a), vals[a]))
            .fold(f64::NEG_INFINITY, f64::max)
    })
}

/// `Γ(t) = ∫₀ᵗ γ₊` with `γ(t) = −min over interior nodes of F(t, z, ψ₀(z))`.
pub fn gamma_profile(f: &Nonlinearity, psi0: &ScalarField, grid: TimeGrid) -> TimeProfile {
    let mesh = psi0.mesh();
    let vals = psi0.values();
    let rates: Vec<f64> = exec::map_coarse(Execution::Auto, grid.steps + 1, |k| {
        let t = grid.time(k);
        -mesh
            .interior()
            .iter()
            .map(|&a| f.eval(t, mesh.coords(a), vals[a]))
            .fold(f64::INFINITY, f64::min)
    });
    TimeProfile::integral_of_positive_part(grid, &rates)
}

/// Fields of a space-time function at strictly increasing times.
#[derive(Clone, Debug)]
pub struct SpaceTimeSamples {
    pub times: Vec<f64>,
    pub fields: Vec<ScalarField>,
}

impl SpaceTimeSamples {
    pub fn new(times: Vec<f64>, fields: Vec<ScalarField>) -> Result<Self, BarrierError> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(BarrierError::InvalidParameter(format!(
                "{} times for {} fields",
                times.len(),
                fields.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || !times.iter().all(|t| t.is_finite()) {
            return Err(BarrierError::InvalidParameter(
                "sample times must be strictly increasing".into(),
            ));
        }
        if fields.iter().any(|f| !f.same_mesh(&fields[0])) {
            return Err(BarrierError::MeshMismatch);
        }
        Ok(Self { times, fields })
    }

    /// Computed snapshots of a trajectory (extrapolated ones are dropped).
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self, BarrierError> {
        let mut times = Vec::new();
        let mut fields = Vec::new();
        for ((t, f), ex) in traj
            .times
            .iter()
            .zip(&traj.snapshots)
            .zip(&traj.extrapolated)
        {
            if !ex && times.last().is_none_or(|&p| *t > p) {
                times.push(*t);
                fields.push(f.clone());
            }
        }
        Self::new(times, fields)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Field at a sample time within `1e-9·max(1, |t|)`.
    pub fn at_time(&self, t: f64) -> Option<&ScalarField> {
        let tol = 1e-9 * t.abs().max(1.0);
        let i = self.times.partition_point(|&s| s < t - tol);
        match self.times.get(i) {
            Some(&s) if (s - t).abs() <= tol => Some(&self.fields[i]),
            _ => None,
        }
    }
}

/// Outcome of a residual and data check.
#[derive(Clone, Debug, PartialEq)]
pub struct Certification {
    pub side: Side,
    /// Smallest margin of the defining inequality over interior nodes and steps.
    pub slack: f64,
    pub worst_node: Option<usize>,
    pub worst_t: f64,
    /// Smallest margin of the ordering against the data on the parabolic
    /// boundary (`data − W` for subsolutions, `W − data` for supersolutions).
    pub data_slack: f64,
    /// Smallest margin of the barrier bound at its contact points; `+∞` when
    /// there is none.
    pub contact: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Certification {
    fn finish(mut self) -> Self {
        self.pass =
            self.slack >= -self.tol && self.data_slack >= -self.tol && self.contact >= -self.tol;
        self
    }

    fn failure(&self, what: &str) -> BarrierError {
        BarrierError::CertificationFailure {
            what: what.to_string(),
            slack: self.slack,
            node: self.worst_node,
            t: self.worst_t,
            data: self.data_slack,
            contact: self.contact,
        }
    }
}

/// Residual and data check of `samples` against the problem, without
/// judging: `pass` is set, nothing is refused.
pub fn residual_scan(
    problem: &ProblemSpec,
    samples: &SpaceTimeSamples,
    side: Side,
    exec: Execution,
) -> Result<Certification, BarrierError> {
    let op = problem.op();
    let mesh = problem.mesh();
    if samples.fields.iter().any(|f| !f.mesh().same_grid(mesh)) {
        return Err(BarrierError::MeshMismatch);
    }
    if samples.len() < 2 {
        return Err(BarrierError::InvalidParameter(
            "certification needs at least two sample times".into(),
        ));
    }
    let f = problem.nonlinearity();
    let mu = problem.density();
    let interior = mesh.interior();
    let sign = match side {
        Side::Sub => 1.0,
        Side::Super => -1.0,
    };
    let mut slack = f64::INFINITY;
    let mut worst_node = None;
    let mut worst_t = samples.times[0];
    for k in 0..samples.len() - 1 {
        let (t, dt) = (samples.times[k], samples.times[k + 1] - samples.times[k]);
        let (w0, w1) = (samples.fields[k].values(), samples.fields[k + 1].values());
        let ma = op.density(&samples.fields[k], exec)?;
        let ma = ma.values();
        let margins = exec::map(exec, interior.len(), |i| {
            let a = interior[i];
            let z = mesh.coords(a);
            let m = mu.eval(t, z);
            let rhs = if m == 0.0 {
                0.0
            } else {
                ((w1[a] - w0[a]) / dt + f.eval(t, z, w0[a])).exp() * m
            };
            let s = sign * (ma[i] - rhs);
            if s.is_nan() {
                f64::NEG_INFINITY
            } else {
                s
            }
        });
        let (s, i) = exec::argmin(exec, margins.len(), |i| margins[i]);
        if s < slack {
            slack = s;
            worst_node = i.map(|i| interior[i]);
            worst_t = t;
        }
    }
    let mut data_slack = f64::INFINITY;
    if samples.times[0] == 0.0 {
        let init = FlowState::initial(problem)?.field;
        for (d, w) in init.values().iter().zip(samples.fields[0].values()) {
            data_slack = data_slack.min(sign * (d - w));
        }
    }
    for (t, w) in samples.times.iter().zip(&samples.fields) {
        let band = problem.band_values(*t);
        for (&a, d) in mesh.boundary().iter().zip(band) {
            data_slack = data_slack.min(sign * (d - w.value(a)));
        }
    }
    if data_slack.is_nan() {
        data_slack = f64::NEG_INFINITY;
    }
    Ok(Certification {
        side,
        slack,
        worst_node,
        worst_t,
        data_slack,
        contact: f64::INFINITY,
        tol: CERT_TOL,
        pass: false,
    }
    .finish())
}

/// Samples that passed certification on one side. Only [`certify`] and the
/// barrier constructors produce these.
#[derive(Clone, Debug)]
pub struct Certified {
    label: String,
    samples: SpaceTimeSamples,
    report: Certification,
}

impl Certified {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn samples(&self) -> &SpaceTimeSamples {
        &self.samples
    }

    pub fn report(&self) -> &Certification {
        &self.report
    }

    pub fn side(&self) -> Side {
        self.report.side
    }
}

/// Direct residual check; refuses with `CertificationFailure`.
pub fn certify(
    problem: &ProblemSpec,
    samples: SpaceTimeSamples,
    side: Side,
    label: impl Into<String>,
) -> Result<Certified, BarrierError> {
    let label = label.into();
    let report = residual_scan(problem, &samples, side, Execution::Auto)?;
    if !report.pass {
        return Err(report.failure(&label));
    }
    Ok(Certified {
        label,
        samples,
        report,
    })
}

/// Constants entering a barrier; unused ones are zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BarrierParams {
    pub a: f64,
    pub m: f64,
    pub eps: f64,
    pub c: f64,
}

/// Point of the parabolic boundary at which a barrier is built.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParabolicPoint {
    /// `(0, z₀)` with `z₀` any active node.
    Initial { node: usize },
    /// `(t₀, z₀)` with `t₀ > 0` and `z₀` a boundary-band node.
    Lateral { t0: f64, node: usize },
}

/// A certified space-time function `W(t, z) = S(z) + τ(t)`.
#[derive(Clone, Debug)]
pub struct BarrierSpec {
    pub kind: BarrierKind,
    pub params: BarrierParams,
    /// `B(t)` for subsolutions (from `t₀` for lateral subbarriers).
    pub b: Option<TimeProfile>,
    /// `Γ(t)` for the ε-superbarrier.
    pub gamma: Option<TimeProfile>,
    pub certification: Certification,
    spatial: ScalarField,
    tau: TimeProfile,
}

impl BarrierSpec {
    pub fn spatial(&self) -> &ScalarField {
        &self.spatial
    }

    /// `τ(t)`, the full time-dependent part.
    pub fn time_part(&self) -> &TimeProfile {
        &self.tau
    }

    pub fn grid(&self) -> TimeGrid {
        self.tau.grid
    }

    pub fn value(&self, t: f64, active: usize) -> f64 {
        self.spatial.value(active) + self.tau.eval(t)
    }

    /// `(t, active node) ↦ W(t, z)`.
    pub fn function(&self) -> impl Fn(f64, usize) -> f64 + '_ {
        move |t, a| self.value(t, a)
    }

    pub fn field_at(&self, t: f64) -> ScalarField {
        let c = self.tau.eval(t);
        self.spatial.map(|v| v + c)
    }

    pub fn samples_at(&self, times: &[f64]) -> Result<SpaceTimeSamples, BarrierError> {
        SpaceTimeSamples::new(
            times.to_vec(),
            times.iter().map(|&t| self.field_at(t)).collect(),
        )
    }

    /// Samples at the grid the barrier was certified on.
    pub fn samples(&self) -> SpaceTimeSamples {
        let times = self.grid().times();
        let fields = times.iter().map(|&t| self.field_at(t)).collect();
        SpaceTimeSamples { times, fields }
    }

    pub fn certified(&self) -> Certified {
        Certified {
            label: self.kind.name().to_string(),
            samples: self.samples(),
            report: self.certification.clone(),
        }
    }
}

fn build(
    problem: &ProblemSpec,
    kind: BarrierKind,
    params: BarrierParams,
    spatial: ScalarField,
    tau: TimeProfile,
    contact: f64,
) -> Result<BarrierSpec, BarrierError> {
    let mut spec = BarrierSpec {
        kind,
        params,
        b: None,
        gamma: None,
        certification: Certification {
            side: kind.side(),
            slack: f64::NAN,
            worst_node: None,
            worst_t: 0.0,
            data_slack: f64::NAN,
            contact,
            tol: CERT_TOL,
            pass: false,
        },
        spatial,
        tau,
    };
    let mut report = residual_scan(problem, &spec.samples(), kind.side(), Execution::Auto)?;
    report.contact = if contact.is_nan() {
        f64::NEG_INFINITY
    } else {
        contact
    };
    let report = report.finish();
    if !report.pass {
        return Err(report.failure(kind.name()));
    }
    spec.certification = report;
    Ok(spec)
}

fn rho_field(problem: &ProblemSpec) -> Result<ScalarField, BarrierError> {
    let mesh = problem.mesh();
    let domain = mesh.domain().clone();
    Ok(ScalarField::from_fn(mesh, move |z| domain.rho(z))?)
}

fn min_ma_rho(problem: &ProblemSpec, rho: &ScalarField) -> Result<f64, BarrierError> {
    Ok(problem.op().density(rho, Execution::Auto)?.min())
}

/// `max μ` over interior nodes and grid times (only `t = 0` when static).
fn max_density(problem: &ProblemSpec, grid: TimeGrid) -> f64 {
    let times = if problem.density().is_time_independent() {
        vec![0.0]
    } else {
        grid.times()
    };
    times
        .iter()
        .flat_map(|&t| problem.density_values(t))
        .fold(0.0, f64::max)
}

/// Rounds up to a multiple of `2⁻²⁰`.
fn round_up(x: f64) -> f64 {
    const Q: f64 = (1u64 << 20) as f64;
    (x * Q).ceil() / Q
}

fn global_a(problem: &ProblemSpec, grid: TimeGrid, ma_rho: f64) -> f64 {
    let mu_max = max_density(problem, grid);
    if mu_max == 0.0 {
        return 0.0;
    }
    round_up((mu_max / ma_rho).powf(1.0 / problem.mesh().n() as f64))
}

fn add_scaled(base: &ScalarField, other: &ScalarField, s: f64) -> ScalarField {
    let vals = base
        .values()
        .iter()
        .zip(other.values())
        .map(|(a, b)| a + s * b)
        .collect();
    ScalarField::from_values(base.mesh(), vals).expect("same mesh")
}

/// `u = A·ρ + φ₀ − B(t)` with `Aⁿ·min MA(ρ) ≥ max μ`.
pub fn global_subsolution(
    problem: &ProblemSpec,
    grid: TimeGrid,
) -> Result<BarrierSpec, BarrierError> {
    let rho = rho_field(problem)?;
    let a = global_a(problem, grid, min_ma_rho(problem, &rho)?);
    let b = b_profile(problem.nonlinearity(), problem.phi0(), grid);
    let spatial = add_scaled(problem.phi0(), &rho, a);
    let tau = b.affine(-1.0, 0.0, 0.0);
    let mut spec = build(
        problem,
        BarrierKind::GlobalSub,
        BarrierParams {
            a,
            ..Default::default()
        },
        spatial,
        tau,
        f64::INFINITY,
    )?;
    spec.b = Some(b);
    Ok(spec)
}

/// The constant `sup φ₀` (over the initial field and the band data at the
/// grid times).
pub fn global_supersolution(
    problem: &ProblemSpec,
    grid: TimeGrid,
) -> Result<BarrierSpec, BarrierError> {
    let mut top = problem.phi0().max();
    for t in grid.times() {
        top = problem.band_values(t).into_iter().fold(top, f64::max);
    }
    let spatial = ScalarField::constant(problem.mesh(), top);
    build(
        problem,
        BarrierKind::GlobalSuper,
        BarrierParams::default(),
        spatial,
        TimeProfile::zero(grid),
        f64::INFINITY,
    )
}

/// ε-subbarrier at a parabolic boundary point.
///
/// At `(0, z₀)`: `U = φ₀ + ε·ρ − B(t) − M·t` with
/// `M = max(0, log(max μ / (εⁿ·min MA(ρ))))`; contact `U(0, z₀) ≥ φ₀(z₀) − ε`.
/// At `(t₀, z₀)` lateral: `U = φ₀ + A·ρ − (B(t) − B(t₀))`; contact
/// `U(t₀, z₀) ≥ g(t₀, z₀) − ε`.
pub fn eps_subbarrier(
    problem: &ProblemSpec,
    eps: f64,
    point: ParabolicPoint,
    grid: TimeGrid,
) -> Result<BarrierSpec, BarrierError> {
    if !(eps > 0.0) {
        return Err(BarrierError::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let mesh = problem.mesh();
    let rho = rho_field(problem)?;
    let ma_rho = min_ma_rho(problem, &rho)?;
    let b = b_profile(problem.nonlinearity(), problem.phi0(), grid);
    let (params, spatial, tau, t0, node, data) = match point {
        ParabolicPoint::Initial { node } => {
            if node >= mesh.active_len() {
                return Err(BarrierError::InvalidParameter(format!(
                    "node {node} is not active"
                )));
            }
            let mu_max = max_density(problem, grid);
            let n = mesh.n() as i32;
            let m = if mu_max == 0.0 {
                0.0
            } else {
                (mu_max / (eps.powi(n) * ma_rho)).ln().max(0.0)
            };
            let data = FlowState::initial(problem)?.field.value(node);
            let params = BarrierParams {
                m,
                eps,
                ..Default::default()
            };
            (
                params,
                add_scaled(problem.phi0(), &rho, eps),
                b.affine(-1.0, -m, 0.0),
                0.0,
                node,
                data,
            )
        }
        ParabolicPoint::Lateral { t0, node } => {
            let Some(pos) = mesh.boundary().iter().position(|&a| a == node) else {
                return Err(BarrierError::InvalidParameter(format!(
                    "node {node} is not a band node"
                )));
            };
            if !(t0 > 0.0) {
                return Err(BarrierError::InvalidParameter(format!(
                    "lateral point needs t0 > 0, got {t0}"
                )));
            }
            let a = global_a(problem, grid, ma_rho);
            let data = problem.band_values(t0)[pos];
            let params = BarrierParams {
                a,
                eps,
                ..Default::default()
            };
            let shift = b.eval(t0);
            (
                params,
                add_scaled(problem.phi0(), &rho, a),
                b.affine(-1.0, 0.0, shift),
                t0,
                node,
                data,
            )
        }
    };
    let contact = spatial.value(node) + tau.eval(t0) - (data - eps);
    let b = match point {
        ParabolicPoint::Initial { .. } => b,
        ParabolicPoint::Lateral { t0, .. } => {
            let s = b.eval(t0);
            b.affine(1.0, 0.0, -s)
        }
    };
    let mut spec = build(
        problem,
        BarrierKind::EpsSubbarrier,
        params,
        spatial,
        tau,
        contact,
    )?;
    spec.b = Some(b);
    Ok(spec)
}

/// Result of [`check_admissible`].
#[derive(Clone, Debug)]
pub enum Admissibility {
    Certified(AdmissibilityCertificate),
    Refused(Refusal),
}

/// `φ₀ ≤ ψ₀ ≤ φ₀ + ε` with `MA(ψ₀) ≤ e^C·μ` at every interior node.
#[derive(Clone, Debug)]
pub struct AdmissibilityCertificate {
    pub psi0: ScalarField,
    pub c: f64,
    pub eps: f64,
    /// Mollification radius used (0 when `φ₀` itself was taken).
    pub sigma: f64,
    /// `sup |mollified φ₀ − φ₀|`, at most `ε/2`.
    pub mollify_error: f64,
}

/// Interior nodes where `μ = 0` and `MA(φ₀) > MAXIMALITY_TOL`.
#[derive(Clone, Debug, PartialEq)]
pub struct Refusal {
    /// Active indices.
    pub witness: Vec<usize>,
    /// Largest `MA(φ₀)` over the witness.
    pub defect: f64,
    pub tol: f64,
}

/// Radial smoothing of `φ₀` over the lattice with kernel `(1 − |w|²/σ²)₊²`.
/// Lattice points outside the closed domain take the boundary trace of `φ₀`
/// at their radial projection.
pub struct Mollifier<'a> {
    problem: &'a ProblemSpec,
    max_cells: i32,
}

/// Cap on kernel support, in lattice offsets.
const MOLLIFY_MAX_OFFSETS: f64 = 5000.0;

impl<'a> Mollifier<'a> {
    pub fn new(problem: &'a ProblemSpec) -> Self {
        let d = problem.mesh().real_dim() as i32;
        // volume of the unit ball in R^d for d ∈ {2, 4}
        let vol = if d == 2 {
            std::f64::consts::PI
        } else {
            std::f64::consts::PI.powi(2) / 2.0
        };
        let max_cells = (MOLLIFY_MAX_OFFSETS / vol).powf(1.0 / d as f64).floor() as i32;
        Self {
            problem,
            max_cells: max_cells.max(1),
        }
    }

    /// Largest radius the kernel is allowed to reach.
    pub fn max_sigma(&self) -> f64 {
        let mesh = self.problem.mesh();
        (self.max_cells as f64 * mesh.h()).min(mesh.domain().outer_radius())
    }

    fn extension(&self, index: &[i32], z: &mut [f64], phi0_fn: Option<&InitialFn>) -> f64 {
        let mesh = self.problem.mesh();
        if let Some(a) = mesh.active_at(index) {
            return self.problem.phi0().value(a);
        }
        let h = mesh.h();
        for (x, i) in z.iter_mut().zip(index) {
            *x = *i as f64 * h;
        }
        let p = mesh.domain().project_to_boundary(z);
        if let Some(f) = phi0_fn {
            return f(&p);
        }
        let r = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut idx = vec![0i32; p.len()];
        let mut s = 1.0;
        loop {
            for (k, x) in idx.iter_mut().zip(&p) {
                *k = (x * s / h).round() as i32;
            }
            if let Some(a) = mesh.active_at(&idx) {
                return self.problem.phi0().value(a);
            }
            s -= 0.5 * h / r.max(h);
            if s <= 0.0 {
                return self.problem.phi0().value(mesh.boundary()[0]);
            }
        }
    }

    /// Smoothed field at radius `sigma` (the field itself below one cell).
    pub fn apply(&self, sigma: f64) -> ScalarField {
        let mesh = self.problem.mesh();
        let h = mesh.h();
        let d = mesh.real_dim();
        let r = (sigma / h).floor() as i32;
        if r < 1 {
            return self.problem.phi0().clone();
        }
        let mut offsets: Vec<(Vec<i32>, f64)> = Vec::new();
        let mut w = vec![-r; d];
        loop {
            let q = w.iter().map(|&x| (x * x) as f64).sum::<f64>() * h * h / (sigma * sigma);
            if q < 1.0 {
                offsets.push((w.clone(), (1.0 - q) * (1.0 - q)));
            }
            let mut k = 0;
            while k < d {
                w[k] += 1;
                if w[k] <= r {
                    break;
                }
                w[k] = -r;
                k += 1;
            }
            if k == d {
                break;
            }
        }
        let total: f64 = offsets.iter().map(|o| o.1).sum();
        let phi0_fn = self.problem.phi0_fn().map(|f| f.as_ref());
        let values = exec::map(Execution::Auto, mesh.active_len(), |a| {
            let base = mesh.lattice_index(a);
            let mut idx = vec![0i32; d];
            let mut z = vec![0.0; d];
            let mut acc = 0.0;
            for (o, wt) in &offsets {
                for k in 0..d {
                    idx[k] = base[k] + o[k];
                }
                acc += wt * self.extension(&idx, &mut z, phi0_fn);
            }
            acc / total
        });
        ScalarField::from_values(mesh, values).expect("mesh-sized")
    }
}

/// Bisection steps on the mollification radius.
const SIGMA_BISECTIONS: usize = 24;

/// Decides admissibility of `(φ₀, μ(0, ·))`.
///
/// With `μ > 0` at every interior node, `ψ₀` is `φ₀` mollified at the largest
/// radius (found by bisection) with `sup|ψ − φ₀| ≤ ε/2`, shifted up by `ε/2`,
/// and `C = max(0, log(max MA(ψ₀) / min μ))`. Where `μ` vanishes, nodes with
/// `MA(φ₀) > MAXIMALITY_TOL` refute admissibility; if there are none the
/// answer is `Undecided`.
pub fn check_admissible(problem: &ProblemSpec, eps: f64) -> Result<Admissibility, BarrierError> {
    if !(eps > 0.0) {
        return Err(BarrierError::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let op = problem.op();
    let mesh = problem.mesh();
    let mu = problem.density_values(0.0);
    let zero: Vec<bool> = mu.iter().map(|&m| m == 0.0).collect();
    let zero_count = zero.iter().filter(|&&z| z).count();
    if zero_count > 0 {
        let ma = op.density(problem.phi0(), Execution::Auto)?;
        let ma = ma.values();
        let mut witness = Vec::new();
        let mut defect: f64 = 0.0;
        let mut quiet: f64 = 0.0;
        for (k, &a) in mesh.interior().iter().enumerate() {
            if !zero[k] {
                continue;
            }
            if ma[k] > MAXIMALITY_TOL {
                witness.push(a);
                defect = defect.max(ma[k]);
            } else {
                quiet = quiet.max(ma[k]);
            }
        }
        if witness.is_empty() {
            return Err(BarrierError::Undecided {
                nodes: zero_count,
                defect: quiet,
            });
        }
        return Ok(Admissibility::Refused(Refusal {
            witness,
            defect,
            tol: MAXIMALITY_TOL,
        }));
    }
    let mu_min = mu.iter().copied().fold(f64::INFINITY, f64::min);
    let phi0 = problem.phi0();
    let moll = Mollifier::new(problem);
    let err = |sigma: f64| -> (ScalarField, f64) {
        let psi = moll.apply(sigma);
        let e = psi.sup_distance(phi0).expect("same mesh");
        (psi, e)
    };
    let target = 0.5 * eps;
    let hi = moll.max_sigma();
    let (mut best, mut best_err, mut sigma) = (phi0.clone(), 0.0, 0.0);
    let (psi_hi, e_hi) = err(hi);
    if e_hi <= target {
        (best, best_err, sigma) = (psi_hi, e_hi, hi);
    } else {
        let (mut lo, mut up) = (0.0, hi);
        for _ in 0..SIGMA_BISECTIONS {
            let mid = 0.5 * (lo + up);
            let (psi, e) = err(mid);
            if e <= target {
                lo = mid;
                (best, best_err, sigma) = (psi, e, mid);
            } else {
                up = mid;
            }
        }
    }
    if sigma < mesh.h() {
        sigma = 0.0;
    }
    let psi0 = best.map(|v| v + target);
    let ma_max = op.density(&psi0, Execution::Auto)?.max();
    let c = if ma_max > 0.0 {
        (ma_max / mu_min).ln().max(0.0)
    } else {
        0.0
    };
    Ok(Admissibility::Certified(AdmissibilityCertificate {
        psi0,
        c,
        eps,
        sigma,
        mollify_error: best_err,
    }))
}

fn certificate(problem: &ProblemSpec, eps: f64) -> Result<AdmissibilityCertificate, BarrierError> {
    match check_admissible(problem, eps) {
        Ok(Admissibility::Certified(c)) => Ok(c),
        Ok(Admissibility::Refused(r)) => Err(BarrierError::NotAdmissible(format!(
            "refused on {} nodes (defect {:e})",
            r.witness.len(),
            r.defect
        ))),
        Err(BarrierError::Undecided { nodes, defect }) => Err(BarrierError::NotAdmissible(
            format!("undecided on {nodes} nodes (defect {defect:e})"),
        )),
        Err(e) => Err(e),
    }
}

/// `V = ψ₀ + C·t + Γ(t)` from a fresh admissibility certificate.
pub fn eps_superbarrier(
    problem: &ProblemSpec,
    eps: f64,
    grid: TimeGrid,
) -> Result<BarrierSpec, BarrierError> {
    let cert = certificate(problem, eps)?;
    eps_superbarrier_from(problem, &cert, grid)
}

/// `V = ψ₀ + C·t + Γ(t)`; contact `V(0, z₀) ≤ φ₀(z₀) + ε` at every node.
pub fn eps_superbarrier_from(
    problem: &ProblemSpec,
    cert: &AdmissibilityCertificate,
    grid: TimeGrid,
) -> Result<BarrierSpec, BarrierError> {
    if !cert.psi0.mesh().same_grid(problem.mesh()) {
        return Err(BarrierError::MeshMismatch);
    }
    let gamma = gamma_profile(problem.nonlinearity(), &cert.psi0, grid);
    let tau = gamma.affine(1.0, cert.c, 0.0);
    let init = FlowState::initial(problem)?.field;
    let contact = init
        .values()
        .iter()
        .zip(cert.psi0.values())
        .map(|(p, s)| p + cert.eps - s)
        .fold(f64::INFINITY, f64::min);
    let params = BarrierParams {
        eps: cert.eps,
        c: cert.c,
        ..Default::default()
    };
    let mut spec = build(
        problem,
        BarrierKind::EpsSuperbarrier,
        params,
        cert.psi0.clone(),
        tau,
        contact,
    )?;
    spec.gamma = Some(gamma);
    Ok(spec)
}

/// The maximal field with band values `ψ₀`, from the elliptic solver with
/// `μ ≡ 0`; contact `ψ̄₀ ≤ g + ε` on the band at every grid time.
pub fn boundary_superbarrier(
    problem: &ProblemSpec,
    cert: &AdmissibilityCertificate,
    grid: TimeGrid,
) -> Result<BarrierSpec, BarrierError> {
    if !cert.psi0.mesh().same_grid(problem.mesh()) {
        return Err(BarrierError::MeshMismatch);
    }
    let op = problem.op();
    let mesh = problem.mesh();
    let opts = EllipticOptions {
        tol: 1e-11,
        omega: EllipticOptions::auto_omega(mesh),
        ..Default::default()
    };
    let band = cert.psi0.boundary_values();
    let sol = solve_dirichlet(
        op,
        &Nonlinearity::zero(),
        &Density::constant(0.0),
        &band,
        &opts,
    )?;
    let defect = maximality_defect_with(op, &sol.field, None, Execution::Auto)?;
    if defect > MAXIMALITY_TOL {
        return Err(BarrierError::CertificationFailure {
            what: format!("{} maximality", BarrierKind::BoundarySuperbarrier),
            slack: -defect,
            node: None,
            t: 0.0,
            data: f64::NAN,
            contact: f64::NAN,
        });
    }
    let mut contact = f64::INFINITY;
    for t in grid.times() {
        for (&a, g) in mesh.boundary().iter().zip(problem.band_values(t)) {
            contact = contact.min(g + cert.eps - sol.field.value(a));
        }
    }
    let params = BarrierParams {
        eps: cert.eps,
        c: cert.c,
        ..Default::default()
    };
    build(
        problem,
        BarrierKind::BoundarySuperbarrier,
        params,
        sol.field,
        TimeProfile::zero(grid),
        contact,
    )
}

use std::fmt;
use std::sync::Arc;

use super::FlowError;
use crate::exec::Execution;
use crate::geometry::GridMesh;
use crate::operators::{MaOperator, ScalarField};
use crate::pshtools::is_psh_with;
use crate::tolerances::psh_tol;

pub type NonlinearityFn = dyn Fn(f64, &[f64], f64) -> f64 + Send + Sync;
pub type DensityFn = dyn Fn(f64, &[f64]) -> f64 + Send + Sync;
pub type BoundaryFn = dyn Fn(f64, &[f64], f64) -> f64 + Send + Sync;
pub type InitialFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Closed forms recognized by the change-of-variables transforms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NonlinearityForm {
    Zero,
    /// `F(t, z, r) = alpha·r + offset`.
    Linear {
        alpha: f64,
        offset: f64,
    },
    General,
}

/// The zeroth-order term `F(t, z, r)`, nondecreasing in `r`.
#[derive(Clone)]
pub struct Nonlinearity {
    f: Arc<NonlinearityFn>,
    lipschitz: f64,
    form: NonlinearityForm,
    label: String,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("label", &self.label)
            .field("form", &self.form)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl Nonlinearity {
    pub fn zero() -> Self {
        Self {
            f: Arc::new(|_, _, _| 0.0),
            lipschitz: 0.0,
            form: NonlinearityForm::Zero,
            label: "zero".into(),
        }
    }

    pub fn linear(alpha: f64) -> Self {
        Self::affine(alpha, 0.0)
    }

    /// `alpha·r + offset`; `alpha` must be `≥ 0` for monotonicity.
    pub fn affine(alpha: f64, offset: f64) -> Self {
        if alpha == 0.0 && offset == 0.0 {
            return Self::zero();
        }
        Self {
            f: Arc::new(move |_, _, r| alpha * r + offset),
            lipschitz: alpha.abs(),
            form: NonlinearityForm::Linear { alpha, offset },
            label: format!("linear alpha={alpha} offset={offset}"),
        }
    }

    pub fn arctan() -> Self {
        Self {
            f: Arc::new(|_, _, r: f64| r.atan()),
            lipschitz: 1.0,
            form: NonlinearityForm::General,
            label: "arctan".into(),
        }
    }

    /// Arbitrary closure; `lipschitz` bounds `|∂F/∂r|` and feeds the CFL bound.
    pub fn from_fn<F>(label: impl Into<String>, lipschitz: f64, f: F) -> Self
    where
        F: Fn(f64, &[f64], f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            f: Arc::new(f),
            lipschitz,
            form: NonlinearityForm::General,
            label: label.into(),
        }
    }

    #[inline]
    pub fn eval(&self, t: f64, z: &[f64], r: f64) -> f64 {
        (self.f)(t, z, r)
    }

    pub fn lipschitz_r(&self) -> f64 {
        self.lipschitz
    }

    pub fn form(&self) -> NonlinearityForm {
        self.form
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `F + eps·(r − r0)`; `eps = 0` returns `self` unchanged.
    pub fn perturbed(&self, eps: f64, r0: f64) -> Self {
        if eps == 0.0 {
            return self.clone();
        }
        let form = match self.form {
            NonlinearityForm::Zero => NonlinearityForm::Linear {
                alpha: eps,
                offset: -eps * r0,
            },
            NonlinearityForm::Linear { alpha, offset } => NonlinearityForm::Linear {
                alpha: alpha + eps,
                offset: offset - eps * r0,
            },
            NonlinearityForm::General => NonlinearityForm::General,
        };
        let inner = Arc::clone(&self.f);
        Self {
            f: Arc::new(move |t, z, r| inner(t, z, r) + eps * (r - r0)),
            lipschitz: self.lipschitz + eps,
            form,
            label: format!("{} + {eps}(r - {r0})", self.label),
        }
    }

    /// `(s, z, r) ↦ F(gamma(s), z, r)`.
    pub fn time_changed(&self, gamma: Arc<dyn Fn(f64) -> f64 + Send + Sync>) -> Self {
        if !matches!(self.form, NonlinearityForm::General) {
            return self.clone();
        }
        let inner = Arc::clone(&self.f);
        Self {
            f: Arc::new(move |s, z, r| inner(gamma(s), z, r)),
            lipschitz: self.lipschitz,
            form: NonlinearityForm::General,
            label: format!("{} (time changed)", self.label),
        }
    }
}

/// Nonnegative density `μ(t, z)` in Hessian-determinant units.
#[derive(Clone)]
pub struct Density {
    f: Arc<DensityFn>,
    time_independent: bool,
    constant: Option<f64>,
    label: String,
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density")
            .field("label", &self.label)
            .field("time_independent", &self.time_independent)
            .finish()
    }
}

impl Density {
    pub fn constant(c: f64) -> Self {
        Self {
            f: Arc::new(move |_, _| c),
            time_independent: true,
            constant: Some(c),
            label: format!("constant {c}"),
        }
    }

    /// `μ(z) = profile(|z|)`.
    pub fn radial<P>(label: impl Into<String>, profile: P) -> Self
    where
        P: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_static(label, move |z| {
            profile(z.iter().map(|x| x * x).sum::<f64>().sqrt())
        })
    }

    /// Zero on the closed disc `|z − center| ≤ radius`, one beyond
    /// `radius + ramp`, linear in between.
    pub fn vanishing_disc(center: Vec<f64>, radius: f64, ramp: f64) -> Self {
        let label = format!("vanishing disc radius={radius} ramp={ramp}");
        Self::from_static(label, move |z| {
            let d = z
                .iter()
                .zip(&center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if d <= radius {
                0.0
            } else if ramp <= 0.0 || d >= radius + ramp {
                1.0
            } else {
                (d - radius) / ramp
            }
        })
    }

    pub fn from_static<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            f: Arc::new(move |_, z| f(z)),
            time_independent: true,
            constant: None,
            label: label.into(),
        }
    }

    pub fn from_fn<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            f: Arc::new(f),
            time_independent: false,
            constant: None,
            label: label.into(),
        }
    }

    #[inline]
    pub fn eval(&self, t: f64, z: &[f64]) -> f64 {
        (self.f)(t, z)
    }

    pub fn is_time_independent(&self) -> bool {
        self.time_independent
    }

    pub fn constant_value(&self) -> Option<f64> {
        self.constant
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `(s, z) ↦ factor(s)·μ(gamma(s), z)`.
    pub fn time_changed<G, K>(&self, gamma: G, factor: K) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        K: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let inner = Arc::clone(&self.f);
        Self::from_fn(format!("{} (time changed)", self.label), move |s, z| {
            factor(s) * inner(gamma(s), z)
        })
    }
}

/// Lateral boundary data. `Fixed` keeps `φ₀` on the boundary band; the
/// time-dependent variant is for verification runs only and receives
/// `(t, z, φ₀(z))`.
#[derive(Clone, Default)]
pub enum BoundaryData {
    #[default]
    Fixed,
    TimeDependent(Arc<BoundaryFn>),
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed => f.write_str("Fixed"),
            Self::TimeDependent(_) => f.write_str("TimeDependent"),
        }
    }
}

/// Positive time weight `h(t)` of the twisted equation `e^{h(t)∂ₜφ + F}μ = MA`.
#[derive(Clone)]
pub struct Twist {
    h: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    label: String,
}

impl fmt::Debug for Twist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Twist({})", self.label)
    }
}

impl Twist {
    pub fn new<H>(label: impl Into<String>, h: H) -> Self
    where
        H: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            h: Arc::new(h),
            label: label.into(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant {c}"), move |_| c)
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.h)(t)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Cauchy-Dirichlet problem for the flow on a fixed mesh and frame set.
#[derive(Clone)]
pub struct ProblemSpec {
    op: Arc<MaOperator>,
    f: Nonlinearity,
    mu: Density,
    phi0: ScalarField,
    phi0_fn: Option<Arc<InitialFn>>,
    boundary: BoundaryData,
    horizon: f64,
    twist: Option<Twist>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("n", &self.mesh().n())
            .field("h", &self.mesh().h())
            .field("f", &self.f)
            .field("mu", &self.mu)
            .field("boundary", &self.boundary)
            .field("horizon", &self.horizon)
            .field("twist", &self.twist)
            .finish()
    }
}

/// Number of `r` samples per probe point in the monotonicity check.
const MONOTONE_PROBES: usize = 33;

impl ProblemSpec {
    /// Validates monotonicity of `F`, sign and finiteness of `μ`, and
    /// plurisubharmonicity of `φ₀` (tolerance `PSH_C·h`). The horizon is
    /// infinite until set.
    pub fn new(
        op: Arc<MaOperator>,
        f: Nonlinearity,
        mu: Density,
        phi0: ScalarField,
    ) -> Result<Self, FlowError> {
        let spec = Self {
            op,
            f,
            mu,
            phi0,
            phi0_fn: None,
            boundary: BoundaryData::Fixed,
            horizon: f64::INFINITY,
            twist: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Samples `φ₀` on the mesh and keeps the closure for boundary suprema.
    pub fn from_fn<P>(
        op: Arc<MaOperator>,
        f: Nonlinearity,
        mu: Density,
        phi0: P,
    ) -> Result<Self, FlowError>
    where
        P: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let field = ScalarField::from_fn(op.mesh(), &phi0)?;
        let mut spec = Self::new(op, f, mu, field)?;
        spec.phi0_fn = Some(Arc::new(phi0));
        Ok(spec)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self, FlowError> {
        if !(horizon > 0.0) {
            return Err(FlowError::InvalidOptions(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        self.horizon = horizon;
        self.validate_f()?;
        self.validate_mu()?;
        Ok(self)
    }

    /// Verification-only: replaces the fixed Dirichlet data.
    pub fn with_boundary(mut self, boundary: BoundaryData) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_twist(mut self, twist: Twist) -> Self {
        self.twist = Some(twist);
        self
    }

    pub(crate) fn with_parts(
        &self,
        f: Nonlinearity,
        mu: Density,
        phi0: ScalarField,
    ) -> Result<Self, FlowError> {
        let mut spec = Self {
            op: Arc::clone(&self.op),
            f,
            mu,
            phi0,
            phi0_fn: None,
            boundary: BoundaryData::Fixed,
            horizon: self.horizon,
            twist: None,
        };
        spec.validate()?;
        spec.boundary = self.boundary.clone();
        Ok(spec)
    }

    pub(crate) fn set_phi0_fn(&mut self, f: Option<Arc<InitialFn>>) {
        self.phi0_fn = f;
    }

    pub(crate) fn set_horizon_unchecked(&mut self, horizon: f64) {
        self.horizon = horizon;
    }

    pub fn op(&self) -> &Arc<MaOperator> {
        &self.op
    }

    pub fn mesh(&self) -> &Arc<GridMesh> {
        self.op.mesh()
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.f
    }

    pub fn density(&self) -> &Density {
        &self.mu
    }

    pub fn phi0(&self) -> &ScalarField {
        &self.phi0
    }

    pub fn phi0_fn(&self) -> Option<&Arc<InitialFn>> {
        self.phi0_fn.as_ref()
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.boundary
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn twist(&self) -> Option<&Twist> {
        self.twist.as_ref()
    }

    /// Boundary-band values at time `t`, aligned with `GridMesh::boundary`.
    pub fn band_values(&self, t: f64) -> Vec<f64> {
        let mesh = self.mesh();
        match &self.boundary {
            BoundaryData::Fixed => self.phi0.boundary_values(),
            BoundaryData::TimeDependent(g) => mesh
                .boundary()
                .iter()
                .map(|&a| g(t, mesh.coords(a), self.phi0.value(a)))
                .collect(),
        }
    }

    /// `μ(t, ·)` at the interior nodes.
    pub fn density_values(&self, t: f64) -> Vec<f64> {
        let mesh = self.mesh();
        mesh.interior()
            .iter()
            .map(|&a| self.mu.eval(t, mesh.coords(a)))
            .collect()
    }

    fn probe_times(&self) -> Vec<f64> {
        if self.horizon.is_finite() {
            vec![0.0, 0.5 * self.horizon, self.horizon]
        } else {
            vec![0.0, 1.0, 10.0]
        }
    }

    fn validate(&self) -> Result<(), FlowError> {
        if !self.phi0.mesh().same_grid(self.mesh()) {
            return Err(FlowError::Operator(
                crate::operators::OperatorError::MeshMismatch,
            ));
        }
        self.validate_f()?;
        self.validate_mu()?;
        let tol = psh_tol(self.mesh().h());
        let report =
            is_psh_with(&self.op, &self.phi0, tol, Execution::Auto).map_err(|e| match e {
                crate::pshtools::PshError::Operator(o) => FlowError::Operator(o),
                other => FlowError::InvalidOptions(other.to_string()),
            })?;
        if !report.pass {
            return Err(FlowError::NotPsh {
                min_line_laplacian: report.min_line_laplacian,
                tol,
            });
        }
        Ok(())
    }

    fn validate_f(&self) -> Result<(), FlowError> {
        let mesh = self.mesh();
        let interior = mesh.interior();
        let stride = (interior.len() / 64).max(1);
        let lo = self.phi0.min() - 10.0;
        let hi = self.phi0.max() + 10.0;
        let dr = (hi - lo) / (MONOTONE_PROBES - 1) as f64;
        for t in self.probe_times() {
            for &a in interior.iter().step_by(stride) {
                let z = mesh.coords(a);
                let mut prev = self.f.eval(t, z, lo);
                for i in 1..MONOTONE_PROBES {
                    let r = lo + dr * i as f64;
                    let v = self.f.eval(t, z, r);
                    if !v.is_finite() || v < prev - 1e-12 * (1.0 + prev.abs()) {
                        return Err(FlowError::NonMonotone {
                            t,
                            r_lo: r - dr,
                            r_hi: r,
                        });
                    }
                    prev = v;
                }
            }
        }
        Ok(())
    }

    fn validate_mu(&self) -> Result<(), FlowError> {
        let mesh = self.mesh();
        let times = if self.mu.is_time_independent() {
            vec![0.0]
        } else {
            self.probe_times()
        };
        for t in times {
            for &a in mesh.interior() {
                let v = self.mu.eval(t, mesh.coords(a));
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(FlowError::InvalidDensity {
                        node: a,
                        t,
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }
}

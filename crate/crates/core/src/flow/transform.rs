use std::sync::Arc;

use super::{BoundaryData, FlowError, Nonlinearity, NonlinearityForm, ProblemSpec};
use crate::operators::ScalarField;

/// The zero-`F` problem in `s = e^{αt} − 1` obtained from `F = α·r` through
/// `ψ(s, z) = α(1 + s)·φ(t, z)` and `μ̃(s, z) = αⁿ(1 + s)ⁿ·μ(t, z)`.
#[derive(Clone, Debug)]
pub struct AlphaRescale {
    pub alpha: f64,
    pub problem: ProblemSpec,
}

impl AlphaRescale {
    pub fn s_of_t(&self, t: f64) -> f64 {
        (self.alpha * t).exp_m1()
    }

    pub fn t_of_s(&self, s: f64) -> f64 {
        s.ln_1p() / self.alpha
    }

    pub fn density_factor(&self, s: f64) -> f64 {
        (self.alpha * (1.0 + s)).powi(self.problem.mesh().n() as i32)
    }

    /// `φ(t, ·) ↦ ψ(s(t), ·)`.
    pub fn to_rescaled(&self, phi: &ScalarField, t: f64) -> ScalarField {
        let k = self.alpha * (1.0 + self.s_of_t(t));
        phi.map(|v| k * v)
    }

    /// `ψ(s, ·) ↦ φ(t(s), ·)`.
    pub fn from_rescaled(&self, psi: &ScalarField, s: f64) -> ScalarField {
        let k = self.alpha * (1.0 + s);
        psi.map(|v| v / k)
    }
}

/// Rescales a problem with `F(t, z, r) = α·r`, `α > 0`, to one with `F ≡ 0`.
pub fn alpha_rescale(problem: &ProblemSpec) -> Result<AlphaRescale, FlowError> {
    let alpha = match problem.nonlinearity().form() {
        NonlinearityForm::Linear { alpha, offset } if alpha > 0.0 && offset == 0.0 => alpha,
        other => {
            return Err(FlowError::FormMismatch(format!(
                "expected F = alpha*r with alpha > 0, got {other:?}"
            )))
        }
    };
    if problem.twist().is_some() {
        return Err(FlowError::FormMismatch(
            "alpha rescaling of a twisted problem".into(),
        ));
    }
    let n = problem.mesh().n() as i32;
    let t_of = move |s: f64| s.ln_1p() / alpha;
    let mu = problem
        .density()
        .time_changed(t_of, move |s| (alpha * (1.0 + s)).powi(n));
    let phi0 = problem.phi0().map(|v| alpha * v);
    let mut out = problem.with_parts(Nonlinearity::zero(), mu, phi0)?;
    let boundary = match problem.boundary().clone() {
        BoundaryData::Fixed => {
            BoundaryData::TimeDependent(Arc::new(move |s, _z, g0| alpha * (1.0 + s) * g0))
        }
        BoundaryData::TimeDependent(g) => BoundaryData::TimeDependent(Arc::new(move |s, z, g0| {
            alpha * (1.0 + s) * g(t_of(s), z, g0)
        })),
    };
    out = out.with_boundary(boundary);
    out.set_horizon_unchecked((alpha * problem.horizon()).exp_m1());
    if let Some(f) = problem.phi0_fn() {
        let f = Arc::clone(f);
        out.set_phi0_fn(Some(Arc::new(move |z| alpha * f(z))));
    }
    Ok(AlphaRescale {
        alpha,
        problem: out,
    })
}

/// Monotone map `t ↦ g(t) = ∫₀ᵗ ds/h(s)` tabulated on a uniform grid, with
/// its inverse `γ` by linear interpolation.
#[derive(Clone, Debug)]
pub struct TimeChange {
    dt: f64,
    g: Vec<f64>,
}

impl TimeChange {
    fn identity() -> Self {
        Self {
            dt: 1.0,
            g: vec![0.0, 1.0],
        }
    }

    fn build<H: Fn(f64) -> f64>(h: H, t_end: f64, dt: f64) -> Result<Self, FlowError> {
        let steps = (t_end / dt).ceil().max(1.0) as usize;
        let dt = t_end / steps as f64;
        let mut g = Vec::with_capacity(steps + 1);
        g.push(0.0);
        let mut prev = h(0.0);
        for i in 1..=steps {
            let t = dt * i as f64;
            let cur = h(t);
            for (tt, v) in [(t - dt, prev), (t, cur)] {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(FlowError::NonPositiveTwist { t: tt, value: v });
                }
            }
            let last = *g.last().unwrap();
            g.push(last + 0.5 * dt * (1.0 / prev + 1.0 / cur));
            prev = cur;
        }
        Ok(Self { dt, g })
    }

    pub fn t_end(&self) -> f64 {
        self.dt * (self.g.len() - 1) as f64
    }

    pub fn s_end(&self) -> f64 {
        *self.g.last().unwrap()
    }

    /// `g(t)`, linear between grid points and beyond the ends.
    pub fn g(&self, t: f64) -> f64 {
        let last = self.g.len() - 1;
        let x = t / self.dt;
        let i = (x.floor().max(0.0) as usize).min(last - 1);
        let w = x - i as f64;
        self.g[i] + w * (self.g[i + 1] - self.g[i])
    }

    /// `γ = g⁻¹`.
    pub fn gamma(&self, s: f64) -> f64 {
        let last = self.g.len() - 1;
        let i = match self.g.partition_point(|&v| v <= s) {
            0 => 0,
            p => (p - 1).min(last - 1),
        };
        let (a, b) = (self.g[i], self.g[i + 1]);
        self.dt * (i as f64 + (s - a) / (b - a))
    }
}

/// Untwisted problem in `s = g(t)` and the tabulated time change.
#[derive(Clone, Debug)]
pub struct TwistChange {
    pub problem: ProblemSpec,
    pub time: Arc<TimeChange>,
}

/// Removes the twist `h(t)`: the solution of the returned problem at `s`
/// equals the twisted solution at `γ(s)`. `grid_dt` is the quadrature step
/// for `g`; the horizon must be finite.
pub fn twist_change_of_variables(
    problem: &ProblemSpec,
    grid_dt: f64,
) -> Result<TwistChange, FlowError> {
    let Some(twist) = problem.twist() else {
        return Ok(TwistChange {
            problem: problem.clone(),
            time: Arc::new(TimeChange::identity()),
        });
    };
    if !problem.horizon().is_finite() {
        return Err(FlowError::InvalidOptions(
            "twist change of variables needs a finite horizon".into(),
        ));
    }
    if !(grid_dt > 0.0) {
        return Err(FlowError::InvalidOptions(format!(
            "grid step must be positive, got {grid_dt}"
        )));
    }
    let time = Arc::new(TimeChange::build(
        |t| twist.eval(t),
        problem.horizon(),
        grid_dt,
    )?);
    let tc = Arc::clone(&time);
    let gamma: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(move |s| tc.gamma(s));
    let f = problem.nonlinearity().time_changed(Arc::clone(&gamma));
    let mu = if problem.density().is_time_independent() {
        problem.density().clone()
    } else {
        let gm = Arc::clone(&gamma);
        problem.density().time_changed(move |s| gm(s), |_| 1.0)
    };
    let mut out = problem.with_parts(f, mu, problem.phi0().clone())?;
    if let BoundaryData::TimeDependent(g) = problem.boundary().clone() {
        let gm = Arc::clone(&gamma);
        out = out.with_boundary(BoundaryData::TimeDependent(Arc::new(move |s, z, g0| {
            g(gm(s), z, g0)
        })));
    }
    out.set_horizon_unchecked(time.s_end());
    out.set_phi0_fn(problem.phi0_fn().cloned());
    Ok(TwistChange { problem: out, time })
}

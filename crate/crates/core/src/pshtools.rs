//! Discrete plurisubharmonicity: line-Laplacian sign tests, envelopes below
//! an obstacle, and the Monge-Ampère defect used as a maximality measure.

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::exec::{self, Execution};
use crate::operators::{FrameSet, MaOperator, OperatorError, ScalarField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PshError {
    #[error("envelope sweep did not converge in {iters} iterations (last change {change:e})")]
    NoConvergence { iters: usize, change: f64 },
    #[error("region mask has {got} entries, mesh has {expected} interior nodes")]
    MaskLength { expected: usize, got: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PshReport {
    pub pass: bool,
    pub tol: f64,
    /// Smallest line Laplacian over interior nodes and frame directions.
    pub min_line_laplacian: f64,
    /// Active index of the node attaining the minimum.
    pub worst_node: Option<usize>,
    pub worst_coords: Vec<f64>,
}

impl PshReport {
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "pass={}", self.pass);
        let _ = writeln!(s, "tol={:.6e}", self.tol);
        let _ = writeln!(s, "min_line_laplacian={:.16e}", self.min_line_laplacian);
        let coords: Vec<String> = self
            .worst_coords
            .iter()
            .map(|x| format!("{x:.16e}"))
            .collect();
        let _ = writeln!(s, "worst_node={}", coords.join(","));
        s
    }
}

/// Passes iff every line Laplacian at every interior node is `≥ −tol`.
pub fn is_psh(field: &ScalarField, frames: &FrameSet, tol: f64) -> Result<PshReport, PshError> {
    let op = MaOperator::new(Arc::clone(field.mesh()), Arc::new(frames.clone()))?;
    is_psh_with(&op, field, tol, Execution::Auto)
}

pub fn is_psh_with(
    op: &MaOperator,
    field: &ScalarField,
    tol: f64,
    exec: Execution,
) -> Result<PshReport, PshError> {
    let lap = op.min_line_laplacian(field, exec)?;
    let vals = lap.values();
    let (min, k) = exec::argmin(exec, vals.len(), |k| vals[k]);
    let mesh = op.mesh();
    let worst_node = k.map(|k| mesh.interior()[k]);
    Ok(PshReport {
        pass: min >= -tol,
        tol,
        min_line_laplacian: min,
        worst_node,
        worst_coords: worst_node
            .map(|a| mesh.coords(a).to_vec())
            .unwrap_or_default(),
    })
}

/// Largest discretely psh field below `obstacle` with the obstacle's values
/// on the boundary band. Gauss-Seidel sweeps of
/// `u(z) ← min(obstacle(z), min over lines of the 4-neighbor line average)`
/// until the sup-change is `≤ tol·h²`.
pub fn psh_envelope(
    obstacle: &ScalarField,
    frames: &FrameSet,
    tol: f64,
    max_iters: usize,
) -> Result<ScalarField, PshError> {
    let op = MaOperator::new(Arc::clone(obstacle.mesh()), Arc::new(frames.clone()))?;
    psh_envelope_with(&op, obstacle, tol, max_iters)
}

pub fn psh_envelope_with(
    op: &MaOperator,
    obstacle: &ScalarField,
    tol: f64,
    max_iters: usize,
) -> Result<ScalarField, PshError> {
    let mesh = op.mesh();
    let h = mesh.h();
    let stop = tol * h * h;
    let ob = obstacle.values();
    let mut u = obstacle.clone();
    let interior = mesh.interior();
    let mut change = f64::INFINITY;
    for _ in 0..max_iters {
        change = 0.0;
        let vals = u.values_mut();
        for (k, &a) in interior.iter().enumerate() {
            let mut target = ob[a];
            for l in 0..op.line_count() {
                target = target.min(0.25 * op.neighbor_sum(vals, k, l));
            }
            change = f64::max(change, (vals[a] - target).abs());
            vals[a] = target;
        }
        if change <= stop {
            return Ok(u);
        }
    }
    Err(PshError::NoConvergence {
        iters: max_iters,
        change,
    })
}

/// `sup` of the Monge-Ampère density over the masked interior nodes
/// (`mask` aligned with [`crate::geometry::GridMesh::interior`], `None` for all).
pub fn maximality_defect(
    field: &ScalarField,
    mask: Option<&[bool]>,
    frames: &FrameSet,
) -> Result<f64, PshError> {
    let op = MaOperator::new(Arc::clone(field.mesh()), Arc::new(frames.clone()))?;
    maximality_defect_with(&op, field, mask, Execution::Auto)
}

pub fn maximality_defect_with(
    op: &MaOperator,
    field: &ScalarField,
    mask: Option<&[bool]>,
    exec: Execution,
) -> Result<f64, PshError> {
    let ni = op.mesh().interior().len();
    if let Some(m) = mask {
        if m.len() != ni {
            return Err(PshError::MaskLength {
                expected: ni,
                got: m.len(),
            });
        }
    }
    let ma = op.density(field, exec)?;
    let v = ma.values();
    let (max, _) = exec::argmax(exec, ni, |k| match mask {
        Some(m) if !m[k] => f64::NEG_INFINITY,
        _ => v[k],
    });
    Ok(if max == f64::NEG_INFINITY { 0.0 } else { max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, DomainSpec};
    use crate::tolerances::CERT_TOL;

    fn mesh(n: usize, h: f64) -> Arc<crate::geometry::GridMesh> {
        Arc::new(build_mesh(&DomainSpec::ball(n, 1.0).unwrap(), h, 1).unwrap())
    }

    fn nsq(z: &[f64]) -> f64 {
        z.iter().map(|x| x * x).sum()
    }

    #[test]
    fn is_psh_examples() {
        let m = mesh(1, 0.125);
        let fs = FrameSet::identity(1);
        let q = ScalarField::from_fn(&m, nsq).unwrap();
        let r = is_psh(&q, &fs, 0.0).unwrap();
        assert!(r.pass);
        assert!((r.min_line_laplacian - 1.0).abs() < 1e-12);
        let r = is_psh(&q.map(|v| -v), &fs, 1e-9).unwrap();
        assert!(!r.pass);
        assert!((r.min_line_laplacian + 1.0).abs() < 1e-12);
        assert!(r.to_kv().contains("pass=false"));
        let kink = ScalarField::from_fn(&m, |z| z[0].max(0.0)).unwrap();
        let r = is_psh(&kink, &fs, m.h()).unwrap();
        assert!(r.pass && r.min_line_laplacian >= 0.0);
    }

    #[test]
    fn envelope_of_psh_obstacle_is_itself() {
        let m = mesh(2, 0.25);
        let fs = FrameSet::default_for(2, 1);
        let q = ScalarField::from_fn(&m, nsq).unwrap();
        let e = psh_envelope(&q, &fs, 1e-10, 10_000).unwrap();
        assert!(e.sup_distance(&q).unwrap() <= 1e-10);
        let capped = ScalarField::from_fn(&m, |z| nsq(z).min(1.5)).unwrap();
        let e = psh_envelope(&capped, &fs, 1e-10, 10_000).unwrap();
        assert!(e.sup_distance(&capped).unwrap() <= 1e-10);
    }

    /// Independent brute-force Jacobi iteration for the envelope of `−|z|²`
    /// with boundary value `−1`.
    #[test]
    fn envelope_of_concave_obstacle_is_constant() {
        let m = mesh(1, 0.125);
        let fs = FrameSet::identity(1);
        let ob = ScalarField::from_fn(&m, |z| -nsq(z))
            .unwrap()
            .with_boundary(&vec![-1.0; m.boundary().len()])
            .unwrap();
        let mut u = ob.values().to_vec();
        let nb = |a: usize, o: [i32; 2]| m.neighbor(a, &o).unwrap();
        for _ in 0..20_000 {
            let prev = u.clone();
            for &a in m.interior() {
                let avg = 0.25
                    * (prev[nb(a, [1, 0])]
                        + prev[nb(a, [-1, 0])]
                        + prev[nb(a, [0, 1])]
                        + prev[nb(a, [0, -1])]);
                u[a] = ob.value(a).min(avg);
            }
        }
        assert!(m.interior().iter().all(|&a| (u[a] + 1.0).abs() < 1e-9));
        let tol = 1e-10;
        let e = psh_envelope(&ob, &fs, tol, 100_000).unwrap();
        for &a in m.interior() {
            assert!((e.value(a) + 1.0).abs() < 1e-6);
        }
        assert!(is_psh(&e, &fs, 1e-6).unwrap().pass);
        assert!(maximality_defect(&e, None, &fs).unwrap() <= 1e-6);
    }

    #[test]
    fn envelope_reports_non_convergence() {
        let m = mesh(1, 0.125);
        let ob = ScalarField::from_fn(&m, |z| -nsq(z)).unwrap();
        let err = psh_envelope(&ob, &FrameSet::identity(1), 1e-12, 2).unwrap_err();
        assert!(matches!(err, PshError::NoConvergence { iters: 2, .. }));
    }

    #[test]
    fn maximality_defect_examples() {
        let m = mesh(2, 0.25);
        let fs = FrameSet::default_for(2, 1);
        let re = ScalarField::from_fn(&m, |z| z[0] - 0.5 * z[3]).unwrap();
        assert!(maximality_defect(&re, None, &fs).unwrap().abs() <= CERT_TOL);
        let q = ScalarField::from_fn(&m, nsq).unwrap();
        let mask: Vec<bool> = (0..m.interior().len()).map(|k| k % 3 == 0).collect();
        assert!((maximality_defect(&q, Some(&mask), &fs).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            maximality_defect(&q, Some(&mask[1..]), &fs),
            Err(PshError::MaskLength { .. })
        ));
    }
}

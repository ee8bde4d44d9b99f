use super::HarnessError;
use crate::barriers::{Certified, Side};
use crate::exec::Execution;
use crate::flow::Trajectory;
use crate::operators::{FrameSet, MaOperator};
use crate::pshtools::is_psh_with;

/// `lhs = max (u − v)` over every sample and node, `rhs = max(0, max (u − v))`
/// over the parabolic boundary (initial slice and boundary band).
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
    pub pass: bool,
    /// Interior node and time where `u − v` is largest.
    pub worst_node: Option<usize>,
    pub worst_t: f64,
}

fn same_times(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0))
}

/// Discrete comparison inequality for a certified sub/supersolution pair.
pub fn comparison_check(
    u: &Certified,
    v: &Certified,
    tol: f64,
) -> Result<ComparisonReport, HarnessError> {
    if u.side() != Side::Sub {
        return Err(HarnessError::Uncertified(format!(
            "{} is not a certified subsolution",
            u.label()
        )));
    }
    if v.side() != Side::Super {
        return Err(HarnessError::Uncertified(format!(
            "{} is not a certified supersolution",
            v.label()
        )));
    }
    let (us, vs) = (u.samples(), v.samples());
    if !us.fields[0].mesh().same_grid(vs.fields[0].mesh()) {
        return Err(HarnessError::MeshMismatch);
    }
    if !same_times(&us.times, &vs.times) {
        return Err(HarnessError::TimeMismatch);
    }
    let mesh = us.fields[0].mesh();
    let mut lhs = f64::NEG_INFINITY;
    let mut boundary = f64::NEG_INFINITY;
    let mut worst = (f64::NEG_INFINITY, None, us.times[0]);
    for (k, (fu, fv)) in us.fields.iter().zip(&vs.fields).enumerate() {
        let (a, b) = (fu.values(), fv.values());
        for node in 0..mesh.active_len() {
            let d = a[node] - b[node];
            lhs = lhs.max(d);
            if (k == 0 && us.times[0] == 0.0) || mesh.interior_ordinal(node).is_none() {
                boundary = boundary.max(d);
            } else if d > worst.0 {
                worst = (d, Some(node), us.times[k]);
            }
        }
    }
    let rhs = boundary.max(0.0);
    Ok(ComparisonReport {
        lhs,
        rhs,
        tol,
        pass: lhs <= rhs + tol,
        worst_node: worst.1,
        worst_t: worst.2,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerronReport {
    /// `max (sup of family − flow)` over compared times and nodes.
    pub max_excess: f64,
    pub worst_node: Option<usize>,
    pub worst_t: f64,
    pub compared_times: usize,
    /// `max (φ₀ − envelope)` at `t = 0`, when compared there.
    pub initial_gap: Option<f64>,
    pub tol: f64,
    pub pass: bool,
}

/// Pointwise supremum of certified subsolutions stays below the flow at every
/// snapshot time the family was sampled at.
pub fn perron_lower_envelope_check(
    family: &[Certified],
    flow: &Trajectory,
    tol: f64,
) -> Result<PerronReport, HarnessError> {
    for m in family {
        if m.side() != Side::Sub {
            return Err(HarnessError::Uncertified(format!(
                "{} is not a certified subsolution",
                m.label()
            )));
        }
    }
    let Some(first) = flow.snapshots.first() else {
        return Err(HarnessError::NoCommonTimes);
    };
    let mesh = first.mesh();
    if family
        .iter()
        .any(|m| !m.samples().fields[0].mesh().same_grid(mesh))
    {
        return Err(HarnessError::MeshMismatch);
    }
    let mut report = PerronReport {
        max_excess: f64::NEG_INFINITY,
        worst_node: None,
        worst_t: 0.0,
        compared_times: 0,
        initial_gap: None,
        tol,
        pass: false,
    };
    for (&t, snap) in flow.times.iter().zip(&flow.snapshots) {
        let members: Vec<_> = family
            .iter()
            .filter_map(|m| m.samples().at_time(t))
            .collect();
        if members.is_empty() {
            continue;
        }
        report.compared_times += 1;
        let mut gap = f64::NEG_INFINITY;
        for a in 0..mesh.active_len() {
            let env = members
                .iter()
                .map(|f| f.value(a))
                .fold(f64::NEG_INFINITY, f64::max);
            let d = env - snap.value(a);
            if d > report.max_excess {
                report.max_excess = d;
                report.worst_node = Some(a);
                report.worst_t = t;
            }
            gap = gap.max(-d);
        }
        if t == 0.0 {
            report.initial_gap = Some(gap);
        }
    }
    if report.compared_times == 0 {
        return Err(HarnessError::NoCommonTimes);
    }
    report.pass = report.max_excess <= tol;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PshTrajectoryReport {
    pub tol: f64,
    /// Smallest line Laplacian per snapshot.
    pub min_line_laplacian: Vec<f64>,
    /// First failing snapshot time and node.
    pub first_failure: Option<(f64, usize)>,
    pub pass: bool,
}

/// `is_psh` on every snapshot.
pub fn theorem_a_check(
    traj: &Trajectory,
    frames: &FrameSet,
    tol: f64,
) -> Result<PshTrajectoryReport, HarnessError> {
    let mut out = PshTrajectoryReport {
        tol,
        min_line_laplacian: Vec::with_capacity(traj.len()),
        first_failure: None,
        pass: true,
    };
    let Some(first) = traj.snapshots.first() else {
        return Ok(out);
    };
    let op = MaOperator::new(first.mesh().clone(), std::sync::Arc::new(frames.clone()))?;
    for (&t, s) in traj.times.iter().zip(&traj.snapshots) {
        if !s.mesh().same_grid(op.mesh()) {
            return Err(HarnessError::MeshMismatch);
        }
        let r = is_psh_with(&op, s, tol, Execution::Auto)?;
        out.min_line_laplacian.push(r.min_line_laplacian);
        if !r.pass {
            out.pass = false;
            if out.first_failure.is_none() {
                out.first_failure = r.worst_node.map(|a| (t, a));
            }
        }
    }
    Ok(out)
}

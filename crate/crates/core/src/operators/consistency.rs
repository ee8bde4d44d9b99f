use std::sync::Arc;

use super::field::ScalarField;
use super::frames::FrameSet;
use super::oracle::{hessian_density_exact, SmoothFunction};
use super::stencil::MaOperator;
use super::OperatorError;
use crate::exec::{self, Execution};
use crate::geometry::{DomainSpec, GeometryError, GridMesh, Reach};

/// One line of a consistency table.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyRow {
    pub function: String,
    pub h: f64,
    pub interior_nodes: usize,
    pub max_error: f64,
}

/// Max over interior nodes of `|MA_h(u) − det(u_{jk̄})|` for each test
/// function and spacing. Nodes are restricted to `ρ ≤ rho_max` so that a fixed
/// physical region can be compared across spacings (pass `0.0` for all).
pub fn consistency_report(
    domain: &DomainSpec,
    frames: &FrameSet,
    functions: &[(&str, &dyn SmoothFunction)],
    hs: &[f64],
    rho_max: f64,
) -> Result<Vec<ConsistencyRow>, ConsistencyError> {
    let frames = Arc::new(frames.clone());
    let mut rows = Vec::new();
    for &h in hs {
        let mesh = Arc::new(GridMesh::build(domain, h, Reach::Cube(frames.width()))?);
        let op = MaOperator::new(Arc::clone(&mesh), Arc::clone(&frames))?;
        let nodes: Vec<usize> = (0..mesh.interior().len())
            .filter(|&k| domain.rho(mesh.coords(mesh.interior()[k])) <= rho_max)
            .collect();
        for (name, f) in functions {
            let field = ScalarField::from_fn(&mesh, |z| f.value(z))?;
            let ma = op.density(&field, Execution::Auto)?;
            let (err, _) = exec::argmax(Execution::Auto, nodes.len(), |i| {
                let k = nodes[i];
                (ma.get(k) - hessian_density_exact(*f, mesh.coords(mesh.interior()[k]))).abs()
            });
            rows.push(ConsistencyRow {
                function: name.to_string(),
                h,
                interior_nodes: nodes.len(),
                max_error: if nodes.is_empty() { 0.0 } else { err },
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, thiserror::Error)]
pub enum ConsistencyError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

use std::fmt::Write as _;
use std::sync::Arc;

use super::OperatorError;
use crate::geometry::{GridMesh, NodeClass};

/// One time slice of a function on the valued nodes (interior and boundary
/// band) of a mesh. Values are always finite.
#[derive(Clone, Debug)]
pub struct ScalarField {
    mesh: Arc<GridMesh>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn from_fn<F>(mesh: &Arc<GridMesh>, f: F) -> Result<Self, OperatorError>
    where
        F: Fn(&[f64]) -> f64,
    {
        let values = (0..mesh.active_len()).map(|a| f(mesh.coords(a))).collect();
        Self::from_values(mesh, values)
    }

    pub fn constant(mesh: &Arc<GridMesh>, c: f64) -> Self {
        assert!(c.is_finite(), "constant field must be finite");
        Self {
            mesh: Arc::clone(mesh),
            values: vec![c; mesh.active_len()],
        }
    }

    pub fn from_values(mesh: &Arc<GridMesh>, values: Vec<f64>) -> Result<Self, OperatorError> {
        if values.len() != mesh.active_len() {
            return Err(OperatorError::LengthMismatch {
                expected: mesh.active_len(),
                got: values.len(),
            });
        }
        if let Some((node, value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(OperatorError::NonFinite {
                node,
                value: *value,
            });
        }
        Ok(Self {
            mesh: Arc::clone(mesh),
            values,
        })
    }

    /// Replaces the boundary-band values (aligned with [`GridMesh::boundary`]).
    pub fn with_boundary(mut self, band: &[f64]) -> Result<Self, OperatorError> {
        if band.len() != self.mesh.boundary().len() {
            return Err(OperatorError::LengthMismatch {
                expected: self.mesh.boundary().len(),
                got: band.len(),
            });
        }
        for (&a, &v) in self.mesh.boundary().iter().zip(band) {
            if !v.is_finite() {
                return Err(OperatorError::NonFinite { node: a, value: v });
            }
            self.values[a] = v;
        }
        Ok(self)
    }

    pub fn mesh(&self) -> &Arc<GridMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable access for in-place solvers. Callers keep the values finite.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn value(&self, active: usize) -> f64 {
        self.values[active]
    }

    pub fn boundary_values(&self) -> Vec<f64> {
        self.mesh
            .boundary()
            .iter()
            .map(|&a| self.values[a])
            .collect()
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            mesh: Arc::clone(&self.mesh),
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn same_mesh(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || self.mesh.same_grid(&other.mesh)
    }

    /// `sup |self − other|` over all valued nodes.
    pub fn sup_distance(&self, other: &ScalarField) -> Result<f64, OperatorError> {
        if !self.same_mesh(other) {
            return Err(OperatorError::MeshMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// `sup |self − other|` over interior nodes only.
    pub fn interior_sup_distance(&self, other: &ScalarField) -> Result<f64, OperatorError> {
        if !self.same_mesh(other) {
            return Err(OperatorError::MeshMismatch);
        }
        Ok(self
            .mesh
            .interior()
            .iter()
            .map(|&a| (self.values[a] - other.values[a]).abs())
            .fold(0.0, f64::max))
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// CSV serialization: header lines `n=`, `h=`, `bbox=`, then one row per
    /// valued node `i₁..i_{2n},x₁..x_{2n},class,value` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        write_header(&mut out, &self.mesh);
        for a in 0..self.mesh.active_len() {
            write_row(&mut out, &self.mesh, a, None);
            let _ = writeln!(out, ",{:.16e}", self.values[a]);
        }
        out
    }

    /// Inverse of [`ScalarField::to_csv`] on a mesh with the same lattice.
    pub fn from_csv(mesh: &Arc<GridMesh>, text: &str) -> Result<Self, OperatorError> {
        let mut lines = text.lines();
        let n = header_value(lines.next(), "n=")?;
        if n.parse::<usize>().ok() != Some(mesh.n()) {
            return Err(OperatorError::Csv(format!(
                "dimension {n} does not match mesh"
            )));
        }
        let h: f64 = header_value(lines.next(), "h=")?
            .parse()
            .map_err(|e| OperatorError::Csv(format!("bad h: {e}")))?;
        if (h - mesh.h()).abs() > 1e-15 * mesh.h() {
            return Err(OperatorError::Csv(format!(
                "spacing {h} does not match mesh"
            )));
        }
        header_value(lines.next(), "bbox=")?;
        let d = mesh.real_dim();
        let mut values = vec![f64::NAN; mesh.active_len()];
        let mut idx = vec![0i32; d];
        for (row, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 2 * d + 2 {
                return Err(OperatorError::Csv(format!(
                    "row {row}: {} columns",
                    cols.len()
                )));
            }
            for k in 0..d {
                idx[k] = cols[k]
                    .parse()
                    .map_err(|e| OperatorError::Csv(format!("row {row}: {e}")))?;
            }
            let a = mesh
                .active_at(&idx)
                .ok_or_else(|| OperatorError::Csv(format!("row {row}: node not valued")))?;
            values[a] = cols[2 * d + 1]
                .parse()
                .map_err(|e| OperatorError::Csv(format!("row {row}: {e}")))?;
        }
        Self::from_values(mesh, values)
    }
}

pub(crate) fn write_header(out: &mut String, mesh: &GridMesh) {
    let (lo, hi) = mesh.bbox();
    let _ = writeln!(out, "n={}", mesh.n());
    let _ = writeln!(out, "h={:.16e}", mesh.h());
    let bbox: Vec<String> = (0..mesh.real_dim())
        .map(|_| format!("{lo:.16e},{hi:.16e}"))
        .collect();
    let _ = writeln!(out, "bbox={}", bbox.join(","));
}

/// Writes `[time_index,]i…,x…,class` without the trailing value.
pub(crate) fn write_row(out: &mut String, mesh: &GridMesh, a: usize, time_index: Option<usize>) {
    if let Some(k) = time_index {
        let _ = write!(out, "{k},");
    }
    for i in mesh.lattice_index(a) {
        let _ = write!(out, "{i},");
    }
    for x in mesh.coords(a) {
        let _ = write!(out, "{x:.16e},");
    }
    let class = match mesh.class(a) {
        NodeClass::Interior => 'I',
        _ => 'B',
    };
    out.push(class);
}

fn header_value<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str, OperatorError> {
    line.and_then(|l| l.strip_prefix(key))
        .ok_or_else(|| OperatorError::Csv(format!("missing header {key}")))
}

/// Values on interior nodes only, aligned with [`GridMesh::interior`].
#[derive(Clone, Debug)]
pub struct InteriorField {
    mesh: Arc<GridMesh>,
    values: Vec<f64>,
}

impl InteriorField {
    pub(crate) fn new(mesh: Arc<GridMesh>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), mesh.interior().len());
        Self { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<GridMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at the interior node with the given ordinal.
    pub fn get(&self, ordinal: usize) -> f64 {
        self.values[ordinal]
    }

    /// Value at an active node, if it is interior.
    pub fn at(&self, active: usize) -> Option<f64> {
        self.mesh.interior_ordinal(active).map(|k| self.values[k])
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, DomainSpec};
    use proptest::prelude::*;

    fn mesh(n: usize, h: f64) -> Arc<GridMesh> {
        Arc::new(build_mesh(&DomainSpec::ball(n, 1.0).unwrap(), h, 1).unwrap())
    }

    #[test]
    fn rejects_non_finite() {
        let m = mesh(1, 0.25);
        let err = ScalarField::from_fn(&m, |z| 1.0 / z[0]).unwrap_err();
        assert!(matches!(err, OperatorError::NonFinite { .. }));
    }

    #[test]
    fn csv_layout() {
        let m = mesh(1, 0.5);
        let f = ScalarField::from_fn(&m, |z| z[0] - z[1]).unwrap();
        let csv = f.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n=1"));
        assert!(lines.next().unwrap().starts_with("h=5.0000000000000000e-1"));
        assert!(lines.next().unwrap().starts_with("bbox="));
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), 6);
        assert_eq!(csv.lines().count(), 3 + m.active_len());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -1e3f64..1e3) {
            let m = mesh(2, 0.5);
            let f = ScalarField::from_fn(&m, |z| a * z[0] * z[3] + b * z[1].sin() + c).unwrap();
            let g = ScalarField::from_csv(&m, &f.to_csv()).unwrap();
            prop_assert_eq!(f.values(), g.values());
        }
    }
}

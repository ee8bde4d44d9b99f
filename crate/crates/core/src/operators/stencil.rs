use std::sync::Arc;

use super::field::{InteriorField, ScalarField};
use super::frames::{FrameSet, LineDir};
use super::OperatorError;
use crate::exec::{self, Execution};
use crate::geometry::{GridMesh, NodeClass};

/// Discrete complex-line Laplacian of `field` at an interior node along `v`:
/// `(Σ of the 4 neighbors z ± h·v, z ± h·iv − 4·field(z)) / (4h²|v|²)`.
pub fn line_laplacian(field: &ScalarField, v: &LineDir, node: usize) -> Result<f64, OperatorError> {
    let mesh = field.mesh();
    if mesh.class(node) != NodeClass::Interior {
        return Err(OperatorError::NotInterior(node));
    }
    let mut sum = 0.0;
    for base in [v.real_offset(), v.imag_offset()] {
        for sign in [1, -1] {
            let off: Vec<i32> = base.iter().map(|c| sign * c).collect();
            let nb = mesh
                .neighbor(node, &off)
                .ok_or(OperatorError::StencilOutOfRange { node, line: 0 })?;
            sum += field.value(nb);
        }
    }
    let h = mesh.h();
    Ok((sum - 4.0 * field.value(node)) / (4.0 * h * h * v.norm_sq()))
}

/// `MA_h(field)` at every interior node with the given frames.
pub fn ma_density(field: &ScalarField, frames: &FrameSet) -> Result<InteriorField, OperatorError> {
    let op = MaOperator::new(Arc::clone(field.mesh()), Arc::new(frames.clone()))?;
    op.density(field, Execution::Auto)
}

/// Precomputed wide-stencil operator on a fixed mesh and frame set.
///
/// Per interior node and line the four neighbor indices are cached, so every
/// evaluation is a gather over `Vec<u32>`. The frame value is affine in the
/// center value: `m_f(c) = α_f − β_f·c`.
#[derive(Clone, Debug)]
pub struct MaOperator {
    mesh: Arc<GridMesh>,
    frames: Arc<FrameSet>,
    nbrs: Vec<u32>,
    inv_scale: Vec<f64>,
    frame_lines: Vec<Vec<(usize, f64)>>,
    beta: Vec<f64>,
}

impl MaOperator {
    pub fn new(mesh: Arc<GridMesh>, frames: Arc<FrameSet>) -> Result<Self, OperatorError> {
        if frames.n() != mesh.n() {
            return Err(OperatorError::DimensionMismatch {
                frames: frames.n(),
                mesh: mesh.n(),
            });
        }
        let lines = frames.lines();
        let nl = lines.len();
        let mut nbrs = Vec::with_capacity(mesh.interior().len() * nl * 4);
        let offsets: Vec<[Vec<i32>; 4]> = lines
            .iter()
            .map(|l| {
                let neg = |o: &[i32]| o.iter().map(|c| -c).collect::<Vec<i32>>();
                [
                    l.real_offset().to_vec(),
                    neg(l.real_offset()),
                    l.imag_offset().to_vec(),
                    neg(l.imag_offset()),
                ]
            })
            .collect();
        for &a in mesh.interior() {
            for (li, offs) in offsets.iter().enumerate() {
                for o in offs {
                    let nb = mesh
                        .neighbor(a, o)
                        .ok_or(OperatorError::StencilOutOfRange { node: a, line: li })?;
                    nbrs.push(nb as u32);
                }
            }
        }
        let h = mesh.h();
        let inv_scale: Vec<f64> = lines
            .iter()
            .map(|l| 1.0 / (4.0 * h * h * l.norm_sq()))
            .collect();
        let n = frames.n() as f64;
        let frame_lines: Vec<Vec<(usize, f64)>> = frames
            .frames()
            .iter()
            .map(|f| {
                f.lines
                    .iter()
                    .zip(&f.weights)
                    .map(|(&l, &w)| (l, w * inv_scale[l] / n))
                    .collect()
            })
            .collect();
        let beta = frame_lines
            .iter()
            .map(|fl| fl.iter().map(|(_, c)| 4.0 * c).sum())
            .collect();
        Ok(Self {
            mesh,
            frames,
            nbrs,
            inv_scale,
            frame_lines,
            beta,
        })
    }

    /// Operator with the default frame set of the mesh width.
    pub fn with_default_frames(mesh: Arc<GridMesh>) -> Result<Self, OperatorError> {
        let frames = Arc::new(FrameSet::default_for(mesh.n(), mesh.width()));
        Self::new(mesh, frames)
    }

    pub fn mesh(&self) -> &Arc<GridMesh> {
        &self.mesh
    }

    pub fn frames(&self) -> &Arc<FrameSet> {
        &self.frames
    }

    pub fn line_count(&self) -> usize {
        self.inv_scale.len()
    }

    pub fn frame_count(&self) -> usize {
        self.beta.len()
    }

    /// Center coefficients `β_f = −∂m_f/∂c`.
    pub fn betas(&self) -> &[f64] {
        &self.beta
    }

    /// Largest `β_f`; the Lipschitz constant of the frame minimum in the center value.
    pub fn max_beta(&self) -> f64 {
        self.beta.iter().copied().fold(0.0, f64::max)
    }

    /// Active indices of the 4 neighbors of interior node `k` (ordinal) along line `l`.
    pub fn neighbors(&self, k: usize, l: usize) -> &[u32] {
        let base = (k * self.line_count() + l) * 4;
        &self.nbrs[base..base + 4]
    }

    /// Sum of the 4 line neighbors of interior ordinal `k` along line `l`.
    #[inline]
    pub fn neighbor_sum(&self, values: &[f64], k: usize, l: usize) -> f64 {
        let nb = self.neighbors(k, l);
        values[nb[0] as usize]
            + values[nb[1] as usize]
            + values[nb[2] as usize]
            + values[nb[3] as usize]
    }

    #[inline]
    pub fn line_laplacian_at(&self, values: &[f64], k: usize, l: usize) -> f64 {
        let c = values[self.mesh.interior()[k]];
        (self.neighbor_sum(values, k, l) - 4.0 * c) * self.inv_scale[l]
    }

    /// Smallest line Laplacian over all lines at ordinal `k`.
    pub fn min_line_laplacian_at(&self, values: &[f64], k: usize) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for l in 0..self.line_count() {
            let v = self.line_laplacian_at(values, k, l);
            if v < best.0 {
                best = (v, l);
            }
        }
        best
    }

    /// Writes `α_f` for every frame at ordinal `k`, so that
    /// `m_f(c) = α_f − β_f·c` for center value `c`. `sums` is scratch of
    /// length [`MaOperator::line_count`].
    pub fn frame_alphas(&self, values: &[f64], k: usize, sums: &mut [f64], alphas: &mut [f64]) {
        for (l, s) in sums.iter_mut().enumerate() {
            *s = self.neighbor_sum(values, k, l);
        }
        for (a, fl) in alphas.iter_mut().zip(&self.frame_lines) {
            *a = fl.iter().map(|&(l, c)| c * sums[l]).sum();
        }
    }

    /// `min over frames of (1/n) Σ λᵢ·LLᵢ` at ordinal `k` (before clamping).
    pub fn frame_min_at(&self, values: &[f64], k: usize, sums: &mut [f64]) -> f64 {
        let c4 = 4.0 * values[self.mesh.interior()[k]];
        for (l, s) in sums.iter_mut().enumerate() {
            *s = self.neighbor_sum(values, k, l) - c4;
        }
        self.min_over_frames(sums)
    }

    /// Frame minimum and smallest line Laplacian at ordinal `k` in one pass.
    pub fn frame_min_and_min_line(&self, values: &[f64], k: usize, sums: &mut [f64]) -> (f64, f64) {
        let c4 = 4.0 * values[self.mesh.interior()[k]];
        let mut min_ll = f64::INFINITY;
        for (l, s) in sums.iter_mut().enumerate() {
            *s = self.neighbor_sum(values, k, l) - c4;
            min_ll = min_ll.min(*s * self.inv_scale[l]);
        }
        (self.min_over_frames(sums), min_ll)
    }

    /// `min_f Σ w·d_l` given centered second differences `d_l`.
    #[inline]
    fn min_over_frames(&self, diffs: &[f64]) -> f64 {
        self.frame_lines
            .iter()
            .map(|fl| fl.iter().map(|&(l, w)| w * diffs[l]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of the frame attaining the minimum at ordinal `k` (first on ties).
    pub fn argmin_frame_at(&self, values: &[f64], k: usize) -> usize {
        let c4 = 4.0 * values[self.mesh.interior()[k]];
        let diffs: Vec<f64> = (0..self.line_count())
            .map(|l| self.neighbor_sum(values, k, l) - c4)
            .collect();
        let mut best = (f64::INFINITY, 0);
        for (f, fl) in self.frame_lines.iter().enumerate() {
            let m = fl.iter().map(|&(l, w)| w * diffs[l]).sum::<f64>();
            if m < best.0 {
                best = (m, f);
            }
        }
        best.1
    }

    /// `[m]₊ⁿ` at ordinal `k`.
    #[inline]
    pub fn density_at(&self, values: &[f64], k: usize, sums: &mut [f64]) -> f64 {
        clamp_pow(self.frame_min_at(values, k, sums), self.mesh.n())
    }

    pub fn scratch(&self) -> Vec<f64> {
        vec![0.0; self.line_count()]
    }

    fn check(&self, field: &ScalarField) -> Result<(), OperatorError> {
        if Arc::ptr_eq(field.mesh(), &self.mesh) || field.mesh().same_grid(&self.mesh) {
            Ok(())
        } else {
            Err(OperatorError::MeshMismatch)
        }
    }

    /// Unclamped frame minimum at every interior node.
    pub fn frame_min(
        &self,
        field: &ScalarField,
        exec: Execution,
    ) -> Result<InteriorField, OperatorError> {
        self.check(field)?;
        let mut out = vec![0.0; self.mesh.interior().len()];
        let v = field.values();
        exec::fill_with(
            exec,
            &mut out,
            || self.scratch(),
            |s, k| self.frame_min_at(v, k, s),
        );
        Ok(InteriorField::new(Arc::clone(&self.mesh), out))
    }

    /// `MA_h(field)` at every interior node.
    pub fn density(
        &self,
        field: &ScalarField,
        exec: Execution,
    ) -> Result<InteriorField, OperatorError> {
        self.check(field)?;
        let mut out = vec![0.0; self.mesh.interior().len()];
        self.density_into(field.values(), exec, &mut out);
        Ok(InteriorField::new(Arc::clone(&self.mesh), out))
    }

    /// Raw-slice variant of [`MaOperator::density`] for solver loops.
    pub fn density_into(&self, values: &[f64], exec: Execution, out: &mut [f64]) {
        debug_assert_eq!(values.len(), self.mesh.active_len());
        exec::fill_with(
            exec,
            out,
            || self.scratch(),
            |s, k| self.density_at(values, k, s),
        );
    }

    /// Minimum line Laplacian at every interior node.
    pub fn min_line_laplacian(
        &self,
        field: &ScalarField,
        exec: Execution,
    ) -> Result<InteriorField, OperatorError> {
        self.check(field)?;
        let mut out = vec![0.0; self.mesh.interior().len()];
        let v = field.values();
        exec::fill(exec, &mut out, |k| self.min_line_laplacian_at(v, k).0);
        Ok(InteriorField::new(Arc::clone(&self.mesh), out))
    }
}

#[inline]
pub(crate) fn clamp_pow(m: f64, n: usize) -> f64 {
    let p = m.max(0.0);
    if n == 1 {
        p
    } else {
        p * p
    }
}

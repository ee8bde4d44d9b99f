//! Strongly pseudoconvex domains and masked uniform grids.
//!
//! Domains are balls and complex ellipsoids `Σ |z_j|²/a_j² < 1`, always
//! described through the normalized defining function
//! `ρ(z) = Σ |z_j|²/a_j² − 1`, which satisfies `−1 ≤ ρ < 0` inside. Grids are
//! uniform lattices `h·Z^{2n}` centered at the origin, with real coordinates
//! ordered `(x₁, y₁, x₂, y₂)` for `z_j = x_j + i y_j`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::tolerances::MIN_RHO_CONVEXITY;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("complex dimension must be 1 or 2, got {0}")]
    UnsupportedDimension(usize),
    #[error("domain parameters must be finite and positive: {0}")]
    InvalidDomain(String),
    #[error("grid spacing must be finite and positive, got {0}")]
    InvalidSpacing(f64),
    #[error("stencil width must be at least 1")]
    InvalidWidth,
    #[error("no interior node at h = {h} with stencil width {width}")]
    MeshTooCoarse { h: f64, width: usize },
    #[error("defining function is not strictly psh: smallest complex Hessian eigenvalue {c0:e}")]
    NotStrictlyPsh { c0: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Ball { radius: f64 },
    Ellipsoid { axes: Vec<f64> },
}

/// A ball or axis-aligned complex ellipsoid in Cⁿ, n ∈ {1, 2}.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    shape: Shape,
    inv_axes_sq: Vec<f64>,
}

impl DomainSpec {
    pub fn ball(n: usize, radius: f64) -> Result<Self, GeometryError> {
        check_dimension(n)?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::InvalidDomain(format!("radius {radius}")));
        }
        Ok(Self {
            shape: Shape::Ball { radius },
            inv_axes_sq: vec![1.0 / (radius * radius); n],
        })
    }

    pub fn ellipsoid(axes: Vec<f64>) -> Result<Self, GeometryError> {
        check_dimension(axes.len())?;
        if axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(GeometryError::InvalidDomain(format!("axes {axes:?}")));
        }
        let inv_axes_sq = axes.iter().map(|a| 1.0 / (a * a)).collect();
        Ok(Self {
            shape: Shape::Ellipsoid { axes },
            inv_axes_sq,
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Complex dimension n.
    pub fn n(&self) -> usize {
        self.inv_axes_sq.len()
    }

    /// Real dimension 2n.
    pub fn real_dim(&self) -> usize {
        2 * self.n()
    }

    pub fn axes(&self) -> Vec<f64> {
        self.inv_axes_sq.iter().map(|c| c.sqrt().recip()).collect()
    }

    /// Normalized defining function, `−1` at the center and `0` on the boundary.
    pub fn rho(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.real_dim());
        let mut q = 0.0;
        for (j, c) in self.inv_axes_sq.iter().enumerate() {
            let (x, y) = (z[2 * j], z[2 * j + 1]);
            q += c * (x * x + y * y);
        }
        q - 1.0
    }

    /// Diagonal of the complex Hessian `∂²ρ/∂z_j∂z̄_k` (it is constant and diagonal).
    pub fn rho_complex_hessian(&self) -> &[f64] {
        &self.inv_axes_sq
    }

    /// `det(∂²ρ/∂z_j∂z̄_k)`, the Monge-Ampère density of ρ.
    pub fn rho_density(&self) -> f64 {
        self.inv_axes_sq.iter().product()
    }

    /// Smallest eigenvalue of the complex Hessian of ρ.
    pub fn convexity(&self) -> f64 {
        self.inv_axes_sq
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest semi-axis, the radius of the smallest centered ball containing Ω.
    pub fn outer_radius(&self) -> f64 {
        self.axes().into_iter().fold(0.0, f64::max)
    }

    /// Maps a point to the closed domain by radial scaling toward the center.
    /// Points already in the closure are returned unchanged; exterior points
    /// land on the boundary. Used to extend boundary data outside Ω.
    pub fn retract(&self, z: &[f64]) -> Vec<f64> {
        let q = self.rho(z) + 1.0;
        if q <= 1.0 {
            z.to_vec()
        } else {
            let s = q.sqrt().recip();
            z.iter().map(|x| x * s).collect()
        }
    }

    /// Radial projection onto the boundary (the center maps to itself).
    pub fn project_to_boundary(&self, z: &[f64]) -> Vec<f64> {
        let q = self.rho(z) + 1.0;
        if q <= 0.0 {
            return z.to_vec();
        }
        let s = q.sqrt().recip();
        z.iter().map(|x| x * s).collect()
    }
}

fn check_dimension(n: usize) -> Result<(), GeometryError> {
    if n == 1 || n == 2 {
        Ok(())
    } else {
        Err(GeometryError::UnsupportedDimension(n))
    }
}

/// Exact evaluation of the normalized defining function.
pub fn rho_eval(domain: &DomainSpec, z: &[f64]) -> f64 {
    domain.rho(z)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeClass {
    Interior,
    Boundary,
    Exterior,
}

impl NodeClass {
    pub fn letter(self) -> char {
        match self {
            NodeClass::Interior => 'I',
            NodeClass::Boundary => 'B',
            NodeClass::Exterior => 'E',
        }
    }
}

/// Which lattice offsets a node's stencil may read.
#[derive(Clone, Debug, PartialEq)]
pub enum Reach {
    /// Every offset with all coordinates in `[−W, W]`.
    Cube(usize),
    /// An explicit list of offsets (in lattice units).
    Offsets(Vec<Vec<i32>>),
}

const NOT_ACTIVE: u32 = u32::MAX;

/// Masked uniform lattice over the bounding box of Ω.
///
/// Nodes are *interior* when their whole stencil lies in the closed domain,
/// *boundary* (the Dirichlet band) when they are in the closed domain but not
/// interior, and *exterior* otherwise. Interior and boundary nodes are the
/// "active" nodes that carry field values; they are numbered densely.
#[derive(Clone, Debug)]
pub struct GridMesh {
    domain: DomainSpec,
    h: f64,
    width: usize,
    half: i32,
    side: usize,
    lattice_class: Vec<NodeClass>,
    lattice_to_active: Vec<u32>,
    active_lattice: Vec<usize>,
    active_class: Vec<NodeClass>,
    active_index: Vec<i32>,
    coords: Vec<f64>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    interior_ordinal: Vec<u32>,
    c0: f64,
}

/// Builds the mesh whose interior nodes can read every lattice offset in the
/// cube `[−W, W]^{2n}`. The band is `W·h·√(2n)` wide.
pub fn build_mesh(domain: &DomainSpec, h: f64, width: usize) -> Result<GridMesh, GeometryError> {
    GridMesh::build(domain, h, Reach::Cube(width))
}

impl GridMesh {
    pub fn build(domain: &DomainSpec, h: f64, reach: Reach) -> Result<Self, GeometryError> {
        if !(h.is_finite() && h > 0.0) {
            return Err(GeometryError::InvalidSpacing(h));
        }
        let d = domain.real_dim();
        let (width, offsets) = match reach {
            Reach::Cube(w) => {
                if w == 0 {
                    return Err(GeometryError::InvalidWidth);
                }
                // The domain is convex, so the cube is inside iff its corners are.
                let w = w as i32;
                let corners = (0..1usize << d)
                    .map(|mask| {
                        (0..d)
                            .map(|k| if mask >> k & 1 == 1 { w } else { -w })
                            .collect()
                    })
                    .collect::<Vec<Vec<i32>>>();
                (w as usize, corners)
            }
            Reach::Offsets(list) => {
                let w = list
                    .iter()
                    .flat_map(|o| o.iter().map(|c| c.unsigned_abs() as usize))
                    .max()
                    .unwrap_or(0);
                if w == 0 {
                    return Err(GeometryError::InvalidWidth);
                }
                assert!(
                    list.iter().all(|o| o.len() == d),
                    "offset dimension mismatch"
                );
                (w, list)
            }
        };

        let c0 = domain.convexity();
        if !(c0 >= MIN_RHO_CONVEXITY) {
            return Err(GeometryError::NotStrictlyPsh { c0 });
        }

        let margin = width as f64 * h * (d as f64).sqrt();
        let half = ((domain.outer_radius() + margin) / h).ceil() as i32;
        let side = (2 * half + 1) as usize;
        let total = side.pow(d as u32);

        let mut lattice_class = vec![NodeClass::Exterior; total];
        let mut idx = vec![0i32; d];
        let mut z = vec![0.0; d];
        let mut probe = vec![0.0; d];
        for (lin, class) in lattice_class.iter_mut().enumerate() {
            decode(lin, side, half, &mut idx);
            for k in 0..d {
                z[k] = idx[k] as f64 * h;
            }
            let r = domain.rho(&z);
            if r > 0.0 {
                continue;
            }
            let inside = r < 0.0
                && offsets.iter().all(|o| {
                    for k in 0..d {
                        probe[k] = (idx[k] + o[k]) as f64 * h;
                    }
                    domain.rho(&probe) <= 0.0
                });
            *class = if inside {
                NodeClass::Interior
            } else {
                NodeClass::Boundary
            };
        }

        let mut lattice_to_active = vec![NOT_ACTIVE; total];
        let mut active_lattice = Vec::new();
        let mut active_class = Vec::new();
        let mut active_index = Vec::new();
        let mut coords = Vec::new();
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        let mut interior_ordinal = Vec::new();
        for (lin, class) in lattice_class.iter().enumerate() {
            if *class == NodeClass::Exterior {
                continue;
            }
            let a = active_lattice.len();
            lattice_to_active[lin] = a as u32;
            active_lattice.push(lin);
            active_class.push(*class);
            decode(lin, side, half, &mut idx);
            active_index.extend_from_slice(&idx);
            coords.extend(idx.iter().map(|i| *i as f64 * h));
            if *class == NodeClass::Interior {
                interior_ordinal.push(interior.len() as u32);
                interior.push(a);
            } else {
                interior_ordinal.push(NOT_ACTIVE);
                boundary.push(a);
            }
        }
        if interior.is_empty() {
            return Err(GeometryError::MeshTooCoarse { h, width });
        }

        Ok(Self {
            domain: domain.clone(),
            h,
            width,
            half,
            side,
            lattice_class,
            lattice_to_active,
            active_lattice,
            active_class,
            active_index,
            coords,
            interior,
            boundary,
            interior_ordinal,
            c0,
        })
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn n(&self) -> usize {
        self.domain.n()
    }

    pub fn real_dim(&self) -> usize {
        self.domain.real_dim()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Stencil width W the mesh was built for.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Smallest complex Hessian eigenvalue of ρ verified at construction.
    pub fn rho_convexity(&self) -> f64 {
        self.c0
    }

    /// Lattice points per axis.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn lattice_len(&self) -> usize {
        self.lattice_class.len()
    }

    pub fn lattice_class(&self, lin: usize) -> NodeClass {
        self.lattice_class[lin]
    }

    /// Half-widths of the bounding box, identical along every real axis.
    pub fn bbox(&self) -> (f64, f64) {
        let e = self.half as f64 * self.h;
        (-e, e)
    }

    /// Number of active (interior + boundary) nodes.
    pub fn active_len(&self) -> usize {
        self.active_lattice.len()
    }

    pub fn class(&self, active: usize) -> NodeClass {
        self.active_class[active]
    }

    pub fn coords(&self, active: usize) -> &[f64] {
        let d = self.real_dim();
        &self.coords[active * d..(active + 1) * d]
    }

    pub fn lattice_index(&self, active: usize) -> &[i32] {
        let d = self.real_dim();
        &self.active_index[active * d..(active + 1) * d]
    }

    /// Active indices of interior nodes, in lattice order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Active indices of boundary-band nodes, in lattice order.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Position of an active node in [`GridMesh::interior`], if it is interior.
    pub fn interior_ordinal(&self, active: usize) -> Option<usize> {
        match self.interior_ordinal[active] {
            NOT_ACTIVE => None,
            k => Some(k as usize),
        }
    }

    /// Active node at `active + offset` (lattice units), if valued.
    pub fn neighbor(&self, active: usize, offset: &[i32]) -> Option<usize> {
        let idx = self.lattice_index(active);
        let mut lin = 0usize;
        let mut stride = 1usize;
        for (i, o) in idx.iter().zip(offset) {
            let k = i + o + self.half;
            if k < 0 || k as usize >= self.side {
                return None;
            }
            lin += k as usize * stride;
            stride *= self.side;
        }
        match self.lattice_to_active[lin] {
            NOT_ACTIVE => None,
            a => Some(a as usize),
        }
    }

    /// Active node at a lattice multi-index, if valued.
    pub fn active_at(&self, index: &[i32]) -> Option<usize> {
        let mut lin = 0usize;
        let mut stride = 1usize;
        for i in index {
            let k = i + self.half;
            if k < 0 || k as usize >= self.side {
                return None;
            }
            lin += k as usize * stride;
            stride *= self.side;
        }
        match self.lattice_to_active[lin] {
            NOT_ACTIVE => None,
            a => Some(a as usize),
        }
    }

    /// Text table of every lattice node: index, real coordinates, class letter.
    pub fn summary_table(&self) -> String {
        let d = self.real_dim();
        let mut out = String::new();
        let _ = write!(out, "# node");
        for k in 1..=d {
            let _ = write!(out, " x{k}");
        }
        out.push_str(" class\n");
        let mut idx = vec![0i32; d];
        for lin in 0..self.lattice_len() {
            decode(lin, self.side, self.half, &mut idx);
            let _ = write!(out, "{lin}");
            for i in &idx {
                let _ = write!(out, " {}", *i as f64 * self.h);
            }
            let _ = writeln!(out, " {}", self.lattice_class[lin].letter());
        }
        out
    }

    /// Same lattice, spacing and stencil reach.
    pub fn same_grid(&self, other: &GridMesh) -> bool {
        std::ptr::eq(self, other)
            || (self.domain == other.domain
                && self.h == other.h
                && self.side == other.side
                && self.active_lattice == other.active_lattice
                && self.active_class == other.active_class)
    }
}

fn decode(mut lin: usize, side: usize, half: i32, out: &mut [i32]) {
    for v in out.iter_mut() {
        *v = (lin % side) as i32 - half;
        lin /= side;
    }
}

/// Dirichlet values for the boundary band, aligned with [`GridMesh::boundary`].
/// The boundary function is evaluated directly at each band node.
pub fn dirichlet_trace<G>(mesh: &GridMesh, g: G) -> Vec<f64>
where
    G: Fn(&[f64]) -> f64,
{
    mesh.boundary().iter().map(|&a| g(mesh.coords(a))).collect()
}

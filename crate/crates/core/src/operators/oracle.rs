/// Complex Hessian `H_{jk̄} = ∂²u/∂z_j∂z̄_k` of a function on `Cⁿ`, `n ≤ 2`,
/// stored row-major as `(re, im)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexHessian {
    pub n: usize,
    pub entries: Vec<(f64, f64)>,
}

impl ComplexHessian {
    pub fn get(&self, j: usize, k: usize) -> (f64, f64) {
        self.entries[j * self.n + k]
    }

    /// Real determinant of the hermitian matrix.
    pub fn det(&self) -> f64 {
        match self.n {
            1 => self.entries[0].0,
            2 => {
                let (a, _) = self.get(0, 0);
                let (d, _) = self.get(1, 1);
                let (br, bi) = self.get(0, 1);
                a * d - (br * br + bi * bi)
            }
            n => panic!("unsupported dimension {n}"),
        }
    }

    /// `e* H e / |e|²` for a complex direction `e`.
    pub fn rayleigh(&self, e: &[(f64, f64)]) -> f64 {
        let mut num = 0.0;
        for j in 0..self.n {
            for k in 0..self.n {
                let (hr, hi) = self.get(j, k);
                let (ar, ai) = e[j];
                let (br, bi) = e[k];
                // conj(e_j) H_jk e_k
                let (pr, pi) = (ar * hr + ai * hi, ar * hi - ai * hr);
                num += pr * br - pi * bi;
            }
        }
        num / e.iter().map(|(a, b)| a * a + b * b).sum::<f64>()
    }

    /// Builds `H` from the real Hessian in `(x₁, y₁, x₂, y₂)` order:
    /// `H_{jk̄} = ¼[(u_{xⱼxₖ} + u_{yⱼyₖ}) + i(u_{xⱼyₖ} − u_{yⱼxₖ})]`.
    pub fn from_real_hessian(n: usize, r: &[f64]) -> Self {
        let d = 2 * n;
        let at = |p: usize, q: usize| r[p * d + q];
        let mut entries = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
                entries.push((
                    0.25 * (at(xj, xk) + at(yj, yk)),
                    0.25 * (at(xj, yk) - at(yj, xk)),
                ));
            }
        }
        Self { n, entries }
    }
}

/// A smooth test function on `Cⁿ` given in real coordinates.
pub trait SmoothFunction: Sync + Send {
    fn n(&self) -> usize;

    fn value(&self, z: &[f64]) -> f64;

    /// Closed-form complex Hessian, when known.
    fn complex_hessian(&self, _z: &[f64]) -> Option<ComplexHessian> {
        None
    }
}

/// Finite-difference step used when no closed form is available.
const FD_STEP: f64 = 5e-3;

/// Complex Hessian by fourth-order central differences (Richardson on the
/// second-order four-point formula).
pub fn complex_hessian_fd<F: SmoothFunction + ?Sized>(f: &F, z: &[f64]) -> ComplexHessian {
    let n = f.n();
    let d = 2 * n;
    let mut real = vec![0.0; d * d];
    let mut p = z.to_vec();
    let second = |p_idx: usize, q_idx: usize, delta: f64, p: &mut Vec<f64>| {
        let mut s = 0.0;
        for (sp, sq, w) in [
            (1.0, 1.0, 1.0),
            (1.0, -1.0, -1.0),
            (-1.0, 1.0, -1.0),
            (-1.0, -1.0, 1.0),
        ] {
            p.copy_from_slice(z);
            p[p_idx] += sp * delta;
            p[q_idx] += sq * delta;
            s += w * f.value(p);
        }
        s / (4.0 * delta * delta)
    };
    for a in 0..d {
        for b in a..d {
            let coarse = second(a, b, 2.0 * FD_STEP, &mut p);
            let fine = second(a, b, FD_STEP, &mut p);
            let v = (4.0 * fine - coarse) / 3.0;
            real[a * d + b] = v;
            real[b * d + a] = v;
        }
    }
    ComplexHessian::from_real_hessian(n, &real)
}

/// Unclamped complex-Hessian determinant density, closed form when available.
pub fn hessian_density_exact<F: SmoothFunction + ?Sized>(f: &F, z: &[f64]) -> f64 {
    f.complex_hessian(z)
        .unwrap_or_else(|| complex_hessian_fd(f, z))
        .det()
}

fn complex_coords(z: &[f64]) -> Vec<(f64, f64)> {
    z.chunks(2).map(|c| (c[0], c[1])).collect()
}

fn norm_sq(z: &[f64]) -> f64 {
    z.iter().map(|x| x * x).sum()
}

/// `|z|²`, scaled by a constant.
#[derive(Clone, Debug)]
pub struct NormSquared {
    pub n: usize,
    pub scale: f64,
}

impl SmoothFunction for NormSquared {
    fn n(&self) -> usize {
        self.n
    }

    fn value(&self, z: &[f64]) -> f64 {
        self.scale * norm_sq(z)
    }

    fn complex_hessian(&self, _z: &[f64]) -> Option<ComplexHessian> {
        let mut entries = vec![(0.0, 0.0); self.n * self.n];
        for j in 0..self.n {
            entries[j * self.n + j] = (self.scale, 0.0);
        }
        Some(ComplexHessian { n: self.n, entries })
    }
}

/// `exp(|z|²)`; `H = e^{|z|²}(I + z̄ zᵀ)`.
#[derive(Clone, Debug)]
pub struct ExpNormSquared {
    pub n: usize,
}

impl SmoothFunction for ExpNormSquared {
    fn n(&self) -> usize {
        self.n
    }

    fn value(&self, z: &[f64]) -> f64 {
        norm_sq(z).exp()
    }

    fn complex_hessian(&self, z: &[f64]) -> Option<ComplexHessian> {
        let e = norm_sq(z).exp();
        Some(outer_plus_identity(self.n, z, e, e))
    }
}

/// `|z|⁴`; `H = 2|z|² I + 2 z̄ zᵀ`.
#[derive(Clone, Debug)]
pub struct NormFourth {
    pub n: usize,
}

impl SmoothFunction for NormFourth {
    fn n(&self) -> usize {
        self.n
    }

    fn value(&self, z: &[f64]) -> f64 {
        let s = norm_sq(z);
        s * s
    }

    fn complex_hessian(&self, z: &[f64]) -> Option<ComplexHessian> {
        Some(outer_plus_identity(self.n, z, 2.0 * norm_sq(z), 2.0))
    }
}

/// `a·I + b·(z̄_j z_k)`.
fn outer_plus_identity(n: usize, z: &[f64], a: f64, b: f64) -> ComplexHessian {
    let c = complex_coords(z);
    let mut entries = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            let (xj, yj) = c[j];
            let (xk, yk) = c[k];
            // conj(z_j) z_k
            let re = xj * xk + yj * yk;
            let im = xj * yk - yj * xk;
            let diag = if j == k { a } else { 0.0 };
            entries.push((diag + b * re, b * im));
        }
    }
    ComplexHessian { n, entries }
}

/// `u(z) = Σ A_{jk} z̄_j z_k` for a hermitian `A`; its complex Hessian is
/// `H_{jk̄} = A_{kj}`.
#[derive(Clone, Debug)]
pub struct HermitianQuadratic {
    pub n: usize,
    /// Row-major `(re, im)` entries of `A`.
    pub a: Vec<(f64, f64)>,
}

impl HermitianQuadratic {
    /// `A = U diag(eigs) U*` with `U` the rotation taking `e₁` to
    /// `(cos θ, sin θ)` (n = 2).
    pub fn rotated(eigs: [f64; 2], theta: f64) -> Self {
        let (c, s) = (theta.cos(), theta.sin());
        let a11 = eigs[0] * c * c + eigs[1] * s * s;
        let a22 = eigs[0] * s * s + eigs[1] * c * c;
        let a12 = (eigs[0] - eigs[1]) * c * s;
        Self {
            n: 2,
            a: vec![(a11, 0.0), (a12, 0.0), (a12, 0.0), (a22, 0.0)],
        }
    }
}

impl SmoothFunction for HermitianQuadratic {
    fn n(&self) -> usize {
        self.n
    }

    fn value(&self, z: &[f64]) -> f64 {
        let c = complex_coords(z);
        let mut s = 0.0;
        for j in 0..self.n {
            for k in 0..self.n {
                let (ar, ai) = self.a[j * self.n + k];
                let (xj, yj) = c[j];
                let (xk, yk) = c[k];
                let (pr, pi) = (xj * xk + yj * yk, xj * yk - yj * xk);
                s += ar * pr - ai * pi;
            }
        }
        s
    }

    fn complex_hessian(&self, _z: &[f64]) -> Option<ComplexHessian> {
        let n = self.n;
        let entries = (0..n * n).map(|i| self.a[(i % n) * n + i / n]).collect();
        Some(ComplexHessian { n, entries })
    }
}

/// Wraps a closure; the Hessian comes from finite differences.
pub struct FnSmooth<F> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync + Send> SmoothFunction for FnSmooth<F> {
    fn n(&self) -> usize {
        self.n
    }

    fn value(&self, z: &[f64]) -> f64 {
        (self.f)(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_form_examples() {
        assert_eq!(
            hessian_density_exact(&NormSquared { n: 2, scale: 1.0 }, &[0.3, 0.1, -0.2, 0.5]),
            1.0
        );
        let z = [0.4, -0.3];
        let s: f64 = 0.25;
        let got = hessian_density_exact(&ExpNormSquared { n: 1 }, &z);
        assert!((got - (1.0 + s) * s.exp()).abs() < 1e-14);
        assert_eq!(
            hessian_density_exact(&NormSquared { n: 1, scale: -1.0 }, &z),
            -1.0
        );
        assert_eq!(
            hessian_density_exact(&NormSquared { n: 2, scale: -1.0 }, &[0.0; 4]),
            1.0
        );
    }

    proptest! {
        #[test]
        fn finite_differences_match_closed_forms(
            x in proptest::collection::vec(-0.7f64..0.7, 4),
            theta in 0.0f64..3.0,
        ) {
            let fd = |f: &dyn SmoothFunction| complex_hessian_fd(f, &x);
            let cases: Vec<Box<dyn SmoothFunction>> = vec![
                Box::new(ExpNormSquared { n: 2 }),
                Box::new(NormFourth { n: 2 }),
                Box::new(HermitianQuadratic::rotated([3.0, 0.5], theta)),
                Box::new(HermitianQuadratic { n: 2, a: vec![(1.0, 0.0), (0.2, 0.3), (0.2, -0.3), (2.0, 0.0)] }),
            ];
            for f in &cases {
                let exact = f.complex_hessian(&x).unwrap();
                let approx = fd(f.as_ref());
                for (e, a) in exact.entries.iter().zip(&approx.entries) {
                    prop_assert!((e.0 - a.0).abs() < 1e-6 * (1.0 + e.0.abs()));
                    prop_assert!((e.1 - a.1).abs() < 1e-6 * (1.0 + e.1.abs()));
                }
            }
        }
    }

    #[test]
    fn rotated_quadratic_has_product_determinant() {
        let q = HermitianQuadratic::rotated([3.0, 0.5], 0.3);
        assert!((hessian_density_exact(&q, &[0.0; 4]) - 1.5).abs() < 1e-14);
        let h = q.complex_hessian(&[0.0; 4]).unwrap();
        let e = [(0.3f64.cos(), 0.0), (0.3f64.sin(), 0.0)];
        assert!((h.rayleigh(&e) - 3.0).abs() < 1e-14);
    }
}

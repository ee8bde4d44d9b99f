use std::collections::HashMap;

use super::OperatorError;

/// An integer complex direction `v ∈ Z[i]ⁿ`, stored with the two real lattice
/// offsets spanning the complex line through `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct LineDir {
    coeffs: Vec<(i32, i32)>,
    real: Vec<i32>,
    imag: Vec<i32>,
    norm_sq: f64,
}

impl LineDir {
    /// `coeffs[j] = (Re v_j, Im v_j)`. Panics on the zero vector.
    pub fn new(coeffs: Vec<(i32, i32)>) -> Self {
        assert!(
            coeffs.iter().any(|&(a, b)| a != 0 || b != 0),
            "direction must be nonzero"
        );
        let real = coeffs.iter().flat_map(|&(a, b)| [a, b]).collect();
        let imag = coeffs.iter().flat_map(|&(a, b)| [-b, a]).collect();
        let norm_sq = coeffs.iter().map(|&(a, b)| (a * a + b * b) as f64).sum();
        Self {
            coeffs,
            real,
            imag,
            norm_sq,
        }
    }

    /// Standard basis vector `e_j` of `Cⁿ`.
    pub fn unit(n: usize, j: usize) -> Self {
        let mut c = vec![(0, 0); n];
        c[j] = (1, 0);
        Self::new(c)
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[(i32, i32)] {
        &self.coeffs
    }

    /// Real offset of `v` in the `(x₁, y₁, x₂, y₂)` lattice ordering.
    pub fn real_offset(&self) -> &[i32] {
        &self.real
    }

    /// Real offset of `i·v`.
    pub fn imag_offset(&self) -> &[i32] {
        &self.imag
    }

    /// `|v|²`.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// Largest coordinate magnitude.
    pub fn width(&self) -> usize {
        self.coeffs
            .iter()
            .map(|&(a, b)| a.unsigned_abs().max(b.unsigned_abs()) as usize)
            .max()
            .unwrap_or(0)
    }

    /// Exact key identifying the complex line `C·v`: the vector divided by its
    /// first nonzero coordinate, as reduced Gaussian rationals.
    fn line_key(&self) -> Vec<i64> {
        let first = self
            .coeffs
            .iter()
            .position(|&(a, b)| a != 0 || b != 0)
            .expect("nonzero direction");
        let (a, b) = (self.coeffs[first].0 as i64, self.coeffs[first].1 as i64);
        let den = a * a + b * b;
        let mut key = vec![first as i64];
        for &(c, d) in &self.coeffs[first + 1..] {
            let (c, d) = (c as i64, d as i64);
            // (c + di)(a − bi) / (a² + b²)
            let re = c * a + d * b;
            let im = d * a - c * b;
            let g = gcd(gcd(re.abs(), im.abs()), den);
            key.extend([re / g, im / g, den / g]);
        }
        key
    }

    /// Hermitian inner product `<u, v> = Σ u_j conj(v_j)`.
    fn inner(&self, other: &LineDir) -> (i64, i64) {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold((0, 0), |(re, im), (&(a, b), &(c, d))| {
                let (a, b, c, d) = (a as i64, b as i64, c as i64, d as i64);
                (re + a * c + b * d, im + b * c - a * d)
            })
    }
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// One orthogonal frame: indices into [`FrameSet::lines`] and positive weights
/// whose product is one.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub lines: Vec<usize>,
    pub weights: Vec<f64>,
}

/// Finite family of weighted orthogonal frames. The identity frame is always
/// frame 0 and line `j` is always `e_j`.
#[derive(Clone, Debug)]
pub struct FrameSet {
    n: usize,
    lines: Vec<LineDir>,
    frames: Vec<Frame>,
    width: usize,
}

const RATIOS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

impl FrameSet {
    /// Only the standard basis with unit weights.
    pub fn identity(n: usize) -> Self {
        assert!(n == 1 || n == 2, "n must be 1 or 2");
        Self {
            n,
            lines: (0..n).map(|j| LineDir::unit(n, j)).collect(),
            frames: vec![Frame {
                lines: (0..n).collect(),
                weights: vec![1.0; n],
            }],
            width: 1,
        }
    }

    /// Default frame set of width `W`: the identity for `n = 1`; for `n = 2`
    /// the identity plus every orthogonal pair of integer directions with
    /// coordinates bounded by `W`, each with weight ratios `{1/4, 1/2, 1, 2, 4}`.
    pub fn default_for(n: usize, width: usize) -> Self {
        assert!(width >= 1, "width must be at least 1");
        if n == 1 {
            return Self::identity(1);
        }
        let w = width as i32;
        let mut pairs: Vec<(LineDir, LineDir)> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for a in -w..=w {
            for b in -w..=w {
                for c in -w..=w {
                    for d in -w..=w {
                        if a == 0 && b == 0 && c == 0 && d == 0 {
                            continue;
                        }
                        let v1 = LineDir::new(vec![(a, b), (c, d)]);
                        let v2 = LineDir::new(vec![(-c, d), (a, -b)]);
                        let (k1, k2) = (v1.line_key(), v2.line_key());
                        let key = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
                        if seen.insert(key) {
                            pairs.push((v1, v2));
                        }
                    }
                }
            }
        }
        let mut frames = Vec::new();
        for (v1, v2) in pairs {
            for r in RATIOS {
                frames.push((vec![v1.clone(), v2.clone()], vec![r.sqrt(), 1.0 / r.sqrt()]));
            }
        }
        Self::from_frames(2, frames).expect("generated frames are valid")
    }

    /// Builds a frame set from explicit frames. Weights are rescaled so their
    /// product is one; directions in a frame must be pairwise orthogonal.
    /// The identity frame is inserted first if absent.
    pub fn from_frames(
        n: usize,
        frames: Vec<(Vec<LineDir>, Vec<f64>)>,
    ) -> Result<Self, OperatorError> {
        if n != 1 && n != 2 {
            return Err(OperatorError::InvalidFrame(format!("unsupported n = {n}")));
        }
        let mut set = Self::identity(n);
        let mut index: HashMap<Vec<i64>, usize> = set
            .lines
            .iter()
            .enumerate()
            .map(|(i, l)| (l.line_key(), i))
            .collect();
        for (dirs, weights) in frames {
            if dirs.len() != n || weights.len() != n {
                return Err(OperatorError::InvalidFrame(format!(
                    "frame needs {n} directions and weights"
                )));
            }
            if dirs.iter().any(|d| d.n() != n) {
                return Err(OperatorError::InvalidFrame("direction dimension".into()));
            }
            if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                return Err(OperatorError::InvalidFrame(
                    "weights must be positive".into(),
                ));
            }
            if n == 2 && dirs[0].inner(&dirs[1]) != (0, 0) {
                return Err(OperatorError::InvalidFrame(
                    "directions not orthogonal".into(),
                ));
            }
            let scale = weights.iter().product::<f64>().powf(1.0 / n as f64);
            let weights: Vec<f64> = weights.iter().map(|w| w / scale).collect();
            let mut ids = Vec::with_capacity(n);
            for d in dirs {
                let key = d.line_key();
                let id = match index.get(&key) {
                    Some(&i) => {
                        if d.norm_sq() < set.lines[i].norm_sq() {
                            set.lines[i] = d;
                        }
                        i
                    }
                    None => {
                        set.lines.push(d);
                        index.insert(key, set.lines.len() - 1);
                        set.lines.len() - 1
                    }
                };
                ids.push(id);
            }
            if ids.windows(2).any(|p| p[0] == p[1]) {
                return Err(OperatorError::InvalidFrame("repeated direction".into()));
            }
            let frame = Frame {
                lines: ids,
                weights,
            };
            let duplicate = set.frames.iter().any(|f| same_frame(f, &frame));
            if !duplicate {
                set.frames.push(frame);
            }
        }
        set.width = set.lines.iter().map(LineDir::width).max().unwrap_or(1);
        Ok(set)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lines(&self) -> &[LineDir] {
        &self.lines
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    /// Largest coordinate magnitude over all directions.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Every lattice offset read by the stencil, deduplicated.
    pub fn stencil_offsets(&self) -> Vec<Vec<i32>> {
        let mut out: Vec<Vec<i32>> = Vec::new();
        for l in &self.lines {
            for base in [l.real_offset(), l.imag_offset()] {
                for sign in [1, -1] {
                    let o: Vec<i32> = base.iter().map(|c| sign * c).collect();
                    if !out.contains(&o) {
                        out.push(o);
                    }
                }
            }
        }
        out
    }

    /// `max over frames of Σᵢ λᵢ / |vᵢ|²`, the center coefficient of the
    /// scheme in units of `1/h²` (times `n`).
    pub fn weight_factor(&self) -> f64 {
        self.frames
            .iter()
            .map(|f| {
                f.lines
                    .iter()
                    .zip(&f.weights)
                    .map(|(&l, w)| w / self.lines[l].norm_sq())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

fn same_frame(a: &Frame, b: &Frame) -> bool {
    let mut pa: Vec<(usize, u64)> = a
        .lines
        .iter()
        .zip(&a.weights)
        .map(|(l, w)| (*l, w.to_bits()))
        .collect();
    let mut pb: Vec<(usize, u64)> = b
        .lines
        .iter()
        .zip(&b.weights)
        .map(|(l, w)| (*l, w.to_bits()))
        .collect();
    pa.sort_unstable();
    pb.sort_unstable();
    pa == pb
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_frame_is_first() {
        for n in [1, 2] {
            for w in [1, 2] {
                let fs = FrameSet::default_for(n, w);
                assert_eq!(fs.frames()[0].weights, vec![1.0; n]);
                assert_eq!(fs.frames()[0].lines, (0..n).collect::<Vec<_>>());
                for j in 0..n {
                    assert_eq!(fs.lines()[j], LineDir::unit(n, j));
                }
            }
        }
    }

    #[test]
    fn default_frames_are_orthogonal_bounded_and_normalized() {
        for w in [1, 2] {
            let fs = FrameSet::default_for(2, w);
            assert!(fs.width() <= w);
            for f in fs.frames() {
                let p: f64 = f.weights.iter().product();
                assert!((p - 1.0).abs() < 1e-14);
                assert!(f.weights.iter().all(|x| *x > 0.0));
                let (a, b) = (&fs.lines()[f.lines[0]], &fs.lines()[f.lines[1]]);
                assert_eq!(a.inner(b), (0, 0));
            }
        }
    }

    #[test]
    fn refinement_contains_coarser_lines() {
        let f1 = FrameSet::default_for(2, 1);
        let f2 = FrameSet::default_for(2, 2);
        assert!(f2.frames().len() > f1.frames().len());
        let keys2: Vec<_> = f2.lines().iter().map(LineDir::line_key).collect();
        for l in f1.lines() {
            assert!(keys2.contains(&l.line_key()));
        }
    }

    #[test]
    fn lines_are_deduplicated_by_complex_span() {
        let a = LineDir::new(vec![(1, 1), (0, 2)]);
        // b = a·(1 + i)/2
        let b = LineDir::new(vec![(0, 1), (-1, 1)]);
        assert_eq!(a.line_key(), b.line_key());
        assert_eq!(a.line_key(), LineDir::new(vec![(2, 0), (2, 2)]).line_key());
        assert_ne!(a.line_key(), LineDir::new(vec![(1, 0), (1, 0)]).line_key());
        let fs = FrameSet::default_for(2, 1);
        let keys: Vec<_> = fs.lines().iter().map(LineDir::line_key).collect();
        let mut dedup = keys.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), keys.len());
    }

    #[test]
    fn explicit_frame_weights_are_normalized() {
        let fs = FrameSet::from_frames(
            2,
            vec![(
                vec![LineDir::unit(2, 0), LineDir::unit(2, 1)],
                vec![1.0, 16.0],
            )],
        )
        .unwrap();
        assert_eq!(fs.frames().len(), 2);
        assert_eq!(fs.frames()[1].weights, vec![0.25, 4.0]);
        let err = FrameSet::from_frames(
            2,
            vec![(
                vec![LineDir::new(vec![(1, 0), (1, 0)]), LineDir::unit(2, 1)],
                vec![1.0, 1.0],
            )],
        );
        assert!(matches!(err, Err(OperatorError::InvalidFrame(_))));
    }

    #[test]
    fn imaginary_offset_is_multiplication_by_i() {
        let l = LineDir::new(vec![(1, 2), (-1, 0)]);
        assert_eq!(l.real_offset(), &[1, 2, -1, 0]);
        assert_eq!(l.imag_offset(), &[-2, 1, 0, -1]);
        assert_eq!(l.norm_sq(), 6.0);
    }

    #[test]
    fn weight_factor_of_identity() {
        assert_eq!(FrameSet::identity(2).weight_factor(), 2.0);
        assert_eq!(FrameSet::identity(1).weight_factor(), 1.0);
        // ratio 4 on the standard basis gives 2 + 1/2
        assert!((FrameSet::default_for(2, 1).weight_factor() - 2.5).abs() < 1e-15);
    }
}

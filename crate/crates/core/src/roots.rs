//! Bracketed scalar root finding for monotone functions.

/// Root of a nondecreasing `g` starting from the bracket `[lo, hi]`, widened
/// geometrically (at most `max_widen` times per side) until it straddles a
/// sign change. Illinois steps with a bisection fallback; returns the secant
/// point of a final bracket of width `≤ tol`. `None` when no bracket is found or `g`
/// is not finite.
pub(crate) fn increasing_root<G>(
    mut g: G,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_widen: usize,
) -> Option<f64>
where
    G: FnMut(f64) -> f64,
{
    if !(lo < hi) {
        return None;
    }
    let mut flo = g(lo);
    let mut fhi = g(hi);
    let mut width = hi - lo;
    let mut widen = 0;
    while flo > 0.0 {
        if widen == max_widen || !flo.is_finite() {
            return None;
        }
        hi = lo;
        fhi = flo;
        lo -= width;
        width *= 2.0;
        flo = g(lo);
        widen += 1;
    }
    widen = 0;
    while fhi < 0.0 {
        if widen == max_widen || !fhi.is_finite() {
            return None;
        }
        lo = hi;
        flo = fhi;
        hi += width;
        width *= 2.0;
        fhi = g(hi);
        widen += 1;
    }
    if !(flo.is_finite() && fhi.is_finite()) {
        return None;
    }
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    let (mut glo, mut ghi) = (flo, fhi);
    let mut side = 0i8;
    let mut last_width = hi - lo;
    let mut stalls = 0;
    for _ in 0..400 {
        let w = hi - lo;
        if w <= tol {
            break;
        }
        let mut x = if stalls >= 2 {
            stalls = 0;
            0.5 * (lo + hi)
        } else {
            (lo * fhi - hi * flo) / (fhi - flo)
        };
        let guard = 0.25 * tol;
        if !(x > lo + guard && x < hi - guard) {
            x = x.clamp(lo + guard, hi - guard);
            if !(x > lo && x < hi) {
                x = 0.5 * (lo + hi);
            }
        }
        let fx = g(x);
        if !fx.is_finite() {
            return None;
        }
        if fx == 0.0 {
            return Some(x);
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
            glo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            ghi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
        if hi - lo > 0.5 * last_width {
            stalls += 1;
        } else {
            stalls = 0;
            last_width = hi - lo;
        }
    }
    let x = lo - glo * (hi - lo) / (ghi - glo);
    Some(if x >= lo && x <= hi {
        x
    } else {
        0.5 * (lo + hi)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn finds_simple_roots() {
        let r = increasing_root(|x| x * x * x - 2.0, 0.0, 1.0, 1e-13, 60).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
        let r = increasing_root(|x| x.exp() - 1e-8, -1.0, 1.0, 1e-13, 60).unwrap();
        assert!((r - 1e-8f64.ln()).abs() < 1e-12);
        assert!(increasing_root(|_| -1.0, 0.0, 1.0, 1e-12, 10).is_none());
        assert!(increasing_root(|x| x, 1.0, 0.0, 1e-12, 10).is_none());
    }

    #[test]
    fn handles_kinks_and_flat_pieces() {
        let g = |x: f64| (x - 0.3).max(0.0) - 0.5 * (0.3 - x).max(0.0).min(0.1);
        let r = increasing_root(g, -5.0, 5.0, 1e-13, 60).unwrap();
        assert!((r - 0.3).abs() <= 1e-13);
    }

    proptest! {
        #[test]
        fn bracket_contains_root(a in 0.1f64..5.0, b in -50.0f64..50.0, c in 0.0f64..3.0) {
            let g = |x: f64| x + a * (c * x).atan() - b;
            let r = increasing_root(g, -1.0, 1.0, 1e-12, 80).unwrap();
            prop_assert!(g(r - 1e-12) <= 1e-9 && g(r + 1e-12) >= -1e-9);
        }
    }
}

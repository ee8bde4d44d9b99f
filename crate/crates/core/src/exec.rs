//! Node-parallel execution helpers.
//!
//! Every hot loop in the crate is a map over independent nodes (or over
//! independent randomized cases). With the `parallel` feature enabled,
//! [`Execution::Auto`] dispatches those maps onto rayon's global pool;
//! [`Execution::Sequential`] (and every build without the feature) runs them
//! inline. Both paths produce bit-identical results: maps write disjoint
//! outputs and the only reductions are min/max with index tie-breaking.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
const MIN_CHUNK: usize = 256;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    /// Parallel when compiled with the `parallel` feature, sequential otherwise.
    #[default]
    Auto,
    Sequential,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Auto
    }
}

/// `out[i] = f(i)` for every index.
pub fn fill<F>(exec: Execution, out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_iter_mut()
            .with_min_len(MIN_CHUNK)
            .enumerate()
            .for_each(|(i, o)| *o = f(i));
        return;
    }
    let _ = exec;
    for (i, o) in out.iter_mut().enumerate() {
        *o = f(i);
    }
}

/// `out[i] = f(scratch, i)` with one scratch value per worker.
pub fn fill_with<T, S, I, F>(exec: Execution, out: &mut [T], init: I, f: F)
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_iter_mut()
            .with_min_len(MIN_CHUNK)
            .enumerate()
            .for_each_init(&init, |s, (i, o)| *o = f(s, i));
        return;
    }
    let _ = exec;
    let mut s = init();
    for (i, o) in out.iter_mut().enumerate() {
        *o = f(&mut s, i);
    }
}

/// Collects `f(0..len)` in index order.
pub fn map<T, F>(exec: Execution, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..len)
            .into_par_iter()
            .with_min_len(MIN_CHUNK)
            .map(f)
            .collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// Like [`map`] but without a minimum chunk size, for coarse-grained work
/// items such as whole randomized test cases.
pub fn map_coarse<T, F>(exec: Execution, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// Minimum of `f(i)` over `0..len` together with the smallest index attaining it.
/// Returns `(f64::INFINITY, None)` for an empty range.
pub fn argmin<F>(exec: Execution, len: usize, f: F) -> (f64, Option<usize>)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let pick = |a: (f64, Option<usize>), b: (f64, Option<usize>)| match (a.1, b.1) {
        (None, _) => b,
        (_, None) => a,
        (Some(ia), Some(ib)) => {
            if b.0 < a.0 || (b.0 == a.0 && ib < ia) {
                b
            } else {
                a
            }
        }
    };
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..len)
            .into_par_iter()
            .with_min_len(MIN_CHUNK)
            .map(|i| (f(i), Some(i)))
            .reduce(|| (f64::INFINITY, None), pick);
    }
    let _ = exec;
    (0..len)
        .map(|i| (f(i), Some(i)))
        .fold((f64::INFINITY, None), pick)
}

/// Maximum of `f(i)` over `0..len` with the smallest index attaining it.
pub fn argmax<F>(exec: Execution, len: usize, f: F) -> (f64, Option<usize>)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let (v, i) = argmin(exec, len, |i| -f(i));
    (-v, i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_auto_agree() {
        let f = |i: usize| ((i * 7919) % 1013) as f64 - 500.0;
        let mut a = vec![0.0; 5000];
        let mut b = vec![0.0; 5000];
        fill(Execution::Sequential, &mut a, f);
        fill(Execution::Auto, &mut b, f);
        assert_eq!(a, b);
        assert_eq!(
            argmin(Execution::Sequential, 5000, f),
            argmin(Execution::Auto, 5000, f)
        );
        assert_eq!(
            argmax(Execution::Sequential, 5000, f),
            argmax(Execution::Auto, 5000, f)
        );
    }

    #[test]
    fn argmin_prefers_first_index_on_ties() {
        let (v, i) = argmin(
            Execution::Auto,
            1000,
            |i| if i % 10 == 3 { -1.0 } else { 0.0 },
        );
        assert_eq!(v, -1.0);
        assert_eq!(i, Some(3));
        assert_eq!(argmin(Execution::Auto, 0, |_| 0.0), (f64::INFINITY, None));
    }
}

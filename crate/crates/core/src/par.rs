//! Data-parallel helpers with a sequential fallback.
//!
//! Reductions always collect the mapped values in index order and fold them
//! sequentially, so floating-point results do not depend on the execution
//! path or the thread count.

/// Execution path for the enumeration and Monte Carlo loops.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise runs
    /// sequentially.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Maps `0..n` through `f`, preserving order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Maps every element of `items` through `f`, preserving order.
    pub fn map_slice<I, T, F>(self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        self.map(items.len(), |i| f(&items[i]))
    }

    /// Deterministic map-reduce over `0..n`.
    pub fn map_reduce<T, F, R>(self, n: usize, init: T, f: F, reduce: R) -> T
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
        R: Fn(T, T) -> T,
    {
        self.map(n, f).into_iter().fold(init, reduce)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_agree() {
        let f = |i: usize| (i as f64).sqrt() / 3.0;
        let a = Exec::Sequential.map_reduce(10_000, 0.0, f, |x, y| x + y);
        let b = Exec::Parallel.map_reduce(10_000, 0.0, f, |x, y| x + y);
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

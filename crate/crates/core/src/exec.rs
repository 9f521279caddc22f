//! Execution policy for the data-parallel loops (kernel rows, probe grids,
//! refinement ladders).
//!
//! With the `parallel` feature disabled every policy runs sequentially, so
//! results are identical either way: each output element is computed by the
//! same sequential code and collected in index order.

/// How independent per-index work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
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
    /// Evaluate `f(0..n)` and collect in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            Exec::Parallel => (0..n).map(f).collect(),
        }
    }

    /// Fill consecutive `chunk`-sized rows of `out` with `f(row, slice)`.
    pub fn fill_rows<F>(self, out: &mut [f64], chunk: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        if chunk == 0 {
            return;
        }
        match self {
            Exec::Sequential => out.chunks_mut(chunk).enumerate().for_each(|(i, r)| f(i, r)),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                out.par_chunks_mut(chunk).enumerate().for_each(|(i, r)| f(i, r))
            }
            #[cfg(not(feature = "parallel"))]
            Exec::Parallel => out.chunks_mut(chunk).enumerate().for_each(|(i, r)| f(i, r)),
        }
    }
}

//! Execution strategy for the data-parallel loops.
//!
//! Every parallel loop in the crate is expressed as an indexed map whose
//! per-index work is independent of scheduling, so `Sequential` and
//! `Parallel` produce bit-identical results. Reductions are done by the
//! caller over the returned `Vec` in index order.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Uses the rayon global pool. Without the `parallel` feature this
    /// runs sequentially.
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

    pub fn map_slice<S, T, F>(self, items: &[S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&S) -> T + Sync + Send,
    {
        self.map(items.len(), |i| f(&items[i]))
    }

    /// Runs `f` over `0..n` in fixed-size chunks and returns the per-chunk
    /// results in chunk order. The chunk layout depends only on `n` and
    /// `chunk`, never on the worker count.
    pub fn map_chunks<T, F>(self, n: usize, chunk: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
    {
        let chunk = chunk.max(1);
        let n_chunks = n.div_ceil(chunk);
        self.map(n_chunks, |c| {
            let start = c * chunk;
            f(start..(start + chunk).min(n))
        })
    }
}

/// Caps the global worker pool. No-op without the `parallel` feature.
pub fn set_thread_cap(threads: usize) {
    #[cfg(feature = "parallel")]
    {
        // Fails only if the pool was already initialised, which is fine.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}

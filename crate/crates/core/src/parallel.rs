//! Trial-level data parallelism.
//!
//! Independent trials run on the rayon pool when the `parallel` feature is
//! enabled; otherwise [`Execution::Parallel`] quietly runs sequentially.
//! Results always come back in index order.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether parallel execution is actually available in this build.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

pub fn map_indexed<T, F>(n: usize, execution: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

//! Data-parallel execution with a sequential fallback.
//!
//! Every batch loop in the crate goes through [`Execution::map`], which
//! returns results in index order regardless of scheduling. Without the
//! `parallel` feature all modes run sequentially.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    /// `threads == 0` uses every available core.
    Parallel {
        threads: usize,
    },
}

impl Default for Execution {
    fn default() -> Self {
        Execution::Parallel { threads: 0 }
    }
}

impl Execution {
    /// Maps a thread-count knob onto a mode: 1 means sequential.
    pub fn with_threads(threads: usize) -> Self {
        if threads == 1 {
            Execution::Sequential
        } else {
            Execution::Parallel { threads }
        }
    }

    /// Applies `f` to `0..n`, collecting results in index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match *self {
            Execution::Sequential => (0..n).map(f).collect(),
            Execution::Parallel { threads } => parallel_map(threads, n, f),
        }
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(threads: usize, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let run = || (0..n).into_par_iter().map(&f).collect::<Vec<T>>();
    if threads == 0 {
        return run();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(_threads: usize, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

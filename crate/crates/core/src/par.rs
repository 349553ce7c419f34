//! Order-preserving batch execution.
//!
//! Every batch in the crate goes through [`Execution::map`], which returns
//! results in input order whatever the scheduling. With the `parallel`
//! feature disabled, [`Execution::Parallel`] runs sequentially.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Applies `f` to `0..n`, returning results in index order.
    pub fn map<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            Execution::Parallel => parallel_map(n, f),
        }
    }

    /// Runs `f` inside a pool capped at `threads` workers. Without the
    /// `parallel` feature the cap is ignored.
    pub fn with_threads<R, F>(threads: Option<usize>, f: F) -> R
    where
        R: Send,
        F: FnOnce() -> R + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(t) = threads {
            match rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
            {
                Ok(pool) => return pool.install(f),
                Err(e) => log::warn!("could not build a {t}-thread pool: {e}"),
            }
        }
        #[cfg(not(feature = "parallel"))]
        let _ = threads;
        f()
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Capacity hint from the `MAX_PARALLELISM` environment variable.
pub fn max_parallelism_from_env() -> Option<usize> {
    std::env::var("MAX_PARALLELISM")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

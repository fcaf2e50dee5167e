//! Work distribution for data-parallel loops.
//!
//! Every parallel loop in the crate goes through [`Executor::map`], which
//! evaluates a closure over an index range and returns the results in index
//! order. Reductions are then folded sequentially by the caller, so the output
//! is bitwise identical for any worker count.

use std::env;

/// Environment variable that overrides the worker count.
pub const WORKERS_ENV: &str = "GRIDFLOW_WORKERS";

pub struct Executor {
    workers: usize,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    /// One worker: plain sequential iteration, no thread pool.
    pub fn sequential() -> Self {
        Executor {
            workers: 1,
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    /// Builds an executor with `workers` threads. Without the `parallel`
    /// feature this is always sequential.
    pub fn new(workers: usize) -> Self {
        let workers = workers.max(1);
        #[cfg(feature = "parallel")]
        {
            if workers == 1 {
                return Self::sequential();
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .ok();
            match pool {
                Some(pool) => Executor {
                    workers,
                    pool: Some(pool),
                },
                None => Self::sequential(),
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = workers;
            Self::sequential()
        }
    }

    /// Worker count from `GRIDFLOW_WORKERS`, else the number of available CPUs.
    pub fn from_env() -> Self {
        let workers = env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .unwrap_or_else(default_workers);
        Self::new(workers)
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
        (0..n).map(f).collect()
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::sequential()
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

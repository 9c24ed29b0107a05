//! Parallel executor for orbit jobs.

use eulerize_core::plug_lab::Executor;
use rayon::prelude::*;

/// Runs jobs on the global rayon pool; results keep job order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl Executor for Rayon {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }
}

pub const THREADS_VAR: &str = "EULERIZE_THREADS";

/// Size the global pool from `EULERIZE_THREADS` (unset or 0: rayon's default).
pub fn init_threads() -> Result<usize, String> {
    let n = match std::env::var(THREADS_VAR) {
        Ok(s) => s.trim().parse::<usize>().map_err(|_| format!("{THREADS_VAR} must be a non-negative integer, got '{s}'"))?,
        Err(_) => 0,
    };
    // a second initialisation (e.g. in tests) keeps the existing pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(rayon::current_num_threads())
}

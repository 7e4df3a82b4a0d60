//! Internal thread pool, capped by the EP_NOZZLE_THREADS environment
//! variable.
//!
//! Only embarrassingly parallel maps go through the pool (each output
//! element written by exactly one task), so results are bitwise identical
//! for any thread count. Reductions stay serial.

use std::sync::OnceLock;

static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();

/// Thread cap from EP_NOZZLE_THREADS; `None` means "use the rayon default".
pub fn thread_cap() -> Option<usize> {
    std::env::var("EP_NOZZLE_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
}

/// The shared pool, or `None` when capped to a single thread.
pub fn pool() -> Option<&'static rayon::ThreadPool> {
    POOL.get_or_init(|| {
        let cap = thread_cap();
        if cap == Some(1) {
            return None;
        }
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cap {
            builder = builder.num_threads(n);
        }
        builder.build().ok()
    })
    .as_ref()
}

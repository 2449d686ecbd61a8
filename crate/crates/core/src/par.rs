//! Deterministic chunked work splitting.
//!
//! Work is cut into chunks whose boundaries depend only on the problem size, so results
//! reduced in chunk order do not depend on how many workers ran them.

/// Environment variable holding the worker count (default 1).
pub const WORKERS_ENV: &str = "HKGAUGE_WORKERS";

pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

/// Runs `f` on every chunk index in `0..chunks` and returns the results in chunk order.
pub fn map_chunks<T, F>(chunks: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = worker_count().min(chunks.max(1));
    if workers <= 1 {
        return (0..chunks).map(f).collect();
    }
    let mut slots: Vec<Option<T>> = (0..chunks).map(|_| None).collect();
    std::thread::scope(|s| {
        let f = &f;
        let handles: Vec<_> = (0..workers)
            .map(|w| s.spawn(move || (w..chunks).step_by(workers).map(|c| (c, f(c))).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            for (c, v) in h.join().expect("worker panicked") {
                slots[c] = Some(v);
            }
        }
    });
    slots.into_iter().map(|v| v.expect("every chunk ran")).collect()
}

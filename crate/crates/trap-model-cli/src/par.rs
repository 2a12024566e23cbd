//! Deterministic replica orchestration: each replica owns a stream derived
//! from `(master_seed, purpose, replica_id)` and results are collected in
//! replica order, so the output is a function of the configuration alone,
//! never of the thread count or schedule.

use rayon::prelude::*;
use trap_model::rng::Stream;

/// Run `replicas` independent jobs, each seeded by its replica id, across
/// the given rayon pool. Results come back ordered by replica id.
pub fn run_replicas<T: Send>(
    pool: &rayon::ThreadPool,
    master_seed: u64,
    purpose: &str,
    replicas: usize,
    job: impl Fn(usize, Stream) -> T + Sync,
) -> Vec<T> {
    pool.install(|| {
        (0..replicas)
            .into_par_iter()
            .map(|rep| job(rep, Stream::new(master_seed, purpose, rep as u64)))
            .collect()
    })
}

/// Build a pool with the requested thread budget (0 means rayon's default).
pub fn build_pool(threads: usize) -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if threads > 0 {
        builder = builder.num_threads(threads);
    }
    builder.build().expect("thread pool")
}

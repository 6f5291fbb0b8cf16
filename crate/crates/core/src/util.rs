//! Pinned randomness and deterministic parallelism helpers.
//!
//! Every random quantity in the crate flows from a ChaCha12 generator
//! (`rand_chacha::ChaCha12Rng`), a counter-based stream cipher RNG with a
//! 64-bit seed. Independent streams are derived with `set_stream`, so
//! per-sample generators depend only on `(seed, stream index)` and never on
//! evaluation order or thread schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Generator for stream `stream` of the seed's family.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw in `[a, b)` with a pinned mapping from the generator's
/// `[0, 1)` output.
pub fn uniform_in(rng: &mut ChaCha12Rng, a: f64, b: f64) -> f64 {
    a + (b - a) * rng.gen::<f64>()
}

/// One standard-normal draw via Box-Muller (consumes two uniforms).
pub fn standard_normal(rng: &mut ChaCha12Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Fixed chunk size for parallel maps. A constant (rather than a
/// thread-dependent split) keeps element-to-chunk assignment, and therefore
/// every floating-point reduction order, identical for any thread count.
pub const PARALLEL_CHUNK: usize = 64;

/// Maps `f` over `0..n` preserving index order, optionally across threads.
///
/// Work is dealt out in [`PARALLEL_CHUNK`]-sized chunks from a shared
/// counter; results land in their index slot, so the output is independent
/// of the schedule.
pub fn parallel_map_indexed<R, F>(n: usize, threads: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync,
{
    let threads = threads.max(1);
    if threads == 1 || n <= PARALLEL_CHUNK {
        return (0..n).map(f).collect();
    }
    let n_chunks = n.div_ceil(PARALLEL_CHUNK);
    let next_chunk = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<R>> = Vec::with_capacity(n);
    slots.resize_with(n, || None);
    let slots_mutex = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..threads.min(n_chunks) {
            scope.spawn(|| loop {
                let chunk = next_chunk.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if chunk >= n_chunks {
                    break;
                }
                let lo = chunk * PARALLEL_CHUNK;
                let hi = (lo + PARALLEL_CHUNK).min(n);
                let results: Vec<(usize, R)> = (lo..hi).map(|i| (i, f(i))).collect();
                let mut guard = slots_mutex.lock().expect("no poisoned workers");
                for (i, r) in results {
                    guard[i] = Some(r);
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("all slots filled"))
        .collect()
}

/// Resolves a thread-count request: explicit value, else the
/// `RAYLEIGH_FWMDN_THREADS` environment variable, else all cores.
pub fn resolve_threads(requested: Option<usize>) -> usize {
    if let Some(t) = requested {
        return t.max(1);
    }
    if let Ok(v) = std::env::var("RAYLEIGH_FWMDN_THREADS") {
        if let Ok(t) = v.trim().parse::<usize>() {
            return t.max(1);
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

//! Seeded, order-independent parallel random streams.
//!
//! Work is cut into fixed-size chunks; chunk `i` always draws from ChaCha
//! stream `i` of the seed, and results are returned in chunk order. The output
//! therefore depends only on the seed and chunk size, never on how many
//! worker threads rayon happens to use.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const CHUNK: usize = 4096;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `work` over `0..total` in chunks of [`CHUNK`].
pub fn par_chunks<T, F>(total: usize, seed: u64, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>, &mut ChaCha8Rng) -> T + Sync,
{
    let chunks = total.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|i| {
            let start = i * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut rng = stream_rng(seed, i as u64);
            work(start..end, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn independent_of_thread_count() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    par_chunks(20_000, 7, |r, rng| {
                        r.map(|_| rng.random::<f64>()).sum::<f64>()
                    })
                })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn covers_every_index_once() {
        let parts = par_chunks(10_001, 0, |r, _| r);
        let mut next = 0;
        for r in parts {
            assert_eq!(r.start, next);
            next = r.end;
        }
        assert_eq!(next, 10_001);
    }
}

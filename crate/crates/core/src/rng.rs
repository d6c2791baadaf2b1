//! Seeded, splittable random streams.
//!
//! Every consumer (a path, a chunk of draws, an epoch) gets its own ChaCha
//! stream keyed by `(seed, stream)`, so results are identical whatever the
//! thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Number of draws handled by one stream when sampling in bulk.
pub const CHUNK: usize = 1 << 14;

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an independent seed for a sub-task (splitmix64 finaliser).
pub fn derive(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fills `n` values by running `draw` on per-chunk streams.
pub(crate) fn chunked<F>(n: usize, seed: u64, draw: F) -> Vec<f64>
where
    F: Fn(&mut Rng) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let parts = crate::par::map(chunks, |c| {
        let mut rng = stream(seed, c as u64);
        let len = CHUNK.min(n - c * CHUNK);
        (0..len).map(|_| draw(&mut rng)).collect::<Vec<_>>()
    });
    parts.concat()
}

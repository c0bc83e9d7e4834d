//! Seeded, splittable random streams.
//!
//! A run seed plus a stream index (usually the realisation number) fully
//! determines every draw, so realisations can be generated in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

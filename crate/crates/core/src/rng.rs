//! Seeded random streams. Each consumer draws from its own stream so that
//! changing one part of the simulation does not shift another's samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    ClimbingFibres = 1,
    ReachTargets = 2,
    SensorNoise = 3,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

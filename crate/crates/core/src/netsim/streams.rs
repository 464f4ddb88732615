use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams of a run. Changing how one subsystem draws numbers leaves
/// the others untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Topology = 1,
    Mobility,
    Channel,
    Traffic,
    Semantics,
    Perturbation,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Stream for one entity of a subsystem, e.g. one message's transit or one background source.
pub fn keyed_rng(seed: u64, stream: Stream, key: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 40) | (key & ((1 << 40) - 1)));
    rng
}

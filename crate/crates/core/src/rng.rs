//! Deterministic random streams for parallel experiments.
//!
//! Every stream is a ChaCha8 generator keyed by the 64-bit master seed, with
//! its ChaCha stream number derived from `(purpose, k, l)` by chained
//! SplitMix64 finalizers:
//!
//! ```text
//! stream_id = mix(mix(mix(tag) ^ k) ^ l)
//! ```
//!
//! where `k` indexes the sampled distribution, `l` the demand path, and `tag`
//! separates the purposes: 1 for distribution generation, 2 for demand, and
//! `16 + code` for the internal randomization of each policy. A cell's draws
//! therefore do not depend on scheduling, on the number of worker threads, or
//! on which other policies are being compared.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::policy::PolicyKind;

/// What a stream's draws are used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    Distribution,
    Demand,
    Policy(PolicyKind),
}

impl StreamPurpose {
    pub fn tag(self) -> u64 {
        match self {
            StreamPurpose::Distribution => 1,
            StreamPurpose::Demand => 2,
            StreamPurpose::Policy(kind) => 16 + kind.code(),
        }
    }
}

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_id(purpose: StreamPurpose, k: u64, l: u64) -> u64 {
    mix(mix(mix(purpose.tag()) ^ k) ^ l)
}

pub fn stream(seed: u64, purpose: StreamPurpose, k: u64, l: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(purpose, k, l));
    rng
}

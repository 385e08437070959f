//! Reproducible random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! master seed, a domain tag and a stream index. Replicates therefore never
//! share state and can be scheduled on any number of threads without changing
//! their output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Separates independent uses of the same master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    TieBreak,
    NullCalibration,
    Power,
    Permutation,
    Sampling,
    Pitman,
    Custom(u64),
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::TieBreak => 0x7469_6562,
            Domain::NullCalibration => 0x6e75_6c6c,
            Domain::Power => 0x706f_7765,
            Domain::Permutation => 0x7065_726d,
            Domain::Sampling => 0x7361_6d70,
            Domain::Pitman => 0x7069_746d,
            Domain::Custom(t) => t.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0x6375_7374,
        }
    }
}

/// Identifies one reproducible stream: `(seed, domain, stream)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub domain: Domain,
    pub stream: u64,
}

impl StreamKey {
    pub fn new(seed: u64, domain: Domain, stream: u64) -> Self {
        StreamKey {
            seed,
            domain,
            stream,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.seed ^ splitmix64(self.domain.tag())));
        rng.set_stream(self.stream);
        rng
    }

    /// A derived 64-bit seed, for APIs that take a plain seed.
    pub fn derived_seed(&self) -> u64 {
        splitmix64(splitmix64(self.seed ^ self.domain.tag()).wrapping_add(self.stream))
    }
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

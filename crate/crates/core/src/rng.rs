//! Deterministic, splittable random number generation.
//!
//! Every model and every benchmark trial owns its own [`Rng`]. The generator
//! is SplitMix64: a single 64-bit counter advanced by a fixed odd increment
//! and passed through a bijective finaliser. The whole state is one `u64`,
//! which is what the weight file persists.

use rand::rand_core::{impls, RngCore};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Independent stream for `(master seed, stream id)`, e.g. one per trial.
    pub fn for_stream(master: u64, stream: u64) -> Self {
        let salt = mix64(stream.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
        Self::new(mix64(master ^ salt))
    }

    /// Derive a child generator, advancing `self` by one draw.
    pub fn split(&mut self) -> Self {
        Self::new(mix64(self.next_u64() ^ 0x5851_f42d_4c95_7f2d))
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    pub fn from_state(state: u64) -> Self {
        Self { state }
    }
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        impls::fill_bytes_via_next(self, dst)
    }
}

//! Randomness with a recorded seed.
//!
//! Every sampling site in the protocol draws from this generator. Seeded
//! construction makes setup and simulation runs reproducible; entropy
//! construction still records the seed it drew so any production run can be
//! replayed. The seed ends up in the config bundles.

use rand::{RngCore, SeedableRng, TryRngCore};
use rand_chacha::ChaCha20Rng;

/// A ChaCha20 stream with its 64-bit seed kept alongside.
#[derive(Clone, Debug)]
pub struct ProtocolRng {
    rng: ChaCha20Rng,
    seed: u64,
}

impl ProtocolRng {
    pub fn from_seed(seed: u64) -> Self {
        ProtocolRng {
            rng: ChaCha20Rng::seed_from_u64(seed),
            seed,
        }
    }

    /// Draws a fresh seed from the operating system, then runs seeded so the
    /// run stays replayable.
    pub fn from_entropy() -> Self {
        let seed = rand::rngs::OsRng
            .try_next_u64()
            .expect("operating system entropy unavailable");
        ProtocolRng::from_seed(seed)
    }

    /// The seed this stream was built from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// An independent child stream, derived deterministically from this one.
    pub fn fork(&mut self) -> ProtocolRng {
        ProtocolRng::from_seed(self.rng.next_u64())
    }

    /// A uniformly random bit string.
    pub fn bits(&mut self, len: usize) -> crate::nfmodel::BitString {
        crate::nfmodel::BitString::random(len, &mut self.rng)
    }

    /// One fair bit.
    pub fn bit(&mut self) -> bool {
        self.rng.next_u32() & 1 == 1
    }

    /// True with probability `num / den`.
    pub fn ratio_event(&mut self, num: u32, den: u32) -> bool {
        debug_assert!(num <= den && den > 0);
        // Rejection-free: scale a uniform u64 draw.
        ((self.rng.next_u64() as u128 * den as u128) >> 64) < num as u128
    }
}

impl RngCore for ProtocolRng {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

//! Seeded random streams.
//!
//! A session is driven by one 64-bit seed. Each round gets one ChaCha8
//! stream per role, selected with the ChaCha stream counter:
//! `stream = round_id * 4 + role`. Appending rounds never shifts the
//! randomness of earlier rounds, and an eavesdropper's draws never shift the
//! honest parties' draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Role {
    Alice = 0,
    Bob = 1,
    Eve = 2,
    /// Reserved for checks that are not tied to a protocol party.
    Auxiliary = 3,
}

/// Largest round id that fits the stream layout.
pub const MAX_ROUND_ID: u64 = (u64::MAX >> 2) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStreams {
    seed: u64,
}

impl SeedStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, round_id: u64, role: Role) -> ChaCha8Rng {
        assert!(round_id <= MAX_ROUND_ID, "round id {round_id} out of stream range");
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(round_id * 4 + role as u64);
        rng
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A base seed plus a trial index.
///
/// The generator for a seed is keyed by `mix(value ^ mix(trial_index))`, where
/// `mix` is the SplitMix64 finalizer. Both steps are bijections on `u64`, so
/// distinct trial indices under the same base value always give distinct
/// streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub value: u64,
    #[serde(default)]
    pub trial_index: u64,
}

impl Seed {
    pub const fn new(value: u64) -> Self {
        Seed { value, trial_index: 0 }
    }

    /// Same base value, different trial.
    pub const fn trial(self, trial_index: u64) -> Self {
        Seed { value: self.value, trial_index }
    }

    /// An independent base seed for a labelled sub-experiment (a cell, a
    /// hypothesis, ...). The label space is disjoint from trial derivation
    /// because the result is a fresh base value with trial index zero.
    pub fn substream(self, label: u64) -> Self {
        let key = splitmix64(self.derived() ^ splitmix64(label.wrapping_add(0xA076_1D64_78BD_642F)));
        Seed::new(key)
    }

    pub fn derived(&self) -> u64 {
        splitmix64(self.value ^ splitmix64(self.trial_index))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.derived())
    }
}

impl From<u64> for Seed {
    fn from(value: u64) -> Self {
        Seed::new(value)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

//! Seed derivation.
//!
//! Every random stream in a run is derived from the master seed with
//! [`derive`], a SplitMix64 finaliser applied to `(parent, stream tag)`:
//!
//! | stream                 | seed                                        |
//! |------------------------|---------------------------------------------|
//! | synthetic data         | `derive(master, 4)`                         |
//! | imbalance subsampling  | `derive(master, 5)`                         |
//! | replicate `r` base     | `master + r`                                |
//! | network init           | `derive(base, 1)`                           |
//! | shuffling, iteration i | `derive(derive(base, 2), i)`                |
//! | random draw, iteration i | `derive(derive(base, 3), i)`              |
//!
//! Data streams depend only on the master seed, so every replicate and
//! every strategy of a sweep sees the same dataset.

const INIT: u64 = 1;
const SHUFFLE: u64 = 2;
const SELECTION: u64 = 3;
const SYNTH: u64 = 4;
const IMBALANCE: u64 = 5;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `stream` under `parent`.
pub fn derive(parent: u64, stream: u64) -> u64 {
    splitmix64(parent ^ splitmix64(stream))
}

pub fn synth_seed(master: u64) -> u64 {
    derive(master, SYNTH)
}

pub fn imbalance_seed(master: u64) -> u64 {
    derive(master, IMBALANCE)
}

/// Seeds for one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSet {
    pub base: u64,
    pub init: u64,
    shuffle: u64,
    selection: u64,
}

impl SeedSet {
    pub fn for_replicate(master: u64, replicate: usize) -> Self {
        let base = master.wrapping_add(replicate as u64);
        Self {
            base,
            init: derive(base, INIT),
            shuffle: derive(base, SHUFFLE),
            selection: derive(base, SELECTION),
        }
    }

    pub fn shuffle_at(&self, iteration: usize) -> u64 {
        derive(self.shuffle, iteration as u64)
    }

    pub fn selection_at(&self, iteration: usize) -> u64 {
        derive(self.selection, iteration as u64)
    }
}

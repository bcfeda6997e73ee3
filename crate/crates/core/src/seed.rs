//! Seed derivation.
//!
//! Every stochastic step draws from a ChaCha8 stream (`rand_chacha::ChaCha8Rng`)
//! whose 64-bit seed is derived from the master seed and a path of integer
//! labels with the SplitMix64 finalizer. The derivation depends only on the
//! labels, never on scheduling, so parallel and sequential runs consume
//! identical streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` and an ordered list of labels.
pub fn derive(master: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(mix(master.wrapping_add(GOLDEN)), |acc, &l| {
        mix(acc ^ mix(l.wrapping_add(GOLDEN)).wrapping_add(GOLDEN))
    })
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// Stream labels, kept distinct so that e.g. split seeds never collide with GA seeds.
pub(crate) const STREAM_GA_GENERATION: u64 = 1;
pub(crate) const STREAM_SWEEP: u64 = 2;
pub(crate) const STREAM_TUNE: u64 = 3;
pub(crate) const STREAM_EVAL_SPLIT: u64 = 4;
pub(crate) const STREAM_EVAL_GA: u64 = 5;
pub(crate) const STREAM_IMPORTANCE: u64 = 6;
pub(crate) const STREAM_LOUVAIN: u64 = 7;
pub(crate) const STREAM_SYNTH_ABUNDANCE: u64 = 8;
pub(crate) const STREAM_SYNTH_NOISE: u64 = 9;
pub(crate) const STREAM_GA_INIT: u64 = 10;

//! Seed derivation and random streams.
//!
//! Every random decision in a trial comes from a ChaCha8 stream whose seed is
//! derived from the trial seed and a stream key with the SplitMix64 finalizer.
//! Keys are `(tag, index)` pairs, so production unit `i` and injection node
//! `n` each own an independent stream. Adding nodes or units never perturbs
//! the streams of existing ones, and the output is identical across runs and
//! platforms.
//!
//! Bernoulli draws take the top 53 bits of one `u64` as a uniform in `[0, 1)`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator used for all simulation streams.
pub type Stream = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream tag for production units.
pub const UNIT_TAG: u64 = 0x756e_6974; // "unit"
/// Stream tag for injection outcome coins.
pub const NODE_TAG: u64 = 0x6e6f_6465; // "node"
/// Stream tag for sweep trial seeds.
pub const TRIAL_TAG: u64 = 0x7472_6961; // "tria"

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `root`, one SplitMix64 round per part.
pub fn derive_seed(root: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix64(root), |acc, &p| mix64(acc ^ mix64(p)))
}

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_stream(trial_seed: u64, unit: u32) -> Stream {
    stream(derive_seed(trial_seed, &[UNIT_TAG, u64::from(unit)]))
}

pub fn node_stream(trial_seed: u64, node: u32) -> Stream {
    stream(derive_seed(trial_seed, &[NODE_TAG, u64::from(node)]))
}

/// Seed for trial `trial` of the sweep cell at unit count `units`.
pub fn trial_seed(base_seed: u64, units: u32, trial: u32) -> u64 {
    derive_seed(base_seed, &[TRIAL_TAG, u64::from(units), u64::from(trial)])
}

pub fn uniform01(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `true` with probability `p`. `p <= 0` never fires and `p >= 1` always does.
pub fn bernoulli(rng: &mut impl RngCore, p: f64) -> bool {
    if p <= 0.0 {
        return false;
    }
    if p >= 1.0 {
        return true;
    }
    uniform01(rng) < p
}

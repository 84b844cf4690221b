//! Seed derivation and seeded sampling helpers.
//!
//! Every random choice in the crate flows from one top-level `u64` seed.
//! Stage seeds are derived as `mix(seed ^ fnv1a(stage_label))`, so partial
//! re-runs of any stage see the same stream, and adding a stage never
//! perturbs the others.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// splitmix64 finalizer; bijective on u64.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a stage seed from a base seed and a stage label.
pub fn derive_seed(base: u64, stage: &str) -> u64 {
    mix(base ^ fnv1a(stage.as_bytes()))
}

/// Derive an indexed seed (e.g. one per repeat, subject, or channel).
pub fn derive_seed_indexed(base: u64, stage: &str, index: u64) -> u64 {
    mix(derive_seed(base, stage) ^ mix(index))
}

/// The crate-wide seeded generator. ChaCha's output stream is stable across
/// platforms and releases, which the byte-reproducibility contract relies on.
pub fn seeded_rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Standard normal deviate via Box–Muller.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // u1 in (0, 1] so the log is finite.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

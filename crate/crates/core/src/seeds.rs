//! Derivation of per-module seeds from one global seed.
//!
//! `derive(global, label, index)` hashes the label with FNV-1a, mixes it with
//! the global seed and the index, and finishes with the SplitMix64 mixer.
//! Labels used by the pipeline: `"synth"`, `"walk"`, `"embed"`, `"folds"`,
//! `"mf"`.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(label: &str) -> u64 {
    label
        .bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(global: u64, label: &str, index: u64) -> u64 {
    splitmix64(splitmix64(global ^ fnv1a(label)).wrapping_add(index))
}

//! Seeding discipline for reproducible runs.
//!
//! Every source of randomness in the crate is a counter-based ChaCha stream
//! seeded through [`derive_seed`], so distinct consumers (instance
//! generation, the per-iteration direction draw, eigensolver starts) get
//! decoupled streams: adding draws to one never shifts another, and traces
//! are bit-identical across runs with the same seed.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// The RNG used throughout; counter-based, cheap to fork per stream.
pub type SolverRng = ChaCha12Rng;

/// Stream tag: problem-instance generation.
pub const STREAM_INSTANCE: u64 = 1;
/// Stream tag: the per-iteration random direction draw inside the solver.
pub const STREAM_PAIR_DIRECTION: u64 = 2;
/// Stream tag: eigensolver start vectors. Deliberately derived from a fixed
/// base (not the run seed) so deterministic algorithm variants produce the
/// same trace under any seed.
pub const STREAM_EIG_START: u64 = 3;
/// Stream tag: per-repeat seed derivation in benchmark runs.
pub const STREAM_REPEAT: u64 = 4;
/// Stream tag: reference-solution runs (derived from the instance seed, so
/// the certified optimum is independent of any benchmark run's seed).
pub const STREAM_REFERENCE: u64 = 5;
/// Stream tag: sampling for the empirical smoothness-constant check.
pub const STREAM_BETA_CHECK: u64 = 6;
/// Stream tag: start matrix for the power-iteration smoothness estimate.
pub const STREAM_BETA_POWER: u64 = 7;

/// Fixed base seed for streams that must not depend on the run seed.
pub const FIXED_EIG_BASE: u64 = 0x5EED_CAFE_F00D_0001;

/// Mixes `(base, stream)` into an independent 64-bit seed (splitmix-style
/// finalizer; consecutive inputs map to well-separated outputs).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A ChaCha stream for `(base, stream)`.
pub fn stream_rng(base: u64, stream: u64) -> SolverRng {
    use rand::SeedableRng;
    SolverRng::seed_from_u64(derive_seed(base, stream))
}

/// Standard normal vector of length `n`.
pub fn gaussian_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_are_distinct_across_streams() {
        let s: Vec<u64> = (0..64).map(|k| derive_seed(12345, k)).collect();
        let mut sorted = s.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), s.len());
    }

    #[test]
    fn streams_are_reproducible() {
        let a = gaussian_vec(&mut stream_rng(7, STREAM_INSTANCE), 8);
        let b = gaussian_vec(&mut stream_rng(7, STREAM_INSTANCE), 8);
        assert_eq!(a, b);
        let c = gaussian_vec(&mut stream_rng(7, STREAM_PAIR_DIRECTION), 8);
        assert_ne!(a, c);
    }
}

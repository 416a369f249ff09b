//! Seeded random operators for unit tests.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::operator::{HermitianOperator, QuantumState};
use crate::random;

pub fn random_hermitian(n: usize, seed: u64) -> HermitianOperator {
    random::gaussian_hermitian(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn random_state(n: usize, seed: u64) -> QuantumState {
    random::ginibre_state(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

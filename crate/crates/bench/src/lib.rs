//! Seeded inputs shared by the benchmarks.

use paillier_accel::{BigUint, Keypair};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub const MODULUS_BITS: [u64; 4] = [256, 512, 1024, 2048];
pub const PRODUCT_BITS: [u64; 4] = [512, 1024, 2048, 4096];

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Odd modulus with its top bit set.
pub fn odd_modulus(bits: u64, seed: u64) -> BigUint {
    let mut r = rng(seed);
    let m = BigUint::random_bits(bits - 1, &mut r).add(&BigUint::one().shl_bits(bits - 1));
    if m.is_even() {
        m.add_u32(1)
    } else {
        m
    }
}

/// Two values below `m`.
pub fn operands_below(m: &BigUint, seed: u64) -> (BigUint, BigUint) {
    let mut r = rng(seed ^ 0x5eed);
    (BigUint::random_below(m, &mut r), BigUint::random_below(m, &mut r))
}

/// Two full-width operands of `bits / 2` bits each, so their product has `bits` bits.
pub fn factor_pair(bits: u64, seed: u64) -> (BigUint, BigUint) {
    let half = bits / 2;
    (odd_modulus(half, seed), odd_modulus(half, seed + 1))
}

pub fn keypair(bits: u64, seed: u64) -> Keypair {
    Keypair::generate(bits, &mut rng(seed)).expect("key generation")
}

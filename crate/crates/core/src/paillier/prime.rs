//! Probabilistic prime generation (trial division + Miller-Rabin).

use rand::{CryptoRng, RngCore};

use crate::bigint::BigUint;
use crate::montgomery::MontgomeryContext;

pub const MILLER_RABIN_ROUNDS: usize = 40;

/// Candidates tried per requested bit before giving up.
const ATTEMPTS_PER_BIT: u64 = 64;

const SMALL_PRIMES: [u32; 53] = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

/// Miller-Rabin with `rounds` random bases in `[2, n-2]`.
pub fn is_probable_prime<R: RngCore + ?Sized>(n: &BigUint, rounds: usize, rng: &mut R) -> bool {
    if let Some(small) = n.to_u64().filter(|&v| v < 4) {
        return small >= 2;
    }
    if n.is_even() {
        return false;
    }
    for &p in &SMALL_PRIMES {
        if n.rem_u32(p) == 0 {
            return n.to_u64() == Some(p as u64);
        }
    }

    let n_minus_1 = n.sub(&BigUint::one()).expect("n >= 4");
    let mut s = 0u64;
    while !n_minus_1.bit(s) {
        s += 1;
    }
    let d = n_minus_1.shr_bits(s);
    let ctx = MontgomeryContext::with_words(n).expect("odd modulus >= 5");
    let two = BigUint::from_u64(2);
    let upper = n.sub(&two).expect("n >= 4");

    'witness: for _ in 0..rounds {
        let a = BigUint::random_range(&two, &upper.add(&BigUint::one()), rng);
        let mut x = ctx.mod_exp(&a, &d).expect("a < n");
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = ctx.mod_mul(&x, &x).expect("x < n");
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Random prime of exactly `bits` bits with the two top bits set, so that the
/// product of two such primes has exactly `2 * bits` bits.
pub fn random_prime<R: RngCore + CryptoRng + ?Sized>(bits: u64, rng: &mut R) -> Option<BigUint> {
    assert!(bits >= 3, "prime size too small");
    let top = BigUint::one().shl_bits(bits - 1).add(&BigUint::one().shl_bits(bits - 2));
    for _ in 0..ATTEMPTS_PER_BIT * bits {
        let low = BigUint::random_bits(bits - 2, rng);
        let mut candidate = top.add(&low);
        if candidate.is_even() {
            candidate = candidate.add(&BigUint::one());
        }
        if candidate.bits() != bits {
            continue;
        }
        if is_probable_prime(&candidate, MILLER_RABIN_ROUNDS, rng) {
            return Some(candidate);
        }
    }
    None
}

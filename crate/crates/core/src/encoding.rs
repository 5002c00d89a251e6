//! Fixed-point encoding of floats as Paillier plaintexts, and the sparse
//! word layout used for plaintext inputs.
//!
//! A value `v` is stored as `mantissa * 16^exponent`. Plaintexts in
//! `[0, n/3)` are positive, `(n - n/3, n)` hold negatives as `n - |m|`, and
//! anything in between is treated as overflow.

use rand::Rng;

use crate::bigint::BigUint;
use crate::paillier::{Ciphertext, PaillierError, PrivateKey, PublicKey};

pub const BASE: u32 = 16;
const LOG2_BASE: i64 = 4;
const F64_MANTISSA_BITS: i64 = 53;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodingError {
    #[error("value is not finite")]
    NotFinite,
    #[error("value does not fit the positive or negative plaintext range")]
    Overflow,
    #[error("sparse layout needs {needed} words but only {total} are available")]
    TooManyWords { needed: usize, total: usize },
    #[error(transparent)]
    Paillier(#[from] PaillierError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedNumber {
    pub mantissa: BigUint,
    pub exponent: i32,
}

/// Largest magnitude representable in either sign range: `n/3 - 1`.
pub fn max_int(pk: &PublicKey) -> BigUint {
    let third = pk.n().div_rem(&BigUint::from_u64(3)).expect("nonzero").0;
    third.sub(&BigUint::one()).expect("n >= 15")
}

/// `|v| = mantissa * 2^exp2` exactly, with `mantissa < 2^53`.
fn decompose(v: f64) -> (u64, i64) {
    let bits = v.abs().to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if biased == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), biased - 1075)
    }
}

/// Exponent of `frexp`: `|v| = f * 2^e` with `0.5 <= f < 1`; 0 for zero.
fn frexp_exponent(v: f64) -> i64 {
    let (mant, exp2) = decompose(v);
    if mant == 0 {
        return 0;
    }
    exp2 + (64 - mant.leading_zeros() as i64)
}

fn pow16(e: u32) -> BigUint {
    BigUint::one().shl_bits(LOG2_BASE as u64 * e as u64)
}

impl EncodedNumber {
    pub fn base(&self) -> u32 {
        BASE
    }

    /// Encodes `value`. With no `precision` the exponent is the largest one
    /// that still represents the float exactly; otherwise the value is rounded
    /// (half away from zero) to a multiple of `16^precision`.
    pub fn encode(value: f64, pk: &PublicKey, precision: Option<i32>) -> Result<Self, EncodingError> {
        if !value.is_finite() {
            return Err(EncodingError::NotFinite);
        }
        let exponent = match precision {
            Some(e) => e,
            None => (frexp_exponent(value) - F64_MANTISSA_BITS).div_euclid(LOG2_BASE) as i32,
        };
        let (mant, exp2) = decompose(value);
        let shift = exp2 - LOG2_BASE * exponent as i64;
        let magnitude = if shift >= 0 {
            BigUint::from_u64(mant).shl_bits(shift as u64)
        } else {
            let drop = (-shift) as u64;
            if drop > 64 {
                BigUint::zero()
            } else {
                let half = BigUint::one().shl_bits(drop - 1);
                BigUint::from_u64(mant).add(&half).shr_bits(drop)
            }
        };
        if magnitude > max_int(pk) {
            return Err(EncodingError::Overflow);
        }
        let mantissa = if value.is_sign_negative() && !magnitude.is_zero() {
            pk.n().sub(&magnitude).expect("magnitude < n")
        } else {
            magnitude
        };
        Ok(EncodedNumber { mantissa, exponent })
    }

    /// Signed magnitude of the mantissa, or overflow inside the dead zone.
    pub fn signed_mantissa(&self, pk: &PublicKey) -> Result<(bool, BigUint), EncodingError> {
        let max = max_int(pk);
        let n = pk.n();
        if self.mantissa >= *n {
            return Err(EncodingError::Overflow);
        }
        if self.mantissa <= max {
            return Ok((false, self.mantissa.clone()));
        }
        let neg = n.sub(&self.mantissa).expect("mantissa < n");
        if neg <= max {
            Ok((true, neg))
        } else {
            Err(EncodingError::Overflow)
        }
    }

    pub fn decode(&self, pk: &PublicKey) -> Result<f64, EncodingError> {
        let (negative, magnitude) = self.signed_mantissa(pk)?;
        let v = magnitude.to_f64_scaled(LOG2_BASE * self.exponent as i64);
        Ok(if negative { -v } else { v })
    }

    /// Same value at a smaller exponent: `mantissa * 16^(exponent - new) mod n`.
    pub fn decrease_exponent_to(&self, new_exponent: i32, pk: &PublicKey) -> EncodedNumber {
        assert!(new_exponent <= self.exponent, "exponent can only decrease");
        let factor = pow16((self.exponent - new_exponent) as u32);
        let mantissa = self.mantissa.mul(&factor).rem(pk.n()).expect("n > 0");
        EncodedNumber { mantissa, exponent: new_exponent }
    }
}

/// Brings both numbers to the smaller exponent.
pub fn align(a: &EncodedNumber, b: &EncodedNumber, pk: &PublicKey) -> (EncodedNumber, EncodedNumber) {
    let e = a.exponent.min(b.exponent);
    (a.decrease_exponent_to(e, pk), b.decrease_exponent_to(e, pk))
}

pub fn encrypt_encoded<R: Rng + ?Sized>(
    pk: &PublicKey,
    x: &EncodedNumber,
    rng: &mut R,
) -> Result<Ciphertext, PaillierError> {
    let mut c = pk.encrypt_random(&x.mantissa, rng)?;
    c.exponent = x.exponent;
    Ok(c)
}

pub fn decrypt_encoded(sk: &PrivateKey, pk: &PublicKey, c: &Ciphertext) -> Result<EncodedNumber, PaillierError> {
    Ok(EncodedNumber { mantissa: sk.decrypt(pk, c)?, exponent: c.exponent })
}

/// Rescales a ciphertext to a smaller exponent by a plaintext multiplication.
pub fn decrease_cipher_exponent(
    pk: &PublicKey,
    c: &Ciphertext,
    new_exponent: i32,
) -> Result<Ciphertext, PaillierError> {
    assert!(new_exponent <= c.exponent, "exponent can only decrease");
    if new_exponent == c.exponent {
        return Ok(c.clone());
    }
    let factor = pow16((c.exponent - new_exponent) as u32).rem(pk.n())?;
    let mut out = pk.scalar_mul(c, &factor)?;
    out.exponent = new_exponent;
    Ok(out)
}

/// Homomorphic addition after aligning exponents.
pub fn add_encrypted(pk: &PublicKey, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext, PaillierError> {
    let e = a.exponent.min(b.exponent);
    let a = decrease_cipher_exponent(pk, a, e)?;
    let b = decrease_cipher_exponent(pk, b, e)?;
    pk.add(&a, &b)
}

/// Multiplies an encrypted number by an encoded plaintext; exponents add.
pub fn mul_encrypted(pk: &PublicKey, c: &Ciphertext, s: &EncodedNumber) -> Result<Ciphertext, PaillierError> {
    let mut out = pk.scalar_mul(c, &s.mantissa)?;
    out.exponent = c.exponent + s.exponent;
    Ok(out)
}

/// Nonzero words of a plaintext with their positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseWords {
    pairs: Vec<(u32, u32)>,
    total_words: usize,
}

impl SparseWords {
    pub fn sparsify(x: &BigUint, total_words: usize) -> Result<Self, EncodingError> {
        if x.word_len() > total_words {
            return Err(EncodingError::TooManyWords { needed: x.word_len(), total: total_words });
        }
        let pairs = x
            .words()
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0)
            .map(|(i, &w)| (i as u32, w))
            .collect();
        Ok(SparseWords { pairs, total_words })
    }

    pub fn densify(&self) -> BigUint {
        let mut words = vec![0u32; self.total_words];
        for &(i, w) in &self.pairs {
            words[i as usize] = w;
        }
        BigUint::from_words(words)
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn total_words(&self) -> usize {
        self.total_words
    }

    /// Fraction of word slots not stored: `1 - entries / total_words`.
    pub fn memory_reduction(&self) -> f64 {
        if self.total_words == 0 {
            return 0.0;
        }
        1.0 - self.pairs.len() as f64 / self.total_words as f64
    }
}

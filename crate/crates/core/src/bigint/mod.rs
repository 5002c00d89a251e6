//! Arbitrary-precision unsigned integers stored as little-endian 32-bit words.
//!
//! Word `j` holds the coefficient of `2^(32 j)`. Values are kept canonical:
//! the most significant word is never zero and zero is the empty word list.
//! Views in other radices (`2^k` for `k <= 32`) are available through
//! [`BigUint::to_digits`] / [`BigUint::from_digits`].

mod div;
mod mul;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Shl, Shr};

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use mul::{KaratsubaStats, DEFAULT_KARATSUBA_THRESHOLD};

/// Storage word.
pub type Word = u32;
/// Bits per storage word.
pub const WORD_BITS: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BigIntError {
    #[error("subtraction underflow: minuend is smaller than subtrahend")]
    Underflow,
    #[error("division by zero")]
    DivisionByZero,
    #[error("value is not invertible modulo the given modulus")]
    NotInvertible,
    #[error("invalid hex string: {0}")]
    InvalidHex(String),
    #[error("radix must be between 1 and 32 bits, got {0}")]
    InvalidRadix(u32),
}

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BigUint {
    words: Vec<Word>,
}

impl BigUint {
    pub const fn zero() -> Self {
        BigUint { words: Vec::new() }
    }

    pub fn one() -> Self {
        BigUint { words: vec![1] }
    }

    pub fn from_u64(v: u64) -> Self {
        Self::from_words(vec![v as u32, (v >> 32) as u32])
    }

    /// Builds a value from little-endian words, trimming leading zeros.
    pub fn from_words(words: Vec<Word>) -> Self {
        let mut r = BigUint { words };
        r.normalize();
        r
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn word_len(&self) -> usize {
        self.words.len()
    }

    pub fn is_zero(&self) -> bool {
        self.words.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.words == [1]
    }

    pub fn is_odd(&self) -> bool {
        self.words.first().is_some_and(|w| w & 1 == 1)
    }

    pub fn is_even(&self) -> bool {
        !self.is_odd()
    }

    /// Number of significant bits; zero has zero bits.
    pub fn bits(&self) -> u64 {
        match self.words.last() {
            None => 0,
            Some(top) => {
                (self.words.len() as u64 - 1) * WORD_BITS as u64
                    + (WORD_BITS - top.leading_zeros()) as u64
            }
        }
    }

    pub fn bit(&self, i: u64) -> bool {
        let w = (i / WORD_BITS as u64) as usize;
        match self.words.get(w) {
            Some(word) => (word >> (i % WORD_BITS as u64)) & 1 == 1,
            None => false,
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Low 64 bits.
    pub fn low_u64(&self) -> u64 {
        let lo = self.words.first().copied().unwrap_or(0) as u64;
        let hi = self.words.get(1).copied().unwrap_or(0) as u64;
        lo | (hi << 32)
    }

    pub fn to_u64(&self) -> Option<u64> {
        (self.words.len() <= 2).then(|| self.low_u64())
    }

    fn normalize(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    pub fn add(&self, other: &BigUint) -> BigUint {
        let (long, short) = if self.words.len() >= other.words.len() {
            (&self.words, &other.words)
        } else {
            (&other.words, &self.words)
        };
        let mut out = Vec::with_capacity(long.len() + 1);
        let mut carry = 0u64;
        for (i, &w) in long.iter().enumerate() {
            let s = w as u64 + short.get(i).copied().unwrap_or(0) as u64 + carry;
            out.push(s as u32);
            carry = s >> 32;
        }
        if carry != 0 {
            out.push(carry as u32);
        }
        BigUint::from_words(out)
    }

    pub fn sub(&self, other: &BigUint) -> Result<BigUint, BigIntError> {
        if self < other {
            return Err(BigIntError::Underflow);
        }
        let mut out = self.words.clone();
        let borrow = sub_assign_words(&mut out, &other.words);
        debug_assert!(!borrow);
        Ok(BigUint::from_words(out))
    }

    pub fn add_u32(&self, v: u32) -> BigUint {
        self.add(&BigUint::from_u64(v as u64))
    }

    pub fn shl_bits(&self, s: u64) -> BigUint {
        if self.is_zero() {
            return BigUint::zero();
        }
        let word_shift = (s / WORD_BITS as u64) as usize;
        let bit_shift = (s % WORD_BITS as u64) as u32;
        let mut out = vec![0u32; word_shift];
        out.reserve(self.words.len() + 1);
        if bit_shift == 0 {
            out.extend_from_slice(&self.words);
        } else {
            let mut carry = 0u32;
            for &w in &self.words {
                out.push((w << bit_shift) | carry);
                carry = w >> (WORD_BITS - bit_shift);
            }
            out.push(carry);
        }
        BigUint::from_words(out)
    }

    pub fn shr_bits(&self, s: u64) -> BigUint {
        let word_shift = (s / WORD_BITS as u64) as usize;
        if word_shift >= self.words.len() {
            return BigUint::zero();
        }
        let bit_shift = (s % WORD_BITS as u64) as u32;
        let src = &self.words[word_shift..];
        let out = if bit_shift == 0 {
            src.to_vec()
        } else {
            (0..src.len())
                .map(|i| {
                    let hi = src.get(i + 1).copied().unwrap_or(0);
                    (src[i] >> bit_shift) | (hi << (WORD_BITS - bit_shift))
                })
                .collect()
        };
        BigUint::from_words(out)
    }

    /// `self mod 2^bits`.
    pub fn low_bits(&self, bits: u64) -> BigUint {
        let full = (bits / WORD_BITS as u64) as usize;
        let rem = (bits % WORD_BITS as u64) as u32;
        let mut out: Vec<u32> = self.words.iter().take(full + 1).copied().collect();
        if out.len() > full {
            if rem == 0 {
                out.truncate(full);
            } else {
                out[full] &= (1u32 << rem) - 1;
            }
        }
        BigUint::from_words(out)
    }

    /// Splits the value into exactly `count` digits of `radix_bits` bits,
    /// little-endian. Bits beyond `count * radix_bits` are dropped.
    pub fn to_digits(&self, radix_bits: u32, count: usize) -> Result<Vec<u32>, BigIntError> {
        check_radix(radix_bits)?;
        if radix_bits == WORD_BITS {
            let mut d = self.words.clone();
            d.resize(count, 0);
            return Ok(d);
        }
        let mask = (1u64 << radix_bits) - 1;
        Ok((0..count)
            .map(|i| {
                let bit = i as u64 * radix_bits as u64;
                let w = (bit / 32) as usize;
                let off = bit % 32;
                let lo = self.words.get(w).copied().unwrap_or(0) as u64;
                let hi = self.words.get(w + 1).copied().unwrap_or(0) as u64;
                (((lo | (hi << 32)) >> off) & mask) as u32
            })
            .collect())
    }

    /// Inverse of [`to_digits`](Self::to_digits). Digits must be below `2^radix_bits`.
    pub fn from_digits(digits: &[u32], radix_bits: u32) -> Result<BigUint, BigIntError> {
        check_radix(radix_bits)?;
        if radix_bits == WORD_BITS {
            return Ok(BigUint::from_words(digits.to_vec()));
        }
        let total_bits = digits.len() as u64 * radix_bits as u64;
        let mut words = vec![0u32; total_bits.div_ceil(32) as usize + 1];
        for (i, &d) in digits.iter().enumerate() {
            debug_assert!((d as u64) < (1u64 << radix_bits));
            let bit = i as u64 * radix_bits as u64;
            let w = (bit / 32) as usize;
            let v = (d as u64) << (bit % 32);
            words[w] |= v as u32;
            words[w + 1] |= (v >> 32) as u32;
        }
        Ok(BigUint::from_words(words))
    }

    /// Uniform value with at most `bits` bits.
    pub fn random_bits<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> BigUint {
        let n = bits.div_ceil(32) as usize;
        let mut words: Vec<u32> = (0..n).map(|_| rng.random()).collect();
        let rem = (bits % 32) as u32;
        if rem != 0 {
            if let Some(top) = words.last_mut() {
                *top &= (1u32 << rem) - 1;
            }
        }
        BigUint::from_words(words)
    }

    /// Uniform value in `[0, bound)`; `bound` must be nonzero.
    pub fn random_below<R: Rng + ?Sized>(bound: &BigUint, rng: &mut R) -> BigUint {
        assert!(!bound.is_zero(), "random_below: empty range");
        let bits = bound.bits();
        loop {
            let c = BigUint::random_bits(bits, rng);
            if &c < bound {
                return c;
            }
        }
    }

    /// Uniform value in `[lo, hi)`.
    pub fn random_range<R: Rng + ?Sized>(lo: &BigUint, hi: &BigUint, rng: &mut R) -> BigUint {
        let span = hi.sub(lo).expect("random_range: lo > hi");
        lo.add(&BigUint::random_below(&span, rng))
    }

    /// Lowercase big-endian hex without leading zeros; zero is `"0"`.
    pub fn to_hex(&self) -> String {
        let Some((top, rest)) = self.words.split_last() else {
            return "0".to_string();
        };
        let mut s = format!("{top:x}");
        for w in rest.iter().rev() {
            s.push_str(&format!("{w:08x}"));
        }
        s
    }

    pub fn from_hex(s: &str) -> Result<BigUint, BigIntError> {
        let t = s.trim();
        let t = t
            .strip_prefix("0x")
            .or_else(|| t.strip_prefix("0X"))
            .unwrap_or(t);
        if t.is_empty() {
            return Err(BigIntError::InvalidHex(s.to_string()));
        }
        let digits: Vec<u32> = t
            .chars()
            .map(|c| c.to_digit(16).ok_or_else(|| BigIntError::InvalidHex(s.to_string())))
            .collect::<Result<_, _>>()?;
        let words = digits
            .rchunks(8)
            .map(|chunk| chunk.iter().fold(0u32, |acc, &d| (acc << 4) | d))
            .collect();
        Ok(BigUint::from_words(words))
    }

    /// Little-endian bytes, minimal length (zero encodes as no bytes).
    pub fn to_bytes_le(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        while out.last() == Some(&0) {
            out.pop();
        }
        out
    }

    pub fn from_bytes_le(bytes: &[u8]) -> BigUint {
        let words = bytes
            .chunks(4)
            .map(|c| {
                let mut b = [0u8; 4];
                b[..c.len()].copy_from_slice(c);
                u32::from_le_bytes(b)
            })
            .collect();
        BigUint::from_words(words)
    }

    /// Decimal representation.
    pub fn to_dec_string(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let chunk = BigUint::from_u64(1_000_000_000);
        let mut parts = Vec::new();
        let mut cur = self.clone();
        while !cur.is_zero() {
            let (q, r) = cur.div_rem(&chunk).expect("nonzero divisor");
            parts.push(r.low_u64() as u32);
            cur = q;
        }
        let mut s = parts.pop().unwrap().to_string();
        for p in parts.iter().rev() {
            s.push_str(&format!("{p:09}"));
        }
        s
    }

    /// `self * 2^shift` rounded to the nearest `f64` (truncating below 64
    /// significant bits). Handles shifts that would over- or underflow an
    /// intermediate power of two.
    pub fn to_f64_scaled(&self, shift: i64) -> f64 {
        let bits = self.bits();
        if bits == 0 {
            return 0.0;
        }
        let drop = bits.saturating_sub(64);
        let top = self.shr_bits(drop).low_u64() as f64;
        ldexp(top, shift + drop as i64)
    }

    pub fn to_f64(&self) -> f64 {
        self.to_f64_scaled(0)
    }
}

/// `x * 2^exp` without intermediate overflow of the power of two.
pub(crate) fn ldexp(mut x: f64, mut exp: i64) -> f64 {
    const STEP: i64 = 1000;
    while exp > STEP {
        x *= 2f64.powi(STEP as i32);
        exp -= STEP;
        if x.is_infinite() {
            return x;
        }
    }
    while exp < -STEP {
        x *= 2f64.powi(-STEP as i32);
        exp += STEP;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(exp as i32)
}

fn check_radix(radix_bits: u32) -> Result<(), BigIntError> {
    if (1..=WORD_BITS).contains(&radix_bits) {
        Ok(())
    } else {
        Err(BigIntError::InvalidRadix(radix_bits))
    }
}

/// `a -= b` over the overlapping length, propagating the borrow through `a`.
/// Returns true if the result went negative.
pub(crate) fn sub_assign_words(a: &mut [u32], b: &[u32]) -> bool {
    let mut borrow = 0u64;
    let len = a.len();
    for (i, ai) in a.iter_mut().enumerate() {
        let bi = b.get(i).copied().unwrap_or(0) as u64;
        if i >= b.len() && borrow == 0 {
            return false;
        }
        let (d, o1) = (*ai as u64).overflowing_sub(bi + borrow);
        *ai = d as u32;
        borrow = o1 as u64;
    }
    borrow != 0 || b[len.min(b.len())..].iter().any(|&w| w != 0)
}

/// `a += b`, returning the carry out of `a`.
pub(crate) fn add_assign_words(a: &mut [u32], b: &[u32]) -> u32 {
    let mut carry = 0u64;
    for (i, ai) in a.iter_mut().enumerate() {
        if i >= b.len() && carry == 0 {
            return 0;
        }
        let s = *ai as u64 + b.get(i).copied().unwrap_or(0) as u64 + carry;
        *ai = s as u32;
        carry = s >> 32;
    }
    carry as u32
}

impl Ord for BigUint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.words
            .len()
            .cmp(&other.words.len())
            .then_with(|| self.words.iter().rev().cmp(other.words.iter().rev()))
    }
}

impl PartialOrd for BigUint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<u64> for BigUint {
    fn from(v: u64) -> Self {
        BigUint::from_u64(v)
    }
}

impl From<u32> for BigUint {
    fn from(v: u32) -> Self {
        BigUint::from_u64(v as u64)
    }
}

impl fmt::Debug for BigUint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BigUint(0x{})", self.to_hex())
    }
}

impl fmt::Display for BigUint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_dec_string())
    }
}

impl fmt::LowerHex for BigUint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Add for &BigUint {
    type Output = BigUint;
    fn add(self, rhs: &BigUint) -> BigUint {
        BigUint::add(self, rhs)
    }
}

impl Mul for &BigUint {
    type Output = BigUint;
    fn mul(self, rhs: &BigUint) -> BigUint {
        BigUint::mul(self, rhs)
    }
}

impl Shl<u64> for &BigUint {
    type Output = BigUint;
    fn shl(self, s: u64) -> BigUint {
        self.shl_bits(s)
    }
}

impl Shr<u64> for &BigUint {
    type Output = BigUint;
    fn shr(self, s: u64) -> BigUint {
        self.shr_bits(s)
    }
}

impl Serialize for BigUint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for BigUint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        BigUint::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

//! Schoolbook and Karatsuba multiplication.
//!
//! The Karatsuba recursion works on equal-length word slices and splits at
//! `ceil(n / 2)` words. The carry bit out of each half-sum is folded back with
//! shifted additions, so every recursive product is exactly half size and
//! the number of base-case multiplications for `n`-word operands is
//! `3^ceil(log2 n)` at a one-word threshold.

use super::{add_assign_words, sub_assign_words, BigUint};

/// Operands at or below this many words are multiplied directly.
pub const DEFAULT_KARATSUBA_THRESHOLD: usize = 1;

/// Threshold used by the general-purpose `*` operator.
const OPERATOR_THRESHOLD: usize = 24;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KaratsubaStats {
    /// Base-case (direct) multiplications performed.
    pub base_multiplications: u64,
}

impl BigUint {
    pub fn mul_schoolbook(&self, other: &BigUint) -> BigUint {
        if self.is_zero() || other.is_zero() {
            return BigUint::zero();
        }
        let mut out = vec![0u32; self.words.len() + other.words.len()];
        schoolbook_into(&self.words, &other.words, &mut out);
        BigUint::from_words(out)
    }

    pub fn mul_karatsuba(&self, other: &BigUint) -> BigUint {
        self.mul_karatsuba_counted(other, DEFAULT_KARATSUBA_THRESHOLD).0
    }

    /// Karatsuba product with a configurable base-case threshold (in words),
    /// also returning how many base-case multiplications were issued.
    pub fn mul_karatsuba_counted(&self, other: &BigUint, threshold: usize) -> (BigUint, KaratsubaStats) {
        let mut stats = KaratsubaStats::default();
        if self.is_zero() || other.is_zero() {
            return (BigUint::zero(), stats);
        }
        let n = self.words.len().max(other.words.len());
        let mut x = self.words.clone();
        let mut y = other.words.clone();
        x.resize(n, 0);
        y.resize(n, 0);
        let out = karatsuba(&x, &y, threshold.max(1), &mut stats);
        (BigUint::from_words(out), stats)
    }

    pub fn mul(&self, other: &BigUint) -> BigUint {
        let short = self.words.len().min(other.words.len());
        if short <= OPERATOR_THRESHOLD {
            self.mul_schoolbook(other)
        } else {
            self.mul_karatsuba_counted(other, OPERATOR_THRESHOLD).0
        }
    }

    pub fn square(&self) -> BigUint {
        self.mul(self)
    }
}

/// `out += x * y`; `out` must hold `x.len() + y.len()` words.
fn schoolbook_into(x: &[u32], y: &[u32], out: &mut [u32]) {
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0 {
            continue;
        }
        let mut carry = 0u64;
        for (j, &yj) in y.iter().enumerate() {
            let t = xi as u64 * yj as u64 + out[i + j] as u64 + carry;
            out[i + j] = t as u32;
            carry = t >> 32;
        }
        let mut k = i + y.len();
        while carry != 0 {
            let t = out[k] as u64 + carry;
            out[k] = t as u32;
            carry = t >> 32;
            k += 1;
        }
    }
}

/// Product of two `n`-word slices as exactly `2n` words.
fn karatsuba(x: &[u32], y: &[u32], threshold: usize, stats: &mut KaratsubaStats) -> Vec<u32> {
    let n = x.len();
    debug_assert_eq!(n, y.len());
    let mut out = vec![0u32; 2 * n];
    if n <= threshold {
        stats.base_multiplications += 1;
        schoolbook_into(x, y, &mut out);
        return out;
    }

    let h = n.div_ceil(2);
    let (xl, xh) = x.split_at(h);
    let (yl, yh) = y.split_at(h);
    let mut xh = xh.to_vec();
    let mut yh = yh.to_vec();
    xh.resize(h, 0);
    yh.resize(h, 0);

    let ll = karatsuba(xl, yl, threshold, stats);
    let hh = karatsuba(&xh, &yh, threshold, stats);

    // (Xh + Xl) = cx * 2^(32h) + sx with sx of h words
    let mut sx = xl.to_vec();
    let cx = add_assign_words(&mut sx, &xh);
    let mut sy = yl.to_vec();
    let cy = add_assign_words(&mut sy, &yh);

    let mut hl = vec![0u32; 2 * h + 1];
    hl[..2 * h].copy_from_slice(&karatsuba(&sx, &sy, threshold, stats));
    if cx != 0 {
        add_assign_words(&mut hl[h..], &sy);
    }
    if cy != 0 {
        add_assign_words(&mut hl[h..], &sx);
    }
    if cx != 0 && cy != 0 {
        add_assign_words(&mut hl[2 * h..], &[1]);
    }

    // middle term HL - HH - LL is non-negative for non-negative operands
    let under_hh = sub_assign_words(&mut hl, &hh);
    let under_ll = sub_assign_words(&mut hl, &ll);
    assert!(!under_hh && !under_ll, "karatsuba: HL < HH + LL");

    // S = HH * 2^(64h) + mid * 2^(32h) + LL; fits 2n words
    let mut acc = vec![0u32; 4 * h + 2];
    acc[..2 * h].copy_from_slice(&ll);
    add_assign_words(&mut acc[h..], &hl);
    add_assign_words(&mut acc[2 * h..], &hh);
    debug_assert!(acc[2 * n..].iter().all(|&w| w == 0));
    out.copy_from_slice(&acc[..2 * n]);
    out
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_products() {
        let a = BigUint::from_hex("123456789abcdef0123456789").unwrap();
        assert!(a.mul_schoolbook(&BigUint::zero()).is_zero());
        assert!(a.mul_karatsuba(&BigUint::zero()).is_zero());
        assert_eq!(a.mul_schoolbook(&BigUint::one()), a);
        assert_eq!(a.mul_karatsuba(&BigUint::one()), a);
    }

    #[test]
    fn word_square_matches_machine_arithmetic() {
        let m = BigUint::from_u64(0xFFFF_FFFF);
        let expected = 0xFFFF_FFFFu64 * 0xFFFF_FFFFu64;
        assert_eq!(expected, 0xFFFF_FFFE_0000_0001);
        assert_eq!(m.mul_schoolbook(&m), BigUint::from_u64(expected));
        assert_eq!(m.mul_karatsuba(&m), BigUint::from_u64(expected));
    }

    #[test]
    fn two_word_operands_match_schoolbook_and_u128() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let a: u64 = rng.random();
            let b: u64 = rng.random();
            let (x, y) = (BigUint::from_u64(a), BigUint::from_u64(b));
            let expected = big(a as u128 * b as u128);
            assert_eq!(x.mul_schoolbook(&y), expected);
            assert_eq!(x.mul_karatsuba(&y), expected);
        }
    }

    #[test]
    fn random_1024_bit_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let a = BigUint::random_bits(1024, &mut rng);
            let b = BigUint::random_bits(1024, &mut rng);
            assert_eq!(a.mul_karatsuba(&b), a.mul_schoolbook(&b));
        }
    }

    #[test]
    fn all_ones_operands_exercise_sum_carries() {
        for n in 1..40usize {
            let a = BigUint::from_words(vec![u32::MAX; n]);
            for threshold in [1, 2, 3, 8] {
                let (p, _) = a.mul_karatsuba_counted(&a, threshold);
                assert_eq!(p, a.mul_schoolbook(&a), "n={n} threshold={threshold}");
            }
        }
    }

    #[test]
    fn base_case_count_is_three_to_the_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for log_n in 0..=7u32 {
            let n = 1usize << log_n;
            let mut words: Vec<u32> = (0..n).map(|_| rng.random()).collect();
            words[n - 1] |= 1 << 31;
            let a = BigUint::from_words(words.clone());
            words.reverse();
            words[n - 1] |= 1;
            let b = BigUint::from_words(words);
            let (_, stats) = a.mul_karatsuba_counted(&b, 1);
            assert_eq!(stats.base_multiplications, 3u64.pow(log_n), "n={n}");
        }
        // non-powers of two follow the ceil split
        for n in [3usize, 5, 6, 7, 9, 33] {
            let a = BigUint::from_words(vec![7; n]);
            let (_, stats) = a.mul_karatsuba_counted(&a, 1);
            let depth = (n as f64).log2().ceil() as u32;
            assert_eq!(stats.base_multiplications, 3u64.pow(depth), "n={n}");
        }
    }

    #[test]
    fn operator_uses_correct_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let a = BigUint::random_bits(4096, &mut rng);
        let b = BigUint::random_bits(3000, &mut rng);
        assert_eq!(&a * &b, a.mul_schoolbook(&b));
    }

    proptest! {
        #[test]
        fn karatsuba_equals_schoolbook(seed: u64, abits in 0u64..2048, bbits in 0u64..2048, threshold in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = BigUint::random_bits(abits, &mut rng);
            let b = BigUint::random_bits(bbits, &mut rng);
            prop_assert_eq!(a.mul_karatsuba_counted(&b, threshold).0, a.mul_schoolbook(&b));
        }
    }
}

//! Word-radix Montgomery multiplication and exponentiation.
//!
//! The multiplication loop mirrors the hardware processing element: the
//! outer loop walks the `l/k` digits of `Y`, computes the quotient digit `q`
//! from the low digits only, and the inner loop runs `l/k + 1` iterations
//! of `S^j + X^j * Y^i + q * M^j` with an explicit carry before the
//! one-digit shift. One inner iteration issues two digit multiplications,
//! so a full product costs `(l/k)(l/k + 1)` iterations.

use std::ops::AddAssign;

use crate::bigint::{BigIntError, BigUint};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MontgomeryError {
    #[error("modulus must be odd and at least 3")]
    InvalidModulus,
    #[error("operand is not reduced modulo the context modulus")]
    OperandNotReduced,
    #[error(transparent)]
    BigInt(#[from] BigIntError),
}

/// Instrumentation for the throughput model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct MontCounters {
    pub mont_muls: u64,
    pub inner_iterations: u64,
}

impl AddAssign for MontCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.mont_muls += rhs.mont_muls;
        self.inner_iterations += rhs.inner_iterations;
    }
}

/// Precomputed constants for one odd modulus and radix `2^k`.
#[derive(Debug, Clone)]
pub struct MontgomeryContext {
    modulus: BigUint,
    radix_bits: u32,
    digit_count: usize,
    m_digits: Vec<u32>,
    m_prime: u32,
    mask: u64,
    // M and 2M as l/k + 1 digits, for the final comparison
    wide_m: Vec<u64>,
    two_m: Vec<u64>,
    r2: BigUint,
    r2_digits: Vec<u32>,
    // R mod M, the Montgomery form of one
    one_digits: Vec<u32>,
}

/// A value `a * 2^l mod M` in the Montgomery domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MontForm {
    value: BigUint,
}

impl MontForm {
    pub fn value(&self) -> &BigUint {
        &self.value
    }
}

impl MontgomeryContext {
    pub fn new(modulus: &BigUint, radix_bits: u32) -> Result<Self, MontgomeryError> {
        if modulus.is_even() || modulus < &BigUint::from_u64(3) {
            return Err(MontgomeryError::InvalidModulus);
        }
        let digit_count = (modulus.bits() as usize).div_ceil(radix_bits.max(1) as usize);
        let m_digits = modulus.to_digits(radix_bits, digit_count)?;
        let mask = (1u64 << radix_bits) - 1;
        let inv = word_inverse(m_digits[0] as u64);
        let m_prime = (inv.wrapping_neg() & mask) as u32;
        let l = (digit_count * radix_bits as usize) as u64;
        let r2 = BigUint::one().shl_bits(2 * l).rem(modulus)?;
        let one = BigUint::one().shl_bits(l).rem(modulus)?;
        let mut wide_m: Vec<u64> = m_digits.iter().map(|&d| d as u64).collect();
        wide_m.push(0);
        let two_m = double(&wide_m, radix_bits);
        Ok(MontgomeryContext {
            wide_m,
            two_m,
            r2_digits: r2.to_digits(radix_bits, digit_count)?,
            one_digits: one.to_digits(radix_bits, digit_count)?,
            modulus: modulus.clone(),
            radix_bits,
            digit_count,
            m_digits,
            m_prime,
            mask,
            r2,
        })
    }

    /// Context over 32-bit words.
    pub fn with_words(modulus: &BigUint) -> Result<Self, MontgomeryError> {
        Self::new(modulus, 32)
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn radix_bits(&self) -> u32 {
        self.radix_bits
    }

    /// `l / k`.
    pub fn digit_count(&self) -> usize {
        self.digit_count
    }

    /// `l`, the padded operand width in bits.
    pub fn operand_bits(&self) -> u64 {
        (self.digit_count * self.radix_bits as usize) as u64
    }

    /// `-M^{-1} mod 2^k`.
    pub fn m_prime(&self) -> u32 {
        self.m_prime
    }

    /// `2^(2l) mod M`.
    pub fn r2(&self) -> &BigUint {
        &self.r2
    }

    /// Inner-loop iterations of one multiplication: `(l/k)(l/k + 1)`.
    pub fn inner_iterations_per_mul(&self) -> u64 {
        let n = self.digit_count as u64;
        n * (n + 1)
    }

    fn check_reduced(&self, x: &BigUint) -> Result<(), MontgomeryError> {
        if x < &self.modulus {
            Ok(())
        } else {
            Err(MontgomeryError::OperandNotReduced)
        }
    }

    fn digits(&self, x: &BigUint) -> Vec<u32> {
        x.to_digits(self.radix_bits, self.digit_count).expect("radix checked at construction")
    }

    fn digits_to_int(&self, d: &[u32]) -> BigUint {
        BigUint::from_digits(d, self.radix_bits).expect("radix checked at construction")
    }

    /// `X * Y * 2^(-l) mod M` for `X, Y < M`.
    pub fn mont_mul(&self, x: &BigUint, y: &BigUint) -> Result<BigUint, MontgomeryError> {
        self.mont_mul_counted(x, y, &mut MontCounters::default())
    }

    pub fn mont_mul_counted(
        &self,
        x: &BigUint,
        y: &BigUint,
        counters: &mut MontCounters,
    ) -> Result<BigUint, MontgomeryError> {
        self.check_reduced(x)?;
        self.check_reduced(y)?;
        let mut kernel = Kernel::new(self);
        let mut out = vec![0u32; self.digit_count];
        kernel.mul(&self.digits(x), &self.digits(y), &mut out, counters);
        Ok(self.digits_to_int(&out))
    }

    pub fn to_mont(&self, a: &BigUint) -> Result<MontForm, MontgomeryError> {
        Ok(MontForm { value: self.mont_mul(a, &self.r2)? })
    }

    /// Wraps a value already in the Montgomery domain.
    pub fn mont_form(&self, value: BigUint) -> Result<MontForm, MontgomeryError> {
        self.check_reduced(&value)?;
        Ok(MontForm { value })
    }

    pub fn from_mont(&self, x: &MontForm) -> BigUint {
        self.mont_mul(&x.value, &BigUint::one())
            .expect("MontForm values are reduced")
    }

    /// `a * b mod M` through the Montgomery domain.
    pub fn mod_mul(&self, a: &BigUint, b: &BigUint) -> Result<BigUint, MontgomeryError> {
        let am = self.to_mont(a)?;
        let bm = self.to_mont(b)?;
        let p = self.mont_mul(&am.value, &bm.value)?;
        Ok(self.from_mont(&MontForm { value: p }))
    }

    pub fn mod_exp(&self, base: &BigUint, exponent: &BigUint) -> Result<BigUint, MontgomeryError> {
        self.mod_exp_counted(base, exponent, &mut MontCounters::default())
    }

    /// Left-to-right binary square-and-multiply in the Montgomery domain.
    ///
    /// Issues one squaring per exponent bit, one multiplication per set bit
    /// and two domain conversions; see [`predicted_mod_exp_muls`].
    pub fn mod_exp_counted(
        &self,
        base: &BigUint,
        exponent: &BigUint,
        counters: &mut MontCounters,
    ) -> Result<BigUint, MontgomeryError> {
        self.check_reduced(base)?;
        let n = self.digit_count;
        let mut kernel = Kernel::new(self);
        let mut base_m = vec![0u32; n];
        kernel.mul(&self.digits(base), &self.r2_digits, &mut base_m, counters);

        let mut acc = self.one_digits.clone();
        let mut tmp = vec![0u32; n];
        for bit in (0..exponent.bits()).rev() {
            kernel.mul(&acc, &acc, &mut tmp, counters);
            std::mem::swap(&mut acc, &mut tmp);
            if exponent.bit(bit) {
                kernel.mul(&acc, &base_m, &mut tmp, counters);
                std::mem::swap(&mut acc, &mut tmp);
            }
        }

        let mut unit = vec![0u32; n];
        unit[0] = 1;
        kernel.mul(&acc, &unit, &mut tmp, counters);
        Ok(self.digits_to_int(&tmp))
    }
}

/// Montgomery multiplications issued by [`MontgomeryContext::mod_exp_counted`]
/// for this exponent: squarings + multiplies + two domain conversions.
pub fn predicted_mod_exp_muls(exponent: &BigUint) -> u64 {
    exponent.bits() + exponent.count_ones() + 2
}

/// `a^{-1} mod 2^64` for odd `a`, by Newton iteration.
fn word_inverse(a: u64) -> u64 {
    debug_assert!(a & 1 == 1);
    let mut x = 1u64;
    for _ in 0..6 {
        x = x.wrapping_mul(2u64.wrapping_sub(a.wrapping_mul(x)));
    }
    x
}

/// Digit-level multiplier with its running sum buffer.
struct Kernel<'a> {
    ctx: &'a MontgomeryContext,
    s: Vec<u64>,
}

impl<'a> Kernel<'a> {
    fn new(ctx: &'a MontgomeryContext) -> Self {
        Kernel { ctx, s: vec![0; ctx.digit_count + 1] }
    }

    fn mul(&mut self, x: &[u32], y: &[u32], out: &mut [u32], counters: &mut MontCounters) {
        let ctx = self.ctx;
        let n = ctx.digit_count;
        let k = ctx.radix_bits;
        let mask = ctx.mask;
        let m = &ctx.m_digits;
        let m_prime = ctx.m_prime as u64;
        let s = &mut self.s;
        s.fill(0);

        let x0 = x[0] as u64;
        for &yi in &y[..n] {
            let yi = yi as u64;
            // only the low digit of S + X*Y^i matters modulo 2^k
            let q = (((s[0] + x0 * yi) & mask) * m_prime) & mask;

            // two carries keep each partial sum within 64 bits at k = 32
            let t1 = s[0] + x0 * yi;
            let mut c1 = t1 >> k;
            let t2 = (t1 & mask) + q * m[0] as u64;
            debug_assert_eq!(t2 & mask, 0);
            let mut c2 = t2 >> k;
            for j in 1..n {
                let t1 = s[j] + x[j] as u64 * yi + c1;
                c1 = t1 >> k;
                let t2 = (t1 & mask) + q * m[j] as u64 + c2;
                c2 = t2 >> k;
                s[j - 1] = t2 & mask;
            }
            // j = l/k: X and M are zero-padded here
            let t = s[n] + c1 + c2;
            s[n - 1] = t & mask;
            s[n] = t >> k;
        }
        counters.mont_muls += 1;
        counters.inner_iterations += (n * (n + 1)) as u64;

        let wide_m = &ctx.wide_m;
        debug_assert!(digits_lt(s, &ctx.two_m), "S must stay below 2M");
        if !digits_lt(s, wide_m) {
            let mut borrow = 0u64;
            for j in 0..=n {
                let (d, o1) = s[j].overflowing_sub(wide_m[j] + borrow);
                let d = if o1 { d.wrapping_add(1u64 << k) } else { d };
                s[j] = d;
                borrow = o1 as u64;
            }
            debug_assert_eq!(borrow, 0);
        }
        debug_assert_eq!(s[n], 0);
        for j in 0..n {
            out[j] = s[j] as u32;
        }
    }
}

fn digits_lt(a: &[u64], b: &[u64]) -> bool {
    for (x, y) in a.iter().rev().zip(b.iter().rev()) {
        if x != y {
            return x < y;
        }
    }
    false
}

fn double(d: &[u64], k: u32) -> Vec<u64> {
    let mask = (1u64 << k) - 1;
    let mut carry = 0;
    d.iter()
        .map(|&x| {
            let v = (x << 1) | carry;
            carry = v >> k;
            v & mask
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn b(v: u64) -> BigUint {
        BigUint::from_u64(v)
    }

    /// Independent oracle: X * Y * (2^l)^{-1} mod M via division.
    fn oracle_mont(ctx: &MontgomeryContext, x: &BigUint, y: &BigUint) -> BigUint {
        let m = ctx.modulus();
        let rinv = BigUint::one().shl_bits(ctx.operand_bits()).rem(m).unwrap().mod_inverse(m).unwrap();
        x.mul(y).rem(m).unwrap().mul(&rinv).rem(m).unwrap()
    }

    fn oracle_pow(base: &BigUint, e: &BigUint, m: &BigUint) -> BigUint {
        let mut acc = BigUint::one().rem(m).unwrap();
        let mut sq = base.rem(m).unwrap();
        for i in 0..e.bits() {
            if e.bit(i) {
                acc = acc.mul(&sq).rem(m).unwrap();
            }
            sq = sq.mul(&sq).rem(m).unwrap();
        }
        acc
    }

    fn random_odd(bits: u64, rng: &mut ChaCha8Rng) -> BigUint {
        let v = BigUint::random_bits(bits, rng);
        let top = BigUint::one().shl_bits(bits - 1);
        let v = if v.bit(bits - 1) { v } else { v.add(&top) };
        if v.is_odd() { v } else { v.add(&BigUint::one()) }
    }

    #[test]
    fn context_constants_toy() {
        let ctx = MontgomeryContext::new(&b(97), 4).unwrap();
        assert_eq!(ctx.operand_bits(), 8);
        assert_eq!(ctx.m_prime(), 15);
        assert_eq!((97 * ctx.m_prime() + 1) % 16, 0);
        assert_eq!(ctx.r2(), &b((1 << 16) % 97));

        let ctx = MontgomeryContext::new(&b(3), 4).unwrap();
        assert_eq!((3 * 11) % 16, 1);
        assert_eq!(ctx.m_prime(), 5);
    }

    #[test]
    fn context_rejects_bad_moduli() {
        assert_eq!(MontgomeryContext::new(&b(96), 4).unwrap_err(), MontgomeryError::InvalidModulus);
        assert_eq!(MontgomeryContext::new(&b(1), 32).unwrap_err(), MontgomeryError::InvalidModulus);
        assert!(MontgomeryContext::new(&b(97), 0).is_err());
    }

    #[test]
    fn m_prime_invariant_all_radices() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for k in 1..=32u32 {
            for _ in 0..20 {
                let m = random_odd(200, &mut rng);
                let ctx = MontgomeryContext::new(&m, k).unwrap();
                let low = m.to_digits(k, 1).unwrap()[0] as u64;
                let r = 1u128 << k;
                assert_eq!((low as u128 * (r - ctx.m_prime() as u128)) % r, 1 % r, "k={k}");
            }
        }
    }

    #[test]
    fn toy_mont_mul() {
        let ctx = MontgomeryContext::new(&b(97), 4).unwrap();
        assert_eq!(ctx.mont_mul(&b(0), &b(9)).unwrap(), b(0));
        // 2^8 = 62 mod 97, 62 * 36 = 1 mod 97, 45 * 36 mod 97 = 68
        assert_eq!((256 % 97, 62 * 36 % 97, 45 * 36 % 97), (62, 1, 68));
        assert_eq!(ctx.mont_mul(&b(5), &b(9)).unwrap(), b(68));
        assert_eq!(ctx.mont_mul(&b(97), &b(1)), Err(MontgomeryError::OperandNotReduced));
    }

    #[test]
    fn toy_domain_conversions() {
        let ctx = MontgomeryContext::new(&b(97), 4).unwrap();
        assert_eq!(ctx.to_mont(&b(0)).unwrap().value(), &b(0));
        assert_eq!(ctx.to_mont(&b(1)).unwrap().value(), &b(62));
        assert_eq!(ctx.from_mont(&ctx.mont_form(b(62)).unwrap()), b(1));
        assert_eq!(ctx.from_mont(&ctx.to_mont(&b(0)).unwrap()), b(0));
    }

    #[test]
    fn round_trip_random_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let m = random_odd(521, &mut rng);
        let ctx = MontgomeryContext::with_words(&m).unwrap();
        for _ in 0..1000 {
            let a = BigUint::random_below(&m, &mut rng);
            assert_eq!(ctx.from_mont(&ctx.to_mont(&a).unwrap()), a);
        }
    }

    #[test]
    fn mont_mul_matches_oracle_all_radices() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for k in [4u32, 8, 13, 16, 31, 32] {
            for bits in [5u64, 64, 127, 300] {
                let m = random_odd(bits, &mut rng);
                let ctx = MontgomeryContext::new(&m, k).unwrap();
                for _ in 0..30 {
                    let x = BigUint::random_below(&m, &mut rng);
                    let y = BigUint::random_below(&m, &mut rng);
                    let got = ctx.mont_mul(&x, &y).unwrap();
                    assert!(got < m);
                    assert_eq!(got, oracle_mont(&ctx, &x, &y), "k={k} bits={bits}");
                }
            }
        }
    }

    #[test]
    fn mont_mul_worst_case_operands() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for bits in [64u64, 256, 1024] {
            let m = BigUint::one().shl_bits(bits).sub(&BigUint::one()).unwrap();
            let ctx = MontgomeryContext::with_words(&m).unwrap();
            let top = m.sub(&BigUint::one()).unwrap();
            assert_eq!(ctx.mont_mul(&top, &top).unwrap(), oracle_mont(&ctx, &top, &top));
            let small = random_odd(bits / 2 + 1, &mut rng);
            let m = BigUint::one().shl_bits(bits - 1).add(&small);
            let ctx = MontgomeryContext::with_words(&m).unwrap();
            let top = m.sub(&BigUint::one()).unwrap();
            assert_eq!(ctx.mont_mul(&top, &top).unwrap(), oracle_mont(&ctx, &top, &top));
        }
    }

    #[test]
    fn random_1024_bit_mont_mul() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let m = random_odd(1024, &mut rng);
        let ctx = MontgomeryContext::with_words(&m).unwrap();
        for _ in 0..200 {
            let x = BigUint::random_below(&m, &mut rng);
            let y = BigUint::random_below(&m, &mut rng);
            assert_eq!(ctx.mont_mul(&x, &y).unwrap(), oracle_mont(&ctx, &x, &y));
        }
    }

    #[test]
    fn inner_iteration_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        for (bits, k) in [(1024u64, 32u32), (2048, 32), (256, 16), (8, 4)] {
            let m = random_odd(bits, &mut rng);
            let ctx = MontgomeryContext::new(&m, k).unwrap();
            let n = bits / k as u64;
            let mut c = MontCounters::default();
            ctx.mont_mul_counted(&BigUint::one(), &BigUint::one(), &mut c).unwrap();
            assert_eq!(c, MontCounters { mont_muls: 1, inner_iterations: n * (n + 1) });
        }
    }

    #[test]
    fn mod_exp_cases() {
        let ctx = MontgomeryContext::with_words(&b(1225)).unwrap();
        assert_eq!(ctx.mod_exp(&b(123), &BigUint::zero()).unwrap(), b(1));
        let mut machine = 1u64;
        for _ in 0..35 {
            machine = machine * 2 % 1225;
        }
        assert_eq!(machine, 18);
        assert_eq!(ctx.mod_exp(&b(2), &b(35)).unwrap(), b(18));
        assert_eq!(ctx.mod_exp(&b(36), &b(3)).unwrap(), b(106));
    }

    #[test]
    fn mod_exp_counts_match_prediction() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let m = random_odd(512, &mut rng);
        let ctx = MontgomeryContext::with_words(&m).unwrap();
        for e in [BigUint::zero(), BigUint::one(), b(0b1011), BigUint::random_bits(512, &mut rng)] {
            let mut c = MontCounters::default();
            ctx.mod_exp_counted(&b(5), &e, &mut c).unwrap();
            assert_eq!(c.mont_muls, predicted_mod_exp_muls(&e));
            assert_eq!(c.inner_iterations, c.mont_muls * ctx.inner_iterations_per_mul());
        }
        // exponent 1: one squaring, one multiply, two conversions
        assert_eq!(predicted_mod_exp_muls(&BigUint::one()), 4);
    }

    #[test]
    fn random_1024_bit_mod_exp() {
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        for _ in 0..3 {
            let m = random_odd(1024, &mut rng);
            let ctx = MontgomeryContext::with_words(&m).unwrap();
            let base = BigUint::random_below(&m, &mut rng);
            let e = BigUint::random_bits(1024, &mut rng);
            assert_eq!(ctx.mod_exp(&base, &e).unwrap(), oracle_pow(&base, &e, &m));
        }
    }

    #[test]
    fn mod_mul_cases() {
        let ctx = MontgomeryContext::with_words(&b(1225)).unwrap();
        assert_eq!(106 * 18 % 1225, 683);
        assert_eq!(ctx.mod_mul(&b(106), &b(18)).unwrap(), b(683));
        assert_eq!(ctx.mod_mul(&b(700), &b(1)).unwrap(), b(700));
        let mut rng = ChaCha8Rng::seed_from_u64(39);
        let m = random_odd(777, &mut rng);
        let ctx = MontgomeryContext::with_words(&m).unwrap();
        for _ in 0..100 {
            let x = BigUint::random_below(&m, &mut rng);
            let y = BigUint::random_below(&m, &mut rng);
            assert_eq!(ctx.mod_mul(&x, &y).unwrap(), x.mul(&y).rem(&m).unwrap());
        }
    }

    proptest! {
        #[test]
        fn homomorphism(seed: u64, bits in 3u64..400, k in prop::sample::select(vec![4u32, 8, 16, 32])) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_odd(bits, &mut rng);
            let ctx = MontgomeryContext::new(&m, k).unwrap();
            let a = BigUint::random_below(&m, &mut rng);
            let c = BigUint::random_below(&m, &mut rng);
            let lhs = ctx.mont_mul(ctx.to_mont(&a).unwrap().value(), ctx.to_mont(&c).unwrap().value()).unwrap();
            let rhs = ctx.to_mont(&a.mul(&c).rem(&m).unwrap()).unwrap();
            prop_assert_eq!(&lhs, rhs.value());
            prop_assert!(lhs < m);
        }

        #[test]
        fn exponent_addition(seed: u64, bits in 3u64..300, e1 in 0u64..5000, e2 in 0u64..5000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_odd(bits, &mut rng);
            let ctx = MontgomeryContext::with_words(&m).unwrap();
            let base = BigUint::random_below(&m, &mut rng);
            let lhs = ctx.mod_exp(&base, &b(e1 + e2)).unwrap();
            let rhs = ctx.mod_mul(&ctx.mod_exp(&base, &b(e1)).unwrap(), &ctx.mod_exp(&base, &b(e2)).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}

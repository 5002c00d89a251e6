//! Paillier cryptosystem over the Montgomery arithmetic core.
//!
//! `g = n + 1`, `lambda = lcm(p - 1, q - 1)`, `mu = L(g^lambda mod n^2)^{-1} mod n`.
//! Encryption is two exponentiations modulo `n^2`; decryption is one.

pub mod prime;

use std::sync::Arc;

use rand::{CryptoRng, Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::bigint::{BigIntError, BigUint};
use crate::montgomery::{MontCounters, MontgomeryContext, MontgomeryError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PaillierError {
    #[error("key size must be even and at least 16 bits, got {0}")]
    InvalidKeySize(u64),
    #[error("prime search exhausted")]
    PrimeSearchExhausted,
    #[error("p and q must be distinct odd primes")]
    InvalidPrimes,
    #[error("key self-test failed")]
    SelfTestFailed,
    #[error("message must be smaller than n")]
    MessageTooLarge,
    #[error("randomness r must lie in [1, n) and be coprime to n")]
    RandomnessNotCoprime,
    #[error("ciphertext must be smaller than n^2")]
    CiphertextOutOfRange,
    #[error("malformed ciphertext: L-division left a remainder")]
    MalformedCiphertext,
    #[error("exponent mismatch: {0} vs {1}")]
    ExponentMismatch(i32, i32),
    #[error("key document does not match: {0}")]
    InvalidKeyDocument(String),
    #[error(transparent)]
    BigInt(#[from] BigIntError),
    #[error(transparent)]
    Montgomery(#[from] MontgomeryError),
}

#[derive(Debug, Clone)]
pub struct PublicKey {
    n: BigUint,
    g: BigUint,
    n_squared: BigUint,
    bit_length: u64,
    ctx_n: Arc<MontgomeryContext>,
    ctx_n2: Arc<MontgomeryContext>,
    generator_shortcut: bool,
}

#[derive(Debug, Clone)]
pub struct PrivateKey {
    lambda: BigUint,
    mu: BigUint,
    p: BigUint,
    q: BigUint,
}

#[derive(Debug, Clone)]
pub struct Keypair {
    pub public: PublicKey,
    pub private: PrivateKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ciphertext {
    pub value: BigUint,
    #[serde(default)]
    pub exponent: i32,
}

impl Ciphertext {
    pub fn new(value: BigUint) -> Self {
        Ciphertext { value, exponent: 0 }
    }
}

impl PartialEq for PublicKey {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.g == other.g
    }
}

impl Eq for PublicKey {}

impl PartialEq for PrivateKey {
    fn eq(&self, other: &Self) -> bool {
        self.lambda == other.lambda && self.mu == other.mu && self.p == other.p && self.q == other.q
    }
}

impl Eq for PrivateKey {}

/// `L(u) = (u - 1) / n`, requiring exact division.
fn l_function(u: &BigUint, n: &BigUint) -> Result<BigUint, PaillierError> {
    let (q, r) = u.sub(&BigUint::one())?.div_rem(n)?;
    if !r.is_zero() {
        return Err(PaillierError::MalformedCiphertext);
    }
    Ok(q)
}

impl PublicKey {
    pub fn from_n(n: BigUint) -> Result<Self, PaillierError> {
        if n.is_even() || n < BigUint::from_u64(15) {
            return Err(PaillierError::InvalidPrimes);
        }
        let n_squared = n.mul(&n);
        Ok(PublicKey {
            g: n.add(&BigUint::one()),
            bit_length: n.bits(),
            ctx_n: Arc::new(MontgomeryContext::with_words(&n)?),
            ctx_n2: Arc::new(MontgomeryContext::with_words(&n_squared)?),
            n_squared,
            n,
            generator_shortcut: false,
        })
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    pub fn n_squared(&self) -> &BigUint {
        &self.n_squared
    }

    pub fn bit_length(&self) -> u64 {
        self.bit_length
    }

    /// Montgomery context modulo `n`.
    pub fn context_n(&self) -> &MontgomeryContext {
        &self.ctx_n
    }

    /// Montgomery context modulo `n^2`.
    pub fn context_n2(&self) -> &MontgomeryContext {
        &self.ctx_n2
    }

    pub fn generator_shortcut(&self) -> bool {
        self.generator_shortcut
    }

    /// Computes `g^m` as `1 + m*n mod n^2` instead of an exponentiation.
    pub fn with_generator_shortcut(mut self, enabled: bool) -> Self {
        self.generator_shortcut = enabled;
        self
    }

    /// Uniform `r` in `[1, n)` with `gcd(r, n) = 1`.
    pub fn random_r<R: Rng + ?Sized>(&self, rng: &mut R) -> BigUint {
        loop {
            let r = BigUint::random_range(&BigUint::one(), &self.n, rng);
            if r.gcd(&self.n).is_one() {
                return r;
            }
        }
    }

    pub fn encrypt(&self, m: &BigUint, r: &BigUint) -> Result<Ciphertext, PaillierError> {
        self.encrypt_counted(m, r, &mut MontCounters::default())
    }

    pub fn encrypt_random<R: Rng + ?Sized>(&self, m: &BigUint, rng: &mut R) -> Result<Ciphertext, PaillierError> {
        let r = self.random_r(rng);
        self.encrypt(m, &r)
    }

    /// `c = g^m * r^n mod n^2`, accumulating Montgomery counters.
    pub fn encrypt_counted(
        &self,
        m: &BigUint,
        r: &BigUint,
        counters: &mut MontCounters,
    ) -> Result<Ciphertext, PaillierError> {
        if m >= &self.n {
            return Err(PaillierError::MessageTooLarge);
        }
        if r.is_zero() || r >= &self.n || !r.gcd(&self.n).is_one() {
            return Err(PaillierError::RandomnessNotCoprime);
        }
        let ctx = &self.ctx_n2;
        let gm = if self.generator_shortcut {
            m.mul(&self.n).add(&BigUint::one()).rem(&self.n_squared)?
        } else {
            ctx.mod_exp_counted(&self.g, m, counters)?
        };
        let rn = ctx.mod_exp_counted(r, &self.n, counters)?;
        let c = mul_counted(ctx, &gm, &rn, counters)?;
        Ok(Ciphertext::new(c))
    }

    /// `c1 * c2 mod n^2`; decrypts to `m1 + m2 mod n`.
    pub fn add(&self, c1: &Ciphertext, c2: &Ciphertext) -> Result<Ciphertext, PaillierError> {
        if c1.exponent != c2.exponent {
            return Err(PaillierError::ExponentMismatch(c1.exponent, c2.exponent));
        }
        self.check_ciphertext(c1)?;
        self.check_ciphertext(c2)?;
        let value = self.ctx_n2.mod_mul(&c1.value, &c2.value)?;
        Ok(Ciphertext { value, exponent: c1.exponent })
    }

    /// `c^s mod n^2`; decrypts to `s * m mod n`. The exponent is carried over.
    pub fn scalar_mul(&self, c: &Ciphertext, s: &BigUint) -> Result<Ciphertext, PaillierError> {
        self.check_ciphertext(c)?;
        let value = self.ctx_n2.mod_exp(&c.value, s)?;
        Ok(Ciphertext { value, exponent: c.exponent })
    }

    fn check_ciphertext(&self, c: &Ciphertext) -> Result<(), PaillierError> {
        if c.value >= self.n_squared {
            Err(PaillierError::CiphertextOutOfRange)
        } else {
            Ok(())
        }
    }

    pub fn to_document(&self) -> PublicKeyDocument {
        PublicKeyDocument { key_bits: self.bit_length, n: self.n.clone(), g: self.g.clone() }
    }

    pub fn from_document(doc: &PublicKeyDocument) -> Result<Self, PaillierError> {
        let pk = PublicKey::from_n(doc.n.clone())?;
        if pk.g != doc.g {
            return Err(PaillierError::InvalidKeyDocument("g must equal n + 1".into()));
        }
        if pk.bit_length != doc.key_bits {
            return Err(PaillierError::InvalidKeyDocument("key_bits does not match n".into()));
        }
        Ok(pk)
    }
}

/// `a * b mod M` through the Montgomery domain with counters.
fn mul_counted(
    ctx: &MontgomeryContext,
    a: &BigUint,
    b: &BigUint,
    counters: &mut MontCounters,
) -> Result<BigUint, MontgomeryError> {
    let am = ctx.mont_mul_counted(a, ctx.r2(), counters)?;
    let bm = ctx.mont_mul_counted(b, ctx.r2(), counters)?;
    let p = ctx.mont_mul_counted(&am, &bm, counters)?;
    ctx.mont_mul_counted(&p, &BigUint::one(), counters)
}

impl PrivateKey {
    pub fn lambda(&self) -> &BigUint {
        &self.lambda
    }

    pub fn mu(&self) -> &BigUint {
        &self.mu
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn decrypt(&self, pk: &PublicKey, c: &Ciphertext) -> Result<BigUint, PaillierError> {
        self.decrypt_counted(pk, c, &mut MontCounters::default())
    }

    /// `m = L(c^lambda mod n^2) * mu mod n`.
    pub fn decrypt_counted(
        &self,
        pk: &PublicKey,
        c: &Ciphertext,
        counters: &mut MontCounters,
    ) -> Result<BigUint, PaillierError> {
        pk.check_ciphertext(c)?;
        let u = pk.ctx_n2.mod_exp_counted(&c.value, &self.lambda, counters)?;
        let l = l_function(&u, &pk.n)?.rem(&pk.n)?;
        Ok(mul_counted(&pk.ctx_n, &l, &self.mu, counters)?)
    }

    pub fn to_document(&self) -> PrivateKeyDocument {
        PrivateKeyDocument {
            lambda: self.lambda.clone(),
            mu: self.mu.clone(),
            p: self.p.clone(),
            q: self.q.clone(),
        }
    }
}

impl Keypair {
    /// Generates a key with `n` of exactly `bits` bits and runs the self-test.
    pub fn generate<R: RngCore + CryptoRng + ?Sized>(bits: u64, rng: &mut R) -> Result<Keypair, PaillierError> {
        if bits < 16 || !bits.is_multiple_of(2) {
            return Err(PaillierError::InvalidKeySize(bits));
        }
        let half = bits / 2;
        for _ in 0..16 {
            let p = prime::random_prime(half, rng).ok_or(PaillierError::PrimeSearchExhausted)?;
            let q = prime::random_prime(half, rng).ok_or(PaillierError::PrimeSearchExhausted)?;
            if p == q {
                continue;
            }
            let kp = Keypair::from_primes(&p, &q)?;
            if kp.public.bit_length != bits {
                continue;
            }
            kp.self_test(rng)?;
            return Ok(kp);
        }
        Err(PaillierError::PrimeSearchExhausted)
    }

    /// Builds the key from known primes; primality is not re-checked.
    pub fn from_primes(p: &BigUint, q: &BigUint) -> Result<Keypair, PaillierError> {
        let three = BigUint::from_u64(3);
        if p == q || p < &three || q < &three || p.is_even() || q.is_even() {
            return Err(PaillierError::InvalidPrimes);
        }
        let n = p.mul(q);
        let public = PublicKey::from_n(n)?;
        let one = BigUint::one();
        let lambda = p.sub(&one)?.lcm(&q.sub(&one)?);
        if !lambda.gcd(&public.n).is_one() {
            return Err(PaillierError::InvalidPrimes);
        }
        let u = public.ctx_n2.mod_exp(&public.g, &lambda)?;
        let mu = l_function(&u, &public.n)?
            .mod_inverse(&public.n)
            .map_err(|_| PaillierError::InvalidPrimes)?;
        Ok(Keypair {
            public,
            private: PrivateKey { lambda, mu, p: p.clone(), q: q.clone() },
        })
    }

    pub fn from_documents(
        public: &PublicKeyDocument,
        private: &PrivateKeyDocument,
    ) -> Result<Keypair, PaillierError> {
        let kp = Keypair::from_primes(&private.p, &private.q)?;
        if kp.public != PublicKey::from_document(public)? {
            return Err(PaillierError::InvalidKeyDocument("p * q does not equal n".into()));
        }
        if kp.private.lambda != private.lambda || kp.private.mu != private.mu {
            return Err(PaillierError::InvalidKeyDocument("lambda or mu inconsistent with p, q".into()));
        }
        Ok(kp)
    }

    /// `decrypt(encrypt(1)) = 1` and `L(g^lambda mod n^2) * mu = 1 mod n`.
    pub fn self_test<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(), PaillierError> {
        let pk = &self.public;
        let u = pk.ctx_n2.mod_exp(&pk.g, &self.private.lambda)?;
        let check = l_function(&u, &pk.n)?.mul(&self.private.mu).rem(&pk.n)?;
        if !check.is_one() {
            return Err(PaillierError::SelfTestFailed);
        }
        let c = pk.encrypt_random(&BigUint::one(), rng)?;
        if !self.private.decrypt(pk, &c)?.is_one() {
            return Err(PaillierError::SelfTestFailed);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicKeyDocument {
    pub key_bits: u64,
    pub n: BigUint,
    pub g: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivateKeyDocument {
    pub lambda: BigUint,
    pub mu: BigUint,
    pub p: BigUint,
    pub q: BigUint,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy() -> Keypair {
        Keypair::from_primes(&BigUint::from_u64(5), &BigUint::from_u64(7)).unwrap()
    }

    fn b(v: u64) -> BigUint {
        BigUint::from_u64(v)
    }

    /// Machine-integer modular exponentiation by repeated squaring.
    fn pow_mod(mut base: u64, mut e: u64, m: u64) -> u64 {
        let mut acc = 1u64;
        base %= m;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % m;
            }
            base = base * base % m;
            e >>= 1;
        }
        acc
    }

    #[test]
    fn toy_key_constants() {
        let kp = toy();
        assert_eq!(kp.public.n(), &b(35));
        assert_eq!(kp.public.n_squared(), &b(1225));
        assert_eq!(kp.public.g(), &b(36));
        assert_eq!(kp.private.lambda(), &b(12));
        assert_eq!(pow_mod(36, 12, 1225), 421);
        assert_eq!((421 - 1) / 35, 12);
        assert_eq!(12 * 3 % 35, 1);
        assert_eq!(kp.private.mu(), &b(3));
    }

    #[test]
    fn toy_encrypt_decrypt() {
        let kp = toy();
        let expected = pow_mod(36, 3, 1225) * pow_mod(2, 35, 1225) % 1225;
        assert_eq!(expected, 683);
        let c = kp.public.encrypt(&b(3), &b(2)).unwrap();
        assert_eq!(c.value, b(683));
        assert_eq!(pow_mod(683, 12, 1225), 36);
        assert_eq!(kp.private.decrypt(&kp.public, &c).unwrap(), b(3));
        let zero = kp.public.encrypt(&b(0), &b(1)).unwrap();
        assert_eq!(zero.value, b(1));
    }

    #[test]
    fn toy_shortcut_agrees() {
        let kp = toy();
        let fast = kp.public.clone().with_generator_shortcut(true);
        for m in 0..35 {
            for r in [1u64, 2, 3, 4, 8, 34] {
                assert_eq!(fast.encrypt(&b(m), &b(r)).unwrap(), kp.public.encrypt(&b(m), &b(r)).unwrap());
            }
        }
    }

    #[test]
    fn toy_all_messages_round_trip() {
        let kp = toy();
        for m in 0..35 {
            for r in 1..35u64 {
                if r % 5 == 0 || r % 7 == 0 {
                    assert_eq!(kp.public.encrypt(&b(m), &b(r)), Err(PaillierError::RandomnessNotCoprime));
                    continue;
                }
                let c = kp.public.encrypt(&b(m), &b(r)).unwrap();
                let oracle = pow_mod(36, m, 1225) * pow_mod(r, 35, 1225) % 1225;
                assert_eq!(c.value, b(oracle));
                assert_eq!(kp.private.decrypt(&kp.public, &c).unwrap(), b(m));
            }
        }
    }

    #[test]
    fn toy_homomorphisms() {
        let kp = toy();
        let pk = &kp.public;
        let c1 = pk.encrypt(&b(1), &b(3)).unwrap();
        let c2 = pk.encrypt(&b(2), &b(4)).unwrap();
        assert_eq!(kp.private.decrypt(pk, &pk.add(&c1, &c2).unwrap()).unwrap(), b(3));
        let c3 = pk.encrypt(&b(3), &b(2)).unwrap();
        assert_eq!(kp.private.decrypt(pk, &pk.scalar_mul(&c3, &b(4)).unwrap()).unwrap(), b(12));
        assert_eq!(kp.private.decrypt(pk, &pk.scalar_mul(&c3, &b(1)).unwrap()).unwrap(), b(3));
        let zero = pk.encrypt(&b(0), &b(6)).unwrap();
        assert_eq!(kp.private.decrypt(pk, &pk.add(&c3, &zero).unwrap()).unwrap(), b(3));
    }

    #[test]
    fn rejects_bad_inputs() {
        let kp = toy();
        let pk = &kp.public;
        assert_eq!(pk.encrypt(&b(35), &b(2)), Err(PaillierError::MessageTooLarge));
        assert_eq!(pk.encrypt(&b(1), &b(0)), Err(PaillierError::RandomnessNotCoprime));
        assert_eq!(pk.encrypt(&b(1), &b(35)), Err(PaillierError::RandomnessNotCoprime));
        let mut c = pk.encrypt(&b(1), &b(2)).unwrap();
        c.exponent = -1;
        let d = pk.encrypt(&b(1), &b(2)).unwrap();
        assert_eq!(pk.add(&c, &d), Err(PaillierError::ExponentMismatch(-1, 0)));
        assert_eq!(
            kp.private.decrypt(pk, &Ciphertext::new(b(1225))),
            Err(PaillierError::CiphertextOutOfRange)
        );
        // 5 shares a factor with n: 5^12 mod 1225 = 575 and 574 is not a multiple of 35
        assert_eq!(kp.private.decrypt(pk, &Ciphertext::new(b(5))), Err(PaillierError::MalformedCiphertext));
        assert_eq!(
            Keypair::from_primes(&b(7), &b(7)).unwrap_err(),
            PaillierError::InvalidPrimes
        );
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        assert_eq!(Keypair::generate(15, &mut rng).unwrap_err(), PaillierError::InvalidKeySize(15));
        assert_eq!(Keypair::generate(8, &mut rng).unwrap_err(), PaillierError::InvalidKeySize(8));
    }

    #[test]
    fn generated_keys_have_exact_size_and_valid_mu() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for bits in [16u64, 64, 256, 512] {
            let kp = Keypair::generate(bits, &mut rng).unwrap();
            assert_eq!(kp.public.n().bits(), bits);
            assert_ne!(kp.private.p(), kp.private.q());
            let pk = &kp.public;
            let u = pk.n_squared().clone();
            let gl = {
                // independent check with div_rem-based square-and-multiply
                let mut acc = BigUint::one();
                let lambda = kp.private.lambda();
                for i in (0..lambda.bits()).rev() {
                    acc = acc.mul(&acc).rem(&u).unwrap();
                    if lambda.bit(i) {
                        acc = acc.mul(pk.g()).rem(&u).unwrap();
                    }
                }
                acc
            };
            let l = gl.sub(&BigUint::one()).unwrap().div_rem(pk.n()).unwrap().0;
            assert!(l.mul(kp.private.mu()).rem(pk.n()).unwrap().is_one());
        }
    }

    #[test]
    fn rerandomization() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let kp = Keypair::generate(256, &mut rng).unwrap();
        let m = b(123456789);
        let c1 = kp.public.encrypt_random(&m, &mut rng).unwrap();
        let c2 = kp.public.encrypt_random(&m, &mut rng).unwrap();
        assert_ne!(c1, c2);
        assert_eq!(kp.private.decrypt(&kp.public, &c1).unwrap(), m);
        assert_eq!(kp.private.decrypt(&kp.public, &c2).unwrap(), m);
    }

    #[test]
    fn documents_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let kp = Keypair::generate(128, &mut rng).unwrap();
        let pub_json = serde_json::to_string(&kp.public.to_document()).unwrap();
        let priv_json = serde_json::to_string(&kp.private.to_document()).unwrap();
        let pd: PublicKeyDocument = serde_json::from_str(&pub_json).unwrap();
        let sd: PrivateKeyDocument = serde_json::from_str(&priv_json).unwrap();
        let back = Keypair::from_documents(&pd, &sd).unwrap();
        assert_eq!(back.public, kp.public);
        assert_eq!(back.private, kp.private);

        let c = kp.public.encrypt_random(&b(42), &mut rng).unwrap();
        let c = Ciphertext { exponent: -7, ..c };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<Ciphertext>(&text).unwrap(), c);
    }

    #[test]
    fn encrypt_counter_matches_prediction() {
        use crate::montgomery::predicted_mod_exp_muls;
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let kp = Keypair::generate(128, &mut rng).unwrap();
        let pk = &kp.public;
        let m = b(987654321);
        let r = pk.random_r(&mut rng);
        let mut counters = MontCounters::default();
        pk.encrypt_counted(&m, &r, &mut counters).unwrap();
        let expected = predicted_mod_exp_muls(&m) + predicted_mod_exp_muls(pk.n()) + 4;
        assert_eq!(counters.mont_muls, expected);
        let per = pk.context_n2().inner_iterations_per_mul();
        assert_eq!(counters.inner_iterations, expected * per);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn homomorphic_properties(seed: u64, m1 in any::<u64>(), m2 in any::<u64>(), s in any::<u32>()) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let kp = shared_key();
            let pk = &kp.public;
            let (m1, m2) = (b(m1), b(m2));
            let c1 = pk.encrypt_random(&m1, &mut rng).unwrap();
            let c2 = pk.encrypt_random(&m2, &mut rng).unwrap();
            prop_assert_eq!(kp.private.decrypt(pk, &c1).unwrap(), m1.clone());
            prop_assert_eq!(kp.private.decrypt(pk, &pk.add(&c1, &c2).unwrap()).unwrap(), m1.add(&m2));
            let sb = b(s as u64);
            prop_assert_eq!(kp.private.decrypt(pk, &pk.scalar_mul(&c1, &sb).unwrap()).unwrap(), m1.mul(&sb));
        }
    }

    fn shared_key() -> &'static Keypair {
        static KEY: std::sync::OnceLock<Keypair> = std::sync::OnceLock::new();
        KEY.get_or_init(|| Keypair::generate(256, &mut ChaCha20Rng::seed_from_u64(99)).unwrap())
    }
}

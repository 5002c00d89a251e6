//! Long division (normalized, Knuth algorithm D) and modular inverse.

use super::{BigIntError, BigUint};

impl BigUint {
    /// Returns `(q, r)` with `self = q * d + r` and `r < d`.
    pub fn div_rem(&self, d: &BigUint) -> Result<(BigUint, BigUint), BigIntError> {
        if d.is_zero() {
            return Err(BigIntError::DivisionByZero);
        }
        if self < d {
            return Ok((BigUint::zero(), self.clone()));
        }
        if d.words.len() == 1 {
            let (q, r) = div_rem_word(&self.words, d.words[0]);
            return Ok((BigUint::from_words(q), BigUint::from_u64(r as u64)));
        }
        let (q, r) = div_rem_knuth(&self.words, &d.words);
        Ok((BigUint::from_words(q), BigUint::from_words(r)))
    }

    pub fn rem(&self, d: &BigUint) -> Result<BigUint, BigIntError> {
        Ok(self.div_rem(d)?.1)
    }

    /// `self mod d` for a single-word divisor.
    pub fn rem_u32(&self, d: u32) -> u32 {
        assert!(d != 0, "division by zero");
        self.words
            .iter()
            .rev()
            .fold(0u64, |rem, &w| ((rem << 32) | w as u64) % d as u64) as u32
    }

    pub fn gcd(&self, other: &BigUint) -> BigUint {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b).expect("nonzero");
            a = b;
            b = r;
        }
        a
    }

    pub fn lcm(&self, other: &BigUint) -> BigUint {
        if self.is_zero() || other.is_zero() {
            return BigUint::zero();
        }
        let g = self.gcd(other);
        self.div_rem(&g).expect("nonzero gcd").0.mul(other)
    }

    /// `x` with `self * x = 1 (mod m)` and `0 < x < m`, by extended Euclid.
    pub fn mod_inverse(&self, m: &BigUint) -> Result<BigUint, BigIntError> {
        if m.is_zero() {
            return Err(BigIntError::DivisionByZero);
        }
        if m.is_one() {
            return Err(BigIntError::NotInvertible);
        }
        // Coefficients are kept reduced mod m so no signed arithmetic is needed:
        // invariant old_r = old_s * a (mod m), r = s * a (mod m).
        let mut old_r = m.clone();
        let mut r = self.rem(m)?;
        let mut old_s = BigUint::zero();
        let mut s = BigUint::one();
        while !r.is_zero() {
            let (q, rem) = old_r.div_rem(&r)?;
            let qs = q.mul(&s).rem(m)?;
            let next_s = if old_s >= qs {
                old_s.sub(&qs)?
            } else {
                old_s.add(m).sub(&qs)?
            };
            old_r = std::mem::replace(&mut r, rem);
            old_s = std::mem::replace(&mut s, next_s);
        }
        if !old_r.is_one() {
            return Err(BigIntError::NotInvertible);
        }
        Ok(old_s)
    }
}

fn div_rem_word(a: &[u32], d: u32) -> (Vec<u32>, u32) {
    let mut q = vec![0u32; a.len()];
    let mut rem = 0u64;
    for i in (0..a.len()).rev() {
        let cur = (rem << 32) | a[i] as u64;
        q[i] = (cur / d as u64) as u32;
        rem = cur % d as u64;
    }
    (q, rem as u32)
}

/// `a / d` for `d` of at least two words and `a >= d`.
fn div_rem_knuth(a: &[u32], d: &[u32]) -> (Vec<u32>, Vec<u32>) {
    const B: u64 = 1 << 32;
    let n = d.len();
    let m = a.len() - n;
    let shift = d[n - 1].leading_zeros();

    let v: Vec<u32> = shl_small(d, shift, n);
    let mut u: Vec<u32> = shl_small(a, shift, a.len() + 1);
    let mut q = vec![0u32; m + 1];

    let vtop = v[n - 1] as u64;
    let vnext = v[n - 2] as u64;
    for j in (0..=m).rev() {
        let num = ((u[j + n] as u64) << 32) | u[j + n - 1] as u64;
        let mut qhat = num / vtop;
        let mut rhat = num % vtop;
        while qhat >= B || qhat * vnext > ((rhat << 32) | u[j + n - 2] as u64) {
            qhat -= 1;
            rhat += vtop;
            if rhat >= B {
                break;
            }
        }

        let mut borrow = 0i64;
        let mut carry = 0u64;
        for i in 0..n {
            let p = qhat * v[i] as u64 + carry;
            carry = p >> 32;
            let t = u[i + j] as i64 - borrow - (p & 0xffff_ffff) as i64;
            u[i + j] = t as u32;
            borrow = (t < 0) as i64;
        }
        let t = u[j + n] as i64 - borrow - carry as i64;
        u[j + n] = t as u32;

        if t < 0 {
            qhat -= 1;
            let mut c = 0u64;
            for i in 0..n {
                let s = u[i + j] as u64 + v[i] as u64 + c;
                u[i + j] = s as u32;
                c = s >> 32;
            }
            u[j + n] = u[j + n].wrapping_add(c as u32);
        }
        q[j] = qhat as u32;
    }

    let r: Vec<u32> = (0..n)
        .map(|i| {
            if shift == 0 {
                u[i]
            } else {
                (u[i] >> shift) | (u[i + 1] << (32 - shift))
            }
        })
        .collect();
    (q, r)
}

fn shl_small(a: &[u32], shift: u32, len: usize) -> Vec<u32> {
    let mut out = vec![0u32; len];
    let mut carry = 0u32;
    for (i, &w) in a.iter().enumerate() {
        if shift == 0 {
            out[i] = w;
        } else {
            out[i] = (w << shift) | carry;
            carry = w >> (32 - shift);
        }
    }
    if a.len() < len {
        out[a.len()] = carry;
    }
    out
}

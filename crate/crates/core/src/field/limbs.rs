//! Fixed-width 256-bit limb arithmetic with a runtime Montgomery modulus.
//!
//! All routines run a fixed number of iterations and select results with
//! masks, so their timing does not depend on operand values.

pub(crate) type Limbs = [u64; 4];

#[inline(always)]
fn mac(acc: u64, a: u64, b: u64, carry: u64) -> (u64, u64) {
    let t = (acc as u128) + (a as u128) * (b as u128) + (carry as u128);
    (t as u64, (t >> 64) as u64)
}

#[inline(always)]
fn adc(a: u64, b: u64, carry: u64) -> (u64, u64) {
    let t = (a as u128) + (b as u128) + (carry as u128);
    (t as u64, (t >> 64) as u64)
}

#[inline(always)]
fn sbb(a: u64, b: u64, borrow: u64) -> (u64, u64) {
    let t = (a as u128).wrapping_sub((b as u128) + (borrow as u128));
    (t as u64, ((t >> 64) as u64) & 1)
}

/// `mask` must be all-ones (pick `a`) or zero (pick `b`).
#[inline(always)]
fn select(mask: u64, a: &Limbs, b: &Limbs) -> Limbs {
    [
        (a[0] & mask) | (b[0] & !mask),
        (a[1] & mask) | (b[1] & !mask),
        (a[2] & mask) | (b[2] & !mask),
        (a[3] & mask) | (b[3] & !mask),
    ]
}

fn sub_with_borrow(a: &Limbs, b: &Limbs) -> (Limbs, u64) {
    let mut out = [0u64; 4];
    let mut borrow = 0;
    for i in 0..4 {
        let (d, br) = sbb(a[i], b[i], borrow);
        out[i] = d;
        borrow = br;
    }
    (out, borrow)
}

/// Precomputed Montgomery context for an odd modulus `p < 2^256`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Montgomery {
    pub p: Limbs,
    /// `-p^{-1} mod 2^64`
    pub p_inv: u64,
    /// `2^256 mod p`, the Montgomery form of one.
    pub one: Limbs,
    pub r2: Limbs,
    pub r3: Limbs,
    pub p_minus_2: Limbs,
    pub bits: u32,
}

impl Montgomery {
    pub fn new(p: Limbs, r_mod_p: Limbs, r2: Limbs, r3: Limbs, bits: u32) -> Self {
        debug_assert!(p[0] & 1 == 1);
        // Newton iteration for p^{-1} mod 2^64; each step doubles the correct bits.
        let mut inv: u64 = 1;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p[0].wrapping_mul(inv)));
        }
        let (p_minus_2, _) = sub_with_borrow(&p, &[2, 0, 0, 0]);
        Montgomery {
            p,
            p_inv: inv.wrapping_neg(),
            one: r_mod_p,
            r2,
            r3,
            p_minus_2,
            bits,
        }
    }

    /// Returns `a * b * 2^-256 mod p`. Requires `a < 2^256` and `b < p`.
    pub fn mul(&self, a: &Limbs, b: &Limbs) -> Limbs {
        let p = &self.p;
        let mut t = [0u64; 6];
        for &bi in b {
            let mut c = 0;
            for j in 0..4 {
                let (lo, hi) = mac(t[j], a[j], bi, c);
                t[j] = lo;
                c = hi;
            }
            let (s, c2) = adc(t[4], c, 0);
            t[4] = s;
            t[5] = c2;

            let m = t[0].wrapping_mul(self.p_inv);
            let (_, mut c) = mac(t[0], m, p[0], 0);
            for j in 1..4 {
                let (lo, hi) = mac(t[j], m, p[j], c);
                t[j - 1] = lo;
                c = hi;
            }
            let (s, c2) = adc(t[4], c, 0);
            t[3] = s;
            t[4] = t[5] + c2;
        }
        let r = [t[0], t[1], t[2], t[3]];
        let (d, borrow) = sub_with_borrow(&r, p);
        // Keep the difference when the 257-bit value t >= p.
        let keep_d = (t[4] | (borrow ^ 1)) & 1;
        select(keep_d.wrapping_neg(), &d, &r)
    }

    pub fn add(&self, a: &Limbs, b: &Limbs) -> Limbs {
        let mut s = [0u64; 4];
        let mut carry = 0;
        for i in 0..4 {
            let (v, c) = adc(a[i], b[i], carry);
            s[i] = v;
            carry = c;
        }
        let (d, borrow) = sub_with_borrow(&s, &self.p);
        let keep_d = (carry | (borrow ^ 1)) & 1;
        select(keep_d.wrapping_neg(), &d, &s)
    }

    pub fn sub(&self, a: &Limbs, b: &Limbs) -> Limbs {
        let (d, borrow) = sub_with_borrow(a, b);
        let mut fixed = [0u64; 4];
        let mut carry = 0;
        for i in 0..4 {
            let (v, c) = adc(d[i], self.p[i], carry);
            fixed[i] = v;
            carry = c;
        }
        select(borrow.wrapping_neg(), &fixed, &d)
    }

    pub fn to_mont(&self, a: &Limbs) -> Limbs {
        self.mul(a, &self.r2)
    }

    pub fn out_of_mont(&self, a: &Limbs) -> Limbs {
        self.mul(a, &[1, 0, 0, 0])
    }

    /// Montgomery form of `hi * 2^256 + lo mod p` for arbitrary 256-bit halves.
    pub fn reduce_512(&self, hi: &Limbs, lo: &Limbs) -> Limbs {
        let h = self.mul(hi, &self.r3);
        let l = self.mul(lo, &self.r2);
        self.add(&h, &l)
    }

    /// Fermat inversion `a^(p-2)`; yields zero for zero input.
    pub fn invert(&self, a: &Limbs) -> Limbs {
        let mut acc = self.one;
        for i in (0..self.bits).rev() {
            acc = self.mul(&acc, &acc);
            let prod = self.mul(&acc, a);
            let bit = (self.p_minus_2[(i / 64) as usize] >> (i % 64)) & 1;
            acc = select(bit.wrapping_neg(), &prod, &acc);
        }
        acc
    }

    pub fn is_zero(a: &Limbs) -> bool {
        (a[0] | a[1] | a[2] | a[3]) == 0
    }

    pub fn ct_eq(a: &Limbs, b: &Limbs) -> bool {
        ((a[0] ^ b[0]) | (a[1] ^ b[1]) | (a[2] ^ b[2]) | (a[3] ^ b[3])) == 0
    }

    /// `a < p`, for canonical decoding.
    pub fn is_canonical(&self, a: &Limbs) -> bool {
        let (_, borrow) = sub_with_borrow(a, &self.p);
        borrow == 1
    }
}

pub(crate) fn limbs_from_be(bytes: &[u8]) -> Limbs {
    debug_assert!(bytes.len() <= 32);
    let mut buf = [0u8; 32];
    buf[32 - bytes.len()..].copy_from_slice(bytes);
    let mut out = [0u64; 4];
    for (i, chunk) in buf.rchunks(8).enumerate() {
        out[i] = u64::from_be_bytes(chunk.try_into().expect("8-byte chunk"));
    }
    out
}

pub(crate) fn limbs_to_be(a: &Limbs) -> [u8; 32] {
    let mut out = [0u8; 32];
    for i in 0..4 {
        out[24 - 8 * i..32 - 8 * i].copy_from_slice(&a[i].to_be_bytes());
    }
    out
}
